use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;

use bessbid_core::agc::{generate_signal, load_signal_csv, samples_for, simulate_tracking, AgcTrace, TrackingInterval};
use bessbid_core::bilevel::{add_value_cuts, assemble_milp};
use bessbid_core::clearing::{clear_horizon, write_clearing_csv, QuantityBids};
use bessbid_core::harness::{
    brute_force_oracle, compare_cases, emit_outputs, run_case, run_cases, write_comparison_csv, CaseReport,
    OracleLimits, SolveSettings,
};
use bessbid_core::scenario::{
    desk_scenario, load_patterns, reference_generators, reference_scenario, synthesize_scenario, tiny_scenario,
    two_level_scenario, validate_scenario, BessParams, MarketMask, Patterns, Scenario, SynthParams,
};
use bessbid_solver::Status;

use crate::config::RunConfig;
use crate::{Failure, MarketChoice, ScenarioSource};

const PRESETS: &str = "reference, desk, tiny, two-level";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Failure::Usage(msg.into()).into()
}

fn require_file(p: &Path, what: &str) -> anyhow::Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} not found", p.display())))
    }
}

fn preset(name: &str, patterns: &Patterns) -> anyhow::Result<Scenario> {
    Ok(match name {
        "reference" => reference_scenario(patterns, MarketMask::ALL)?,
        "desk" => desk_scenario(patterns, MarketMask::ALL)?,
        "tiny" => tiny_scenario(MarketMask::ALL),
        "two-level" => two_level_scenario(8, 0.4, 1.0, MarketMask::ALL)?,
        other => return Err(usage(format!("unknown preset '{other}' (expected one of {PRESETS})"))),
    })
}

pub fn load_scenario(src: &ScenarioSource) -> anyhow::Result<Scenario> {
    let s = match (&src.scenario, &src.preset) {
        (Some(p), _) => {
            require_file(p, "scenario file")?;
            Scenario::load(p).map_err(|e| usage(e.to_string()))?
        }
        (None, Some(name)) => preset(name, &Patterns::builtin())?,
        (None, None) => return Err(usage("either --scenario or --preset is required")),
    };
    let v = validate_scenario(&s);
    if !v.is_empty() {
        let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        return Err(usage(format!("invalid scenario: {}", list.join("; "))));
    }
    Ok(s)
}

fn market_mask(choice: &MarketChoice, s: &Scenario) -> anyhow::Result<MarketMask> {
    match (choice.case, &choice.markets) {
        (Some(c), _) => MarketMask::for_case(c).ok_or_else(|| usage(format!("case must be 1-4, got {c}"))),
        (None, Some(m)) => MarketMask::parse(m).ok_or_else(|| usage(format!("cannot parse markets '{m}'"))),
        (None, None) => Ok(s.market_mask),
    }
}

fn write_out(out: Option<&Path>, text: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text).context("writing to stdout"),
    }
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// reference (five units, configurable below), desk, tiny or two-level.
    #[arg(long, default_value = "reference")]
    preset: String,
    /// Peak load, MW.
    #[arg(long)]
    peak: Option<f64>,
    /// Number of intervals; must divide the pattern length.
    #[arg(long)]
    intervals: Option<usize>,
    /// Interval length, hours; defaults to a 24 h horizon.
    #[arg(long)]
    delta_t: Option<f64>,
    /// Battery energy capacity, MWh.
    #[arg(long)]
    bess_energy: Option<f64>,
    /// Battery power rating, MW.
    #[arg(long)]
    bess_power: Option<f64>,
    #[arg(long, default_value = "energy+reserve+regulation")]
    markets: String,
    #[arg(long)]
    name: Option<String>,
    /// One value per line in [0, 1].
    #[arg(long, requires = "load_pattern")]
    price_pattern: Option<PathBuf>,
    /// One value per line in [0, 1], peak 1.
    #[arg(long, requires = "price_pattern")]
    load_pattern: Option<PathBuf>,
    /// Scenario file to write; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

pub fn synth(a: &SynthArgs) -> anyhow::Result<()> {
    let mask = MarketMask::parse(&a.markets).ok_or_else(|| usage(format!("cannot parse markets '{}'", a.markets)))?;
    let patterns = match (&a.price_pattern, &a.load_pattern) {
        (Some(p), Some(l)) => {
            require_file(p, "price pattern")?;
            require_file(l, "load pattern")?;
            load_patterns(p, l).map_err(|e| usage(e.to_string()))?
        }
        _ => Patterns::builtin(),
    };
    let mut s = if a.preset == "reference" {
        let n = a.intervals.unwrap_or(patterns.len());
        if n == 0 || patterns.len() % n != 0 {
            return Err(usage(format!("--intervals {n} does not divide the {} pattern points", patterns.len())));
        }
        let (sub, labels) = patterns.subsample(0, patterns.len() / n);
        let params = SynthParams {
            name: a.name.clone().unwrap_or_else(|| "reference".into()),
            peak_load_mw: a.peak.unwrap_or(1000.0),
            delta_t_h: a.delta_t.unwrap_or(24.0 / n as f64),
            mask,
            labels: Some(labels),
            ..SynthParams::default()
        };
        let bess = BessParams::new(a.bess_energy.unwrap_or(400.0), a.bess_power.unwrap_or(40.0));
        synthesize_scenario(&sub, &reference_generators(), &bess, &params).map_err(|e| usage(e.to_string()))?
    } else {
        let knobs =
            [a.peak, a.delta_t, a.bess_energy, a.bess_power].iter().any(Option::is_some) || a.intervals.is_some();
        if knobs {
            return Err(usage(format!(
                "preset '{}' has fixed parameters; size options apply to 'reference'",
                a.preset
            )));
        }
        let mut s = preset(&a.preset, &patterns)?;
        if let Some(n) = &a.name {
            s.name = n.clone();
        }
        s.with_mask(mask)
    };
    s.market_mask = mask;
    write_out(a.out.as_deref(), s.to_toml().as_bytes())?;
    if let Some(p) = &a.out {
        eprintln!("wrote {} ({} intervals, {} generators)", p.display(), s.num_intervals(), s.num_generators());
    }
    Ok(())
}

pub fn clear(src: &ScenarioSource, bids: Option<&Path>, out: Option<&Path>) -> anyhow::Result<()> {
    let s = load_scenario(src)?;
    let bids: Option<Vec<QuantityBids>> = match bids {
        Some(p) => {
            require_file(p, "bids file")?;
            let mut r = csv::Reader::from_path(p).with_context(|| format!("reading {}", p.display()))?;
            let rows: Result<Vec<QuantityBids>, _> = r.deserialize().collect();
            Some(rows.map_err(|e| usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let res = clear_horizon(&s, bids.as_deref()).map_err(|e| match e.interval() {
        Some(_) => anyhow::Error::from(Failure::Infeasible(e.to_string())),
        None => usage(e.to_string()),
    })?;
    let mut buf = Vec::new();
    write_clearing_csv(&res, &mut buf)?;
    write_out(out, &buf)
}

fn print_case(r: &CaseReport) {
    let t = r.schedule.totals;
    println!(
        "{} on {} ({}): revenue {:.4} $ [energy {:.4}, reserve {:.4}, regcap {:.4}, mileage {:.4}], {}, gap {:.2e}, verified {}, headroom violations {}",
        r.label(),
        r.scenario,
        r.mask,
        t.total(),
        t.energy,
        t.reserve,
        t.regcap,
        t.mileage,
        r.status,
        r.gap,
        r.verification.passed,
        r.headroom_violations()
    );
}

fn time_limit_note(reports: &[CaseReport]) -> Option<Failure> {
    let hit: Vec<String> = reports.iter().filter(|r| r.status == Status::TimeLimit).map(|r| r.label()).collect();
    (!hit.is_empty())
        .then(|| Failure::TimeLimit(format!("time limit reached before the gap target: {}", hit.join(", "))))
}

pub fn solve(src: &ScenarioSource, markets: &MarketChoice, out: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let s = load_scenario(src)?;
    let mask = market_mask(markets, &s)?;
    let mut r = run_case(&s, mask, &cfg.settings, &[])?;
    r.files = emit_outputs(&r, out)?;
    print_case(&r);
    log::info!("solved in {:.1?}", r.wall_time);
    for f in &r.files {
        println!("  {}", f.display());
    }
    match time_limit_note(std::slice::from_ref(&r)) {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}

pub fn oracle(
    src: &ScenarioSource,
    markets: &MarketChoice,
    step: f64,
    check_milp: bool,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(usage(format!("--step must be positive, got {step}")));
    }
    let s = load_scenario(src)?;
    let mask = market_mask(markets, &s)?;
    let sc = s.with_mask(mask);
    let o = brute_force_oracle(&sc, step, &OracleLimits::default())?;
    println!(
        "oracle on {} ({mask}), step {step} MW: revenue {:.6} $ over {} grid points, {} LP solves",
        s.name, o.revenue, o.grid_points, o.lp_solves
    );
    for (t, (b, soc)) in o.bids.iter().zip(&o.soc).enumerate() {
        println!(
            "  interval {}: supply {} demand {} reserve {} regulation {} soc {:.4}",
            s.intervals[t].index, b.supply, b.demand, b.reserve, b.regulation, soc
        );
    }
    if check_milp {
        let exact = SolveSettings { gap: 1e-9, ..cfg.settings.clone() };
        let r = run_case(&s, mask, &exact, &[])?;
        let ok = r.objective >= o.revenue - 1e-5;
        println!(
            "milp revenue {:.6} $ ({}), {}",
            r.objective,
            r.status,
            if ok { "at least the oracle" } else { "BELOW the oracle" }
        );
        if !ok {
            return Err(
                Failure::Check(format!("MILP revenue {} is below the oracle's {}", r.objective, o.revenue)).into()
            );
        }
    }
    Ok(())
}

pub fn export_mps(
    src: &ScenarioSource,
    markets: &MarketChoice,
    value_cuts: bool,
    out: &Path,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let s = load_scenario(src)?;
    let sc = s.with_mask(market_mask(markets, &s)?);
    let mut milp = assemble_milp(&sc)?;
    if value_cuts {
        add_value_cuts(&sc, &mut milp, &cfg.settings.cuts)?;
    }
    bessbid_solver::mps::export_mps(&milp.problem(), out)?;
    let c = milp.counts();
    println!(
        "wrote {}: {} variables ({} binary), {} constraints, {} value cuts",
        out.display(),
        c.variables,
        c.binaries,
        c.constraints,
        c.value_cuts
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct AgcArgs {
    /// Number of seeded traces.
    #[arg(long, default_value_t = 100)]
    traces: usize,
    /// Interval length, hours.
    #[arg(long, default_value_t = 0.25)]
    delta_t: f64,
    /// Battery energy capacity, MWh.
    #[arg(long, default_value_t = 400.0)]
    energy: f64,
    /// Battery power rating, MW.
    #[arg(long, default_value_t = 40.0)]
    power: f64,
    /// Regulation awards checked, evenly spaced over [0, power].
    #[arg(long, default_value_t = 5)]
    awards: usize,
    /// CSV of signal samples to check instead of generated traces.
    #[arg(long)]
    signal: Option<PathBuf>,
}

pub fn agc_check(a: &AgcArgs, cfg: &RunConfig) -> anyhow::Result<()> {
    if a.delta_t.is_nan() || a.delta_t <= 0.0 || a.awards < 2 || a.power <= 0.0 || a.energy < a.power * a.delta_t {
        return Err(usage("need delta_t > 0, at least 2 awards and energy >= power x delta_t"));
    }
    let per = samples_for(a.delta_t);
    let traces: Vec<AgcTrace> = match &a.signal {
        Some(p) => {
            require_file(p, "signal file")?;
            load_signal_csv(p, per)?
        }
        None => (0..a.traces as u64).map(|k| generate_signal(cfg.settings.seed.wrapping_add(k), per)).collect(),
    };
    let b = BessParams::new(a.energy, a.power);
    let (mut worst, mut violations, mut runs) = (0.0f64, 0usize, 0usize);
    for tr in &traces {
        for k in 0..a.awards {
            let award = a.power * k as f64 / (a.awards - 1) as f64;
            // Start at either edge of the headroom the award is granted with.
            for start in [b.soc_min + award * a.delta_t, b.soc_max - award * a.delta_t] {
                let iv =
                    TrackingInterval { soc_start: start, supply: 0.0, demand: 0.0, regcap: award, delta_t: a.delta_t };
                let r = simulate_tracking(&iv, &b, tr);
                worst = worst.max(r.regulation_delta.abs());
                violations += usize::from(r.violates_headroom());
                runs += 1;
            }
        }
    }
    println!(
        "{} traces, {runs} runs: worst regulation SOC delta {worst:.3e} MWh, {violations} headroom violations",
        traces.len()
    );
    if worst > 1e-9 || violations > 0 {
        return Err(Failure::Check("regulation changed the state of charge or left the headroom".into()).into());
    }
    Ok(())
}

pub fn compare(src: &ScenarioSource, cases: &[u8], out: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let s = load_scenario(src)?;
    let masks: Vec<MarketMask> = cases
        .iter()
        .map(|&c| MarketMask::for_case(c).ok_or_else(|| usage(format!("case must be 1-4, got {c}"))))
        .collect::<anyhow::Result<_>>()?;
    let mut reports = run_cases(&s, &masks, &cfg.settings)?;
    for r in &mut reports {
        r.files = emit_outputs(r, out.join(r.label()))?;
        print_case(r);
    }
    let cmp = compare_cases(&reports)?;
    let path = out.join("comparison.csv");
    let f = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    write_comparison_csv(&cmp, f)?;
    for c in &cmp.checks {
        println!(
            "  {} {:.4} <= {} {:.4}: {}",
            c.smaller,
            c.smaller_total,
            c.larger,
            c.larger_total,
            if c.holds { "ok" } else { "VIOLATED" }
        );
    }
    println!("  {}", path.display());
    if !cmp.monotone() {
        return Err(Failure::Check("revenue decreased when markets were added".into()).into());
    }
    match time_limit_note(&reports) {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}
