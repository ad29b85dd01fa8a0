//! Case runs: assemble, solve, verify and summarize the battery's schedule
//! for one market-participation mask at a time.

mod oracle;
mod report;

pub use oracle::{bid_grid, brute_force_oracle, OracleLimits, OracleResult};
pub use report::{
    compare_cases, emit_outputs, write_comparison_csv, CaseComparison, CaseRow, MonotonicityCheck, OUTPUT_SCHEMA,
};

use std::time::{Duration, Instant};

use bessbid_solver::{solve_milp_with, MilpSettings, Status, Var};
use serde::Serialize;

use crate::agc::{track_schedule, TrackingInterval, TrackingReport};
use crate::bilevel::{
    add_value_cuts, assemble_milp, mip_starts, verify_bilevel_solution, BilevelHeuristic, BilevelMilp, CutSettings,
    MilpCounts,
};
use crate::clearing::{BessAwards, Prices, QuantityBids};
use crate::error::HarnessError;
use crate::par;
use crate::scenario::{MarketMask, Scenario};

#[derive(Debug, Clone)]
pub struct SolveSettings {
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub value_cuts: bool,
    pub cuts: CutSettings,
    pub heuristic_every: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            gap: 0.01,
            time_limit: Some(Duration::from_secs(600)),
            seed: 0,
            value_cuts: true,
            cuts: CutSettings::default(),
            heuristic_every: 20,
        }
    }
}

/// Revenue by market, $.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MarketRevenue {
    pub energy: f64,
    pub reserve: f64,
    pub regcap: f64,
    pub mileage: f64,
}

impl MarketRevenue {
    pub fn total(&self) -> f64 {
        self.energy + self.reserve + self.regcap + self.mileage
    }

    fn add(&mut self, o: &MarketRevenue) {
        self.energy += o.energy;
        self.reserve += o.reserve;
        self.regcap += o.regcap;
        self.mileage += o.mileage;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSchedule {
    /// 1-based label of the interval.
    pub interval: usize,
    pub delta_t: f64,
    pub bids: QuantityBids,
    pub awards: BessAwards,
    pub prices: Prices,
    /// State of charge at the end of the interval, MWh.
    pub soc: f64,
    /// Discharge switch; `None` without an energy market.
    pub discharging: Option<bool>,
    pub revenue: MarketRevenue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BessSchedule {
    pub soc_init: f64,
    pub intervals: Vec<IntervalSchedule>,
    pub totals: MarketRevenue,
}

impl BessSchedule {
    /// Reads bids, awards, prices and state of charge off a MILP point and
    /// prices every award.
    pub fn from_milp(s: &Scenario, milp: &BilevelMilp, x: &[f64]) -> BessSchedule {
        let bids = milp.bids(x);
        let val = |v: Option<Var>| v.map_or(0.0, |v| x[v.0]);
        let intervals: Vec<IntervalSchedule> = milp
            .blocks
            .iter()
            .map(|k| {
                let st = &k.kkt.structure;
                let bi = st.bess.unwrap_or_default();
                let xv = |i: Option<usize>| i.map_or(0.0, |j| x[k.x[j].0]);
                let price =
                    |label: &str| st.ineqs.iter().position(|q| q.tag.label == label).map_or(0.0, |i| x[k.lambda[i].0]);
                let awards = BessAwards {
                    supply: xv(bi.supply),
                    demand: xv(bi.demand),
                    reserve: xv(bi.reserve),
                    regcap: xv(bi.regcap),
                    mileage: xv(bi.mileage),
                };
                let prices = Prices {
                    energy: x[k.pi.0],
                    reserve: price("reserve_req"),
                    regcap: price("regcap_req"),
                    mileage: price("mileage_req"),
                };
                let dt = st.delta_t;
                let revenue = MarketRevenue {
                    energy: prices.energy * (awards.supply - awards.demand) * dt,
                    reserve: prices.reserve * awards.reserve * dt,
                    regcap: prices.regcap * awards.regcap * dt,
                    mileage: prices.mileage * awards.mileage * dt,
                };
                IntervalSchedule {
                    interval: s.intervals[k.t].index,
                    delta_t: dt,
                    bids: bids[k.t],
                    awards,
                    prices,
                    soc: x[k.ul.soc.0],
                    discharging: k.ul.u.map(|u| val(Some(u)) > 0.5),
                    revenue,
                }
            })
            .collect();
        let mut totals = MarketRevenue::default();
        for iv in &intervals {
            totals.add(&iv.revenue);
        }
        BessSchedule { soc_init: s.bess.soc_init, intervals, totals }
    }

    pub fn tracking_intervals(&self) -> Vec<TrackingInterval> {
        let mut start = self.soc_init;
        self.intervals
            .iter()
            .map(|iv| {
                let t = TrackingInterval {
                    soc_start: start,
                    supply: iv.awards.supply,
                    demand: iv.awards.demand,
                    regcap: iv.awards.regcap,
                    delta_t: iv.delta_t,
                };
                start = iv.soc;
                t
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationSummary {
    pub passed: bool,
    pub max_complementarity: f64,
    pub max_duality_gap: f64,
    pub milp_revenue_usd: f64,
    pub price_times_award_usd: f64,
    pub recleared_revenue_usd: f64,
    pub optimistic_revenue_usd: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    /// 1-4 for the standard masks.
    pub case_id: Option<u8>,
    pub mask: MarketMask,
    pub scenario: String,
    /// Fingerprint of the scenario with all markets open, shared by every
    /// case run on it.
    pub fingerprint: String,
    pub status: Status,
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub wall_time: Duration,
    pub counts: MilpCounts,
    /// Bound from the decomposition, when value cuts were generated.
    pub decomposition_bound: Option<f64>,
    pub verification: VerificationSummary,
    pub schedule: BessSchedule,
    pub tracking: Vec<TrackingReport>,
    pub files: Vec<std::path::PathBuf>,
}

impl CaseReport {
    pub fn label(&self) -> String {
        match self.case_id {
            Some(c) => format!("case{c}"),
            None => self.mask.to_string(),
        }
    }

    pub fn headroom_violations(&self) -> usize {
        self.tracking.iter().filter(|r| r.violates_headroom()).count()
    }
}

fn weighted_bids(rep: &crate::bilevel::DecompositionReport) -> Vec<QuantityBids> {
    rep.columns
        .iter()
        .zip(&rep.weights)
        .map(|(cols, ws)| {
            let mut b = QuantityBids::default();
            for (c, &w) in cols.iter().zip(ws) {
                b.supply += w * c.bids.supply;
                b.demand += w * c.bids.demand;
                b.reserve += w * c.bids.reserve;
                b.regulation += w * c.bids.regulation;
            }
            b
        })
        .collect()
}

/// Solves one case. `hints` are bid vectors (for instance from cases with
/// fewer markets) offered as starting points.
pub fn run_case(
    s: &Scenario,
    mask: MarketMask,
    settings: &SolveSettings,
    hints: &[Vec<QuantityBids>],
) -> Result<CaseReport, HarnessError> {
    let t0 = Instant::now();
    let sc = s.with_mask(mask);
    let mut milp = assemble_milp(&sc)?;
    let mut extra: Vec<Vec<QuantityBids>> = hints.to_vec();
    let mut decomposition_bound = None;
    if settings.value_cuts {
        let mut cuts = settings.cuts.clone();
        if let Some(limit) = settings.time_limit {
            let share = limit.mul_f64(0.4);
            cuts.time_limit = Some(cuts.time_limit.map_or(share, |c| c.min(share)));
        }
        let rep = add_value_cuts(&sc, &mut milp, &cuts)?;
        decomposition_bound = Some(rep.bound);
        extra.push(weighted_bids(&rep));
    }
    let starts = mip_starts(&sc, &milp, &extra);
    let heuristic = BilevelHeuristic { scenario: &sc, milp: &milp };
    let ms = MilpSettings {
        gap_tol: settings.gap,
        time_limit: settings.time_limit.map(|l| l.saturating_sub(t0.elapsed()).max(Duration::from_secs(1))),
        seed: settings.seed,
        heuristic_every: settings.heuristic_every.max(1),
        ..MilpSettings::default()
    };
    let out =
        solve_milp_with(&milp.problem(), &ms, Some(&heuristic), &starts).map_err(crate::error::BilevelError::from)?;
    match out.status {
        Status::Infeasible => return Err(HarnessError::Infeasible),
        st if !st.has_solution() || out.x.is_empty() => return Err(HarnessError::NoSolution(st.to_string())),
        _ => {}
    }
    let v = verify_bilevel_solution(&sc, &milp, &out.x)?;
    if !v.passed {
        let list: Vec<String> = v.mismatches.iter().map(|m| m.to_string()).collect();
        return Err(HarnessError::Verification(list.join("; ")));
    }
    let schedule = BessSchedule::from_milp(&sc, &milp, &out.x);
    let tracking = track_schedule(&schedule.tracking_intervals(), &sc.bess, settings.seed);
    let report = CaseReport {
        case_id: mask.case_number(),
        mask,
        scenario: s.name.clone(),
        fingerprint: s.with_mask(MarketMask::ALL).fingerprint(),
        status: out.status,
        objective: out.objective,
        bound: out.bound,
        gap: out.gap,
        nodes: out.nodes,
        wall_time: t0.elapsed(),
        counts: milp.counts(),
        decomposition_bound,
        verification: VerificationSummary {
            passed: v.passed,
            max_complementarity: v.max_complementarity,
            max_duality_gap: v.max_duality_gap,
            milp_revenue_usd: v.milp_revenue,
            price_times_award_usd: v.direct_revenue,
            recleared_revenue_usd: v.recleared_revenue,
            optimistic_revenue_usd: v.optimistic_revenue,
            notes: v.notes,
        },
        schedule,
        tracking,
        files: Vec::new(),
    };
    log::info!(
        "{} on {}: revenue {:.4} ({}, gap {:.2e}, {} nodes, {:.1?})",
        report.label(),
        report.scenario,
        report.objective,
        report.status,
        report.gap,
        report.nodes,
        report.wall_time
    );
    Ok(report)
}

fn market_count(m: MarketMask) -> usize {
    [m.energy, m.reserve, m.regulation].iter().filter(|&&b| b).count()
}

/// Runs several masks. Cases with the same number of markets run in
/// parallel; each case is offered the bids of every finished case whose
/// markets it contains. Reports come back in the order of `masks`.
pub fn run_cases(
    s: &Scenario,
    masks: &[MarketMask],
    settings: &SolveSettings,
) -> Result<Vec<CaseReport>, HarnessError> {
    let mut done: Vec<Option<CaseReport>> = vec![None; masks.len()];
    for level in 0..=3 {
        let idx: Vec<usize> = (0..masks.len()).filter(|&i| market_count(masks[i]) == level).collect();
        let results = par::map(&idx, |&i| {
            let hints: Vec<Vec<QuantityBids>> = done
                .iter()
                .flatten()
                .filter(|r| masks[i].contains(r.mask))
                .map(|r| r.schedule.intervals.iter().map(|iv| iv.bids).collect())
                .collect();
            run_case(s, masks[i], settings, &hints)
        });
        for (i, r) in idx.into_iter().zip(results) {
            done[i] = Some(r?);
        }
    }
    Ok(done.into_iter().map(|r| r.expect("every mask has 0-3 markets")).collect())
}
