//! Report files and cross-case comparison.
//!
//! Layout of an output directory:
//!
//! - `intervals.csv`: one row per interval with bids, awards, prices, state
//!   of charge and revenue by market
//! - `summary.toml`: solve status, totals, verification and headroom checks
//! - `plot_soc.csv`, `plot_revenue.csv`: x/y series for plotting

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CaseReport, MarketRevenue, VerificationSummary};
use crate::error::HarnessError;
use crate::scenario::MarketMask;

pub const OUTPUT_SCHEMA: &str = "bessbid-report/1";

#[derive(Serialize)]
struct IntervalRow {
    interval: usize,
    delta_t_h: f64,
    soc_mwh: f64,
    discharging: Option<u8>,
    bid_supply_mw: f64,
    bid_demand_mw: f64,
    bid_reserve_mw: f64,
    bid_regulation_mw: f64,
    award_supply_mw: f64,
    award_demand_mw: f64,
    award_reserve_mw: f64,
    award_regcap_mw: f64,
    award_mileage_mw: f64,
    price_energy_usd_per_mwh: f64,
    price_reserve_usd_per_mwh: f64,
    price_regcap_usd_per_mwh: f64,
    price_mileage_usd_per_mwh: f64,
    revenue_energy_usd: f64,
    revenue_reserve_usd: f64,
    revenue_regcap_usd: f64,
    revenue_mileage_usd: f64,
    revenue_total_usd: f64,
}

#[derive(Serialize)]
struct SolveSection {
    status: String,
    objective_usd: f64,
    bound_usd: f64,
    gap: f64,
    nodes: usize,
    variables: usize,
    constraints: usize,
    binaries: usize,
    value_cuts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition_bound_usd: Option<f64>,
}

#[derive(Serialize)]
struct HeadroomSection {
    intervals_checked: usize,
    violations: usize,
    max_excursion_mwh: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'a str,
    scenario: &'a str,
    fingerprint: &'a str,
    case: String,
    markets: String,
    solve: SolveSection,
    revenue_usd: MarketRevenue,
    total_revenue_usd: f64,
    verification: &'a VerificationSummary,
    headroom: HeadroomSection,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(path.display().to_string(), e)
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::Io(path.display().to_string(), std::io::Error::other(e.to_string()))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes the report files into `out_dir` (created if missing) and returns
/// their paths. Identical reports give identical bytes.
pub fn emit_outputs(r: &CaseReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let sched = &r.schedule;

    let intervals = dir.join("intervals.csv");
    write_csv(
        &intervals,
        sched.intervals.iter().map(|iv| IntervalRow {
            interval: iv.interval,
            delta_t_h: iv.delta_t,
            soc_mwh: iv.soc,
            discharging: iv.discharging.map(u8::from),
            bid_supply_mw: iv.bids.supply,
            bid_demand_mw: iv.bids.demand,
            bid_reserve_mw: iv.bids.reserve,
            bid_regulation_mw: iv.bids.regulation,
            award_supply_mw: iv.awards.supply,
            award_demand_mw: iv.awards.demand,
            award_reserve_mw: iv.awards.reserve,
            award_regcap_mw: iv.awards.regcap,
            award_mileage_mw: iv.awards.mileage,
            price_energy_usd_per_mwh: iv.prices.energy,
            price_reserve_usd_per_mwh: iv.prices.reserve,
            price_regcap_usd_per_mwh: iv.prices.regcap,
            price_mileage_usd_per_mwh: iv.prices.mileage,
            revenue_energy_usd: iv.revenue.energy,
            revenue_reserve_usd: iv.revenue.reserve,
            revenue_regcap_usd: iv.revenue.regcap,
            revenue_mileage_usd: iv.revenue.mileage,
            revenue_total_usd: iv.revenue.total(),
        }),
    )?;

    #[derive(Serialize)]
    struct SocPoint {
        interval: usize,
        soc_mwh: f64,
    }
    let soc = dir.join("plot_soc.csv");
    write_csv(
        &soc,
        std::iter::once(SocPoint { interval: 0, soc_mwh: sched.soc_init })
            .chain(sched.intervals.iter().map(|iv| SocPoint { interval: iv.interval, soc_mwh: iv.soc })),
    )?;

    #[derive(Serialize)]
    struct RevenuePoint {
        interval: usize,
        energy_usd: f64,
        reserve_usd: f64,
        regcap_usd: f64,
        mileage_usd: f64,
        cumulative_usd: f64,
    }
    let revenue = dir.join("plot_revenue.csv");
    let mut cum = 0.0;
    write_csv(
        &revenue,
        sched.intervals.iter().map(|iv| {
            cum += iv.revenue.total();
            RevenuePoint {
                interval: iv.interval,
                energy_usd: iv.revenue.energy,
                reserve_usd: iv.revenue.reserve,
                regcap_usd: iv.revenue.regcap,
                mileage_usd: iv.revenue.mileage,
                cumulative_usd: cum,
            }
        }),
    )?;

    let summary = Summary {
        schema: OUTPUT_SCHEMA,
        scenario: &r.scenario,
        fingerprint: &r.fingerprint,
        case: r.label(),
        markets: r.mask.to_string(),
        solve: SolveSection {
            status: r.status.to_string(),
            objective_usd: r.objective,
            bound_usd: r.bound,
            gap: r.gap,
            nodes: r.nodes,
            variables: r.counts.variables,
            constraints: r.counts.constraints,
            binaries: r.counts.binaries,
            value_cuts: r.counts.value_cuts,
            decomposition_bound_usd: r.decomposition_bound,
        },
        revenue_usd: sched.totals,
        total_revenue_usd: sched.totals.total(),
        verification: &r.verification,
        headroom: HeadroomSection {
            intervals_checked: r.tracking.len(),
            violations: r.headroom_violations(),
            max_excursion_mwh: r.tracking.iter().map(|t| t.max_excursion).fold(0.0, f64::max),
        },
    };
    let text =
        toml::to_string(&summary).map_err(|e| HarnessError::Io("summary.toml".into(), std::io::Error::other(e)))?;
    let summary_path = dir.join("summary.toml");
    std::fs::write(&summary_path, text).map_err(io_err(&summary_path))?;
    Ok(vec![intervals, summary_path, soc, revenue])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRow {
    pub case: String,
    pub markets: String,
    pub energy_usd: f64,
    pub reserve_usd: f64,
    pub regcap_usd: f64,
    pub mileage_usd: f64,
    pub total_usd: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityCheck {
    pub smaller: String,
    pub larger: String,
    pub smaller_total: f64,
    pub larger_total: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseComparison {
    pub rows: Vec<CaseRow>,
    pub checks: Vec<MonotonicityCheck>,
}

impl CaseComparison {
    pub fn monotone(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

fn strictly_within(a: MarketMask, b: MarketMask) -> bool {
    a != b && b.contains(a)
}

/// Revenue table across cases plus a check for every pair of cases whose
/// markets are nested.
pub fn compare_cases(reports: &[CaseReport]) -> Result<CaseComparison, HarnessError> {
    if let Some(first) = reports.first() {
        if let Some(other) = reports.iter().find(|r| r.fingerprint != first.fingerprint) {
            return Err(HarnessError::Mismatch(format!(
                "{} ran on scenario {} but {} on {}",
                first.label(),
                first.fingerprint,
                other.label(),
                other.fingerprint
            )));
        }
    }
    let rows = reports
        .iter()
        .map(|r| {
            let t = r.schedule.totals;
            CaseRow {
                case: r.label(),
                markets: r.mask.to_string(),
                energy_usd: t.energy,
                reserve_usd: t.reserve,
                regcap_usd: t.regcap,
                mileage_usd: t.mileage,
                total_usd: t.total(),
                gap: r.gap,
            }
        })
        .collect();
    let mut checks = Vec::new();
    for a in reports {
        for b in reports {
            if strictly_within(a.mask, b.mask) {
                let (x, y) = (a.schedule.totals.total(), b.schedule.totals.total());
                checks.push(MonotonicityCheck {
                    smaller: a.label(),
                    larger: b.label(),
                    smaller_total: x,
                    larger_total: y,
                    holds: x <= y + 1e-6 * y.abs().max(1.0),
                });
            }
        }
    }
    Ok(CaseComparison { rows, checks })
}

pub fn write_comparison_csv<W: Write>(c: &CaseComparison, w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in &c.rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
