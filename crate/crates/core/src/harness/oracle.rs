//! Exhaustive search over a bid grid, independent of the MILP: every grid
//! point is cleared as an LP and the best battery-feasible outcome kept,
//! with a dynamic program over the state of charge linking intervals.

use std::collections::BTreeMap;

use crate::bilevel::{derive_kkt, optimistic_response, KktSystem};
use crate::clearing::{ll_structure, QuantityBids};
use crate::error::HarnessError;
use crate::par;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_intervals: usize,
    pub max_generators: usize,
    /// Cap on (state, grid point) evaluations.
    pub max_evaluations: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_intervals: 3, max_generators: 3, max_evaluations: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best revenue over the grid, $.
    pub revenue: f64,
    pub bids: Vec<QuantityBids>,
    pub soc: Vec<f64>,
    pub combos_per_interval: usize,
    /// (state of charge, grid point) pairs evaluated.
    pub grid_points: usize,
    pub lp_solves: usize,
}

/// `0, step, 2·step, …` up to `max`.
pub fn bid_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    (0..=n).map(|i| (i as f64 * step).min(max)).collect()
}

fn combos(s: &Scenario, step: f64) -> Vec<QuantityBids> {
    let m = s.market_mask;
    let grid = bid_grid(s.bess.power_rate, step);
    let on = |b: bool| if b { grid.clone() } else { vec![0.0] };
    let mut energy: Vec<(f64, f64)> = on(m.energy).iter().map(|&v| (v, 0.0)).collect();
    energy.extend(on(m.energy).iter().filter(|&&v| v > 0.0).map(|&v| (0.0, v)));
    let mut out = Vec::new();
    for &(supply, demand) in &energy {
        for &reserve in &on(m.reserve) {
            for &regulation in &on(m.regulation) {
                out.push(QuantityBids { supply, demand, reserve, regulation });
            }
        }
    }
    out
}

/// Cleared outcome of one grid point with the state of charge left free.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    revenue: f64,
    energy: f64,
    reserve: f64,
    regcap: f64,
}

#[derive(Debug, Clone)]
struct State {
    soc: f64,
    revenue: f64,
    bids: Vec<QuantityBids>,
    socs: Vec<f64>,
}

fn key(soc: f64) -> i64 {
    (soc * 1e6).round() as i64
}

const SOC_TOL: f64 = 1e-9;

/// Best revenue over bid vectors on a grid of spacing `step` MW, supply and
/// demand bids mutually exclusive. Every value it reports is attained by an
/// optimal clearing outcome that respects the battery's limits, so it never
/// exceeds the true optimum.
pub fn brute_force_oracle(s: &Scenario, step: f64, limits: &OracleLimits) -> Result<OracleResult, HarnessError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(HarnessError::TooLarge(format!("grid step {step} must be positive")));
    }
    let nt = s.num_intervals();
    if nt > limits.max_intervals || s.num_generators() > limits.max_generators {
        return Err(HarnessError::TooLarge(format!(
            "{nt} intervals and {} generators exceed the limits of {} and {}",
            s.num_generators(),
            limits.max_intervals,
            limits.max_generators
        )));
    }
    let grid = combos(s, step);
    let energy_values = bid_grid(s.bess.power_rate, step).len();
    let mut estimate = 0usize;
    for t in 0..nt {
        let states = (t * 2 * (energy_values - 1) + 1).min(grid.len().saturating_pow(t as u32));
        estimate = estimate.saturating_add(grid.len().saturating_mul(states));
    }
    if estimate > limits.max_evaluations {
        return Err(HarnessError::TooLarge(format!(
            "about {estimate} evaluations at step {step}, limit {}",
            limits.max_evaluations
        )));
    }

    let b = &s.bess;
    let mut states: BTreeMap<i64, State> = BTreeMap::new();
    states.insert(key(b.soc_init), State { soc: b.soc_init, revenue: 0.0, bids: Vec::new(), socs: Vec::new() });
    let mut grid_points = 0usize;
    let mut lp_solves = 0usize;
    for t in 0..nt {
        let dt = s.intervals[t].delta_t;
        let last = t + 1 == nt;
        let terminal = last && s.terminal_soc_equals_init;
        let kkt: KktSystem = derive_kkt(ll_structure(s, t, Some(s.market_mask)), s);
        let free: Vec<Option<Outcome>> = par::try_map(&grid, |bd| {
            optimistic_response(s, &[&kkt], t, std::slice::from_ref(bd), None, false).map(|r| {
                r.map(|r| {
                    let iv = &r.intervals[0];
                    let bi = kkt.structure.bess.unwrap_or_default();
                    let v = |i: Option<usize>| i.map_or(0.0, |j| iv.x[j]);
                    Outcome {
                        revenue: iv.revenue,
                        energy: (v(bi.demand) - v(bi.supply)) * dt,
                        reserve: v(bi.reserve),
                        regcap: v(bi.regcap),
                    }
                })
            })
        })?;
        lp_solves += 2 * grid.len();

        let pairs: Vec<(&State, usize)> = states
            .values()
            .flat_map(|st| (0..grid.len()).filter(|&c| free[c].is_some()).map(move |c| (st, c)))
            .collect();
        grid_points += states.len() * grid.len();
        if grid_points > limits.max_evaluations {
            return Err(HarnessError::TooLarge(format!("more than {} evaluations", limits.max_evaluations)));
        }
        let evaluated = par::try_map(&pairs, |&(st, c)| {
            let o = free[c].expect("filtered");
            let soc = st.soc + o.energy;
            let fits = soc >= b.soc_min - SOC_TOL
                && soc <= b.soc_max + SOC_TOL
                && soc - (o.regcap + o.reserve) * dt >= b.soc_min - SOC_TOL
                && soc + o.regcap * dt <= b.soc_max + SOC_TOL
                && (!terminal || (soc - b.soc_init).abs() <= SOC_TOL);
            if fits {
                return Ok((Some((o.revenue, soc)), 0));
            }
            let exact = optimistic_response(s, &[&kkt], t, std::slice::from_ref(&grid[c]), Some(st.soc), terminal)?;
            Ok::<_, crate::error::BilevelError>((exact.map(|r| (r.revenue, r.intervals[0].soc)), 2))
        })?;
        let mut next: BTreeMap<i64, State> = BTreeMap::new();
        for ((st, c), (val, solves)) in pairs.iter().zip(evaluated) {
            lp_solves += solves;
            let Some((rev, soc)) = val else { continue };
            let total = st.revenue + rev;
            let better = next.get(&key(soc)).is_none_or(|cur| total > cur.revenue + 1e-12);
            if better {
                let mut bids = st.bids.clone();
                bids.push(grid[*c]);
                let mut socs = st.socs.clone();
                socs.push(soc);
                next.insert(key(soc), State { soc, revenue: total, bids, socs });
            }
        }
        states = next;
        log::debug!("oracle interval {}: {} states", t + 1, states.len());
    }
    let best = states
        .into_values()
        .fold(None::<State>, |acc, st| match acc {
            Some(a) if a.revenue >= st.revenue - 1e-12 => Some(a),
            _ => Some(st),
        })
        .ok_or(HarnessError::Infeasible)?;
    Ok(OracleResult {
        revenue: best.revenue,
        bids: best.bids,
        soc: best.socs,
        combos_per_interval: grid.len(),
        grid_points,
        lp_solves,
    })
}
