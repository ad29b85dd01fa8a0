//! Per-interval value cuts from a price decomposition of the storage chain.
//!
//! Dualizing the state-of-charge recursion splits the MILP into one small
//! bilevel problem per interval. A column-generation master over the
//! per-interval solutions finds the multipliers; for each multiplier vector
//! the per-interval optimum bounds that interval's revenue as an affine
//! function of its state of charge and stored energy. The cuts are valid for
//! every feasible point and together bound the total by the Lagrangian value.

use std::time::{Duration, Instant};

use bessbid_solver::{solve_lp, solve_milp, LpSettings, MilpSettings, ProblemBuilder, RowSense, Sense, Status, Var};

use super::milp::{add_block, BilevelMilp, BlockLayout};
use crate::clearing::QuantityBids;
use crate::error::BilevelError;
use crate::par;
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct CutSettings {
    pub max_iterations: usize,
    /// Stop once `(bound - master) / max(|master|, 1)` falls below this.
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    /// Multiplier vectors kept as cuts, most recent first, besides the best.
    pub keep_last: usize,
}

impl Default for CutSettings {
    fn default() -> Self {
        CutSettings { max_iterations: 150, gap_tol: 1e-4, time_limit: None, keep_last: 8 }
    }
}

/// One per-interval solution of the decomposition.
#[derive(Debug, Clone)]
pub struct BlockColumn {
    pub revenue: f64,
    pub soc: f64,
    pub energy: f64,
    pub bids: QuantityBids,
}

#[derive(Debug, Clone)]
struct Multipliers {
    a: Vec<f64>,
    b: Vec<f64>,
    values: Vec<f64>,
    bound: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub iterations: usize,
    /// Best Lagrangian bound on total revenue, $.
    pub bound: f64,
    /// Value of the last master LP, $.
    pub master: f64,
    pub cuts_added: usize,
    pub columns: Vec<Vec<BlockColumn>>,
    /// Master weights of the last iteration, per interval and column.
    pub weights: Vec<Vec<f64>>,
    pub wall_time: Duration,
}

struct Pricing {
    builder: ProblemBuilder,
    layout: BlockLayout,
}

fn dot(terms: &[(Var, f64)], x: &[f64]) -> f64 {
    terms.iter().map(|&(v, c)| c * x[v.0]).sum()
}

fn price_block(p: &Pricing, a: f64, b: f64, deadline: Option<Instant>) -> Result<(f64, BlockColumn), BilevelError> {
    let mut bld = p.builder.clone();
    let k = &p.layout;
    for &(v, c) in &k.revenue {
        bld.add_cost(v, c);
    }
    bld.add_cost(k.ul.soc, -a);
    for &(v, c) in &k.energy {
        bld.add_cost(v, -b * c);
    }
    let settings = MilpSettings {
        gap_tol: 1e-9,
        time_limit: deadline.map(|d| d.saturating_duration_since(Instant::now()).max(Duration::from_millis(200))),
        ..MilpSettings::default()
    };
    let out = solve_milp(&bld.build_milp(), &settings)?;
    if !out.status.has_solution() {
        // The idle point is always feasible, so this only happens on a limit.
        return Ok((f64::INFINITY, BlockColumn { revenue: 0.0, soc: 0.0, energy: 0.0, bids: QuantityBids::default() }));
    }
    let val = |v: Option<Var>| v.map_or(0.0, |v| out.x[v.0]);
    let col = BlockColumn {
        revenue: dot(&k.revenue, &out.x),
        soc: out.x[k.ul.soc.0],
        energy: dot(&k.energy, &out.x),
        bids: QuantityBids {
            supply: val(k.ul.s_bid),
            demand: val(k.ul.d_bid),
            reserve: val(k.ul.rs_bid),
            regulation: val(k.ul.rg_bid),
        },
    };
    Ok((out.bound.max(out.objective), col))
}

/// Value, chain duals (one per interval plus the terminal row) and weights.
type MasterSolution = (f64, Vec<f64>, Vec<Vec<f64>>);

/// Master LP over the columns.
fn solve_master(s: &Scenario, cols: &[Vec<BlockColumn>]) -> Result<MasterSolution, BilevelError> {
    let n = cols.len();
    let mut b = ProblemBuilder::new("master", Sense::Maximize);
    let w: Vec<Vec<Var>> = cols
        .iter()
        .enumerate()
        .map(|(t, cs)| {
            cs.iter().enumerate().map(|(i, c)| b.add_var(format!("w{t}_{i}"), 0.0, f64::INFINITY, c.revenue)).collect()
        })
        .collect();
    for (t, ws) in w.iter().enumerate() {
        let tm: Vec<(Var, f64)> = ws.iter().map(|&v| (v, 1.0)).collect();
        b.add_row(format!("conv{t}"), RowSense::Eq, 1.0, &tm);
    }
    let mut chain_rows = Vec::with_capacity(n + 1);
    for t in 0..n {
        let mut tm: Vec<(Var, f64)> = w[t].iter().zip(&cols[t]).map(|(&v, c)| (v, c.soc - c.energy)).collect();
        if t > 0 {
            tm.extend(w[t - 1].iter().zip(&cols[t - 1]).map(|(&v, c)| (v, -c.soc)));
        }
        let rhs = if t == 0 { s.bess.soc_init } else { 0.0 };
        chain_rows.push(b.add_row(format!("chain{t}"), RowSense::Eq, rhs, &tm));
    }
    if s.terminal_soc_equals_init {
        let tm: Vec<(Var, f64)> = w[n - 1].iter().zip(&cols[n - 1]).map(|(&v, c)| (v, c.soc)).collect();
        chain_rows.push(b.add_row("terminal", RowSense::Eq, s.bess.soc_init, &tm));
    }
    let out = solve_lp(&b.build_lp(), &LpSettings::default())?;
    if out.status != Status::Optimal {
        return Err(bessbid_solver::SolverError::Numerical(format!("decomposition master ended {}", out.status)).into());
    }
    let mut y: Vec<f64> = chain_rows.iter().map(|r| out.row_duals[r.0]).collect();
    y.resize(n + 1, 0.0);
    let weights = w.iter().map(|ws| ws.iter().map(|v| out.x[v.0]).collect()).collect();
    Ok((out.objective, y, weights))
}

/// Runs the decomposition and adds the resulting cuts to `milp`.
pub fn add_value_cuts(
    s: &Scenario,
    milp: &mut BilevelMilp,
    settings: &CutSettings,
) -> Result<DecompositionReport, BilevelError> {
    let t0 = Instant::now();
    let deadline = settings.time_limit.map(|d| t0 + d);
    let n = milp.blocks.len();
    let pricing: Vec<Pricing> = (0..n)
        .map(|t| {
            let mut builder = ProblemBuilder::new(format!("price_{}", t + 1), Sense::Maximize);
            let layout = add_block(&mut builder, s, t, milp.mask);
            Pricing { builder, layout }
        })
        .collect();
    let idle = BlockColumn { revenue: 0.0, soc: s.bess.soc_init, energy: 0.0, bids: QuantityBids::default() };
    let mut cols: Vec<Vec<BlockColumn>> = vec![vec![idle]; n];
    let mut history: Vec<Multipliers> = Vec::new();
    let mut best: Option<Multipliers> = None;
    let mut master = 0.0;
    let mut weights = Vec::new();
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        let (mv, y, w) = solve_master(s, &cols)?;
        master = mv;
        weights = w;
        let a: Vec<f64> = (0..n).map(|t| y[t] - y[t + 1]).collect();
        let b: Vec<f64> = (0..n).map(|t| -y[t]).collect();
        let priced = par::try_map(&pricing, |p| {
            let t = p.layout.t;
            price_block(p, a[t], b[t], deadline)
        })?;
        let mut bound = s.bess.soc_init * y[0];
        if s.terminal_soc_equals_init {
            bound += s.bess.soc_init * y[n];
        }
        let mut values = Vec::with_capacity(n);
        for (t, (v, col)) in priced.into_iter().enumerate() {
            bound += v;
            values.push(v);
            cols[t].push(col);
        }
        let m = Multipliers { a, b, values, bound };
        if best.as_ref().is_none_or(|bm| m.bound < bm.bound) {
            best = Some(m.clone());
        }
        history.push(m);
        let best_bound = best.as_ref().map_or(f64::INFINITY, |m| m.bound);
        let gap = (best_bound - master) / master.abs().max(1.0);
        log::debug!("decomposition iteration {iterations}: master {master:.6} bound {best_bound:.6} gap {gap:.2e}");
        if gap <= settings.gap_tol || deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
    }
    let mut chosen: Vec<&Multipliers> = Vec::new();
    if let Some(bm) = &best {
        chosen.push(bm);
    }
    chosen.extend(history.iter().rev().take(settings.keep_last));
    let mut cuts_added = 0;
    for (ci, m) in chosen.iter().enumerate() {
        if !m.bound.is_finite() {
            continue;
        }
        for t in 0..n {
            let k = &milp.blocks[t];
            let mut tm = k.revenue.clone();
            tm.push((k.ul.soc, -m.a[t]));
            tm.extend(k.energy.iter().map(|&(v, c)| (v, -m.b[t] * c)));
            milp.add_cut(format!("t{}_value_cut{ci}", t + 1), &tm, m.values[t]);
            cuts_added += 1;
        }
    }
    let bound = best.map_or(f64::INFINITY, |m| m.bound);
    log::info!("decomposition: {iterations} iterations, master {master:.4}, bound {bound:.4}, {cuts_added} cuts");
    Ok(DecompositionReport { iterations, bound, master, cuts_added, columns: cols, weights, wall_time: t0.elapsed() })
}
