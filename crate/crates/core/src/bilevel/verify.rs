//! Post-solve audit of a bilevel solution against an independent re-clear.

use std::fmt;

use super::kkt::{direct_revenue, linearize_objective};
use super::milp::BilevelMilp;
use super::response::horizon_response;
use crate::clearing::{clear_horizon, ClearingResult, QuantityBids};
use crate::error::BilevelError;
use crate::scenario::Scenario;

pub const FEASIBILITY_TOL: f64 = 1e-6;
pub const COMPLEMENTARITY_TOL: f64 = 1e-7;
pub const DUALITY_TOL: f64 = 1e-6;
pub const OBJECTIVE_TOL: f64 = 1e-6;
pub const REVENUE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    /// 0-based interval, `None` for horizon-wide checks.
    pub interval: Option<usize>,
    /// Constraint label or check name, e.g. `balance`, `soc_step`, `revenue`.
    pub block: String,
    pub detail: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.interval {
            Some(t) => write!(f, "interval {} {}: {}", t + 1, self.block, self.detail),
            None => write!(f, "{}: {}", self.block, self.detail),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub passed: bool,
    pub mismatches: Vec<Mismatch>,
    pub notes: Vec<String>,
    /// Objective of the MILP point, $.
    pub milp_revenue: f64,
    /// Σ price × award × Δt at the MILP point, $.
    pub direct_revenue: f64,
    /// Σ price × award × Δt after re-clearing at the MILP bids, $.
    pub recleared_revenue: f64,
    /// Best revenue over all optimal outcomes of the re-clear, $.
    pub optimistic_revenue: f64,
    pub max_complementarity: f64,
    pub max_duality_gap: f64,
    pub max_stationarity: f64,
    pub recleared: Vec<ClearingResult>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn recleared_revenue(r: &ClearingResult) -> f64 {
    let b = &r.bess;
    let p = &r.prices;
    r.delta_t * (p.energy * (b.supply - b.demand) + p.reserve * b.reserve + p.regcap * b.regcap + p.mileage * b.mileage)
}

/// Checks a MILP point: lower-level feasibility and optimality per interval,
/// the battery's operating rows, agreement of the linearized revenue with
/// price × award, and agreement with an independent clearing at the same bids.
pub fn verify_bilevel_solution(
    s: &Scenario,
    milp: &BilevelMilp,
    x: &[f64],
) -> Result<VerificationReport, BilevelError> {
    let n = milp.builder.num_vars();
    if x.len() != n {
        return Err(BilevelError::Dimension { expected: n, got: x.len() });
    }
    let mut mismatches = Vec::new();
    let mut notes = Vec::new();
    let mut miss = |interval: Option<usize>, block: &str, detail: String| {
        mismatches.push(Mismatch { interval, block: block.to_string(), detail })
    };
    let bids = milp.bids(x);
    let mut max_cs: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    let mut max_stat: f64 = 0.0;
    let mut direct = 0.0;

    for k in &milp.blocks {
        let t = k.t;
        let st = &k.kkt.structure;
        let (xv, lambda, pi) = milp.block_values(k, x);
        let bd = bids[t];
        let scale = st.load.abs().max(1.0);
        for (i, q) in st.ineqs.iter().enumerate() {
            let g = q.eval(&xv, &bd);
            if g < -FEASIBILITY_TOL * scale {
                miss(Some(t), q.tag.label, format!("{} violated by {:.3e}", q.tag, -g));
            }
            let cs = (g * lambda[i]).abs();
            max_cs = max_cs.max(cs);
            if cs > COMPLEMENTARITY_TOL {
                miss(Some(t), q.tag.label, format!("{} slack {g:.3e} with multiplier {:.3e}", q.tag, lambda[i]));
            }
            if lambda[i] >= k.kkt.pairs[i].m_dual * (1.0 - 1e-9) {
                notes.push(format!(
                    "interval {} multiplier of {} at its bound {}",
                    t + 1,
                    q.tag,
                    k.kkt.pairs[i].m_dual
                ));
            }
        }
        let bal: f64 = st.balance.iter().map(|&(j, a)| a * xv[j]).sum::<f64>() - st.load;
        if bal.abs() > FEASIBILITY_TOL * scale {
            miss(Some(t), "balance", format!("energy balance off by {bal:.3e} MW"));
        }
        if pi.abs() >= k.kkt.m_dual * (1.0 - 1e-9) {
            notes.push(format!("interval {} energy price at its bound {}", t + 1, k.kkt.m_dual));
        }
        let res = k.kkt.residuals(&xv, &lambda, pi, &bd);
        max_stat = max_stat.max(res.stationarity);
        if res.stationarity > FEASIBILITY_TOL {
            miss(Some(t), "stationarity", format!("residual {:.3e}", res.stationarity));
        }
        let (gap, _) = crate::clearing::certificate(st, &bd, &xv, &lambda, pi);
        max_gap = max_gap.max(gap);
        if gap > DUALITY_TOL {
            miss(Some(t), "duality", format!("relative gap {gap:.3e}"));
        }
        let d = direct_revenue(st, &xv, &lambda, pi);
        let lin = linearize_objective(&k.kkt).eval(&xv, &lambda, pi);
        if rel(d, lin) > REVENUE_TOL {
            miss(Some(t), "revenue", format!("price x award {d:.6} vs linearized {lin:.6}"));
        }
        direct += d * st.delta_t;

        let val = |v: Option<bessbid_solver::Var>| v.map_or(0.0, |v| x[v.0]);
        let p = s.bess.power_rate;
        let dt = st.delta_t;
        let u = val(k.ul.u);
        let soc = x[k.ul.soc.0];
        let (sup, dem, res_, reg) = (val(k.ul.supply), val(k.ul.demand), val(k.ul.reserve), val(k.ul.regcap));
        let tol = FEASIBILITY_TOL * p.max(1.0);
        let mut ul = |label: &str, ok: bool, what: String| {
            if !ok {
                miss(Some(t), label, what);
            }
        };
        if k.ul.u.is_some() {
            ul("supply_switch", bd.supply <= p * u + tol, format!("supply bid {} with u = {u}", bd.supply));
            ul("demand_switch", bd.demand <= p * (1.0 - u) + tol, format!("demand bid {} with u = {u}", bd.demand));
        }
        for (v, name) in
            [(bd.supply, "supply"), (bd.demand, "demand"), (bd.reserve, "reserve"), (bd.regulation, "regulation")]
        {
            ul("bid_range", (-tol..=p + tol).contains(&v), format!("{name} bid {v} outside [0, {p}]"));
        }
        ul(
            "power_down",
            dem - sup - res_ - reg >= -p - tol,
            format!("downward headroom {}", dem - sup - res_ - reg + p),
        );
        ul("power_up", dem - sup - res_ + reg <= p + tol, format!("upward headroom {}", p - (dem - sup - res_ + reg)));
        ul("soc_floor", soc - (reg + res_) * dt >= s.bess.soc_min - tol, format!("soc {soc} leaves no room below"));
        ul("soc_ceiling", soc + reg * dt <= s.bess.soc_max + tol, format!("soc {soc} leaves no room above"));
        let prev = if t == 0 { s.bess.soc_init } else { x[milp.blocks[t - 1].ul.soc.0] };
        let step = prev + (dem - sup) * dt - soc;
        ul("soc_step", step.abs() <= tol, format!("state of charge recursion off by {step:.3e}"));
    }
    if s.terminal_soc_equals_init {
        if let Some(k) = milp.blocks.last() {
            let d = x[k.ul.soc.0] - s.bess.soc_init;
            if d.abs() > FEASIBILITY_TOL {
                miss(Some(k.t), "soc_step", format!("terminal state of charge off by {d:.3e}"));
            }
        }
    }

    let milp_revenue = milp.revenue(x);
    if rel(milp_revenue, direct) > REVENUE_TOL {
        miss(None, "revenue", format!("objective {milp_revenue:.6} vs price x award {direct:.6}"));
    }

    let full: Vec<QuantityBids> = bids.iter().map(|b| b.masked(milp.mask)).collect();
    let recleared = clear_horizon(s, Some(&full))?;
    let mut re_total = 0.0;
    for (k, r) in milp.blocks.iter().zip(&recleared) {
        let t = k.t;
        let st = &k.kkt.structure;
        let (xv, lambda, pi) = milp.block_values(k, x);
        let own = st.objective(&xv) * st.delta_t;
        if rel(own, r.objective) > OBJECTIVE_TOL {
            miss(Some(t), "clearing", format!("cost {own:.6} but re-clear gives {:.6}", r.objective));
        }
        let re = recleared_revenue(r);
        re_total += re;
        let d = direct_revenue(st, &xv, &lambda, pi) * st.delta_t;
        let mut award_diff: f64 = 0.0;
        for (g, rg) in st.gens.iter().zip(&r.gens) {
            for (j, v) in g.iter().zip([rg.energy, rg.reserve, rg.regcap, rg.mileage]) {
                award_diff = award_diff.max((xv[*j] - v).abs());
            }
        }
        let bi = st.bess.unwrap_or_default();
        let b = &r.bess;
        for (j, v) in [
            (bi.supply, b.supply),
            (bi.demand, b.demand),
            (bi.reserve, b.reserve),
            (bi.regcap, b.regcap),
            (bi.mileage, b.mileage),
        ] {
            award_diff = award_diff.max((j.map_or(0.0, |j| xv[j]) - v).abs());
        }
        let price = |label: &str| st.ineqs.iter().position(|q| q.tag.label == label).map_or(0.0, |i| lambda[i]);
        let pr = &r.prices;
        let price_diff = [
            (pi, pr.energy),
            (price("reserve_req"), pr.reserve),
            (price("regcap_req"), pr.regcap),
            (price("mileage_req"), pr.mileage),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
        if award_diff > FEASIBILITY_TOL || price_diff > FEASIBILITY_TOL {
            notes.push(format!(
                "interval {}: degenerate clearing, same cost but awards differ by {award_diff:.3e} MW and prices by {price_diff:.3e} $/MWh; re-clear pays {re:.6} against {d:.6}",
                t + 1
            ));
        }
    }
    if rel(re_total, milp_revenue) > REVENUE_TOL {
        notes.push(format!(
            "re-cleared revenue {re_total:.6} differs from the objective {milp_revenue:.6} through degenerate ties"
        ));
    }
    let optimistic = match horizon_response(s, milp, &full)? {
        Some(r) => r.revenue,
        None => {
            miss(None, "response", "no optimal clearing outcome at these bids respects the battery limits".into());
            f64::NEG_INFINITY
        }
    };
    if optimistic < milp_revenue - REVENUE_TOL * milp_revenue.abs().max(1.0) {
        miss(
            None,
            "response",
            format!("best clearing outcome pays {optimistic:.6}, below the objective {milp_revenue:.6}"),
        );
    }
    Ok(VerificationReport {
        passed: mismatches.is_empty(),
        mismatches,
        notes,
        milp_revenue,
        direct_revenue: direct,
        recleared_revenue: re_total,
        optimistic_revenue: optimistic,
        max_complementarity: max_cs,
        max_duality_gap: max_gap,
        max_stationarity: max_stat,
        recleared,
    })
}
