//! Best lower-level response to fixed bids.
//!
//! With bids fixed the clearing problem may have several optimal solutions
//! that pay the battery differently. The response LP searches the whole
//! optimal face (primal and dual feasibility plus a closed duality gap)
//! together with the battery's operating rows and picks the one with the
//! highest revenue.

use bessbid_solver::{solve_lp, LpSettings, ProblemBuilder, RowSense, Sense, Status, Var};

use super::kkt::{linearize_objective, DualRef, KktSystem};
use super::milp::BilevelMilp;
use crate::clearing::{clear_interval, ll_interval_from_structure, QuantityBids};
use crate::error::BilevelError;
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct ResponseInterval {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub pi: f64,
    pub soc: f64,
    /// Battery revenue over the interval, $.
    pub revenue: f64,
    /// Clearing cost per hour at the fixed bids.
    pub ll_objective: f64,
}

#[derive(Debug, Clone)]
pub struct OptimisticResponse {
    pub intervals: Vec<ResponseInterval>,
    pub revenue: f64,
}

/// Relative slack on the duality-gap rows.
const FACE_TOL: f64 = 1e-7;

/// Solves the response LP for intervals `first..first + bids.len()` starting
/// from `soc_start`, or from any admissible state of charge when `None`.
/// Returns `None` when no optimal clearing outcome satisfies the battery's
/// operating rows.
pub fn optimistic_response(
    s: &Scenario,
    kkts: &[&KktSystem],
    first: usize,
    bids: &[QuantityBids],
    soc_start: Option<f64>,
    terminal: bool,
) -> Result<Option<OptimisticResponse>, BilevelError> {
    let mut b = ProblemBuilder::new("response", Sense::Maximize);
    struct Cols {
        x: Vec<Var>,
        lambda: Vec<Var>,
        pi: Var,
        soc: Var,
        z: f64,
    }
    let mut cols: Vec<Cols> = Vec::new();
    for (k, kkt) in kkts.iter().enumerate() {
        let t = first + k;
        let st = &kkt.structure;
        let bd = bids[k];
        let ll = ll_interval_from_structure(st.clone(), bd, s.intervals[t].index);
        let cleared = clear_interval(&ll)?;
        let zstar = st.objective(&cleared.x);
        let dt = s.intervals[t].delta_t;

        let mut x: Vec<Var> = Vec::with_capacity(st.vars.len());
        for (j, v) in st.vars.iter().enumerate() {
            let (lo, hi) = (ll.lp.col_lower[j], ll.lp.col_upper[j]);
            let (ilo, ihi) = kkt.primal_bounds[j];
            x.push(b.add_var(format!("x{k}_{}", v.name), lo.max(ilo), hi.min(ihi).max(lo.max(ilo)), 0.0));
        }
        let md = kkt.m_dual;
        let lambda: Vec<Var> = (0..st.ineqs.len()).map(|i| b.add_var(format!("l{k}_{i}"), 0.0, md, 0.0)).collect();
        let pi = b.add_var(format!("pi{k}"), -md, md, 0.0);
        let soc = b.add_var(format!("soc{k}"), s.bess.soc_min, s.bess.soc_max, 0.0);

        for q in st.ineqs.iter().filter(|q| !q.bound) {
            let tm: Vec<(Var, f64)> = q.terms.iter().map(|&(j, a)| (x[j], a)).collect();
            b.add_row(format!("g{k}_{}", q.tag), RowSense::Ge, -q.constant - q.bid.map_or(0.0, |v| bd.get(v)), &tm);
        }
        let bal: Vec<(Var, f64)> = st.balance.iter().map(|&(j, a)| (x[j], a)).collect();
        b.add_row(format!("bal{k}"), RowSense::Eq, st.load, &bal);
        for row in &kkt.stationarity {
            let tm: Vec<(Var, f64)> = row
                .duals
                .iter()
                .map(|&(d, a)| match d {
                    DualRef::Ineq(i) => (lambda[i], a),
                    DualRef::Balance => (pi, a),
                })
                .collect();
            b.add_row(format!("st{k}_{}", row.var), RowSense::Eq, row.cost, &tm);
        }
        let tol = FACE_TOL * zstar.abs().max(1.0);
        let primal: Vec<(Var, f64)> =
            st.vars.iter().enumerate().filter(|(_, v)| v.cost != 0.0).map(|(j, v)| (x[j], v.cost)).collect();
        b.add_row(format!("pobj{k}"), RowSense::Le, zstar + tol, &primal);
        let mut dual: Vec<(Var, f64)> = vec![(pi, st.load)];
        for (i, q) in st.ineqs.iter().enumerate() {
            let c = q.constant + q.bid.map_or(0.0, |v| bd.get(v));
            if c != 0.0 {
                dual.push((lambda[i], -c));
            }
        }
        b.add_row(format!("dobj{k}"), RowSense::Ge, zstar - tol, &dual);

        let bi = st.bess.unwrap_or_default();
        let xv = |i: Option<usize>| i.map(|j| x[j]);
        let (sup, dem, res, reg) = (xv(bi.supply), xv(bi.demand), xv(bi.reserve), xv(bi.regcap));
        let p = s.bess.power_rate;
        let some = |items: &[(Option<Var>, f64)]| -> Vec<(Var, f64)> {
            items.iter().filter_map(|&(v, a)| v.map(|v| (v, a))).collect()
        };
        let u6 = some(&[(dem, 1.0), (sup, -1.0), (res, -1.0), (reg, -1.0)]);
        if !u6.is_empty() {
            b.add_row(format!("u6_{k}"), RowSense::Ge, -p, &u6);
            b.add_row(format!("u7_{k}"), RowSense::Le, p, &some(&[(dem, 1.0), (sup, -1.0), (res, -1.0), (reg, 1.0)]));
        }
        b.add_row(format!("u9_{k}"), RowSense::Ge, s.bess.soc_min, &some(&[(Some(soc), 1.0), (reg, -dt), (res, -dt)]));
        b.add_row(format!("u10_{k}"), RowSense::Le, s.bess.soc_max, &some(&[(Some(soc), 1.0), (reg, dt)]));
        let mut chain = some(&[(Some(soc), 1.0), (dem, -dt), (sup, dt)]);
        if k > 0 {
            chain.push((cols[k - 1].soc, -1.0));
            b.add_row(format!("u8_{k}"), RowSense::Eq, 0.0, &chain);
        } else if let Some(init) = soc_start {
            b.add_row(format!("u8_{k}"), RowSense::Eq, init, &chain);
        }

        let lin = linearize_objective(kkt);
        for &(j, c) in &lin.x {
            b.add_cost(x[j], c * dt);
        }
        for &(i, c) in &lin.lambda {
            b.add_cost(lambda[i], c * dt);
        }
        b.add_cost(pi, lin.pi * dt);
        cols.push(Cols { x, lambda, pi, soc, z: zstar });
    }
    if terminal {
        if let Some(c) = cols.last() {
            b.add_row("terminal", RowSense::Eq, s.bess.soc_init, &[(c.soc, 1.0)]);
        }
    }
    let lp = b.build_lp();
    let out = solve_lp(&lp, &LpSettings::default())?;
    if out.status != Status::Optimal {
        return Ok(None);
    }
    let intervals: Vec<ResponseInterval> = kkts
        .iter()
        .zip(&cols)
        .enumerate()
        .map(|(k, (kkt, c))| {
            let x: Vec<f64> = c.x.iter().map(|v| out.x[v.0]).collect();
            let lambda: Vec<f64> = c.lambda.iter().map(|v| out.x[v.0]).collect();
            let pi = out.x[c.pi.0];
            let dt = s.intervals[first + k].delta_t;
            let revenue = linearize_objective(kkt).eval(&x, &lambda, pi) * dt;
            ResponseInterval { x, lambda, pi, soc: out.x[c.soc.0], revenue, ll_objective: c.z }
        })
        .collect();
    let revenue = intervals.iter().map(|r| r.revenue).sum();
    Ok(Some(OptimisticResponse { intervals, revenue }))
}

/// Response over the whole horizon of an assembled MILP.
pub fn horizon_response(
    s: &Scenario,
    milp: &BilevelMilp,
    bids: &[QuantityBids],
) -> Result<Option<OptimisticResponse>, BilevelError> {
    let kkts: Vec<&KktSystem> = milp.blocks.iter().map(|k| &k.kkt).collect();
    optimistic_response(s, &kkts, 0, bids, Some(s.bess.soc_init), s.terminal_soc_equals_init)
}

/// Keeps only one side of the energy market per interval: the larger bid
/// net of the smaller.
pub fn net_bids(b: QuantityBids) -> QuantityBids {
    let net = b.supply - b.demand;
    QuantityBids { supply: net.max(0.0), demand: (-net).max(0.0), ..b }
}

impl BilevelMilp {
    /// Full MILP column vector for bids and a response to them. Binaries are
    /// set from the response; the caller re-optimizes the continuous part.
    pub fn vector_from_response(&self, bids: &[QuantityBids], resp: &OptimisticResponse) -> Vec<f64> {
        let mut v = vec![0.0; self.builder.num_vars()];
        for (k, r) in self.blocks.iter().zip(&resp.intervals) {
            let bd = bids[k.t];
            let mut set = |c: Option<Var>, x: f64| {
                if let Some(c) = c {
                    v[c.0] = x;
                }
            };
            set(k.ul.s_bid, bd.supply);
            set(k.ul.d_bid, bd.demand);
            set(k.ul.rs_bid, bd.reserve);
            set(k.ul.rg_bid, bd.regulation);
            set(k.ul.u, if bd.supply > 0.0 { 1.0 } else { 0.0 });
            v[k.ul.soc.0] = r.soc;
            for (c, &x) in k.x.iter().zip(&r.x) {
                v[c.0] = x;
            }
            for (c, &l) in k.lambda.iter().zip(&r.lambda) {
                v[c.0] = l;
            }
            v[k.pi.0] = r.pi;
            for (i, q) in k.kkt.structure.ineqs.iter().enumerate() {
                let g = q.eval(&r.x, &bd);
                let pair = &k.kkt.pairs[i];
                let slack = g / pair.m_primal.max(1e-12);
                let dual = r.lambda[i] / pair.m_dual;
                v[k.z[i].0] = if slack > dual { 1.0 } else { 0.0 };
            }
        }
        v
    }
}
