//! Bounded revised simplex on `A x - r = 0`, where `r` are row logicals
//! carrying the row bounds. Primal simplex (composite phase 1) for cold
//! starts, dual simplex for warm starts after bound changes.

use std::time::{Duration, Instant};

use crate::error::SolverError;
use crate::lu::LuFactor;
use crate::presolve::Presolved;
use crate::problem::{CscMatrix, LpProblem, RowSense, Sense};
use crate::{SolveOutcome, Status};

const TOL_P: f64 = 1e-9;
const TOL_D: f64 = 1e-9;
const TOL_PIV: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// Status of every structural column followed by every row logical.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone)]
pub struct LpSettings {
    pub presolve: bool,
    pub max_iter: usize,
    pub time_limit: Option<Duration>,
}

impl Default for LpSettings {
    fn default() -> Self {
        LpSettings { presolve: true, max_iter: 1_000_000, time_limit: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EngineStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
    TimeLimit,
}

pub(crate) struct Engine {
    m: usize,
    n: usize,
    a: CscMatrix,
    at: CscMatrix,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    sign: f64,
    basis: Vec<usize>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    d: Vec<f64>,
    lu: Option<LuFactor>,
    primal_stale: bool,
    pub iterations: usize,
}

fn pow2_round(s: f64) -> f64 {
    if !s.is_finite() || s <= 0.0 {
        return 1.0;
    }
    2f64.powi(s.log2().round() as i32)
}

fn compute_scaling(a: &CscMatrix) -> (Vec<f64>, Vec<f64>) {
    let m = a.nrows;
    let n = a.ncols();
    let mut r = vec![1.0; m];
    let mut c = vec![1.0; n];
    for _pass in 0..4 {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for j in 0..n {
            for (i, v) in a.col(j) {
                let s = (v * c[j]).abs();
                rmin[i] = rmin[i].min(s);
                rmax[i] = rmax[i].max(s);
            }
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                r[i] = 1.0 / (rmin[i] * rmax[i]).sqrt();
            }
        }
        for j in 0..n {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for (i, v) in a.col(j) {
                let s = (v * r[i]).abs();
                lo = lo.min(s);
                hi = hi.max(s);
            }
            if hi > 0.0 {
                c[j] = 1.0 / (lo * hi).sqrt();
            }
        }
    }
    let mut rmax = vec![0.0f64; m];
    for j in 0..n {
        for (i, v) in a.col(j) {
            rmax[i] = rmax[i].max((v * c[j] * r[i]).abs());
        }
    }
    for i in 0..m {
        if rmax[i] > 0.0 {
            r[i] /= rmax[i];
        }
        r[i] = pow2_round(r[i]);
    }
    for j in 0..n {
        let mut hi = 0.0f64;
        for (i, v) in a.col(j) {
            hi = hi.max((v * c[j] * r[i]).abs());
        }
        if hi > 0.0 {
            c[j] /= hi;
        }
        c[j] = pow2_round(c[j]);
    }
    (r, c)
}

impl Engine {
    pub(crate) fn new(lp: &LpProblem) -> Engine {
        let m = lp.num_rows();
        let n = lp.num_cols();
        let (row_scale, col_scale) = compute_scaling(&lp.matrix);
        let mut a = lp.matrix.clone();
        for j in 0..n {
            for k in a.col_start[j]..a.col_start[j + 1] {
                a.values[k] *= row_scale[a.row_idx[k]] * col_scale[j];
            }
        }
        let at = a.transpose();
        let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; n + m];
        let mut lb = vec![0.0; n + m];
        let mut ub = vec![0.0; n + m];
        for j in 0..n {
            cost[j] = sign * lp.obj[j] * col_scale[j];
            lb[j] = lp.col_lower[j] / col_scale[j];
            ub[j] = lp.col_upper[j] / col_scale[j];
        }
        for i in 0..m {
            let b = lp.rhs[i] * row_scale[i];
            let (l, u) = match lp.row_sense[i] {
                RowSense::Le => (f64::NEG_INFINITY, b),
                RowSense::Ge => (b, f64::INFINITY),
                RowSense::Eq => (b, b),
            };
            lb[n + i] = l;
            ub[n + i] = u;
        }
        let mut e = Engine {
            m,
            n,
            a,
            at,
            cost,
            lb,
            ub,
            row_scale,
            col_scale,
            sign,
            basis: Vec::new(),
            status: Vec::new(),
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            lu: None,
            primal_stale: true,
            iterations: 0,
        };
        e.slack_basis();
        e
    }

    fn nonbasic_status(&self, k: usize) -> VarStatus {
        if self.lb[k].is_finite() {
            VarStatus::Lower
        } else if self.ub[k].is_finite() {
            VarStatus::Upper
        } else {
            VarStatus::Zero
        }
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.status = (0..n + m).map(|k| if k >= n { VarStatus::Basic } else { self.nonbasic_status(k) }).collect();
        self.basis = (n..n + m).collect();
        self.lu = None;
        self.primal_stale = true;
    }

    pub(crate) fn set_basis(&mut self, b: &Basis) {
        let (n, m) = (self.n, self.m);
        if b.status.len() != n + m || b.status.iter().filter(|s| **s == VarStatus::Basic).count() != m {
            self.slack_basis();
            return;
        }
        self.status = b.status.clone();
        self.basis = (0..n + m).filter(|&k| self.status[k] == VarStatus::Basic).collect();
        for k in 0..n + m {
            self.fix_status(k);
        }
        self.lu = None;
        self.primal_stale = true;
    }

    pub(crate) fn basis(&self) -> Basis {
        Basis { status: self.status.clone() }
    }

    fn fix_status(&mut self, k: usize) {
        let s = self.status[k];
        let ok = match s {
            VarStatus::Basic => true,
            VarStatus::Lower => self.lb[k].is_finite(),
            VarStatus::Upper => self.ub[k].is_finite(),
            VarStatus::Zero => !self.lb[k].is_finite() && !self.ub[k].is_finite(),
        };
        if !ok {
            self.status[k] = self.nonbasic_status(k);
        }
    }

    pub(crate) fn set_col_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        let (l, u) = (lower / self.col_scale[j], upper / self.col_scale[j]);
        if l == self.lb[j] && u == self.ub[j] {
            return;
        }
        self.lb[j] = l;
        self.ub[j] = u;
        self.fix_status(j);
        self.primal_stale = true;
    }

    fn for_col<F: FnMut(usize, f64)>(&self, k: usize, mut f: F) {
        if k < self.n {
            for (i, v) in self.a.col(k) {
                f(i, v);
            }
        } else {
            f(k - self.n, -1.0);
        }
    }

    fn nonbasic_value(&self, k: usize) -> f64 {
        match self.status[k] {
            VarStatus::Lower => self.lb[k],
            VarStatus::Upper => self.ub[k],
            VarStatus::Zero | VarStatus::Basic => 0.0,
        }
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        for _attempt in 0..=self.m + 1 {
            let cols: Vec<Vec<(usize, f64)>> = self
                .basis
                .iter()
                .map(|&k| {
                    let mut c = Vec::new();
                    self.for_col(k, |i, v| c.push((i, v)));
                    c
                })
                .collect();
            match LuFactor::factor(self.m, &cols) {
                Ok(f) => {
                    self.lu = Some(f);
                    return Ok(());
                }
                Err(s) => {
                    log::debug!("singular basis, repairing {} positions", s.positions.len());
                    for (&pos, &row) in s.positions.iter().zip(&s.rows) {
                        let old = self.basis[pos];
                        self.status[old] = self.nonbasic_status(old);
                        let slack = self.n + row;
                        self.basis[pos] = slack;
                        self.status[slack] = VarStatus::Basic;
                    }
                    self.primal_stale = true;
                }
            }
        }
        Err(SolverError::Numerical("basis repair did not converge".into()))
    }

    fn compute_primal(&mut self) {
        let (n, m) = (self.n, self.m);
        let mut rhs = vec![0.0; m];
        for k in 0..n + m {
            if self.status[k] == VarStatus::Basic {
                continue;
            }
            let v = self.nonbasic_value(k);
            self.x[k] = v;
            if v != 0.0 {
                self.for_col(k, |i, a| rhs[i] -= a * v);
            }
        }
        let mut xb = vec![0.0; m];
        self.lu.as_ref().unwrap().ftran(&mut rhs, &mut xb);
        for (p, &k) in self.basis.iter().enumerate() {
            self.x[k] = xb[p];
        }
        self.primal_stale = false;
    }

    fn btran_costs(&self, cb: &[f64]) -> Vec<f64> {
        let mut c = cb.to_vec();
        let mut y = vec![0.0; self.m];
        self.lu.as_ref().unwrap().btran(&mut c, &mut y);
        y
    }

    fn reduced_costs(&self, cost: &[f64], y: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut d = vec![0.0; n + m];
        for j in 0..n {
            if self.status[j] != VarStatus::Basic {
                let mut s = cost[j];
                for (i, v) in self.a.col(j) {
                    s -= y[i] * v;
                }
                d[j] = s;
            }
        }
        for i in 0..m {
            if self.status[n + i] != VarStatus::Basic {
                d[n + i] = cost[n + i] + y[i];
            }
        }
        d
    }

    fn compute_duals(&mut self) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&k| self.cost[k]).collect();
        let y = self.btran_costs(&cb);
        self.d = self.reduced_costs(&self.cost, &y);
        y
    }

    fn ftran_col(&self, k: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        self.for_col(k, |i, v| b[i] += v);
        let mut out = vec![0.0; self.m];
        self.lu.as_ref().unwrap().ftran(&mut b, &mut out);
        out
    }

    fn primal_infeasibility(&self, k: usize) -> f64 {
        let v = self.x[k];
        if v < self.lb[k] - TOL_P {
            self.lb[k] - v
        } else if v > self.ub[k] + TOL_P {
            v - self.ub[k]
        } else {
            0.0
        }
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&k| self.primal_infeasibility(k)).fold(0.0, f64::max)
    }

    fn dual_infeasible(&self, k: usize) -> bool {
        let dk = self.d[k];
        match self.status[k] {
            VarStatus::Basic => false,
            _ if self.lb[k] == self.ub[k] => false,
            VarStatus::Lower => dk < -TOL_D,
            VarStatus::Upper => dk > TOL_D,
            VarStatus::Zero => dk.abs() > TOL_D,
        }
    }

    /// Moves dual-infeasible boxed nonbasics to their other bound.
    /// Returns true when no dual infeasibility remains.
    fn flip_to_dual_feasible(&mut self) -> bool {
        let mut ok = true;
        for k in 0..self.n + self.m {
            if !self.dual_infeasible(k) {
                continue;
            }
            if self.lb[k].is_finite() && self.ub[k].is_finite() {
                self.status[k] = if self.d[k] < 0.0 { VarStatus::Upper } else { VarStatus::Lower };
                self.primal_stale = true;
            } else {
                ok = false;
            }
        }
        ok
    }

    fn ensure_factor(&mut self) -> Result<(), SolverError> {
        if self.lu.is_none() {
            self.refactor()?;
            self.primal_stale = true;
        }
        if self.primal_stale {
            self.compute_primal();
        }
        Ok(())
    }

    fn maybe_refactor(&mut self) -> Result<(), SolverError> {
        if self.lu.as_ref().is_none_or(|f| f.num_updates() >= REFACTOR_EVERY) {
            self.refactor()?;
            self.compute_primal();
        }
        Ok(())
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], leave_status: VarStatus) {
        let leaving = self.basis[r];
        self.status[leaving] = leave_status;
        self.x[leaving] = self.nonbasic_value(leaving);
        self.basis[r] = q;
        self.status[q] = VarStatus::Basic;
        self.lu.as_mut().unwrap().update(r, alpha);
    }

    pub(crate) fn solve(&mut self, max_iter: usize, deadline: Option<Instant>) -> Result<EngineStatus, SolverError> {
        if self.m == 0 {
            return Ok(self.solve_empty());
        }
        self.ensure_factor()?;
        for _round in 0..6 {
            self.compute_duals();
            let dual_ok = self.flip_to_dual_feasible();
            if self.primal_stale {
                self.compute_primal();
            }
            let st = if dual_ok && self.max_primal_infeasibility() > 0.0 {
                match self.dual(max_iter, deadline)? {
                    EngineStatus::Infeasible => {
                        // Confirm with primal phase 1 from the final basis.
                        self.primal(max_iter, deadline)?
                    }
                    EngineStatus::IterLimit => self.primal(max_iter, deadline)?,
                    s => s,
                }
            } else {
                self.primal(max_iter, deadline)?
            };
            if st != EngineStatus::Optimal {
                return Ok(st);
            }
            self.refactor()?;
            self.compute_primal();
            self.compute_duals();
            let pinf = self.max_primal_infeasibility();
            let dinf = (0..self.n + self.m).any(|k| self.dual_infeasible(k));
            if pinf == 0.0 && !dinf {
                return Ok(EngineStatus::Optimal);
            }
            log::debug!("cleanup round: primal inf {pinf:e}, dual inf {dinf}");
        }
        Err(SolverError::Numerical("simplex cleanup did not converge".into()))
    }

    fn solve_empty(&mut self) -> EngineStatus {
        for j in 0..self.n {
            let c = self.cost[j];
            let (l, u) = (self.lb[j], self.ub[j]);
            let v = if c > 0.0 {
                l
            } else if c < 0.0 {
                u
            } else if l.is_finite() {
                l
            } else if u.is_finite() {
                u
            } else {
                0.0
            };
            if !v.is_finite() {
                return EngineStatus::Unbounded;
            }
            self.x[j] = v;
            self.status[j] = if v == l {
                VarStatus::Lower
            } else if v == u {
                VarStatus::Upper
            } else {
                VarStatus::Zero
            };
            self.d[j] = c;
        }
        EngineStatus::Optimal
    }

    fn primal(&mut self, max_iter: usize, deadline: Option<Instant>) -> Result<EngineStatus, SolverError> {
        let (n, m) = (self.n, self.m);
        let mut degenerate_run = 0usize;
        let start = self.iterations;
        loop {
            if self.iterations - start >= max_iter {
                return Ok(EngineStatus::IterLimit);
            }
            if self.iterations.is_multiple_of(64) {
                if let Some(dl) = deadline {
                    if Instant::now() >= dl {
                        return Ok(EngineStatus::TimeLimit);
                    }
                }
            }
            self.maybe_refactor()?;
            let phase1 = self.max_primal_infeasibility() > 0.0;
            let cb: Vec<f64> = self
                .basis
                .iter()
                .map(|&k| {
                    if phase1 {
                        if self.x[k] < self.lb[k] - TOL_P {
                            -1.0
                        } else if self.x[k] > self.ub[k] + TOL_P {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        self.cost[k]
                    }
                })
                .collect();
            let y = self.btran_costs(&cb);
            let d = if phase1 { self.reduced_costs(&vec![0.0; n + m], &y) } else { self.reduced_costs(&self.cost, &y) };
            let bland = degenerate_run > STALL_LIMIT;
            let mut q = usize::MAX;
            let mut best = 0.0;
            for k in 0..n + m {
                let st = self.status[k];
                if st == VarStatus::Basic || self.lb[k] == self.ub[k] {
                    continue;
                }
                let dk = d[k];
                let eligible = match st {
                    VarStatus::Lower => dk < -TOL_D,
                    VarStatus::Upper => dk > TOL_D,
                    VarStatus::Zero => dk.abs() > TOL_D,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    q = k;
                    break;
                }
                if dk.abs() > best {
                    best = dk.abs();
                    q = k;
                }
            }
            if q == usize::MAX {
                if phase1 {
                    return Ok(EngineStatus::Infeasible);
                }
                self.d = d;
                return Ok(EngineStatus::Optimal);
            }
            let dir = if d[q] < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran_col(q);

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            let mut limits: Vec<(usize, f64, bool)> = Vec::new();
            for (p, &k) in self.basis.iter().enumerate() {
                let a = alpha[p];
                if a.abs() <= TOL_PIV {
                    continue;
                }
                let delta = -dir * a;
                let v = self.x[k];
                let (l, u) = (self.lb[k], self.ub[k]);
                let below = v < l - TOL_P;
                let above = v > u + TOL_P;
                let target_lower = if delta < 0.0 {
                    if above {
                        Some(false)
                    } else if below || !l.is_finite() {
                        None
                    } else {
                        Some(true)
                    }
                } else if below {
                    Some(true)
                } else if above || !u.is_finite() {
                    None
                } else {
                    Some(false)
                };
                let Some(to_lower) = target_lower else { continue };
                let bound = if to_lower { l } else { u };
                let dist = ((bound - v) / delta).max(0.0);
                let harris = ((bound - v) + if delta > 0.0 { TOL_P } else { -TOL_P }) / delta;
                theta_max = theta_max.min(harris.max(0.0));
                limits.push((p, dist, to_lower));
            }
            let range = self.ub[q] - self.lb[q];
            if !theta_max.is_finite() && !range.is_finite() {
                if phase1 {
                    return Err(SolverError::Numerical("unbounded phase-1 direction".into()));
                }
                return Ok(EngineStatus::Unbounded);
            }
            let mut leave: Option<(usize, f64, bool)> = None;
            for &(p, dist, to_lower) in &limits {
                if dist > theta_max {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((bp, bd, _)) => {
                        if bland {
                            dist < bd - 1e-12 || (dist <= bd + 1e-12 && self.basis[p] < self.basis[bp])
                        } else {
                            alpha[p].abs() > alpha[bp].abs()
                        }
                    }
                };
                if better {
                    leave = Some((p, dist, to_lower));
                }
            }
            self.iterations += 1;
            let flip = match leave {
                None => true,
                Some((_, dist, _)) => range <= dist,
            };
            let theta = if flip { range } else { leave.unwrap().1 };
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for (p, &k) in self.basis.iter().enumerate() {
                if alpha[p] != 0.0 {
                    self.x[k] -= dir * theta * alpha[p];
                }
            }
            if flip {
                self.status[q] = if dir > 0.0 { VarStatus::Upper } else { VarStatus::Lower };
                self.x[q] = self.nonbasic_value(q);
                continue;
            }
            self.x[q] += dir * theta;
            let (r, _, to_lower) = leave.unwrap();
            let st = if to_lower { VarStatus::Lower } else { VarStatus::Upper };
            let xq = self.x[q];
            self.pivot(r, q, &alpha, st);
            self.x[q] = xq;
        }
    }

    fn dual(&mut self, max_iter: usize, deadline: Option<Instant>) -> Result<EngineStatus, SolverError> {
        let (n, m) = (self.n, self.m);
        let start = self.iterations;
        let mut retries = 0;
        loop {
            if self.iterations - start >= max_iter {
                return Ok(EngineStatus::IterLimit);
            }
            if self.iterations.is_multiple_of(64) {
                if let Some(dl) = deadline {
                    if Instant::now() >= dl {
                        return Ok(EngineStatus::TimeLimit);
                    }
                }
            }
            if self.lu.as_ref().is_none_or(|f| f.num_updates() >= REFACTOR_EVERY) {
                self.refactor()?;
                self.compute_primal();
                self.compute_duals();
                if !self.flip_to_dual_feasible() {
                    return Ok(EngineStatus::IterLimit);
                }
                if self.primal_stale {
                    self.compute_primal();
                }
            }
            let mut r = usize::MAX;
            let mut worst = 0.0;
            for p in 0..m {
                let inf = self.primal_infeasibility(self.basis[p]);
                if inf > worst {
                    worst = inf;
                    r = p;
                }
            }
            if r == usize::MAX {
                return Ok(EngineStatus::Optimal);
            }
            let kr = self.basis[r];
            let to_lower = self.x[kr] < self.lb[kr];
            let mut e = vec![0.0; m];
            e[r] = 1.0;
            let rho = self.btran_costs(&e);
            let mut arow = vec![0.0; n + m];
            for (i, &ri) in rho.iter().enumerate() {
                if ri != 0.0 {
                    for (j, v) in self.at.col(i) {
                        arow[j] += ri * v;
                    }
                    arow[n + i] = -ri;
                }
            }
            let mut tmax = f64::INFINITY;
            let mut cands: Vec<(usize, f64)> = Vec::new();
            for k in 0..n + m {
                let st = self.status[k];
                if st == VarStatus::Basic || self.lb[k] == self.ub[k] {
                    continue;
                }
                let ah = if to_lower { -arow[k] } else { arow[k] };
                let dk = self.d[k];
                let (ok, num, ratio) = match st {
                    VarStatus::Lower if ah > TOL_PIV => (true, dk.max(0.0) + TOL_D, dk.max(0.0) / ah),
                    VarStatus::Upper if ah < -TOL_PIV => (true, dk.min(0.0) - TOL_D, dk.min(0.0) / ah),
                    VarStatus::Zero if ah.abs() > TOL_PIV => (true, dk.abs() + TOL_D, dk.abs() / ah.abs()),
                    _ => (false, 0.0, 0.0),
                };
                if !ok {
                    continue;
                }
                let h = if st == VarStatus::Zero { num / ah.abs() } else { num / ah };
                tmax = tmax.min(h);
                cands.push((k, ratio));
            }
            if cands.is_empty() {
                return Ok(EngineStatus::Infeasible);
            }
            let mut q = usize::MAX;
            let mut big = 0.0;
            for &(k, ratio) in &cands {
                if ratio <= tmax && arow[k].abs() > big {
                    big = arow[k].abs();
                    q = k;
                }
            }
            let alpha = self.ftran_col(q);
            let arq = alpha[r];
            if arq.abs() < TOL_PIV || (arq - arow[q]).abs() > 1e-7 * (1.0 + arq.abs()) {
                retries += 1;
                if retries > 3 {
                    return Err(SolverError::Numerical("unstable dual pivot".into()));
                }
                self.refactor()?;
                self.compute_primal();
                self.compute_duals();
                continue;
            }
            retries = 0;
            self.iterations += 1;
            let theta_d = self.d[q] / arq;
            for k in 0..n + m {
                if self.status[k] != VarStatus::Basic && arow[k] != 0.0 {
                    self.d[k] -= theta_d * arow[k];
                }
            }
            self.d[q] = 0.0;
            self.d[kr] = -theta_d;
            let target = if to_lower { self.lb[kr] } else { self.ub[kr] };
            let theta_p = (self.x[kr] - target) / arq;
            for (p, &k) in self.basis.iter().enumerate() {
                if alpha[p] != 0.0 {
                    self.x[k] -= theta_p * alpha[p];
                }
            }
            let xq = self.x[q] + theta_p;
            let st = if to_lower { VarStatus::Lower } else { VarStatus::Upper };
            self.pivot(r, q, &alpha, st);
            self.x[q] = xq;
        }
    }

    /// Unscaled structural values.
    pub(crate) fn primal_values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x[j] * self.col_scale[j]).collect()
    }

    /// Unscaled row duals and reduced costs in the problem's own sense.
    pub(crate) fn dual_values(&mut self) -> (Vec<f64>, Vec<f64>) {
        if self.m == 0 {
            let d = (0..self.n).map(|j| self.sign * self.d[j] / self.col_scale[j]).collect();
            return (Vec::new(), d);
        }
        let y = self.compute_duals();
        let yy = (0..self.m).map(|i| self.sign * y[i] * self.row_scale[i]).collect();
        let d = (0..self.n).map(|j| self.sign * self.d[j] / self.col_scale[j]).collect();
        (yy, d)
    }
}

fn dual_objective(lp: &LpProblem, y: &[f64], d: &[f64], x: &[f64]) -> f64 {
    let mut s = lp.obj_offset;
    for i in 0..lp.num_rows() {
        s += y[i] * lp.rhs[i];
    }
    for j in 0..lp.num_cols() {
        if d[j] != 0.0 {
            let l = lp.col_lower[j];
            let u = lp.col_upper[j];
            let b = if (x[j] - l).abs() <= (x[j] - u).abs() { l } else { u };
            if b.is_finite() {
                s += d[j] * b;
            }
        }
    }
    s
}

/// Solves an LP; infeasibility and unboundedness are statuses, not errors.
pub fn solve_lp(lp: &LpProblem, settings: &LpSettings) -> Result<SolveOutcome, SolverError> {
    lp.check_dims()?;
    let t0 = Instant::now();
    let deadline = settings.time_limit.map(|d| t0 + d);
    let pre = if settings.presolve { Presolved::run(lp) } else { Presolved::identity(lp) };
    let Some(pre) = pre else {
        let mut out = SolveOutcome::empty(Status::Infeasible);
        out.wall_time = t0.elapsed();
        return Ok(out);
    };
    let mut engine = Engine::new(&pre.reduced);
    let st = engine.solve(settings.max_iter, deadline)?;
    let status = match st {
        EngineStatus::Optimal => Status::Optimal,
        EngineStatus::Infeasible => Status::Infeasible,
        EngineStatus::Unbounded => Status::Unbounded,
        EngineStatus::TimeLimit | EngineStatus::IterLimit => Status::TimeLimit,
    };
    let mut out = SolveOutcome::empty(status);
    out.iterations = engine.iterations;
    if status == Status::Optimal {
        let xr = engine.primal_values();
        let (yr, dr) = engine.dual_values();
        let (x, y, d) = pre.postsolve(lp, &xr, &yr, &dr);
        out.objective = lp.objective_value(&x);
        let dobj = dual_objective(lp, &y, &d, &x);
        out.bound = out.objective;
        out.gap = (out.objective - dobj).abs() / out.objective.abs().max(1.0);
        if pre.is_identity() {
            out.basis = Some(engine.basis());
        }
        out.x = x;
        out.row_duals = y;
        out.reduced_costs = d;
    }
    out.wall_time = t0.elapsed();
    Ok(out)
}
