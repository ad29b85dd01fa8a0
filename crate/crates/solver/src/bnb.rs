//! Best-first branch-and-bound over binary columns with plunging.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::error::SolverError;
use crate::problem::{MilpProblem, Sense};
use crate::simplex::{solve_lp, Basis, Engine, EngineStatus, LpSettings};
use crate::{SolveOutcome, Status};

#[derive(Debug, Clone)]
pub struct MilpSettings {
    /// Relative gap `(bound - incumbent) / max(|incumbent|, 1)` at which to stop.
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    /// Tie-break seed for nodes with equal bounds.
    pub seed: u64,
    pub node_limit: usize,
    pub int_tol: f64,
    /// Run the heuristic at every `heuristic_every`-th node (root always).
    pub heuristic_every: usize,
}

impl Default for MilpSettings {
    fn default() -> Self {
        MilpSettings {
            gap_tol: 1e-6,
            time_limit: None,
            seed: 0,
            node_limit: usize::MAX,
            int_tol: 1e-6,
            heuristic_every: 20,
        }
    }
}

/// Primal heuristic hook: receives an LP relaxation point and may return a
/// candidate whose integer entries are fixed and completed by an LP.
pub trait Heuristic: Sync {
    fn propose(&self, relaxation: &[f64]) -> Option<Vec<f64>>;
}

/// Candidate solution offered before the search starts.
#[derive(Debug, Clone)]
pub struct MipStart(pub Vec<f64>);

struct Node {
    id: usize,
    parent: usize,
    bound: f64,
    depth: usize,
    fixes: Rc<Vec<(usize, bool)>>,
    basis: Option<Rc<Basis>>,
    tie: u64,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound must compare greatest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal).then(o.tie.cmp(&self.tie)).then(o.id.cmp(&self.id))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn solve_milp(p: &MilpProblem, s: &MilpSettings) -> Result<SolveOutcome, SolverError> {
    solve_milp_with(p, s, None, &[])
}

struct Search<'a> {
    p: &'a MilpProblem,
    s: &'a MilpSettings,
    sign: f64,
    incumbent: Option<(f64, Vec<f64>)>,
    deadline: Option<Instant>,
}

impl Search<'_> {
    fn min_obj(&self, x: &[f64]) -> f64 {
        self.sign * self.p.lp.objective_value(x)
    }

    fn is_integral(&self, x: &[f64]) -> bool {
        (0..x.len()).all(|j| !self.p.integer[j] || (x[j] - x[j].round()).abs() <= self.s.int_tol)
    }

    /// Fixes the integer entries of `cand` and completes them with an LP.
    fn try_candidate(&mut self, cand: &[f64]) -> Result<bool, SolverError> {
        if cand.len() != self.p.lp.num_cols() {
            return Ok(false);
        }
        let mut lp = self.p.lp.clone();
        for j in 0..cand.len() {
            if self.p.integer[j] {
                let v = cand[j].round().clamp(lp.col_lower[j], lp.col_upper[j]);
                lp.col_lower[j] = v;
                lp.col_upper[j] = v;
            }
        }
        let settings = LpSettings {
            time_limit: self.deadline.map(|d| d.saturating_duration_since(Instant::now())),
            ..LpSettings::default()
        };
        let out = match solve_lp(&lp, &settings) {
            Ok(o) => o,
            Err(e) => {
                log::debug!("heuristic completion failed: {e}");
                return Ok(false);
            }
        };
        if out.status != Status::Optimal {
            return Ok(false);
        }
        Ok(self.offer(out.x))
    }

    fn offer(&mut self, mut x: Vec<f64>) -> bool {
        for j in 0..x.len() {
            if self.p.integer[j] {
                x[j] = x[j].round();
            }
        }
        if self.p.lp.max_violation(&x) > 1e-6 {
            return false;
        }
        let v = self.min_obj(&x);
        let better = self.incumbent.as_ref().is_none_or(|(b, _)| v < *b - 1e-12 * b.abs().max(1.0));
        if better {
            log::debug!("new incumbent {}", self.sign * v);
            self.incumbent = Some((v, x));
        }
        better
    }

    fn gap(&self, bound: f64) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((v, _)) => ((v - bound) / v.abs().max(1.0)).max(0.0),
        }
    }
}

pub fn solve_milp_with(
    p: &MilpProblem,
    s: &MilpSettings,
    heuristic: Option<&dyn Heuristic>,
    starts: &[MipStart],
) -> Result<SolveOutcome, SolverError> {
    p.check()?;
    let t0 = Instant::now();
    let deadline = s.time_limit.map(|d| t0 + d);
    let sign = if p.lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut search = Search { p, s, sign, incumbent: None, deadline };
    for st in starts {
        search.try_candidate(&st.0)?;
    }
    let ints: Vec<usize> = (0..p.lp.num_cols()).filter(|&j| p.integer[j]).collect();
    let root_lb = p.lp.col_lower.clone();
    let root_ub = p.lp.col_upper.clone();
    let mut engine = Engine::new(&p.lp);
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut last_solved = usize::MAX;
    let mut stopped: Option<Status> = None;
    let mut plunge: Option<Node> = Some(Node {
        id: 0,
        parent: usize::MAX,
        bound: f64::NEG_INFINITY,
        depth: 0,
        fixes: Rc::new(Vec::new()),
        basis: None,
        tie: 0,
    });
    let mut root_unbounded = false;
    let mut pruned_bound = f64::INFINITY;

    loop {
        let node = match plunge.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(n) => n,
                None => break,
            },
        };
        if let Some((inc, _)) = &search.incumbent {
            if node.bound >= inc - s.gap_tol * inc.abs().max(1.0) {
                pruned_bound = pruned_bound.min(node.bound);
                continue;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(node);
            stopped = Some(Status::TimeLimit);
            break;
        }
        if nodes >= s.node_limit {
            heap.push(node);
            stopped = Some(Status::TimeLimit);
            break;
        }
        nodes += 1;

        for &j in &ints {
            engine.set_col_bounds(j, root_lb[j], root_ub[j]);
        }
        for &(j, up) in node.fixes.iter() {
            if up {
                engine.set_col_bounds(j, 1.0, 1.0);
            } else {
                engine.set_col_bounds(j, 0.0, 0.0);
            }
        }
        if last_solved != node.parent {
            if let Some(b) = &node.basis {
                engine.set_basis(b);
            }
        }
        let st = match engine.solve(usize::MAX, deadline) {
            Ok(st) => st,
            Err(e) => {
                log::debug!("node {} numerical trouble ({e}); retrying from slack basis", node.id);
                engine = Engine::new(&p.lp);
                for &j in &ints {
                    engine.set_col_bounds(j, root_lb[j], root_ub[j]);
                }
                for &(j, up) in node.fixes.iter() {
                    let v = if up { 1.0 } else { 0.0 };
                    engine.set_col_bounds(j, v, v);
                }
                engine.solve(usize::MAX, deadline)?
            }
        };
        last_solved = node.id;
        match st {
            EngineStatus::Infeasible => continue,
            EngineStatus::Unbounded => {
                if node.id == 0 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            EngineStatus::TimeLimit | EngineStatus::IterLimit => {
                heap.push(node);
                stopped = Some(Status::TimeLimit);
                break;
            }
            EngineStatus::Optimal => {}
        }
        let x = engine.primal_values();
        let obj = search.min_obj(&x);
        if let Some((inc, _)) = &search.incumbent {
            if obj >= inc - s.gap_tol * inc.abs().max(1.0) {
                pruned_bound = pruned_bound.min(obj);
                continue;
            }
        }
        if search.is_integral(&x) {
            if !search.offer(x.clone()) {
                search.try_candidate(&x)?;
            }
            continue;
        }
        if let Some(h) = heuristic {
            if node.id == 0 || (s.heuristic_every > 0 && nodes.is_multiple_of(s.heuristic_every)) {
                if let Some(c) = h.propose(&x) {
                    search.try_candidate(&c)?;
                }
            }
        }
        // Branching variable: highest priority class, then most fractional.
        let mut pick: Option<(i32, f64, usize)> = None;
        for &j in &ints {
            let f = x[j] - x[j].floor();
            if f <= s.int_tol || f >= 1.0 - s.int_tol {
                continue;
            }
            let score = 0.5 - (f - 0.5).abs();
            let better = match pick {
                None => true,
                Some((pr, sc, _)) => p.priority[j] > pr || (p.priority[j] == pr && score > sc + 1e-12),
            };
            if better {
                pick = Some((p.priority[j], score, j));
            }
        }
        let (_, _, bj) = pick.expect("fractional integer column");
        let basis = Rc::new(engine.basis());
        let up_first = x[bj] >= 0.5;
        let mut children = Vec::with_capacity(2);
        for up in [up_first, !up_first] {
            let mut fixes = (*node.fixes).clone();
            fixes.push((bj, up));
            let id = next_id;
            next_id += 1;
            children.push(Node {
                id,
                parent: node.id,
                bound: obj,
                depth: node.depth + 1,
                fixes: Rc::new(fixes),
                basis: Some(basis.clone()),
                tie: splitmix(s.seed ^ id as u64),
            });
        }
        let second = children.pop().unwrap();
        let first = children.pop().unwrap();
        heap.push(second);
        let best_open = heap.peek().map_or(obj, |n| n.bound);
        let dive = match &search.incumbent {
            None => true,
            Some((inc, _)) => obj <= best_open + 0.5 * (inc - best_open),
        };
        if dive {
            plunge = Some(first);
        } else {
            heap.push(first);
        }
        if nodes.is_multiple_of(200) {
            let bound = heap.peek().map_or(obj, |n| n.bound.min(obj));
            log::info!(
                "b&b nodes {nodes} open {} incumbent {:?} bound {:.6} gap {:.4}",
                heap.len(),
                search.incumbent.as_ref().map(|(v, _)| sign * v),
                sign * bound,
                search.gap(bound)
            );
        }
    }

    let mut out = SolveOutcome::empty(Status::Infeasible);
    out.nodes = nodes;
    out.iterations = engine.iterations;
    if root_unbounded {
        out.status = Status::Unbounded;
        out.wall_time = t0.elapsed();
        return Ok(out);
    }
    let open_bound = heap.iter().map(|n| n.bound).fold(pruned_bound, f64::min);
    match search.incumbent.take() {
        None => {
            out.status = stopped.unwrap_or(Status::Infeasible);
            if out.status == Status::TimeLimit {
                out.bound = sign * open_bound;
            }
        }
        Some((v, x)) => {
            let bound = open_bound.min(v);
            let gap = ((v - bound) / v.abs().max(1.0)).max(0.0);
            out.status = if stopped.is_some() {
                Status::TimeLimit
            } else if gap <= 1e-9 {
                Status::Optimal
            } else {
                Status::GapLimit
            };
            out.objective = p.lp.objective_value(&x);
            out.bound = sign * bound;
            out.gap = gap;
            out.x = x;
        }
    }
    out.wall_time = t0.elapsed();
    Ok(out)
}
