//! Embedded LP/MILP solving: a bounded revised simplex on a sparse LU
//! factorization, best-first branch-and-bound over binaries, and fixed-format
//! MPS export/import.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bnb;
pub mod error;
pub mod lu;
pub mod mps;
mod presolve;
pub mod problem;
pub mod simplex;

pub use bnb::{solve_milp, solve_milp_with, Heuristic, MilpSettings, MipStart};
pub use error::SolverError;
pub use problem::{CscMatrix, LpProblem, MilpProblem, ProblemBuilder, Row, RowSense, Sense, Var};
pub use simplex::{solve_lp, Basis, LpSettings};

use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    TimeLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::GapLimit => "gap-limit",
            Status::TimeLimit => "time-limit",
        }
    }

    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::GapLimit | Status::TimeLimit)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of an LP or MILP solve.
///
/// Duals follow the problem's own sense: `row_duals[i]` is the rate of change
/// of the optimal objective per unit increase of `rhs[i]`, and
/// `reduced_costs[j] = obj[j] - A_j' row_duals`. Both are empty for MILPs.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// Best proven bound (equals `objective` for LPs).
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub iterations: usize,
    pub wall_time: Duration,
    pub basis: Option<Basis>,
}

impl SolveOutcome {
    pub(crate) fn empty(status: Status) -> Self {
        SolveOutcome {
            status,
            x: Vec::new(),
            row_duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: f64::NAN,
            bound: f64::NAN,
            gap: f64::INFINITY,
            nodes: 0,
            iterations: 0,
            wall_time: Duration::ZERO,
            basis: None,
        }
    }
}
