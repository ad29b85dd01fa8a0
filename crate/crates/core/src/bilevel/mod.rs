//! Strategic bidding of the battery as a single-level MILP.

pub mod cuts;
pub mod heuristic;
pub mod kkt;
pub mod milp;
pub mod response;
pub mod ul;
pub mod verify;

pub use cuts::{add_value_cuts, BlockColumn, CutSettings, DecompositionReport};
pub use heuristic::{lift_bids, mip_starts, repair_bids, BilevelHeuristic};
pub use kkt::{derive_kkt, direct_revenue, linearize_objective, KktResiduals, KktSystem, LinearRevenue};
pub use milp::{add_block, assemble_milp, BilevelMilp, BlockLayout, MRecord, MilpCounts};
pub use response::{horizon_response, net_bids, optimistic_response, OptimisticResponse, ResponseInterval};
pub use ul::{add_soc_chain, build_ul_constraints, soc_trajectory, UlHandles, UlRow};
pub use verify::{verify_bilevel_solution, Mismatch, VerificationReport};
