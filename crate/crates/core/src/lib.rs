//! Strategic bidding of a price-maker battery across real-time energy,
//! spinning reserve and pay-as-performance regulation markets.
//!
//! The lower level is the system operator's joint clearing LP; the upper
//! level is the battery's revenue maximization. [`bilevel`] collapses the
//! two into one MILP solved by [`bessbid_solver`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod agc;
pub mod bilevel;
pub mod clearing;
pub mod error;
pub mod harness;
pub mod par;
pub mod scenario;

pub use error::{AgcError, BilevelError, ClearingError, HarnessError, ScenarioError};
pub use scenario::{MarketMask, Scenario};
