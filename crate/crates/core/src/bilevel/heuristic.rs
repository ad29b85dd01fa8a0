//! Primal heuristics: turn fractional bids into operable ones, clear the
//! market at those bids and lift the outcome to a full MILP point.

use bessbid_solver::{Heuristic, MipStart};

use super::milp::BilevelMilp;
use super::response::{horizon_response, net_bids};
use crate::clearing::QuantityBids;
use crate::scenario::Scenario;

/// Clips bids so that, if every bid were awarded in full, the schedule would
/// respect the battery's power, switch and state-of-charge limits.
pub fn repair_bids(s: &Scenario, bids: &[QuantityBids]) -> Vec<QuantityBids> {
    let p = s.bess.power_rate;
    let (lo, hi) = (s.bess.soc_min, s.bess.soc_max);
    let mask = s.market_mask;
    let mut soc = s.bess.soc_init;
    bids.iter()
        .enumerate()
        .map(|(t, raw)| {
            let dt = s.intervals[t].delta_t;
            let b = net_bids(raw.masked(mask));
            let supply = b.supply.clamp(0.0, p).min(((soc - lo) / dt).max(0.0));
            let demand = b.demand.clamp(0.0, p).min(((hi - soc) / dt).max(0.0));
            soc += (demand - supply) * dt;
            let room_down = ((soc - lo) / dt).max(0.0);
            let room_up = ((hi - soc) / dt).max(0.0);
            let mut regulation = b.regulation.max(0.0).min(room_up).min(room_down).min((p + demand - supply).max(0.0));
            let reserve = b
                .reserve
                .max(0.0)
                .min((p + demand - supply - regulation).max(0.0))
                .min((room_down - regulation).max(0.0));
            regulation = regulation.min((p - demand + supply + reserve).max(0.0));
            QuantityBids { supply, demand, reserve, regulation }.masked(mask)
        })
        .collect()
}

/// Full MILP point for the given bids, if the market outcome at those bids
/// is operable.
pub fn lift_bids(s: &Scenario, milp: &BilevelMilp, bids: &[QuantityBids]) -> Option<Vec<f64>> {
    let bids = repair_bids(s, bids);
    match horizon_response(s, milp, &bids) {
        Ok(Some(r)) => Some(milp.vector_from_response(&bids, &r)),
        Ok(None) => None,
        Err(e) => {
            log::debug!("response failed: {e}");
            None
        }
    }
}

/// Starting points: staying idle, and any extra bid vectors supplied.
pub fn mip_starts(s: &Scenario, milp: &BilevelMilp, extra: &[Vec<QuantityBids>]) -> Vec<MipStart> {
    let idle = vec![QuantityBids::default(); milp.blocks.len()];
    std::iter::once(&idle).chain(extra).filter_map(|b| lift_bids(s, milp, b)).map(MipStart).collect()
}

pub struct BilevelHeuristic<'a> {
    pub scenario: &'a Scenario,
    pub milp: &'a BilevelMilp,
}

impl BilevelHeuristic<'_> {
    fn awards(&self, x: &[f64]) -> Vec<QuantityBids> {
        let val = |v: Option<bessbid_solver::Var>| v.map_or(0.0, |v| x[v.0]);
        self.milp
            .blocks
            .iter()
            .map(|k| QuantityBids {
                supply: val(k.ul.supply),
                demand: val(k.ul.demand),
                reserve: val(k.ul.reserve),
                regulation: val(k.ul.regcap),
            })
            .collect()
    }
}

impl Heuristic for BilevelHeuristic<'_> {
    fn propose(&self, relaxation: &[f64]) -> Option<Vec<f64>> {
        let from_bids = self.milp.bids(relaxation);
        let from_awards = self.awards(relaxation);
        let a = lift_bids(self.scenario, self.milp, &from_bids);
        let b = lift_bids(self.scenario, self.milp, &from_awards);
        match (a, b) {
            (Some(a), Some(b)) => Some(if self.milp.revenue(&a) >= self.milp.revenue(&b) { a } else { b }),
            (a, b) => a.or(b),
        }
    }
}
