//! Battery operating constraints: bid limits, the charge/discharge switch,
//! power headroom, state-of-charge recursion and headroom.

use bessbid_solver::{ProblemBuilder, Row, RowSense, Var};

use crate::scenario::Scenario;

/// Upper-level columns of one interval together with the cleared battery
/// awards they constrain. Products outside the market mask are `None`.
#[derive(Debug, Clone, Copy)]
pub struct UlHandles {
    pub s_bid: Option<Var>,
    pub d_bid: Option<Var>,
    pub rs_bid: Option<Var>,
    pub rg_bid: Option<Var>,
    pub u: Option<Var>,
    pub soc: Var,
    pub supply: Option<Var>,
    pub demand: Option<Var>,
    pub reserve: Option<Var>,
    pub regcap: Option<Var>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UlRow {
    pub label: &'static str,
    pub interval: usize,
    pub row: Row,
}

fn terms(items: &[(Option<Var>, f64)]) -> Vec<(Var, f64)> {
    items.iter().filter_map(|&(v, a)| v.map(|v| (v, a))).collect()
}

/// Adds the per-interval rows of interval `t`. Bid columns must already
/// carry their `[0, P^Rate]` bounds.
pub fn build_ul_constraints(b: &mut ProblemBuilder, s: &Scenario, t: usize, h: &UlHandles) -> Vec<UlRow> {
    let p = s.bess.power_rate;
    let dt = s.intervals[t].delta_t;
    let mut rows = Vec::new();
    let mut add = |b: &mut ProblemBuilder, label: &'static str, sense, rhs, tm: Vec<(Var, f64)>| {
        if !tm.is_empty() {
            let row = b.add_row(format!("t{}_{label}", t + 1), sense, rhs, &tm);
            rows.push(UlRow { label, interval: t, row });
        }
    };
    if let Some(u) = h.u {
        add(b, "supply_switch", RowSense::Le, 0.0, terms(&[(h.s_bid, 1.0), (Some(u), -p)]));
        add(b, "demand_switch", RowSense::Le, p, terms(&[(h.d_bid, 1.0), (Some(u), p)]));
    }
    add(
        b,
        "power_down",
        RowSense::Ge,
        -p,
        terms(&[(h.demand, 1.0), (h.supply, -1.0), (h.reserve, -1.0), (h.regcap, -1.0)]),
    );
    add(
        b,
        "power_up",
        RowSense::Le,
        p,
        terms(&[(h.demand, 1.0), (h.supply, -1.0), (h.reserve, -1.0), (h.regcap, 1.0)]),
    );
    add(b, "soc_floor", RowSense::Ge, s.bess.soc_min, terms(&[(Some(h.soc), 1.0), (h.regcap, -dt), (h.reserve, -dt)]));
    add(b, "soc_ceiling", RowSense::Le, s.bess.soc_max, terms(&[(Some(h.soc), 1.0), (h.regcap, dt)]));
    rows
}

/// State-of-charge recursion linking consecutive intervals, plus the
/// optional terminal condition.
pub fn add_soc_chain(b: &mut ProblemBuilder, s: &Scenario, h: &[UlHandles]) -> Vec<UlRow> {
    let mut rows = Vec::new();
    for t in 0..h.len() {
        let dt = s.intervals[t].delta_t;
        let mut tm = terms(&[(Some(h[t].soc), 1.0), (h[t].demand, -dt), (h[t].supply, dt)]);
        let rhs = if t == 0 {
            s.bess.soc_init
        } else {
            tm.push((h[t - 1].soc, -1.0));
            0.0
        };
        let row = b.add_row(format!("t{}_U8", t + 1), RowSense::Eq, rhs, &tm);
        rows.push(UlRow { label: "soc_step", interval: t, row });
    }
    if s.terminal_soc_equals_init {
        if let Some(last) = h.last() {
            let row = b.add_row("terminal_soc", RowSense::Eq, s.bess.soc_init, &[(last.soc, 1.0)]);
            rows.push(UlRow { label: "soc_step", interval: h.len() - 1, row });
        }
    }
    rows
}

/// State of charge after each interval for given awards (the state-of-charge recursion).
pub fn soc_trajectory(s: &Scenario, supply: &[f64], demand: &[f64]) -> Vec<f64> {
    let mut soc = s.bess.soc_init;
    (0..supply.len())
        .map(|t| {
            soc += (demand[t] - supply[t]) * s.intervals[t].delta_t;
            soc
        })
        .collect()
}
