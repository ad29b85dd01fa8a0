//! Joint energy / reserve / regulation clearing of a single interval as an
//! LP, with prices read off the constraint duals.

use std::fmt;
use std::io::Write;

use bessbid_solver::{solve_lp, LpProblem, LpSettings, ProblemBuilder, RowSense, Sense, SolveOutcome, Status, Var};
use serde::{Deserialize, Serialize};

use crate::error::ClearingError;
use crate::par;
use crate::scenario::{MarketMask, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Product {
    Energy,
    Reserve,
    RegCap,
    Mileage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlVarKind {
    Gen { unit: usize, product: Product },
    BessSupply,
    BessDemand,
    BessReserve,
    BessRegCap,
    BessMileage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bid {
    Supply,
    Demand,
    Reserve,
    Regulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Identifies a lower-level constraint by its model label, the generator it
/// belongs to, and for box constraints the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintTag {
    pub label: &'static str,
    pub unit: Option<usize>,
    pub side: Option<Side>,
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label)?;
        if let Some(j) = self.unit {
            write!(f, "[G{}]", j + 1)?;
        }
        match self.side {
            Some(Side::Lower) => f.write_str(".lo"),
            Some(Side::Upper) => f.write_str(".hi"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LlVar {
    pub name: String,
    pub kind: LlVarKind,
    pub cost: f64,
}

/// `g(x) = terms·x + constant (+ bid quantity) >= 0`.
#[derive(Debug, Clone)]
pub struct Inequality {
    pub tag: ConstraintTag,
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
    pub bid: Option<Bid>,
    /// Simple bound on one variable; becomes a column bound in the LP.
    pub bound: bool,
}

impl Inequality {
    pub fn eval(&self, x: &[f64], bids: &QuantityBids) -> f64 {
        let mut g = self.constant + self.bid.map_or(0.0, |b| bids.get(b));
        for &(j, a) in &self.terms {
            g += a * x[j];
        }
        g
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BessIndex {
    pub supply: Option<usize>,
    pub demand: Option<usize>,
    pub reserve: Option<usize>,
    pub regcap: Option<usize>,
    pub mileage: Option<usize>,
}

/// Algebraic form of one interval's clearing problem, shared by the LP
/// builder and the KKT derivation. Costs are per hour ($/MWh × MW).
#[derive(Debug, Clone)]
pub struct LlStructure {
    pub interval: usize,
    pub delta_t: f64,
    pub vars: Vec<LlVar>,
    pub ineqs: Vec<Inequality>,
    /// Coefficients of the energy balance `balance·x = load`.
    pub balance: Vec<(usize, f64)>,
    pub load: f64,
    /// Per generator: energy, reserve, regulation capacity, mileage columns.
    pub gens: Vec<[usize; 4]>,
    pub bess: Option<BessIndex>,
}

/// Battery quantity bids for one interval, MW.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantityBids {
    pub supply: f64,
    pub demand: f64,
    pub reserve: f64,
    pub regulation: f64,
}

impl QuantityBids {
    pub fn get(&self, b: Bid) -> f64 {
        match b {
            Bid::Supply => self.supply,
            Bid::Demand => self.demand,
            Bid::Reserve => self.reserve,
            Bid::Regulation => self.regulation,
        }
    }

    /// Zeroes the products outside `mask`.
    pub fn masked(self, mask: MarketMask) -> QuantityBids {
        QuantityBids {
            supply: if mask.energy { self.supply } else { 0.0 },
            demand: if mask.energy { self.demand } else { 0.0 },
            reserve: if mask.reserve { self.reserve } else { 0.0 },
            regulation: if mask.regulation { self.regulation } else { 0.0 },
        }
    }
}

fn tag(label: &'static str, unit: Option<usize>, side: Option<Side>) -> ConstraintTag {
    ConstraintTag { label, unit, side }
}

/// Builds the algebraic clearing problem of interval `t`. `bess` selects
/// which battery products exist; `None` leaves the battery out entirely.
pub fn ll_structure(s: &Scenario, t: usize, bess: Option<MarketMask>) -> LlStructure {
    let iv = &s.intervals[t];
    let mut vars = Vec::new();
    let mut push = |name: String, kind: LlVarKind, cost: f64| {
        vars.push(LlVar { name, kind, cost });
        vars.len() - 1
    };
    let mut gens = Vec::new();
    for (j, _) in s.generators.iter().enumerate() {
        let g = j + 1;
        gens.push([
            push(format!("gs{g}"), LlVarKind::Gen { unit: j, product: Product::Energy }, iv.alpha_s[j]),
            push(format!("grs{g}"), LlVarKind::Gen { unit: j, product: Product::Reserve }, iv.alpha_rs[j]),
            push(format!("grgc{g}"), LlVarKind::Gen { unit: j, product: Product::RegCap }, iv.alpha_rgc[j]),
            push(format!("grgm{g}"), LlVarKind::Gen { unit: j, product: Product::Mileage }, iv.alpha_rgm[j]),
        ]);
    }
    let bess_idx = bess.map(|m| {
        let b = iv.beta;
        let mut idx = BessIndex::default();
        if m.energy {
            idx.supply = Some(push("bs".into(), LlVarKind::BessSupply, b.supply));
            idx.demand = Some(push("bd".into(), LlVarKind::BessDemand, -b.demand));
        }
        if m.reserve {
            idx.reserve = Some(push("brs".into(), LlVarKind::BessReserve, b.reserve));
        }
        if m.regulation {
            idx.regcap = Some(push("brgc".into(), LlVarKind::BessRegCap, b.regcap));
            idx.mileage = Some(push("brgm".into(), LlVarKind::BessMileage, b.mileage));
        }
        idx
    });

    let mut ineqs = Vec::new();
    let row =
        |tag, terms: Vec<(usize, f64)>, constant: f64| Inequality { tag, terms, constant, bid: None, bound: false };
    for (j, g) in s.generators.iter().enumerate() {
        let [gs, grs, grgc, grgm] = gens[j];
        let u = Some(j);
        ineqs.push(row(tag("gen_floor", u, None), vec![(gs, 1.0), (grgc, -1.0)], -g.p_min));
        ineqs.push(row(tag("gen_capacity", u, None), vec![(gs, -1.0), (grs, -1.0), (grgc, -1.0)], g.p_max));
        for (label, v, ramp) in [("gen_reserve", grs, g.reserve_ramp), ("gen_regcap", grgc, g.regulation_ramp)] {
            ineqs.push(Inequality { bound: true, ..row(tag(label, u, Some(Side::Lower)), vec![(v, 1.0)], 0.0) });
            ineqs.push(Inequality { bound: true, ..row(tag(label, u, Some(Side::Upper)), vec![(v, -1.0)], ramp) });
        }
        ineqs.push(row(tag("gen_mileage_floor", u, None), vec![(grgm, 1.0), (grgc, -1.0)], 0.0));
        ineqs.push(row(tag("gen_mileage_cap", u, None), vec![(grgc, g.mileage_multiplier), (grgm, -1.0)], 0.0));
    }
    if let Some(b) = bess_idx {
        for (label, v, bid) in [
            ("bess_supply", b.supply, Bid::Supply),
            ("bess_demand", b.demand, Bid::Demand),
            ("bess_reserve", b.reserve, Bid::Reserve),
            ("bess_regcap", b.regcap, Bid::Regulation),
        ] {
            if let Some(v) = v {
                ineqs.push(Inequality { bound: true, ..row(tag(label, None, Some(Side::Lower)), vec![(v, 1.0)], 0.0) });
                ineqs.push(Inequality {
                    bid: Some(bid),
                    bound: true,
                    ..row(tag(label, None, Some(Side::Upper)), vec![(v, -1.0)], 0.0)
                });
            }
        }
        if let (Some(c), Some(m)) = (b.regcap, b.mileage) {
            ineqs.push(row(tag("bess_mileage_floor", None, None), vec![(m, 1.0), (c, -1.0)], 0.0));
            ineqs.push(row(tag("bess_mileage_cap", None, None), vec![(c, s.bess.mileage_multiplier), (m, -1.0)], 0.0));
        }
    }
    let mut req = |label, col: usize, bcol: Option<usize>, q: f64| {
        let mut terms: Vec<(usize, f64)> = gens.iter().map(|g| (g[col], 1.0)).collect();
        if let Some(b) = bcol {
            terms.push((b, 1.0));
        }
        ineqs.push(row(tag(label, None, None), terms, -q));
    };
    let bi = bess_idx.unwrap_or_default();
    req("reserve_req", 1, bi.reserve, iv.reserve_req);
    req("regcap_req", 2, bi.regcap, iv.regcap_req);
    req("mileage_req", 3, bi.mileage, iv.mileage_req);

    let mut balance: Vec<(usize, f64)> = gens.iter().map(|g| (g[0], 1.0)).collect();
    if let Some(v) = bi.supply {
        balance.push((v, 1.0));
    }
    if let Some(v) = bi.demand {
        balance.push((v, -1.0));
    }
    LlStructure { interval: t, delta_t: iv.delta_t, vars, ineqs, balance, load: iv.load, gens, bess: bess_idx }
}

impl LlStructure {
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, x)| v.cost * x).sum()
    }

    /// Number of (generator-side, battery-side, system) constraints, with a
    /// box on one variable counted once.
    pub fn constraint_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 1);
        for q in &self.ineqs {
            if q.tag.side == Some(Side::Upper) {
                continue;
            }
            if q.tag.unit.is_some() {
                counts.0 += 1;
            } else if matches!(q.tag.label, "reserve_req" | "regcap_req" | "mileage_req") {
                counts.2 += 1;
            } else {
                counts.1 += 1;
            }
        }
        counts
    }
}

/// One interval's clearing LP together with its structure and bids.
#[derive(Debug, Clone)]
pub struct LlInterval {
    pub structure: LlStructure,
    pub bids: QuantityBids,
    pub lp: LpProblem,
    /// LP row of each non-bound inequality.
    pub row_of: Vec<Option<usize>>,
    pub balance_row: usize,
    pub label: usize,
}

/// Builds the clearing LP of interval `t`; `bids = None` leaves the battery
/// out of the market.
pub fn build_ll_interval(s: &Scenario, t: usize, bids: Option<&QuantityBids>) -> LlInterval {
    let st = ll_structure(s, t, bids.map(|_| MarketMask::ALL));
    ll_interval_from_structure(st, bids.copied().unwrap_or_default(), s.intervals[t].index)
}

/// Turns a clearing structure into its LP with the given bids: simple bounds
/// become column bounds, every other inequality a `>=` row.
pub fn ll_interval_from_structure(st: LlStructure, bids: QuantityBids, label: usize) -> LlInterval {
    let mut b = ProblemBuilder::new(format!("clear_{label}"), Sense::Minimize);
    let cols: Vec<Var> = st.vars.iter().map(|v| b.add_var(&v.name, f64::NEG_INFINITY, f64::INFINITY, v.cost)).collect();
    for q in st.ineqs.iter().filter(|q| q.bound) {
        let (j, a) = q.terms[0];
        let v = q.constant + q.bid.map_or(0.0, |bd| bids.get(bd));
        let (lo, hi) = b.bounds(cols[j]);
        if a > 0.0 {
            b.set_bounds(cols[j], -v / a + 0.0, hi);
        } else {
            b.set_bounds(cols[j], lo, v / -a);
        }
    }
    let mut row_of = vec![None; st.ineqs.len()];
    for (k, q) in st.ineqs.iter().enumerate() {
        if q.bound {
            continue;
        }
        let terms: Vec<(Var, f64)> = q.terms.iter().map(|&(j, a)| (cols[j], a)).collect();
        let r = b.add_row(q.tag.to_string(), RowSense::Ge, -q.constant, &terms);
        row_of[k] = Some(r.0);
    }
    let terms: Vec<(Var, f64)> = st.balance.iter().map(|&(j, a)| (cols[j], a)).collect();
    let balance_row = b.add_row("balance", RowSense::Eq, st.load, &terms).0;
    LlInterval { label, structure: st, bids, lp: b.build_lp(), row_of, balance_row }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GenSchedule {
    pub energy: f64,
    pub reserve: f64,
    pub regcap: f64,
    pub mileage: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BessAwards {
    pub supply: f64,
    pub demand: f64,
    pub reserve: f64,
    pub regcap: f64,
    pub mileage: f64,
}

/// Market-clearing prices, $/MWh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Prices {
    pub energy: f64,
    pub reserve: f64,
    pub regcap: f64,
    pub mileage: f64,
}

#[derive(Debug, Clone)]
pub struct ClearingResult {
    pub interval: usize,
    pub label: usize,
    pub delta_t: f64,
    pub load: f64,
    pub gens: Vec<GenSchedule>,
    pub bess: BessAwards,
    pub prices: Prices,
    /// Operating cost over the interval, $.
    pub objective: f64,
    /// Primal values in structure column order.
    pub x: Vec<f64>,
    /// Multiplier of every inequality (nonnegative in exact arithmetic).
    pub lambda: Vec<f64>,
    pub duality_gap: f64,
    pub cs_residual: f64,
}

/// Multipliers of every inequality of `ll` from an LP solution: row duals
/// for rows, reduced costs split by side for bounds.
pub fn inequality_multipliers(ll: &LlInterval, out: &SolveOutcome) -> Vec<f64> {
    ll.structure
        .ineqs
        .iter()
        .enumerate()
        .map(|(k, q)| match ll.row_of[k] {
            Some(r) => out.row_duals[r],
            None => {
                let (j, a) = q.terms[0];
                let d = out.reduced_costs[j];
                if a > 0.0 {
                    d.max(0.0)
                } else {
                    (-d).max(0.0)
                }
            }
        })
        .collect()
}

/// Relative strong-duality gap and largest complementarity product of a
/// primal/dual pair for the clearing problem.
pub fn certificate(st: &LlStructure, bids: &QuantityBids, x: &[f64], lambda: &[f64], pi_e: f64) -> (f64, f64) {
    let primal = st.objective(x);
    let mut dual = pi_e * st.load;
    let mut cs: f64 = 0.0;
    for (q, &l) in st.ineqs.iter().zip(lambda) {
        dual -= l * (q.constant + q.bid.map_or(0.0, |b| bids.get(b)));
        cs = cs.max((l * q.eval(x, bids)).abs());
    }
    ((primal - dual).abs() / primal.abs().max(1.0), cs)
}

pub fn clear_interval(ll: &LlInterval) -> Result<ClearingResult, ClearingError> {
    let interval = ll.structure.interval;
    let out = solve_lp(&ll.lp, &LpSettings::default()).map_err(|source| ClearingError::Solver { interval, source })?;
    match out.status {
        Status::Optimal => {}
        Status::Unbounded => return Err(ClearingError::Unbounded { interval }),
        _ => return Err(ClearingError::Infeasible { interval }),
    }
    let st = &ll.structure;
    let lambda = inequality_multipliers(ll, &out);
    let pi_e = out.row_duals[ll.balance_row];
    let (duality_gap, cs_residual) = certificate(st, &ll.bids, &out.x, &lambda, pi_e);
    let price_of = |label: &str| st.ineqs.iter().position(|q| q.tag.label == label).map_or(0.0, |k| lambda[k]);
    let x = out.x;
    let gens = st
        .gens
        .iter()
        .map(|g| GenSchedule { energy: x[g[0]], reserve: x[g[1]], regcap: x[g[2]], mileage: x[g[3]] })
        .collect();
    let val = |i: Option<usize>| i.map_or(0.0, |j| x[j]);
    let bi = st.bess.unwrap_or_default();
    let bess = BessAwards {
        supply: val(bi.supply),
        demand: val(bi.demand),
        reserve: val(bi.reserve),
        regcap: val(bi.regcap),
        mileage: val(bi.mileage),
    };
    Ok(ClearingResult {
        interval,
        label: ll.label,
        delta_t: st.delta_t,
        load: st.load,
        gens,
        bess,
        prices: Prices {
            energy: pi_e,
            reserve: price_of("reserve_req"),
            regcap: price_of("regcap_req"),
            mileage: price_of("mileage_req"),
        },
        objective: out.objective * st.delta_t,
        x,
        lambda,
        duality_gap,
        cs_residual,
    })
}

/// Clears every interval independently. `bids = None` clears without the
/// battery.
pub fn clear_horizon(s: &Scenario, bids: Option<&[QuantityBids]>) -> Result<Vec<ClearingResult>, ClearingError> {
    if let Some(b) = bids {
        if b.len() != s.num_intervals() {
            return Err(ClearingError::BidCount { expected: s.num_intervals(), got: b.len() });
        }
    }
    par::map_range(s.num_intervals(), |t| clear_interval(&build_ll_interval(s, t, bids.map(|b| &b[t]))))
        .into_iter()
        .collect()
}

#[derive(Serialize)]
struct CsvRow {
    interval: usize,
    delta_t_h: f64,
    load_mw: f64,
    gen_energy_mw: f64,
    gen_reserve_mw: f64,
    gen_regcap_mw: f64,
    gen_mileage_mw: f64,
    bess_supply_mw: f64,
    bess_demand_mw: f64,
    bess_reserve_mw: f64,
    bess_regcap_mw: f64,
    bess_mileage_mw: f64,
    price_energy_usd_per_mwh: f64,
    price_reserve_usd_per_mwh: f64,
    price_regcap_usd_per_mwh: f64,
    price_mileage_usd_per_mwh: f64,
    cost_usd: f64,
}

/// One row per interval: aggregate generator awards, battery awards, the
/// four prices and the operating cost.
pub fn write_clearing_csv<W: Write>(results: &[ClearingResult], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in results {
        let sum = |f: fn(&GenSchedule) -> f64| r.gens.iter().map(f).sum::<f64>();
        wr.serialize(CsvRow {
            interval: r.label,
            delta_t_h: r.delta_t,
            load_mw: r.load,
            gen_energy_mw: sum(|g| g.energy),
            gen_reserve_mw: sum(|g| g.reserve),
            gen_regcap_mw: sum(|g| g.regcap),
            gen_mileage_mw: sum(|g| g.mileage),
            bess_supply_mw: r.bess.supply,
            bess_demand_mw: r.bess.demand,
            bess_reserve_mw: r.bess.reserve,
            bess_regcap_mw: r.bess.regcap,
            bess_mileage_mw: r.bess.mileage,
            price_energy_usd_per_mwh: r.prices.energy,
            price_reserve_usd_per_mwh: r.prices.reserve,
            price_regcap_usd_per_mwh: r.prices.regcap,
            price_mileage_usd_per_mwh: r.prices.mileage,
            cost_usd: r.objective,
        })?;
    }
    wr.flush()?;
    Ok(())
}
