//! Optimality conditions of the clearing LP and the bounds used to encode
//! them with binaries.

use crate::clearing::{ConstraintTag, LlStructure, LlVarKind, Product, QuantityBids};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualRef {
    Ineq(usize),
    Balance,
}

/// `cost - Σ coef·dual = 0` for one primal column.
#[derive(Debug, Clone)]
pub struct StationarityRow {
    pub var: usize,
    pub cost: f64,
    pub duals: Vec<(DualRef, f64)>,
}

#[derive(Debug, Clone)]
pub struct ComplementarityPair {
    pub ineq: usize,
    pub tag: ConstraintTag,
    pub m_primal: f64,
    pub m_dual: f64,
    pub primal_derivation: String,
    pub dual_derivation: String,
}

#[derive(Debug, Clone)]
pub struct KktSystem {
    pub structure: LlStructure,
    pub stationarity: Vec<StationarityRow>,
    pub pairs: Vec<ComplementarityPair>,
    /// Finite box for every primal column implied by the constraints and the
    /// largest admissible bids.
    pub primal_bounds: Vec<(f64, f64)>,
    /// Bound on every multiplier, including |π^E|.
    pub m_dual: f64,
    pub power_rate: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual_sign: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual_sign).max(self.complementarity)
    }
}

/// Box of every clearing column: energy within the unit's range, reserve and
/// regulation within ramp and capacity, mileage within the multiplier cap,
/// battery products within the power rating.
pub fn implied_bounds(st: &LlStructure, s: &Scenario) -> Vec<(f64, f64)> {
    let p = s.bess.power_rate;
    st.vars
        .iter()
        .map(|v| match v.kind {
            LlVarKind::Gen { unit, product } => {
                let g = &s.generators[unit];
                let rg = g.regulation_ramp.min(g.p_max - g.p_min).max(0.0);
                match product {
                    Product::Energy => (g.p_min, g.p_max),
                    Product::Reserve => (0.0, g.reserve_ramp.min(g.p_max)),
                    Product::RegCap => (0.0, rg),
                    Product::Mileage => (0.0, g.mileage_multiplier * rg),
                }
            }
            LlVarKind::BessMileage => (0.0, s.bess.mileage_multiplier * p),
            _ => (0.0, p),
        })
        .collect()
}

pub fn derive_kkt(st: LlStructure, s: &Scenario) -> KktSystem {
    let bounds = implied_bounds(&st, s);
    let n = st.vars.len();
    let mut stationarity: Vec<StationarityRow> =
        (0..n).map(|j| StationarityRow { var: j, cost: st.vars[j].cost, duals: Vec::new() }).collect();
    for (i, q) in st.ineqs.iter().enumerate() {
        for &(j, a) in &q.terms {
            stationarity[j].duals.push((DualRef::Ineq(i), a));
        }
    }
    for &(j, a) in &st.balance {
        stationarity[j].duals.push((DualRef::Balance, a));
    }
    let coef = s.max_price_coefficient(st.interval);
    let mult = s.max_mileage_multiplier();
    let m_dual = (2.0 * coef * (1.0 + mult)).max(1.0);
    let dual_derivation = format!("2 x max|price coefficient| {coef} x (1 + max mileage multiplier {mult})");
    let p = s.bess.power_rate;
    let pairs = st
        .ineqs
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut m = q.constant;
            for &(j, a) in &q.terms {
                let (lo, hi) = bounds[j];
                m += (a * lo).max(a * hi);
            }
            if q.bid.is_some() {
                m += p;
            }
            ComplementarityPair {
                ineq: i,
                tag: q.tag,
                m_primal: m.max(0.0),
                m_dual,
                primal_derivation: format!(
                    "max of {} over implied column bounds{}",
                    q.tag,
                    if q.bid.is_some() { " and bid <= P^Rate" } else { "" }
                ),
                dual_derivation: dual_derivation.clone(),
            }
        })
        .collect();
    KktSystem { structure: st, stationarity, pairs, primal_bounds: bounds, m_dual, power_rate: p }
}

impl KktSystem {
    pub fn num_inequalities(&self) -> usize {
        self.structure.ineqs.len()
    }

    pub fn dual_value(&self, r: DualRef, lambda: &[f64], pi: f64) -> f64 {
        match r {
            DualRef::Ineq(i) => lambda[i],
            DualRef::Balance => pi,
        }
    }

    pub fn residuals(&self, x: &[f64], lambda: &[f64], pi: f64, bids: &QuantityBids) -> KktResiduals {
        let st = &self.structure;
        let mut r = KktResiduals::default();
        for row in &self.stationarity {
            let mut v = row.cost;
            for &(d, a) in &row.duals {
                v -= a * self.dual_value(d, lambda, pi);
            }
            r.stationarity = r.stationarity.max(v.abs());
        }
        for (q, &l) in st.ineqs.iter().zip(lambda) {
            let g = q.eval(x, bids);
            r.primal = r.primal.max(-g);
            r.dual_sign = r.dual_sign.max(-l);
            r.complementarity = r.complementarity.max((g * l).abs());
        }
        let bal: f64 = st.balance.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - st.load;
        r.primal = r.primal.max(bal.abs());
        r
    }
}

/// Revenue per hour as a linear function of the clearing solution, exact at
/// every KKT point: minus generator costs, plus the dual objective terms that
/// do not involve the battery's bids.
#[derive(Debug, Clone, Default)]
pub struct LinearRevenue {
    pub x: Vec<(usize, f64)>,
    pub lambda: Vec<(usize, f64)>,
    pub pi: f64,
}

impl LinearRevenue {
    pub fn eval(&self, x: &[f64], lambda: &[f64], pi: f64) -> f64 {
        self.x.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
            + self.lambda.iter().map(|&(i, c)| c * lambda[i]).sum::<f64>()
            + self.pi * pi
    }
}

pub fn linearize_objective(kkt: &KktSystem) -> LinearRevenue {
    let st = &kkt.structure;
    let x = st
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| matches!(v.kind, LlVarKind::Gen { .. }) && v.cost != 0.0)
        .map(|(j, v)| (j, -v.cost))
        .collect();
    let lambda = st
        .ineqs
        .iter()
        .enumerate()
        .filter(|(_, q)| q.bid.is_none() && q.constant != 0.0)
        .map(|(i, q)| (i, -q.constant))
        .collect();
    LinearRevenue { x, lambda, pi: st.load }
}

/// Battery revenue per hour computed directly as price × award.
pub fn direct_revenue(st: &LlStructure, x: &[f64], lambda: &[f64], pi: f64) -> f64 {
    let Some(b) = st.bess else { return 0.0 };
    let price = |label: &str| st.ineqs.iter().position(|q| q.tag.label == label).map_or(0.0, |i| lambda[i]);
    let v = |i: Option<usize>| i.map_or(0.0, |j| x[j]);
    pi * (v(b.supply) - v(b.demand))
        + price("reserve_req") * v(b.reserve)
        + price("regcap_req") * v(b.regcap)
        + price("mileage_req") * v(b.mileage)
}
