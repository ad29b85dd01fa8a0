//! Single-level MILP: upper-level rows, the clearing problem's primal and
//! dual feasibility, big-M complementarity and the linearized revenue.

use bessbid_solver::{MilpProblem, ProblemBuilder, Row, RowSense, Sense, Var};

use super::kkt::{derive_kkt, linearize_objective, DualRef, KktSystem};
use super::ul::{add_soc_chain, build_ul_constraints, UlHandles, UlRow};
use crate::clearing::{ll_structure, ConstraintTag, QuantityBids};
use crate::error::{BilevelError, ScenarioError};
use crate::scenario::{validate_scenario, MarketMask, Scenario};

pub const PRIORITY_COMPLEMENTARITY: i32 = 2;
pub const PRIORITY_SWITCH: i32 = 1;

/// Columns of one interval.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub t: usize,
    pub kkt: KktSystem,
    pub ul: UlHandles,
    pub x: Vec<Var>,
    pub lambda: Vec<Var>,
    pub pi: Var,
    pub z: Vec<Var>,
    /// Linearized battery revenue over the interval, $.
    pub revenue: Vec<(Var, f64)>,
    /// Net energy stored over the interval, MWh.
    pub energy: Vec<(Var, f64)>,
    pub ul_rows: Vec<UlRow>,
}

/// Big-M pair of one complementarity condition and where it came from.
#[derive(Debug, Clone)]
pub struct MRecord {
    pub interval: usize,
    pub tag: ConstraintTag,
    pub m_primal: f64,
    pub m_dual: f64,
    pub derivation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MilpCounts {
    pub intervals: usize,
    pub variables: usize,
    pub constraints: usize,
    pub binaries: usize,
    pub complementarity: usize,
    pub switches: usize,
    pub value_cuts: usize,
}

#[derive(Debug, Clone)]
pub struct BilevelMilp {
    pub mask: MarketMask,
    pub builder: ProblemBuilder,
    pub blocks: Vec<BlockLayout>,
    pub chain: Vec<UlRow>,
    pub registry: Vec<MRecord>,
    pub value_cuts: usize,
}

fn val(x: &[f64], v: Option<Var>) -> f64 {
    v.map_or(0.0, |v| x[v.0])
}

/// Adds the columns and rows of interval `t` without the cross-interval
/// recursion and without objective coefficients.
pub fn add_block(b: &mut ProblemBuilder, s: &Scenario, t: usize, mask: MarketMask) -> BlockLayout {
    let kkt = derive_kkt(ll_structure(s, t, Some(mask)), s);
    let st = &kkt.structure;
    let p = s.bess.power_rate;
    let dt = s.intervals[t].delta_t;
    let tn = t + 1;
    let bid =
        |b: &mut ProblemBuilder, on: bool, name: &str| on.then(|| b.add_var(format!("t{tn}_{name}"), 0.0, p, 0.0));
    let s_bid = bid(b, mask.energy, "sbid");
    let d_bid = bid(b, mask.energy, "dbid");
    let rs_bid = bid(b, mask.reserve, "rsbid");
    let rg_bid = bid(b, mask.regulation, "rgbid");
    let u = mask.energy.then(|| b.add_binary(format!("t{tn}_u"), PRIORITY_SWITCH));
    let soc = b.add_var(format!("t{tn}_soc"), s.bess.soc_min, s.bess.soc_max, 0.0);

    let x: Vec<Var> = st
        .vars
        .iter()
        .zip(&kkt.primal_bounds)
        .map(|(v, &(lo, hi))| b.add_var(format!("t{tn}_{}", v.name), lo, hi, 0.0))
        .collect();
    let md = kkt.m_dual;
    let lambda: Vec<Var> = st.ineqs.iter().map(|q| b.add_var(format!("t{tn}_lam_{}", q.tag), 0.0, md, 0.0)).collect();
    let pi = b.add_var(format!("t{tn}_piE"), -md, md, 0.0);
    let z: Vec<Var> =
        st.ineqs.iter().map(|q| b.add_binary(format!("t{tn}_z_{}", q.tag), PRIORITY_COMPLEMENTARITY)).collect();

    let bid_var = |bd| match bd {
        crate::clearing::Bid::Supply => s_bid,
        crate::clearing::Bid::Demand => d_bid,
        crate::clearing::Bid::Reserve => rs_bid,
        crate::clearing::Bid::Regulation => rg_bid,
    };
    for (i, q) in st.ineqs.iter().enumerate() {
        let mut tm: Vec<(Var, f64)> = q.terms.iter().map(|&(j, a)| (x[j], a)).collect();
        if let Some(bd) = q.bid {
            tm.push((bid_var(bd).expect("bid column exists for every modelled product"), 1.0));
        }
        if !q.bound || q.bid.is_some() {
            b.add_row(format!("t{tn}_{}", q.tag), RowSense::Ge, -q.constant, &tm);
        }
        let pair = &kkt.pairs[i];
        let mut cs = tm.clone();
        cs.push((z[i], -pair.m_primal));
        b.add_row(format!("t{tn}_csp_{}", q.tag), RowSense::Le, -q.constant, &cs);
        b.add_row(format!("t{tn}_csd_{}", q.tag), RowSense::Le, pair.m_dual, &[(lambda[i], 1.0), (z[i], pair.m_dual)]);
    }
    let bal: Vec<(Var, f64)> = st.balance.iter().map(|&(j, a)| (x[j], a)).collect();
    b.add_row(format!("t{tn}_L17"), RowSense::Eq, st.load, &bal);
    for row in &kkt.stationarity {
        let tm: Vec<(Var, f64)> = row
            .duals
            .iter()
            .map(|&(d, a)| match d {
                DualRef::Ineq(i) => (lambda[i], a),
                DualRef::Balance => (pi, a),
            })
            .collect();
        b.add_row(format!("t{tn}_stat_{}", st.vars[row.var].name), RowSense::Eq, row.cost, &tm);
    }

    let bi = st.bess.unwrap_or_default();
    let xv = |i: Option<usize>| i.map(|j| x[j]);
    let ul = UlHandles {
        s_bid,
        d_bid,
        rs_bid,
        rg_bid,
        u,
        soc,
        supply: xv(bi.supply),
        demand: xv(bi.demand),
        reserve: xv(bi.reserve),
        regcap: xv(bi.regcap),
    };
    let ul_rows = build_ul_constraints(b, s, t, &ul);

    let lin = linearize_objective(&kkt);
    let mut revenue: Vec<(Var, f64)> = lin.x.iter().map(|&(j, c)| (x[j], c * dt)).collect();
    revenue.extend(lin.lambda.iter().map(|&(i, c)| (lambda[i], c * dt)));
    revenue.push((pi, lin.pi * dt));
    let mut energy = Vec::new();
    if let Some(v) = ul.demand {
        energy.push((v, dt));
    }
    if let Some(v) = ul.supply {
        energy.push((v, -dt));
    }
    BlockLayout { t, kkt, ul, x, lambda, pi, z, revenue, energy, ul_rows }
}

/// Assembles the single-level MILP for the scenario's market mask.
pub fn assemble_milp(s: &Scenario) -> Result<BilevelMilp, BilevelError> {
    let v = validate_scenario(s);
    if !v.is_empty() {
        return Err(ScenarioError::Invalid(v).into());
    }
    let mask = s.market_mask;
    let mut b = ProblemBuilder::new(format!("bilevel_{}", s.name), Sense::Maximize);
    let blocks: Vec<BlockLayout> = (0..s.num_intervals()).map(|t| add_block(&mut b, s, t, mask)).collect();
    let handles: Vec<UlHandles> = blocks.iter().map(|k| k.ul).collect();
    let chain = add_soc_chain(&mut b, s, &handles);
    for k in &blocks {
        for &(v, c) in &k.revenue {
            b.add_cost(v, c);
        }
    }
    let registry = blocks
        .iter()
        .flat_map(|k| {
            k.kkt.pairs.iter().map(move |p| MRecord {
                interval: k.t,
                tag: p.tag,
                m_primal: p.m_primal,
                m_dual: p.m_dual,
                derivation: format!("primal: {}; dual: {}", p.primal_derivation, p.dual_derivation),
            })
        })
        .collect();
    let milp = BilevelMilp { mask, builder: b, blocks, chain, registry, value_cuts: 0 };
    log::info!("assembled bilevel MILP: {:?}", milp.counts());
    Ok(milp)
}

impl BilevelMilp {
    pub fn problem(&self) -> MilpProblem {
        self.builder.clone().build_milp()
    }

    pub fn counts(&self) -> MilpCounts {
        let complementarity: usize = self.blocks.iter().map(|k| k.z.len()).sum();
        let switches = self.blocks.iter().filter(|k| k.ul.u.is_some()).count();
        MilpCounts {
            intervals: self.blocks.len(),
            variables: self.builder.num_vars(),
            constraints: self.builder.num_rows(),
            binaries: complementarity + switches,
            complementarity,
            switches,
            value_cuts: self.value_cuts,
        }
    }

    pub fn bids(&self, x: &[f64]) -> Vec<QuantityBids> {
        self.blocks
            .iter()
            .map(|k| QuantityBids {
                supply: val(x, k.ul.s_bid),
                demand: val(x, k.ul.d_bid),
                reserve: val(x, k.ul.rs_bid),
                regulation: val(x, k.ul.rg_bid),
            })
            .collect()
    }

    pub fn block_values(&self, k: &BlockLayout, x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        (k.x.iter().map(|v| x[v.0]).collect(), k.lambda.iter().map(|v| x[v.0]).collect(), x[k.pi.0])
    }

    pub fn revenue(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|k| k.revenue.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()).sum()
    }

    /// Adds `Σ coef·x <= rhs` to the model.
    pub fn add_cut(&mut self, name: String, terms: &[(Var, f64)], rhs: f64) -> Row {
        self.value_cuts += 1;
        self.builder.add_row(name, RowSense::Le, rhs, terms)
    }
}
