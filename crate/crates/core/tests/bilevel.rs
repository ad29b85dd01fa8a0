mod common;

use bessbid_core::bilevel::{
    add_value_cuts, assemble_milp, derive_kkt, direct_revenue, linearize_objective, mip_starts, soc_trajectory,
    verify_bilevel_solution, BilevelHeuristic, CutSettings,
};
use bessbid_core::clearing::{
    build_ll_interval, clear_interval, ll_interval_from_structure, ll_structure, QuantityBids,
};
use bessbid_core::scenario::{BessParams, GeneratorParams, MarketMask, Scenario};
use bessbid_solver::{solve_milp, solve_milp_with, MilpSettings, Status};
use common::{interval, random_scenario, scenario};
use proptest::prelude::*;

fn exact() -> MilpSettings {
    MilpSettings { gap_tol: 1e-9, ..MilpSettings::default() }
}

/// Two intervals, two generators, a 10 MWh / 5 MW battery and small
/// ancillary requirements.
fn tiny(mask: MarketMask) -> Scenario {
    let gens =
        vec![GeneratorParams::new("G1", 10.0, 100.0, 20.0, 10.0), GeneratorParams::new("G2", 30.0, 100.0, 20.0, 10.0)];
    let mut ivs = vec![interval(1, 80.0, &[10.0, 30.0]), interval(2, 150.0, &[12.0, 35.0])];
    for iv in &mut ivs {
        iv.reserve_req = 5.0;
        iv.regcap_req = 3.0;
        iv.mileage_req = 5.0;
        iv.beta.demand = 100.0;
    }
    let mut s = scenario(gens, BessParams::new(10.0, 5.0), ivs);
    s.market_mask = mask;
    s
}

fn solve(s: &Scenario) -> (bessbid_core::bilevel::BilevelMilp, bessbid_solver::SolveOutcome) {
    let m = assemble_milp(s).unwrap();
    let out = solve_milp(&m.problem(), &exact()).unwrap();
    assert_eq!(out.status, Status::Optimal);
    (m, out)
}

/// Lower-level inequalities per interval counted from the model definition:
/// eight per generator, two per battery bid, the mileage pair, three
/// requirements.
fn ineqs_per_interval(gens: usize, mask: MarketMask) -> usize {
    let bids = [mask.energy, mask.energy, mask.reserve, mask.regulation].iter().filter(|&&b| b).count();
    8 * gens + 2 * bids + if mask.regulation { 2 } else { 0 } + 3
}

#[test]
fn binary_count_two_intervals_two_generators() {
    let m = assemble_milp(&tiny(MarketMask::ALL)).unwrap();
    let c = m.counts();
    assert_eq!(c.binaries, 2 + 2 * ineqs_per_interval(2, MarketMask::ALL));
    assert_eq!(c.binaries, 60);
    assert_eq!(c.complementarity, m.blocks.iter().map(|k| k.kkt.num_inequalities()).sum::<usize>());
    assert_eq!(m.registry.len(), c.complementarity);
    assert!(m.registry.iter().all(|r| !r.derivation.is_empty() && r.m_primal.is_finite() && r.m_dual > 0.0));
}

#[test]
fn masks_shrink_the_binary_count() {
    let count = |mask| assemble_milp(&tiny(mask)).unwrap().counts().binaries;
    for mask in [MarketMask::ENERGY, MarketMask::ENERGY_RESERVE, MarketMask::ENERGY_REGULATION] {
        assert_eq!(count(mask), 2 + 2 * ineqs_per_interval(2, mask));
        assert!(count(mask) < count(MarketMask::ALL));
    }
    assert!(count(MarketMask::ENERGY) < count(MarketMask::ENERGY_RESERVE));
}

#[test]
fn energy_only_has_no_ancillary_bids() {
    let (m, out) = solve(&tiny(MarketMask::ENERGY));
    for b in m.bids(&out.x) {
        assert_eq!(b.reserve, 0.0);
        assert_eq!(b.regulation, 0.0);
    }
}

#[test]
fn discharge_switch_blocks_demand_bids() {
    let s = tiny(MarketMask::ALL);
    let mut m = assemble_milp(&s).unwrap();
    for k in m.blocks.clone() {
        m.builder.set_bounds(k.ul.u.unwrap(), 1.0, 1.0);
    }
    let out = solve_milp(&m.problem(), &exact()).unwrap();
    assert!(out.status.has_solution());
    for b in m.bids(&out.x) {
        assert!(b.demand.abs() <= 1e-9);
    }
}

#[test]
fn soc_recursion_arithmetic() {
    let mut s = tiny(MarketMask::ENERGY);
    s.bess = BessParams::new(100.0, 40.0);
    s.intervals = (0..4)
        .map(|t| {
            let mut iv = interval(t + 1, 80.0, &[10.0, 30.0]);
            iv.delta_t = 0.25;
            iv
        })
        .collect();
    let soc = soc_trajectory(&s, &[0.0; 4], &[40.0; 4]);
    assert_eq!(soc, vec![10.0, 20.0, 30.0, 40.0]);
}

#[test]
fn stationarity_of_battery_supply_on_a_solved_lp() {
    let mut s = tiny(MarketMask::ALL);
    s.intervals[0].beta.supply = 3.0;
    let bids = QuantityBids { supply: 4.0, demand: 0.0, reserve: 1.0, regulation: 1.0 };
    let r = clear_interval(&build_ll_interval(&s, 0, Some(&bids))).unwrap();
    let st = ll_structure(&s, 0, Some(MarketMask::ALL));
    let mult = |label: &str, hi: bool| {
        let i = st.ineqs.iter().position(|q| q.tag.label == label && (q.bid.is_some() == hi)).unwrap();
        r.lambda[i]
    };
    let residual = 3.0 - r.prices.energy + mult("bess_supply", true) - mult("bess_supply", false);
    assert!(residual.abs() <= 1e-8, "{residual}");
}

#[test]
fn zero_bid_battery_resolves_to_zero_awards() {
    let s = tiny(MarketMask::ALL);
    let zero = QuantityBids::default();
    for t in 0..2 {
        let r = clear_interval(&build_ll_interval(&s, t, Some(&zero))).unwrap();
        let kkt = derive_kkt(ll_structure(&s, t, Some(MarketMask::ALL)), &s);
        assert!(kkt.residuals(&r.x, &r.lambda, r.prices.energy, &zero).max() <= 1e-6);
        assert_eq!(
            (r.bess.supply, r.bess.demand, r.bess.reserve, r.bess.regcap, r.bess.mileage),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(linearize_objective(&kkt).eval(&r.x, &r.lambda, r.prices.energy), 0.0);
    }
}

#[test]
fn one_generator_linearized_revenue() {
    let g = GeneratorParams::new("G1", 10.0, 100.0, 20.0, 10.0);
    let mut s = scenario(vec![g], BessParams::new(50.0, 30.0), vec![interval(1, 80.0, &[10.0])]);
    s.market_mask = MarketMask::ENERGY;
    let st = ll_structure(&s, 0, Some(MarketMask::ENERGY));
    let kkt = derive_kkt(st.clone(), &s);
    let bids = QuantityBids { supply: 20.0, ..QuantityBids::default() };
    let r = clear_interval(&ll_interval_from_structure(st.clone(), bids, 1)).unwrap();
    // The unit stays marginal at 60 MW, so it sets the price.
    assert_eq!(r.bess.supply, 20.0);
    assert!((r.prices.energy - 10.0).abs() <= 1e-9);
    let lin = linearize_objective(&kkt).eval(&r.x, &r.lambda, r.prices.energy);
    let direct = direct_revenue(&st, &r.x, &r.lambda, r.prices.energy);
    assert!((lin - 200.0).abs() <= 1e-8, "{lin}");
    assert!((direct - 200.0).abs() <= 1e-8, "{direct}");
}

#[test]
fn milp_point_passes_verification() {
    for mask in [MarketMask::ENERGY, MarketMask::ALL] {
        let s = tiny(mask);
        let (m, out) = solve(&s);
        let v = verify_bilevel_solution(&s, &m, &out.x).unwrap();
        assert!(v.passed, "{:?}", v.mismatches);
        assert!(v.max_complementarity <= 1e-7);
        assert!(v.max_duality_gap <= 1e-6);
        assert!((v.milp_revenue - out.objective).abs() <= 1e-6);
        assert!((v.optimistic_revenue - v.milp_revenue).abs() <= 1e-5 * v.milp_revenue.abs().max(1.0));
    }
}

#[test]
fn corrupted_award_is_reported_at_the_balance() {
    let s = tiny(MarketMask::ENERGY);
    let (m, out) = solve(&s);
    let mut x = out.x.clone();
    let k = &m.blocks[1];
    x[k.ul.supply.unwrap().0] += 1.0;
    let v = verify_bilevel_solution(&s, &m, &x).unwrap();
    assert!(!v.passed);
    assert!(v.mismatches.iter().any(|mm| mm.block == "balance" && mm.interval == Some(1)), "{:?}", v.mismatches);
}

#[test]
fn equal_generators_pass_with_a_degeneracy_note() {
    let gens =
        vec![GeneratorParams::new("G1", 20.0, 100.0, 20.0, 10.0), GeneratorParams::new("G2", 20.0, 100.0, 20.0, 10.0)];
    let mut s = scenario(
        gens,
        BessParams::new(10.0, 5.0),
        vec![interval(1, 120.0, &[20.0, 20.0]), interval(2, 150.0, &[20.0, 20.0])],
    );
    s.market_mask = MarketMask::ENERGY;
    let (m, out) = solve(&s);
    let mut x = out.x.clone();
    // Move energy between the tied units; cost and prices are unchanged.
    let k = &m.blocks[0];
    let (g1, g2) = (k.x[k.kkt.structure.gens[0][0]], k.x[k.kkt.structure.gens[1][0]]);
    let shift = (x[g2.0] - x[g1.0]) / 2.0;
    assert!(shift.abs() > 1.0);
    x[g1.0] += shift;
    x[g2.0] -= shift;
    let v = verify_bilevel_solution(&s, &m, &x).unwrap();
    assert!(v.passed, "{:?}", v.mismatches);
    assert!(v.notes.iter().any(|n| n.contains("degenerate")), "{:?}", v.notes);
}

#[test]
fn participation_is_monotone_and_never_both_ways() {
    for seed in [3, 11] {
        let mut base = random_scenario(seed, 2, 3);
        base.bess.soc_init = 0.5 * base.bess.energy_capacity;
        let value = |mask: MarketMask| {
            let s = base.with_mask(mask);
            let (m, out) = solve(&s);
            for k in &m.blocks {
                let v = |c: Option<bessbid_solver::Var>| c.map_or(0.0, |c| out.x[c.0]);
                assert!(v(k.ul.supply) * v(k.ul.demand) <= 1e-9);
            }
            out.objective
        };
        let (e, er, eg, all) = (
            value(MarketMask::ENERGY),
            value(MarketMask::ENERGY_RESERVE),
            value(MarketMask::ENERGY_REGULATION),
            value(MarketMask::ALL),
        );
        let tol = 1e-6;
        assert!(e <= er + tol && er <= all + tol, "{e} {er} {all}");
        assert!(e <= eg + tol && eg <= all + tol, "{e} {eg} {all}");
    }
}

#[test]
fn value_cuts_keep_the_optimum_and_heuristic_finds_it() {
    let s = tiny(MarketMask::ALL);
    let (_, plain) = solve(&s);
    let mut m = assemble_milp(&s).unwrap();
    let rep = add_value_cuts(&s, &mut m, &CutSettings::default()).unwrap();
    assert!(rep.bound >= plain.objective - 1e-6);
    assert!(m.counts().value_cuts > 0);
    let h = BilevelHeuristic { scenario: &s, milp: &m };
    let starts = mip_starts(&s, &m, &[]);
    assert!(!starts.is_empty());
    let out = solve_milp_with(&m.problem(), &exact(), Some(&h), &starts).unwrap();
    assert_eq!(out.status, Status::Optimal);
    assert!((out.objective - plain.objective).abs() <= 1e-6 * plain.objective.abs().max(1.0));
}

#[test]
fn full_scale_milp_assembles() {
    let s = bessbid_core::scenario::reference_scenario(&bessbid_core::scenario::Patterns::builtin(), MarketMask::ALL)
        .unwrap();
    let m = assemble_milp(&s).unwrap();
    let c = m.counts();
    assert_eq!(c.intervals, 96);
    assert_eq!(c.binaries, 96 * (1 + ineqs_per_interval(s.num_generators(), MarketMask::ALL)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solved_clearing_satisfies_kkt_and_linearization(
        seed in 0u64..10_000,
        ng in 2usize..5,
        s_bid in 0.0f64..1.0,
        d_bid in 0.0f64..1.0,
        rs in 0.0f64..1.0,
        rg in 0.0f64..1.0,
        discharge in any::<bool>(),
    ) {
        let s = random_scenario(seed, ng, 1);
        let p = s.bess.power_rate;
        let bids = QuantityBids {
            supply: if discharge { s_bid * p } else { 0.0 },
            demand: if discharge { 0.0 } else { d_bid * p },
            reserve: rs * p,
            regulation: rg * p,
        };
        let r = clear_interval(&build_ll_interval(&s, 0, Some(&bids))).unwrap();
        let st = ll_structure(&s, 0, Some(MarketMask::ALL));
        let kkt = derive_kkt(st.clone(), &s);
        let res = kkt.residuals(&r.x, &r.lambda, r.prices.energy, &bids);
        prop_assert!(res.max() <= 1e-6, "{:?}", res);
        let lin = linearize_objective(&kkt).eval(&r.x, &r.lambda, r.prices.energy);
        let direct = direct_revenue(&st, &r.x, &r.lambda, r.prices.energy);
        prop_assert!((lin - direct).abs() <= 1e-6 * direct.abs().max(1.0), "{} vs {}", lin, direct);
        for (pair, &l) in kkt.pairs.iter().zip(&r.lambda) {
            prop_assert!(l <= pair.m_dual);
        }
        for (j, &(lo, hi)) in kkt.primal_bounds.iter().enumerate() {
            prop_assert!(r.x[j] >= lo - 1e-9 && r.x[j] <= hi + 1e-9);
        }
    }
}
