#![allow(clippy::needless_range_loop)]

use bessbid_core::clearing::{
    build_ll_interval, certificate, clear_horizon, clear_interval, ll_structure, write_clearing_csv, QuantityBids,
};
use bessbid_core::scenario::{desk_scenario, reference_scenario, BessParams, GeneratorParams, MarketMask, Patterns};
use bessbid_solver::{solve_lp, LpProblem, LpSettings, ProblemBuilder, RowSense, Sense};
use proptest::prelude::*;

mod common;
use common::{interval, random_scenario, scenario};

fn two_gen(load: f64) -> bessbid_core::Scenario {
    let gens =
        vec![GeneratorParams::new("A", 10.0, 100.0, 20.0, 10.0), GeneratorParams::new("B", 20.0, 100.0, 20.0, 10.0)];
    scenario(gens, BessParams::new(10.0, 5.0), vec![interval(1, load, &[10.0, 20.0])])
}

/// Cheapest dispatch of the two-unit merit order by enumerating the vertices
/// of `g1 + g2 = load, 0 <= g <= 100`.
fn vertex_cost(load: f64) -> f64 {
    let mut best = f64::INFINITY;
    for g1 in [0.0, 100.0, load, load - 100.0] {
        let g2 = load - g1;
        if (0.0..=100.0).contains(&g1) && (0.0..=100.0).contains(&g2) {
            best = best.min(10.0 * g1 + 20.0 * g2);
        }
    }
    best
}

#[test]
fn two_generator_merit_order() {
    let s = two_gen(150.0);
    let r = clear_interval(&build_ll_interval(&s, 0, None)).unwrap();
    assert!((r.gens[0].energy - 100.0).abs() < 1e-9);
    assert!((r.gens[1].energy - 50.0).abs() < 1e-9);
    assert!((r.objective - vertex_cost(150.0)).abs() < 1e-9);
    let marginal = vertex_cost(151.0) - vertex_cost(150.0);
    assert!((r.prices.energy - marginal).abs() < 1e-9);
    assert!((r.prices.energy - 20.0).abs() < 1e-9);
}

#[test]
fn constraint_counts_for_five_generators() {
    let s = reference_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    let st = ll_structure(&s, 0, Some(MarketMask::ALL));
    assert_eq!(st.vars.len(), 25);
    assert_eq!(st.constraint_counts(), (30, 6, 4));
    let none = ll_structure(&s, 0, None);
    assert_eq!(none.vars.len(), 20);
    assert_eq!(none.constraint_counts(), (30, 0, 4));
}

#[test]
fn zero_bids_fix_battery_at_zero() {
    let s = two_gen(150.0);
    let ll = build_ll_interval(&s, 0, Some(&QuantityBids::default()));
    let r = clear_interval(&ll).unwrap();
    assert_eq!(r.bess.supply, 0.0);
    assert_eq!(r.bess.demand, 0.0);
    assert_eq!(r.bess.regcap, 0.0);
    assert_eq!(r.bess.mileage, 0.0);
}

#[test]
fn single_generator_serves_load() {
    let gens = vec![GeneratorParams::new("A", 12.0, 100.0, 10.0, 10.0)];
    let s = scenario(gens, BessParams::new(10.0, 5.0), vec![interval(1, 70.0, &[12.0])]);
    let r = clear_interval(&build_ll_interval(&s, 0, None)).unwrap();
    assert!((r.gens[0].energy - 70.0).abs() < 1e-12);
    assert_eq!(r.gens[0].reserve, 0.0);
    assert_eq!(r.gens[0].regcap, 0.0);
    assert!(r.gens[0].mileage.abs() < 1e-12);
}

#[test]
fn zero_load_zero_requirements() {
    let s = two_gen(0.0);
    let r = clear_interval(&build_ll_interval(&s, 0, None)).unwrap();
    assert_eq!(r.objective, 0.0);
    assert!(r.x.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn mileage_awards_within_multiplier_bounds() {
    let s = desk_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    for r in clear_horizon(&s, None).unwrap() {
        let iv = &s.intervals[r.interval];
        let total: f64 = r.gens.iter().map(|g| g.mileage).sum();
        assert!(total >= iv.mileage_req - 1e-7);
        for (g, p) in r.gens.iter().zip(&s.generators) {
            assert!(g.mileage >= g.regcap - 1e-7);
            assert!(g.mileage <= p.mileage_multiplier * g.regcap + 1e-7);
        }
    }
}

#[test]
fn zero_bid_battery_is_price_neutral_bit_for_bit() {
    let s = desk_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    let zero = vec![QuantityBids::default(); s.num_intervals()];
    let with = clear_horizon(&s, Some(&zero)).unwrap();
    let without = clear_horizon(&s, None).unwrap();
    for (a, b) in with.iter().zip(&without) {
        assert_eq!(a.prices.energy.to_bits(), b.prices.energy.to_bits());
        assert_eq!(a.prices.reserve.to_bits(), b.prices.reserve.to_bits());
        assert_eq!(a.prices.regcap.to_bits(), b.prices.regcap.to_bits());
        assert_eq!(a.prices.mileage.to_bits(), b.prices.mileage.to_bits());
    }
}

/// All intervals stacked into one block-diagonal LP.
fn joint_lp(s: &bessbid_core::Scenario, bids: &[QuantityBids]) -> LpProblem {
    let mut b = ProblemBuilder::new("joint", Sense::Minimize);
    for t in 0..s.num_intervals() {
        let lp = build_ll_interval(s, t, Some(&bids[t])).lp;
        let dt = s.intervals[t].delta_t;
        let cols: Vec<_> = (0..lp.num_cols())
            .map(|j| b.add_var(format!("t{t}_{j}"), lp.col_lower[j], lp.col_upper[j], lp.obj[j] * dt))
            .collect();
        let rows = lp.matrix.transpose();
        for i in 0..lp.num_rows() {
            let terms: Vec<_> = rows.col(i).map(|(j, a)| (cols[j], a)).collect();
            b.add_row(format!("t{t}_r{i}"), lp.row_sense[i], lp.rhs[i], &terms);
        }
    }
    b.build_lp()
}

#[test]
fn horizon_matches_joint_lp() {
    let s = desk_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    let bids: Vec<QuantityBids> = (0..s.num_intervals())
        .map(|t| QuantityBids {
            supply: if t % 3 == 0 { 7.0 } else { 0.0 },
            demand: 4.0,
            reserve: 3.0,
            regulation: 2.0,
        })
        .collect();
    let per: f64 = clear_horizon(&s, Some(&bids)).unwrap().iter().map(|r| r.objective).sum();
    let joint = solve_lp(&joint_lp(&s, &bids), &LpSettings::default()).unwrap();
    assert!((per - joint.objective).abs() <= 1e-6 * joint.objective.abs());
}

#[test]
fn one_interval_horizon_equals_single_clear() {
    let s = two_gen(150.0);
    let h = clear_horizon(&s, None).unwrap();
    let r = clear_interval(&build_ll_interval(&s, 0, None)).unwrap();
    assert_eq!(h.len(), 1);
    assert_eq!(h[0].objective, r.objective);
    assert_eq!(h[0].prices, r.prices);
}

#[test]
fn doubling_interval_length_keeps_prices() {
    let s = desk_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    let mut d = s.clone();
    d.intervals.iter_mut().for_each(|iv| iv.delta_t *= 2.0);
    let a = clear_horizon(&s, None).unwrap();
    let b = clear_horizon(&d, None).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.prices, y.prices);
        assert!((2.0 * x.objective - y.objective).abs() <= 1e-9 * y.objective.abs());
    }
}

#[test]
fn reference_prices_follow_marginal_units() {
    let p = Patterns::builtin();
    let s = reference_scenario(&p, MarketMask::ALL).unwrap();
    let res = clear_horizon(&s, None).unwrap();
    assert_eq!(res.len(), 96);
    for r in &res {
        let iv = &s.intervals[r.interval];
        // A unit strictly inside its energy range sets the price, adjusted by
        // what it earns on reserve and regulation at the margin.
        let inside: Vec<usize> = (0..s.num_generators())
            .filter(|&j| {
                let g = &r.gens[j];
                let head = s.generators[j].p_max - g.energy - g.reserve - g.regcap;
                g.energy - g.regcap > 1e-6 && head > 1e-6
            })
            .collect();
        if let [j] = inside[..] {
            assert!((r.prices.energy - iv.alpha_s[j]).abs() < 1e-7, "interval {}", r.label);
        }
    }
}

#[test]
fn csv_has_one_row_per_interval() {
    let s = desk_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    let res = clear_horizon(&s, None).unwrap();
    let mut buf = Vec::new();
    write_clearing_csv(&res, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), res.len() + 1);
    assert!(text.starts_with("interval,delta_t_h,load_mw"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_markets_satisfy_optimality_certificates(seed in any::<u64>(), ng in 2usize..6, s_bid in 0.0..20.0f64, rg in 0.0..20.0f64) {
        let s = random_scenario(seed, ng, 1);
        let bids = QuantityBids { supply: s_bid.min(s.bess.power_rate), demand: 0.0, reserve: 1.0, regulation: rg.min(s.bess.power_rate) };
        let ll = build_ll_interval(&s, 0, Some(&bids));
        let r = clear_interval(&ll).unwrap();
        prop_assert!(r.duality_gap <= 1e-6);
        prop_assert!(r.cs_residual <= 1e-7);
        let gen: f64 = r.gens.iter().map(|g| g.energy).sum();
        prop_assert!((gen + r.bess.supply - r.bess.demand - s.intervals[0].load).abs() <= 1e-9);
        prop_assert!(r.prices.reserve >= -1e-9 && r.prices.regcap >= -1e-9 && r.prices.mileage >= -1e-9);
        let (gap, cs) = certificate(&ll.structure, &bids, &r.x, &r.lambda, r.prices.energy);
        prop_assert_eq!(gap, r.duality_gap);
        prop_assert_eq!(cs, r.cs_residual);
        for q in &ll.structure.ineqs {
            prop_assert!(q.eval(&r.x, &bids) >= -1e-7, "{} violated", q.tag);
        }
        let _ = RowSense::Ge;
    }
}
