#![allow(clippy::needless_range_loop)]

use bessbid_solver::{solve_lp, LpProblem, LpSettings, ProblemBuilder, RowSense, Sense, Status};
use proptest::prelude::*;

mod common;
use common::vertex_oracle;

fn check_optimality(lp: &LpProblem, out: &bessbid_solver::SolveOutcome) {
    let act = lp.row_activity(&out.x);
    assert!(lp.max_violation(&out.x) <= 1e-7);
    let scale = 1.0 + out.objective.abs();
    let mut dual_obj = lp.obj_offset;
    let s = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
    for i in 0..lp.num_rows() {
        let y = out.row_duals[i];
        match lp.row_sense[i] {
            RowSense::Ge => assert!(s * y >= -1e-9),
            RowSense::Le => assert!(s * y <= 1e-9),
            RowSense::Eq => {}
        }
        assert!((y * (act[i] - lp.rhs[i])).abs() <= 1e-7 * scale, "row cs");
        dual_obj += y * lp.rhs[i];
    }
    for j in 0..lp.num_cols() {
        let d = out.reduced_costs[j];
        let at_l = (out.x[j] - lp.col_lower[j]).abs() <= 1e-9;
        let at_u = (out.x[j] - lp.col_upper[j]).abs() <= 1e-9;
        if s * d > 1e-9 {
            assert!(at_l, "positive reduced cost away from lower bound");
            dual_obj += d * lp.col_lower[j];
        } else if s * d < -1e-9 {
            assert!(at_u, "negative reduced cost away from upper bound");
            dual_obj += d * lp.col_upper[j];
        }
    }
    assert!((dual_obj - out.objective).abs() <= 1e-6 * scale, "duality gap {} vs {}", dual_obj, out.objective);
}

#[test]
fn single_bound_row_dual() {
    let mut b = ProblemBuilder::new("t", Sense::Minimize);
    let x = b.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    b.add_row("c", RowSense::Ge, 3.0, &[(x, 1.0)]);
    let lp = b.build_lp();
    for presolve in [true, false] {
        let out = solve_lp(&lp, &LpSettings { presolve, ..Default::default() }).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x[0] - 3.0).abs() < 1e-12);
        assert!((out.row_duals[0] - 1.0).abs() < 1e-12);
    }
}

fn two_gen_dispatch() -> LpProblem {
    let mut b = ProblemBuilder::new("dispatch", Sense::Minimize);
    let g1 = b.add_var("g1", 0.0, 100.0, 10.0);
    let g2 = b.add_var("g2", 0.0, 100.0, 20.0);
    b.add_row("bal", RowSense::Eq, 150.0, &[(g1, 1.0), (g2, 1.0)]);
    b.build_lp()
}

#[test]
fn two_generator_dispatch_matches_vertex_enumeration() {
    let lp = two_gen_dispatch();
    let out = solve_lp(&lp, &LpSettings::default()).unwrap();
    assert_eq!(out.status, Status::Optimal);
    assert_eq!(vertex_oracle(&lp), Some(2000.0));
    assert!((out.objective - 2000.0).abs() < 1e-9);
    assert!((out.x[0] - 100.0).abs() < 1e-9 && (out.x[1] - 50.0).abs() < 1e-9);
    assert!((out.row_duals[0] - 20.0).abs() < 1e-9);
    check_optimality(&lp, &out);
}

#[test]
fn degenerate_equal_bids_unique_objective() {
    let build = |swap: bool| {
        let mut b = ProblemBuilder::new("tie", Sense::Minimize);
        let g1 = b.add_var("g1", 0.0, 100.0, 15.0);
        let g2 = b.add_var("g2", 0.0, 100.0, 15.0);
        let g3 = b.add_var("g3", 0.0, 100.0, 30.0);
        let (p, q) = if swap { (g2, g1) } else { (g1, g2) };
        b.add_row("bal", RowSense::Eq, 100.0, &[(p, 1.0), (q, 1.0), (g3, 1.0)]);
        b.add_row("cap", RowSense::Le, 100.0, &[(p, 1.0), (q, 1.0)]);
        b.build_lp()
    };
    for swap in [false, true] {
        let lp = build(swap);
        for presolve in [false, true] {
            let out = solve_lp(&lp, &LpSettings { presolve, ..Default::default() }).unwrap();
            assert!((out.objective - 1500.0).abs() < 1e-9);
            check_optimality(&lp, &out);
        }
    }
}

#[test]
fn infeasible_and_unbounded_statuses() {
    let mut b = ProblemBuilder::new("inf", Sense::Minimize);
    let x = b.add_var("x", 0.0, 1.0, 1.0);
    let y = b.add_var("y", 0.0, 1.0, 1.0);
    b.add_row("r", RowSense::Ge, 3.0, &[(x, 1.0), (y, 1.0)]);
    let out = solve_lp(&b.build_lp(), &LpSettings::default()).unwrap();
    assert_eq!(out.status, Status::Infeasible);

    let mut b = ProblemBuilder::new("unb", Sense::Maximize);
    let x = b.add_var("x", 0.0, f64::INFINITY, 1.0);
    let y = b.add_var("y", 0.0, f64::INFINITY, 0.0);
    b.add_row("r", RowSense::Ge, 1.0, &[(x, 1.0), (y, -1.0)]);
    let out = solve_lp(&b.build_lp(), &LpSettings { presolve: false, ..Default::default() }).unwrap();
    assert_eq!(out.status, Status::Unbounded);
}

#[test]
fn presolve_removes_fixed_participant_bit_exactly() {
    // Same dispatch with an extra participant pinned to zero.
    let base = two_gen_dispatch();
    let mut b = ProblemBuilder::new("dispatch", Sense::Minimize);
    let g1 = b.add_var("g1", 0.0, 100.0, 10.0);
    let g2 = b.add_var("g2", 0.0, 100.0, 20.0);
    let s = b.add_var("s", 0.0, 0.0, 0.0);
    let m = b.add_var("m", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    b.add_row("bal", RowSense::Eq, 150.0, &[(g1, 1.0), (g2, 1.0), (s, 1.0)]);
    b.add_row("lo", RowSense::Ge, 0.0, &[(m, 1.0), (s, -1.0)]);
    b.add_row("hi", RowSense::Ge, 0.0, &[(m, -1.0), (s, 10.0)]);
    let with = b.build_lp();
    let a = solve_lp(&base, &LpSettings::default()).unwrap();
    let w = solve_lp(&with, &LpSettings::default()).unwrap();
    assert_eq!(a.row_duals[0].to_bits(), w.row_duals[0].to_bits());
    assert_eq!(a.x[0].to_bits(), w.x[0].to_bits());
    assert_eq!(w.x[2], 0.0);
    assert_eq!(w.x[3], 0.0);
    check_optimality(&with, &w);
}

fn random_lp(seed: u64, n: usize, m: usize, maximize: bool) -> LpProblem {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
    let mut b = ProblemBuilder::new("rnd", sense);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = x0[j] - rng.gen_range(0.5..3.0);
            let hi = x0[j] + rng.gen_range(0.5..3.0);
            b.add_var(format!("x{j}"), lo, hi, rng.gen_range(-5.0..5.0))
        })
        .collect();
    for i in 0..m {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.7) {
                terms.push((v, (rng.gen_range(-4i32..=4) as f64) * 0.5));
            }
        }
        let act: f64 = terms.iter().map(|(v, a)| a * x0[v.0]).sum();
        let sense = match rng.gen_range(0..3) {
            0 => RowSense::Le,
            1 => RowSense::Ge,
            _ => RowSense::Eq,
        };
        let rhs = match sense {
            RowSense::Le => act + rng.gen_range(0.0..2.0),
            RowSense::Ge => act - rng.gen_range(0.0..2.0),
            RowSense::Eq => act,
        };
        b.add_row(format!("r{i}"), sense, (rhs * 8.0).round() / 8.0, &terms);
    }
    b.build_lp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn random_lps_match_vertex_oracle(seed in any::<u64>(), n in 1usize..5, m in 0usize..5, maximize in any::<bool>(), presolve in any::<bool>()) {
        let lp = random_lp(seed, n, m, maximize);
        let out = solve_lp(&lp, &LpSettings { presolve, ..Default::default() }).unwrap();
        match vertex_oracle(&lp) {
            None => prop_assert_eq!(out.status, Status::Infeasible),
            Some(v) => {
                prop_assert_eq!(out.status, Status::Optimal);
                prop_assert!((out.objective - v).abs() <= 1e-7 * (1.0 + v.abs()), "{} vs {}", out.objective, v);
                check_optimality(&lp, &out);
            }
        }
    }
}

#[test]
fn larger_random_lps_satisfy_duality() {
    for seed in 0..40u64 {
        let lp = random_lp(seed, 40, 30, seed % 2 == 0);
        let out = solve_lp(&lp, &LpSettings { presolve: seed % 3 != 0, ..Default::default() }).unwrap();
        if out.status == Status::Optimal {
            check_optimality(&lp, &out);
        } else {
            assert_eq!(out.status, Status::Infeasible);
        }
    }
}
