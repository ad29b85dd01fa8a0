use bessbid_solver::mps::{export_mps, import_mps, parse_mps, to_mps_string};
use bessbid_solver::{solve_milp, MilpProblem, MilpSettings, ProblemBuilder, RowSense, Sense, SolverError, Status};
use rand::{Rng, SeedableRng};

fn tiny() -> MilpProblem {
    let mut b = ProblemBuilder::new("TINY", Sense::Maximize);
    let x = b.add_var("x", 0.0, 4.0, 3.0);
    let y = b.add_var("y", -1.0, f64::INFINITY, 2.0);
    let f = b.add_var("f", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let z = b.add_binary("z", 1);
    b.set_cost(z, -1.5);
    b.add_offset(0.25);
    b.add_row("cap", RowSense::Le, 6.0, &[(x, 1.0), (y, 1.0)]);
    b.add_row("link", RowSense::Le, 0.0, &[(y, 1.0), (z, -5.0)]);
    b.add_row("bal", RowSense::Eq, 1.0 / 3.0, &[(f, 1.0), (x, -0.1)]);
    b.add_row("lo", RowSense::Ge, -2.0, &[(x, -1.0), (z, 1.0)]);
    b.build_milp()
}

#[test]
fn golden_file_matches_byte_for_byte() {
    let golden = include_str!("golden/tiny.mps");
    assert_eq!(to_mps_string(&tiny()), golden);
}

fn random_milp(seed: u64) -> MilpProblem {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sense = if seed.is_multiple_of(2) { Sense::Maximize } else { Sense::Minimize };
    let mut b = ProblemBuilder::new(format!("R{seed}"), sense);
    let mut vars = Vec::new();
    for k in 0..rng.gen_range(1..5) {
        let v = b.add_binary(format!("z{k}"), 0);
        b.set_cost(v, rng.gen_range(-4.0..4.0));
        vars.push(v);
    }
    for k in 0..rng.gen_range(1..5) {
        let hi = rng.gen_range(0.5..6.0);
        vars.push(b.add_var(format!("x{k}"), 0.0, hi, rng.gen_range(-3.0..3.0)));
    }
    for i in 0..rng.gen_range(1..6) {
        let terms: Vec<_> = vars.iter().filter(|_| rng.gen_bool(0.6)).map(|&v| (v, 0.0)).collect::<Vec<_>>();
        let terms: Vec<_> = terms.into_iter().map(|(v, _)| (v, rng.gen_range(-2.0..2.0))).collect();
        b.add_row(format!("r{i}"), RowSense::Le, rng.gen_range(0.0..5.0), &terms);
    }
    b.build_milp()
}

#[test]
fn round_trip_preserves_problem_and_objective() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let p = random_milp(seed);
        let path = dir.path().join(format!("r{seed}.mps"));
        export_mps(&p, &path).unwrap();
        let q = import_mps(&path).unwrap();
        assert_eq!(q.integer, p.integer);
        assert_eq!(q.lp.sense, p.lp.sense);
        assert_eq!(q.lp.row_sense, p.lp.row_sense);
        assert_eq!(q.lp.col_names, p.lp.col_names);
        assert_eq!(q.lp.matrix.col_start, p.lp.matrix.col_start);
        assert_eq!(q.lp.matrix.row_idx, p.lp.matrix.row_idx);
        let close =
            |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x == y || (x - y).abs() <= 1e-9 * x.abs().max(1.0));
        assert!(close(&q.lp.matrix.values, &p.lp.matrix.values));
        assert!(close(&q.lp.obj, &p.lp.obj));
        assert!(close(&q.lp.rhs, &p.lp.rhs));
        assert!(close(&q.lp.col_upper, &p.lp.col_upper));
        let a = solve_milp(&p, &MilpSettings::default()).unwrap();
        let b = solve_milp(&q, &MilpSettings::default()).unwrap();
        assert_eq!(a.status, b.status);
        if a.status == Status::Optimal {
            assert!((a.objective - b.objective).abs() <= 1e-6 * a.objective.abs().max(1.0));
        }
    }
}

#[test]
fn exact_values_round_trip_bit_for_bit() {
    let p = tiny();
    let q = parse_mps(&to_mps_string(&p)).unwrap();
    assert_eq!(q.lp.matrix.values, p.lp.matrix.values);
    assert_eq!(q.lp.rhs[..2], p.lp.rhs[..2]);
    assert!((q.lp.rhs[2] - 1.0 / 3.0).abs() < 1e-10);
    assert_eq!(q.lp.col_lower, p.lp.col_lower);
    assert_eq!(q.lp.col_upper, p.lp.col_upper);
    assert_eq!(q.lp.obj_offset, p.lp.obj_offset);
    assert_eq!(q.lp.row_names, p.lp.row_names);
    assert_eq!(to_mps_string(&q), to_mps_string(&p));
}

#[test]
fn long_names_are_canonicalized() {
    let mut b = ProblemBuilder::new("long", Sense::Minimize);
    let x = b.add_var("a_rather_long_name", 0.0, 1.0, 1.0);
    b.add_row("another long row", RowSense::Ge, 0.5, &[(x, 1.0)]);
    let text = to_mps_string(&b.build_milp());
    assert!(text.contains("C0000001") && text.contains("R0000001"));
    let q = parse_mps(&text).unwrap();
    assert_eq!(q.lp.col_names, vec!["C0000001".to_string()]);
}

fn mps_line(e: SolverError) -> usize {
    match e {
        SolverError::Mps { line, .. } => line,
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn truncated_file_is_rejected_with_line_number() {
    let text = to_mps_string(&tiny());
    let lines: Vec<&str> = text.lines().collect();
    let cut = lines[..lines.len() - 3].join("\n");
    let e = parse_mps(&cut).unwrap_err();
    assert_eq!(mps_line(e), lines.len() - 2);
}

#[test]
fn malformed_sections_report_lines() {
    let text = "NAME x\nROWS\n N  OBJ\n L  c\nRANGES\n    R c 1\nENDATA\n";
    assert_eq!(mps_line(parse_mps(text).unwrap_err()), 5);
    let text = "NAME x\nROWS\n N  OBJ\n L  c\nCOLUMNS\n    x  nope  1\nENDATA\n";
    assert_eq!(mps_line(parse_mps(text).unwrap_err()), 6);
    let text = "NAME x\nROWS\n N  OBJ\n L  c\nCOLUMNS\n    x  c  1.2.3\nENDATA\n";
    assert_eq!(mps_line(parse_mps(text).unwrap_err()), 6);
    let text = "NAME x\nBOGUS\nENDATA\n";
    assert_eq!(mps_line(parse_mps(text).unwrap_err()), 2);
}
