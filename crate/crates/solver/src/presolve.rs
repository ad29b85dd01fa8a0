//! Removes fixed columns, empty rows and singleton rows (turned into bounds),
//! with a postsolve that restores primal values and duals.
//!
//! Keeping the reduced problem identical to the one obtained by never adding
//! the removed pieces makes solves with zeroed-out participants bit-identical
//! to solves without them.

use crate::problem::{CscMatrix, LpProblem, RowSense, Sense};

const FEAS: f64 = 1e-9;

enum Op {
    FixCol { j: usize, rows: Vec<(usize, f64)> },
    Singleton { i: usize, j: usize, a: f64 },
    Empty { i: usize },
}

pub(crate) struct Presolved {
    pub reduced: LpProblem,
    col_map: Vec<usize>,
    row_map: Vec<usize>,
    ops: Vec<Op>,
    value: Vec<f64>,
    lower_src: Vec<Option<usize>>,
    upper_src: Vec<Option<usize>>,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl Presolved {
    pub fn identity(lp: &LpProblem) -> Option<Presolved> {
        Some(Presolved {
            reduced: lp.clone(),
            col_map: (0..lp.num_cols()).collect(),
            row_map: (0..lp.num_rows()).collect(),
            ops: Vec::new(),
            value: vec![0.0; lp.num_cols()],
            lower_src: vec![None; lp.num_cols()],
            upper_src: vec![None; lp.num_cols()],
            lb: lp.col_lower.clone(),
            ub: lp.col_upper.clone(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    /// Returns `None` when presolve proves infeasibility.
    pub fn run(lp: &LpProblem) -> Option<Presolved> {
        let m = lp.num_rows();
        let n = lp.num_cols();
        let rows = lp.matrix.transpose();
        let mut lb = lp.col_lower.clone();
        let mut ub = lp.col_upper.clone();
        let mut rhs = lp.rhs.clone();
        let mut col_alive = vec![true; n];
        let mut row_alive = vec![true; m];
        let mut row_count: Vec<usize> = (0..m).map(|i| rows.col(i).count()).collect();
        let mut lower_src = vec![None; n];
        let mut upper_src = vec![None; n];
        let mut value = vec![0.0; n];
        let mut ops = Vec::new();
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..n {
                if !col_alive[j] || lb[j] != ub[j] {
                    continue;
                }
                let v = lb[j];
                let mut touched = Vec::new();
                for (i, a) in lp.matrix.col(j) {
                    if row_alive[i] {
                        rhs[i] -= a * v;
                        row_count[i] -= 1;
                        touched.push((i, a));
                    }
                }
                value[j] = v;
                col_alive[j] = false;
                ops.push(Op::FixCol { j, rows: touched });
                changed = true;
            }
            for i in 0..m {
                if !row_alive[i] {
                    continue;
                }
                if row_count[i] == 0 {
                    let ok = match lp.row_sense[i] {
                        RowSense::Le => rhs[i] >= -FEAS,
                        RowSense::Ge => rhs[i] <= FEAS,
                        RowSense::Eq => rhs[i].abs() <= FEAS,
                    };
                    if !ok {
                        return None;
                    }
                    row_alive[i] = false;
                    ops.push(Op::Empty { i });
                    changed = true;
                } else if row_count[i] == 1 {
                    let (j, a) = rows.col(i).find(|&(j, _)| col_alive[j]).unwrap();
                    let b = rhs[i] / a;
                    let (lo, hi) = match (lp.row_sense[i], a > 0.0) {
                        (RowSense::Eq, _) => (true, true),
                        (RowSense::Ge, true) | (RowSense::Le, false) => (true, false),
                        _ => (false, true),
                    };
                    if lo && b > lb[j] {
                        lb[j] = b;
                        lower_src[j] = Some(i);
                    }
                    if hi && b < ub[j] {
                        ub[j] = b;
                        upper_src[j] = Some(i);
                    }
                    if lb[j] > ub[j] {
                        if lb[j] - ub[j] > FEAS * (1.0 + b.abs()) {
                            return None;
                        }
                        if lo {
                            ub[j] = lb[j];
                        } else {
                            lb[j] = ub[j];
                        }
                    }
                    row_alive[i] = false;
                    row_count[i] = 0;
                    ops.push(Op::Singleton { i, j, a });
                    changed = true;
                }
            }
        }
        if ops.is_empty() {
            return Presolved::identity(lp);
        }
        let col_map: Vec<usize> = (0..n).filter(|&j| col_alive[j]).collect();
        let row_map: Vec<usize> = (0..m).filter(|&i| row_alive[i]).collect();
        let mut new_row = vec![usize::MAX; m];
        for (k, &i) in row_map.iter().enumerate() {
            new_row[i] = k;
        }
        let mut trip = Vec::new();
        for (k, &j) in col_map.iter().enumerate() {
            for (i, a) in lp.matrix.col(j) {
                if row_alive[i] {
                    trip.push((new_row[i], k, a));
                }
            }
        }
        let mut offset = lp.obj_offset;
        for j in 0..n {
            if !col_alive[j] {
                offset += lp.obj[j] * value[j];
            }
        }
        let reduced = LpProblem {
            name: lp.name.clone(),
            sense: lp.sense,
            obj: col_map.iter().map(|&j| lp.obj[j]).collect(),
            obj_offset: offset,
            col_lower: col_map.iter().map(|&j| lb[j]).collect(),
            col_upper: col_map.iter().map(|&j| ub[j]).collect(),
            col_names: col_map.iter().map(|&j| lp.col_names[j].clone()).collect(),
            row_sense: row_map.iter().map(|&i| lp.row_sense[i]).collect(),
            rhs: row_map.iter().map(|&i| rhs[i]).collect(),
            row_names: row_map.iter().map(|&i| lp.row_names[i].clone()).collect(),
            matrix: CscMatrix::from_triplets(row_map.len(), col_map.len(), &trip),
        };
        Some(Presolved { reduced, col_map, row_map, ops, value, lower_src, upper_src, lb, ub })
    }

    pub fn postsolve(&self, lp: &LpProblem, xr: &[f64], yr: &[f64], dr: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut x = self.value.clone();
        let mut y = vec![0.0; m];
        let mut d = vec![0.0; n];
        for (k, &j) in self.col_map.iter().enumerate() {
            x[j] = xr[k];
            d[j] = dr[k];
        }
        for (k, &i) in self.row_map.iter().enumerate() {
            y[i] = yr[k];
        }
        if self.ops.is_empty() {
            return (x, y, d);
        }
        let s = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        for op in self.ops.iter().rev() {
            match *op {
                Op::FixCol { j, ref rows } => {
                    let mut v = lp.obj[j];
                    for &(i, a) in rows {
                        v -= y[i] * a;
                    }
                    d[j] = v;
                }
                Op::Singleton { i, j, a } => {
                    let at_lower =
                        self.lower_src[j] == Some(i) && (x[j] - self.lb[j]).abs() <= 1e-9 * (1.0 + x[j].abs());
                    let at_upper =
                        self.upper_src[j] == Some(i) && (x[j] - self.ub[j]).abs() <= 1e-9 * (1.0 + x[j].abs());
                    let sd = s * d[j];
                    if (sd > 0.0 && at_lower) || (sd < 0.0 && at_upper) {
                        y[i] = d[j] / a;
                        d[j] = 0.0;
                    }
                }
                Op::Empty { i } => y[i] = 0.0,
            }
        }
        (x, y, d)
    }
}
