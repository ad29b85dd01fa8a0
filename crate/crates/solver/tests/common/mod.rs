#![allow(clippy::needless_range_loop)]

use bessbid_solver::{LpProblem, Sense};

/// Brute-force LP oracle: enumerate every vertex of a bounded polytope by
/// picking n tight constraints out of rows and bounds.
pub fn vertex_oracle(lp: &LpProblem) -> Option<f64> {
    let n = lp.num_cols();
    let dense = |i: usize| -> Vec<f64> {
        let mut r = vec![0.0; n];
        for j in 0..n {
            for (ii, v) in lp.matrix.col(j) {
                if ii == i {
                    r[j] = v;
                }
            }
        }
        r
    };
    let mut planes: Vec<(Vec<f64>, f64)> = (0..lp.num_rows()).map(|i| (dense(i), lp.rhs[i])).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.col_lower[j]));
        planes.push((e, lp.col_upper[j]));
    }
    let k = planes.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let mut a: Vec<Vec<f64>> = idx.iter().map(|&p| planes[p].0.clone()).collect();
        let mut b: Vec<f64> = idx.iter().map(|&p| planes[p].1).collect();
        if let Some(x) = gauss(&mut a, &mut b) {
            if lp.max_violation(&x) <= 1e-9 {
                let v = lp.objective_value(&x);
                let better = match best {
                    None => true,
                    Some(bv) => {
                        if lp.sense == Sense::Minimize {
                            v < bv
                        } else {
                            v > bv
                        }
                    }
                };
                if better {
                    best = Some(v);
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}
