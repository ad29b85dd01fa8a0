//! Sparse LU of a simplex basis with Markowitz pivoting and a product-form
//! eta file for column replacements.
//!
//! The basis is given column by column (columns are basis positions). The
//! factor solves `B x = b` (ftran, `b` indexed by row, `x` by position) and
//! `B' z = c` (btran, `c` by position, `z` by row).

const THRESHOLD: f64 = 0.1;
const ZERO_PIVOT: f64 = 1e-11;
const SEARCH_COLS: usize = 8;

#[derive(Debug, Clone)]
pub struct Singular {
    /// Basis positions left without a pivot.
    pub positions: Vec<usize>,
    /// Rows left without a pivot, same length as `positions`.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct LuFactor {
    m: usize,
    l_row: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_row: Vec<usize>,
    u_col: Vec<usize>,
    u_diag: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

impl LuFactor {
    pub fn factor(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<LuFactor, Singular> {
        assert_eq!(cols.len(), m);
        let mut col_rows: Vec<Vec<usize>> = Vec::with_capacity(m);
        let mut col_vals: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, c) in cols.iter().enumerate() {
            let mut rs = Vec::with_capacity(c.len());
            let mut vs = Vec::with_capacity(c.len());
            for &(i, v) in c {
                if v != 0.0 {
                    rs.push(i);
                    vs.push(v);
                    row_cols[i].push(j);
                }
            }
            col_rows.push(rs);
            col_vals.push(vs);
        }
        let mut col_done = vec![false; m];
        let mut row_done = vec![false; m];
        let mut col_stack: Vec<usize> = (0..m).filter(|&j| col_rows[j].len() == 1).collect();
        col_stack.reverse();
        let mut row_stack: Vec<usize> = (0..m).filter(|&i| row_cols[i].len() == 1).collect();
        row_stack.reverse();
        let mut mark = vec![0usize; m];

        let mut f = LuFactor { m, ..Default::default() };
        f.l_start.push(0);
        f.u_start.push(0);
        f.eta_start.push(0);

        for _step in 0..m {
            let mut pivot: Option<(usize, usize)> = None;
            while let Some(j) = col_stack.pop() {
                if !col_done[j] && col_rows[j].len() == 1 && col_vals[j][0].abs() > ZERO_PIVOT {
                    pivot = Some((col_rows[j][0], j));
                    break;
                }
            }
            if pivot.is_none() {
                while let Some(i) = row_stack.pop() {
                    if row_done[i] || row_cols[i].len() != 1 {
                        continue;
                    }
                    let j = row_cols[i][0];
                    let k = col_rows[j].iter().position(|&r| r == i).unwrap();
                    let cmax = col_vals[j].iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let v = col_vals[j][k].abs();
                    if v > ZERO_PIVOT && v >= THRESHOLD * cmax {
                        pivot = Some((i, j));
                        break;
                    }
                }
            }
            if pivot.is_none() {
                pivot = markowitz_search(&col_rows, &col_vals, &row_cols, &col_done);
            }
            let (p, q) = match pivot {
                Some(pq) => pq,
                None => {
                    let positions: Vec<usize> = (0..m).filter(|&j| !col_done[j]).collect();
                    let rows: Vec<usize> = (0..m).filter(|&i| !row_done[i]).collect();
                    return Err(Singular { positions, rows });
                }
            };

            // Pivot row: move its entries out of the active columns into U.
            let kq = col_rows[q].iter().position(|&r| r == p).unwrap();
            let piv = col_vals[q][kq];
            let prow = std::mem::take(&mut row_cols[p]);
            let mut urow: Vec<(usize, f64)> = Vec::with_capacity(prow.len());
            for &j in &prow {
                if j == q {
                    continue;
                }
                let k = col_rows[j].iter().position(|&r| r == p).unwrap();
                urow.push((j, col_vals[j][k]));
                col_rows[j].swap_remove(k);
                col_vals[j].swap_remove(k);
                if col_rows[j].len() == 1 {
                    col_stack.push(j);
                }
            }
            // Pivot column: multipliers for the remaining rows.
            let qrows = std::mem::take(&mut col_rows[q]);
            let qvals = std::mem::take(&mut col_vals[q]);
            let mut lcol: Vec<(usize, f64)> = Vec::with_capacity(qrows.len());
            for (&i, &v) in qrows.iter().zip(&qvals) {
                if i == p {
                    continue;
                }
                lcol.push((i, v / piv));
                let k = row_cols[i].iter().position(|&c| c == q).unwrap();
                row_cols[i].swap_remove(k);
            }
            col_done[q] = true;
            row_done[p] = true;

            // Schur complement update.
            if !lcol.is_empty() {
                for &(j, upj) in &urow {
                    for (k, &i) in col_rows[j].iter().enumerate() {
                        mark[i] = k + 1;
                    }
                    for &(i, l) in &lcol {
                        let delta = -l * upj;
                        if mark[i] > 0 {
                            col_vals[j][mark[i] - 1] += delta;
                        } else {
                            col_rows[j].push(i);
                            col_vals[j].push(delta);
                            row_cols[i].push(j);
                        }
                    }
                    for &i in &col_rows[j] {
                        mark[i] = 0;
                    }
                    if col_rows[j].len() == 1 {
                        col_stack.push(j);
                    }
                }
            }
            for &(i, _) in &lcol {
                if row_cols[i].len() == 1 {
                    row_stack.push(i);
                }
            }

            f.l_row.push(p);
            for (i, l) in lcol {
                f.l_idx.push(i);
                f.l_val.push(l);
            }
            f.l_start.push(f.l_idx.len());
            f.u_row.push(p);
            f.u_col.push(q);
            f.u_diag.push(piv);
            for (j, v) in urow {
                f.u_idx.push(j);
                f.u_val.push(v);
            }
            f.u_start.push(f.u_idx.len());
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Solves `B x = b`; `b` is consumed as workspace.
    pub fn ftran(&self, b: &mut [f64], x: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let v = b[self.l_row[k]];
            if v != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[t]] -= self.l_val[t] * v;
                }
            }
        }
        for k in (0..m).rev() {
            let mut s = b[self.u_row[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * x[self.u_idx[t]];
            }
            x[self.u_col[k]] = s / self.u_diag[k];
        }
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = x[r] / self.eta_piv[e];
            x[r] = xr;
            if xr != 0.0 {
                for t in self.eta_start[e]..self.eta_start[e + 1] {
                    x[self.eta_idx[t]] -= self.eta_val[t] * xr;
                }
            }
        }
    }

    /// Solves `B' z = c`; `c` is consumed as workspace.
    pub fn btran(&self, c: &mut [f64], z: &mut [f64]) {
        let m = self.m;
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let mut s = c[r];
            for t in self.eta_start[e]..self.eta_start[e + 1] {
                s -= self.eta_val[t] * c[self.eta_idx[t]];
            }
            c[r] = s / self.eta_piv[e];
        }
        for k in 0..m {
            let w = c[self.u_col[k]] / self.u_diag[k];
            z[self.u_row[k]] = w;
            if w != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[t]] -= self.u_val[t] * w;
                }
            }
        }
        for k in (0..m).rev() {
            let p = self.l_row[k];
            let mut s = z[p];
            for t in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[t] * z[self.l_idx[t]];
            }
            z[p] = s;
        }
    }

    /// Records the replacement of basis position `r` by a column whose ftran
    /// image is `alpha`.
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        self.eta_pos.push(r);
        self.eta_piv.push(alpha[r]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a.abs() > 1e-14 {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}

fn markowitz_search(
    col_rows: &[Vec<usize>],
    col_vals: &[Vec<f64>],
    row_cols: &[Vec<usize>],
    col_done: &[bool],
) -> Option<(usize, usize)> {
    let mut cand: Vec<(usize, usize)> = Vec::new();
    for (j, rows) in col_rows.iter().enumerate() {
        if !col_done[j] && !rows.is_empty() {
            cand.push((rows.len(), j));
        }
    }
    cand.sort_unstable();
    let mut best: Option<(usize, f64, usize, usize)> = None;
    for &(cnt, j) in cand.iter().take(SEARCH_COLS) {
        let cmax = col_vals[j].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if cmax <= ZERO_PIVOT {
            continue;
        }
        for (k, &i) in col_rows[j].iter().enumerate() {
            let v = col_vals[j][k].abs();
            if v < THRESHOLD * cmax {
                continue;
            }
            let cost = (row_cols[i].len() - 1) * (cnt - 1);
            let better = match best {
                None => true,
                Some((bc, bv, _, _)) => cost < bc || (cost == bc && v > bv),
            };
            if better {
                best = Some((cost, v, i, j));
            }
        }
    }
    best.map(|(_, _, i, j)| (i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m).map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect()).collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn solves_small_system() {
        let a = vec![
            vec![4.0, 1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0, 0.0],
            vec![1.0, 0.0, 5.0, 1.0],
            vec![0.0, 2.0, 0.0, 6.0],
        ];
        let f = LuFactor::factor(4, &dense_cols(&a)).unwrap();
        let xt = [1.0, -2.0, 0.5, 3.0];
        let mut b = matvec(&a, &xt);
        let mut x = vec![0.0; 4];
        f.ftran(&mut b, &mut x);
        for k in 0..4 {
            assert!((x[k] - xt[k]).abs() < 1e-12);
        }
        let at: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| a[j][i]).collect()).collect();
        let mut c = matvec(&at, &xt);
        let mut z = vec![0.0; 4];
        f.btran(&mut c, &mut z);
        for k in 0..4 {
            assert!((z[k] - xt[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_update_matches_refactor() {
        let mut a = vec![vec![2.0, 0.0, 1.0], vec![1.0, 3.0, 0.0], vec![0.0, 1.0, 4.0]];
        let mut f = LuFactor::factor(3, &dense_cols(&a)).unwrap();
        let newcol = [1.0, 1.0, 1.0];
        let mut b = newcol.to_vec();
        let mut alpha = vec![0.0; 3];
        f.ftran(&mut b, &mut alpha);
        f.update(1, &alpha);
        for i in 0..3 {
            a[i][1] = newcol[i];
        }
        let xt = [0.3, -1.0, 2.0];
        let mut b = matvec(&a, &xt);
        let mut x = vec![0.0; 3];
        f.ftran(&mut b, &mut x);
        for k in 0..3 {
            assert!((x[k] - xt[k]).abs() < 1e-12);
        }
        let at: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| a[j][i]).collect()).collect();
        let mut c = matvec(&at, &xt);
        let mut z = vec![0.0; 3];
        f.btran(&mut c, &mut z);
        for k in 0..3 {
            assert!((z[k] - xt[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let e = LuFactor::factor(2, &dense_cols(&a)).unwrap_err();
        assert_eq!(e.positions.len(), 1);
    }
}
