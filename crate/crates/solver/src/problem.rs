use crate::error::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CscMatrix {
    pub nrows: usize,
    pub col_start: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn ncols(&self) -> usize {
        self.col_start.len().saturating_sub(1)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_start[j]..self.col_start[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Builds from triplets; duplicates are summed and explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for &(i, j, v) in trip {
            cols[j].push((i, v));
        }
        let mut m = CscMatrix { nrows, col_start: vec![0], row_idx: Vec::new(), values: Vec::new() };
        for mut c in cols {
            c.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < c.len() {
                let i = c[k].0;
                let mut v = 0.0;
                while k < c.len() && c[k].0 == i {
                    v += c[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    m.row_idx.push(i);
                    m.values.push(v);
                }
            }
            m.col_start.push(m.row_idx.len());
        }
        m
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols() {
            for (i, v) in self.col(j) {
                trip.push((j, i, v));
            }
        }
        CscMatrix::from_triplets(self.ncols(), self.nrows, &trip)
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols() {
            let xj = x[j];
            if xj != 0.0 {
                for (i, v) in self.col(j) {
                    y[i] += v * xj;
                }
            }
        }
        y
    }

    /// y = A' x
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.col(j).map(|(i, v)| v * x[i]).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub name: String,
    pub sense: Sense,
    pub obj: Vec<f64>,
    pub obj_offset: f64,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub col_names: Vec<String>,
    pub row_sense: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub row_names: Vec<String>,
    pub matrix: CscMatrix,
}

impl LpProblem {
    pub fn num_cols(&self) -> usize {
        self.obj.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn check_dims(&self) -> Result<(), SolverError> {
        let n = self.obj.len();
        let m = self.rhs.len();
        let bad = |what: &str| Err(SolverError::Dimension(what.to_string()));
        if self.col_lower.len() != n || self.col_upper.len() != n || self.col_names.len() != n {
            return bad("column arrays differ in length");
        }
        if self.row_sense.len() != m || self.row_names.len() != m {
            return bad("row arrays differ in length");
        }
        if self.matrix.ncols() != n || self.matrix.nrows != m {
            return bad("matrix shape does not match rows/columns");
        }
        if self.matrix.row_idx.iter().any(|&i| i >= m) {
            return bad("row index out of range");
        }
        for j in 0..n {
            if self.col_lower[j].is_nan() || self.col_upper[j].is_nan() || self.col_lower[j] > self.col_upper[j] {
                return Err(SolverError::Dimension(format!("column {} has invalid bounds", self.col_names[j])));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_offset + self.obj.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// Largest absolute bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_cols() {
            worst = worst.max(self.col_lower[j] - x[j]).max(x[j] - self.col_upper[j]);
        }
        for (i, a) in self.row_activity(x).into_iter().enumerate() {
            let v = match self.row_sense[i] {
                RowSense::Le => a - self.rhs[i],
                RowSense::Ge => self.rhs[i] - a,
                RowSense::Eq => (a - self.rhs[i]).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub lp: LpProblem,
    pub integer: Vec<bool>,
    /// Branching priority per column; higher branches first. Not part of MPS.
    pub priority: Vec<i32>,
}

impl MilpProblem {
    pub fn from_lp(lp: LpProblem) -> Self {
        let n = lp.num_cols();
        MilpProblem { lp, integer: vec![false; n], priority: vec![0; n] }
    }

    pub fn check(&self) -> Result<(), SolverError> {
        self.lp.check_dims()?;
        if self.integer.len() != self.lp.num_cols() || self.priority.len() != self.lp.num_cols() {
            return Err(SolverError::Dimension("integrality markers length".into()));
        }
        for j in 0..self.lp.num_cols() {
            if self.integer[j] && (self.lp.col_lower[j] < 0.0 || self.lp.col_upper[j] > 1.0) {
                return Err(SolverError::Dimension(format!(
                    "integer column {} must have bounds within [0,1]",
                    self.lp.col_names[j]
                )));
            }
        }
        Ok(())
    }

    pub fn num_integer(&self) -> usize {
        self.integer.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Row(pub usize);

/// Incremental builder used by model assemblers.
#[derive(Debug, Clone)]
pub struct ProblemBuilder {
    name: String,
    sense: Sense,
    obj: Vec<f64>,
    obj_offset: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    col_names: Vec<String>,
    integer: Vec<bool>,
    priority: Vec<i32>,
    row_sense: Vec<RowSense>,
    rhs: Vec<f64>,
    row_names: Vec<String>,
    trip: Vec<(usize, usize, f64)>,
}

impl ProblemBuilder {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        ProblemBuilder {
            name: name.into(),
            sense,
            obj: Vec::new(),
            obj_offset: 0.0,
            lower: Vec::new(),
            upper: Vec::new(),
            col_names: Vec::new(),
            integer: Vec::new(),
            priority: Vec::new(),
            row_sense: Vec::new(),
            rhs: Vec::new(),
            row_names: Vec::new(),
            trip: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, cost: f64) -> Var {
        self.obj.push(cost);
        self.lower.push(lb);
        self.upper.push(ub);
        self.col_names.push(name.into());
        self.integer.push(false);
        self.priority.push(0);
        Var(self.obj.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, priority: i32) -> Var {
        let v = self.add_var(name, 0.0, 1.0, 0.0);
        self.integer[v.0] = true;
        self.priority[v.0] = priority;
        v
    }

    pub fn add_row(&mut self, name: impl Into<String>, sense: RowSense, rhs: f64, terms: &[(Var, f64)]) -> Row {
        let i = self.rhs.len();
        for &(v, a) in terms {
            if a != 0.0 {
                self.trip.push((i, v.0, a));
            }
        }
        self.row_sense.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        Row(i)
    }

    pub fn set_cost(&mut self, v: Var, c: f64) {
        self.obj[v.0] = c;
    }

    pub fn add_cost(&mut self, v: Var, c: f64) {
        self.obj[v.0] += c;
    }

    pub fn add_offset(&mut self, c: f64) {
        self.obj_offset += c;
    }

    pub fn set_bounds(&mut self, v: Var, lb: f64, ub: f64) {
        self.lower[v.0] = lb;
        self.upper[v.0] = ub;
    }

    pub fn bounds(&self, v: Var) -> (f64, f64) {
        (self.lower[v.0], self.upper[v.0])
    }

    pub fn num_vars(&self) -> usize {
        self.obj.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn build_milp(self) -> MilpProblem {
        let m = self.rhs.len();
        let n = self.obj.len();
        let matrix = CscMatrix::from_triplets(m, n, &self.trip);
        MilpProblem {
            lp: LpProblem {
                name: self.name,
                sense: self.sense,
                obj: self.obj,
                obj_offset: self.obj_offset,
                col_lower: self.lower,
                col_upper: self.upper,
                col_names: self.col_names,
                row_sense: self.row_sense,
                rhs: self.rhs,
                row_names: self.row_names,
                matrix,
            },
            integer: self.integer,
            priority: self.priority,
        }
    }

    pub fn build_lp(self) -> LpProblem {
        self.build_milp().lp
    }
}
