//! Dense two-phase simplex method for small standard-form linear programs.
//!
//! Solves `min cᵀx  s.t.  A x = b, x ≥ 0` on a full tableau. Phase one
//! minimizes the sum of one artificial variable per row; phase two prices the
//! real objective over the feasible basis that phase one leaves behind. The
//! problems this crate poses have at most a few hundred columns, so dense
//! storage and exact ratio tests are adequate.

/// Entering-column rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest index with a negative reduced cost. Never cycles.
    #[default]
    Bland,
    /// Most negative reduced cost, falling back to Bland after a stall.
    Dantzig,
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    /// Feasibility tolerance on constraint residuals.
    pub feas_tol: f64,
    /// Tolerance for reduced costs and pivot elements.
    pub pivot_tol: f64,
    pub max_iter: usize,
    pub rule: PivotRule,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            pivot_tol: 1e-11,
            max_iter: 50_000,
            rule: PivotRule::Bland,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    /// Phase one could not drive the artificial sum below the tolerance.
    Infeasible { infeasibility: f64 },
    Unbounded,
    IterationLimit,
}

impl LpOutcome {
    pub fn solution(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

/// A linear program in standard equality form.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            rows: Vec::new(),
            rhs: Vec::new(),
            cost: vec![0.0; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn set_cost(&mut self, cost: Vec<f64>) {
        assert_eq!(cost.len(), self.num_vars());
        self.cost = cost;
    }

    /// Appends the equality `row · x = rhs`.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.num_vars());
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Largest absolute residual of `A x = b`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (crate::dot(row, x) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self) -> LpOutcome {
        self.solve_with(&LpOptions::default())
    }

    pub fn solve_with(&self, opts: &LpOptions) -> LpOutcome {
        Tableau::build(self).run(self, opts)
    }
}

struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    /// m rows of width n + m + 1: structural, artificial, rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let n = lp.num_vars();
        let width = n + m + 1;
        let mut t = Vec::with_capacity(m);
        for (i, (row, &b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut r = vec![0.0; width];
            for (dst, &a) in r.iter_mut().zip(row) {
                *dst = sign * a;
            }
            r[n + i] = 1.0;
            r[width - 1] = sign * b;
            t.push(r);
        }
        Self {
            m,
            n,
            width,
            t,
            basis: (n..n + m).collect(),
        }
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width - 1]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width;
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for k in 0..width {
                    r[k] -= f * pivot_row[k];
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Reduced costs of `cost` (length n + m) against the current basis.
    fn reduced_costs(&self, cost: &[f64], active: usize) -> Vec<f64> {
        let mut d = cost[..active].to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk -= cb * self.t[i][k];
                }
            }
        }
        d
    }

    /// Runs simplex iterations on columns `0..active`. Returns false on
    /// unboundedness, `None` on iteration limit.
    fn optimize(&mut self, cost: &[f64], active: usize, opts: &LpOptions) -> Option<bool> {
        let mut stall = 0usize;
        for _ in 0..opts.max_iter {
            let d = self.reduced_costs(cost, active);
            let use_bland = opts.rule == PivotRule::Bland || stall > 50;
            let entering = if use_bland {
                d.iter().position(|&v| v < -opts.pivot_tol)
            } else {
                d.iter()
                    .enumerate()
                    .filter(|(_, &v)| v < -opts.pivot_tol)
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(k, _)| k)
            };
            let Some(col) = entering else {
                return Some(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i][col];
                if a > opts.pivot_tol {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, ratio)) = leave else {
                return Some(false);
            };
            if ratio.abs() < 1e-14 {
                stall += 1;
            } else {
                stall = 0;
            }
            self.pivot(row, col);
        }
        None
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        x
    }

    fn run(mut self, lp: &LinearProgram, opts: &LpOptions) -> LpOutcome {
        let (m, n) = (self.m, self.n);
        let mut phase1 = vec![0.0; n + m];
        for c in phase1[n..].iter_mut() {
            *c = 1.0;
        }
        match self.optimize(&phase1, n + m, opts) {
            None => return LpOutcome::IterationLimit,
            Some(false) => unreachable!("phase one is bounded below by zero"),
            Some(true) => {}
        }
        let x = self.primal();
        let infeasibility = lp.residual(&x);
        if infeasibility > opts.feas_tol {
            return LpOutcome::Infeasible { infeasibility };
        }

        // Drive zero-level artificials out of the basis; rows that cannot be
        // pivoted on a structural column are redundant and dropped.
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= n {
                let col = (0..n)
                    .filter(|&k| self.t[i][k].abs() > 1e-9)
                    .max_by(|&a, &b| self.t[i][a].abs().total_cmp(&self.t[i][b].abs()));
                match col {
                    Some(k) => {
                        self.pivot(i, k);
                        i += 1;
                    }
                    None => {
                        self.t.remove(i);
                        self.basis.remove(i);
                        self.m -= 1;
                    }
                }
            } else {
                i += 1;
            }
        }

        let mut cost = lp.cost.clone();
        cost.resize(n + m, 0.0);
        match self.optimize(&cost, n, opts) {
            None => LpOutcome::IterationLimit,
            Some(false) => LpOutcome::Unbounded,
            Some(true) => {
                let x = self.primal();
                let objective = crate::dot(&lp.cost, &x);
                LpOutcome::Optimal { x, objective }
            }
        }
    }
}
