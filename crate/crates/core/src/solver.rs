//! Stationary distributions of finite CTMCs: `pi Q = 0`, `sum pi = 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::SolverError;

/// Largest dimension solved by dense LU.
pub const DENSE_MAX_DIM: usize = 800;
/// Negative components up to this magnitude are rounding noise and clamped.
pub const CLAMP_LIMIT: f64 = 1e-8;

/// Generator matrix `Q` in CSR form, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRateSystem {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseRateSystem {
    /// Builds `Q` from off-diagonal rates `(from, to, rate)`. Duplicates are
    /// summed, self-loops and zero rates dropped, and each diagonal entry is
    /// set to minus its row sum.
    pub fn from_triplets(dim: usize, rates: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (i, j, v) in rates {
            if i != j && v != 0.0 {
                rows[i].push((j, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = vec![0.0; dim];
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut sum = 0.0;
            for (j, v) in row {
                sum += v;
                if cols.len() > row_ptr[i] && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            diag[i] = -sum;
            row_ptr.push(cols.len());
        }
        SparseRateSystem { dim, row_ptr, cols, vals, diag }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// Largest `|sum_j q_ij|` over rows.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim).map(|i| (self.row(i).map(|(_, v)| v).sum::<f64>() + self.diag[i]).abs()).fold(0.0, f64::max)
    }

    /// `pi Q`.
    pub fn left_mul(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diag).map(|(p, d)| p * d).collect();
        for (i, &p) in pi.iter().enumerate() {
            if p != 0.0 {
                for (j, v) in self.row(i) {
                    out[j] += p * v;
                }
            }
        }
        out
    }

    /// `Q u`.
    fn right_mul(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.diag[i] * u[i] + self.row(i).map(|(j, v)| v * u[j]).sum::<f64>()).collect()
    }

    /// `||pi Q||_inf`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.left_mul(pi).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn scale(&self) -> f64 {
        self.diag.iter().fold(1.0f64, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dense LU up to [`DENSE_MAX_DIM`], iterative above.
    Auto,
    Dense,
    /// LSQR on the augmented system, then Gauss-Seidel polishing if needed.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `||pi Q||_inf / max(1, max |q_ii|)` and on `|sum pi - 1|`.
    pub tolerance: f64,
    /// Iteration budget of each iterative stage; `None` means `10 * dim`.
    pub max_iters: Option<usize>,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-10, max_iters: None, method: Method::Auto }
    }
}

pub fn solve_stationary(
    system: &SparseRateSystem,
    tolerance: f64,
    max_iters: Option<usize>,
) -> Result<Vec<f64>, SolverError> {
    solve_stationary_with(system, &SolverOptions { tolerance, max_iters, method: Method::Auto })
}

pub fn solve_stationary_with(system: &SparseRateSystem, opts: &SolverOptions) -> Result<Vec<f64>, SolverError> {
    let n = system.dim();
    if n == 0 {
        return Err(SolverError::EmptySystem);
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let max_iters = opts.max_iters.unwrap_or(10 * n).max(1);
    let scale = system.scale();
    let bound = opts.tolerance * scale;
    let dense = match opts.method {
        Method::Auto => n <= DENSE_MAX_DIM,
        Method::Dense => true,
        Method::Iterative => false,
    };

    let pi = if dense {
        finish(dense_solve(system)?)?
    } else {
        let (x, _) = lsqr(system, opts.tolerance * 1e-3, max_iters);
        let mut pi = finish(x).unwrap_or_else(|_| vec![1.0 / n as f64; n]);
        if system.residual(&pi) > bound {
            pi = gauss_seidel(system, pi, bound, max_iters)?;
        }
        pi
    };
    let residual = system.residual(&pi);
    if residual > bound || (pi.iter().sum::<f64>() - 1.0).abs() > opts.tolerance {
        return Err(SolverError::NotConverged { iterations: max_iters, residual });
    }
    Ok(pi)
}

/// Clamps rounding-level negatives and renormalizes.
fn finish(mut pi: Vec<f64>) -> Result<Vec<f64>, SolverError> {
    for (index, v) in pi.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(SolverError::Singular);
        }
        if *v < 0.0 {
            if *v < -CLAMP_LIMIT {
                return Err(SolverError::NegativeProbability { index, value: *v });
            }
            *v = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(SolverError::Singular);
    }
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

/// `Q^T pi = 0` with the first balance equation replaced by `sum pi = 1`.
fn dense_solve(system: &SparseRateSystem) -> Result<Vec<f64>, SolverError> {
    let n = system.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = system.diag[i];
        for (j, v) in system.row(i) {
            a[(j, i)] += v;
        }
    }
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let x = a.lu().solve(&b).ok_or(SolverError::Singular)?;
    Ok(x.iter().copied().collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// LSQR for `[Q^T; 1^T] x = [0; 1]`. Returns the iterate and the iteration count.
fn lsqr(system: &SparseRateSystem, atol: f64, max_iters: usize) -> (Vec<f64>, usize) {
    let n = system.dim();
    // A v = [Q^T v; sum v], A^T u = Q u[..n] + u[n]
    let a_mul = |v: &[f64]| {
        let mut out = system.left_mul(v);
        out.push(v.iter().sum());
        out
    };
    let at_mul = |u: &[f64]| {
        let mut out = system.right_mul(&u[..n]);
        out.iter_mut().for_each(|x| *x += u[n]);
        out
    };

    let mut x = vec![0.0; n];
    let mut u = vec![0.0; n + 1];
    u[n] = 1.0;
    let mut beta = 1.0;
    let mut v = at_mul(&u);
    let mut alpha = norm(&v);
    if alpha == 0.0 {
        return (x, 0);
    }
    v.iter_mut().for_each(|e| *e /= alpha);
    let mut w = v.clone();
    let (mut phibar, mut rhobar) = (beta, alpha);
    let bnorm = beta;
    let mut anorm_sq = 0.0;

    for it in 1..=max_iters {
        let av = a_mul(&v);
        u.iter_mut().zip(&av).for_each(|(ui, a)| *ui = a - alpha * *ui);
        beta = norm(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|e| *e /= beta);
            let atu = at_mul(&u);
            v.iter_mut().zip(&atu).for_each(|(vi, a)| *vi = a - beta * *vi);
            alpha = norm(&v);
            if alpha > 0.0 {
                v.iter_mut().for_each(|e| *e /= alpha);
            }
        }
        anorm_sq += alpha * alpha + beta * beta;

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for i in 0..n {
            x[i] += t1 * w[i];
            w[i] = v[i] + t2 * w[i];
        }

        // phibar = ||r||, phibar * alpha * |c| = ||A^T r||
        let arnorm = phibar * alpha * c.abs();
        if phibar <= atol * bnorm || arnorm <= atol * anorm_sq.sqrt() * phibar || alpha == 0.0 {
            return (x, it);
        }
    }
    (x, max_iters)
}

/// Gauss-Seidel sweeps on `pi Q = 0` with renormalization after each sweep.
fn gauss_seidel(
    system: &SparseRateSystem,
    mut pi: Vec<f64>,
    bound: f64,
    max_iters: usize,
) -> Result<Vec<f64>, SolverError> {
    let n = system.dim();
    // column access of Q: incoming rates per state
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, v) in system.row(i) {
            incoming[j].push((i, v));
        }
    }
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        for i in 0..n {
            let out = -system.diag[i];
            if out > 0.0 {
                pi[i] = incoming[i].iter().map(|&(j, v)| pi[j] * v).sum::<f64>() / out;
            }
        }
        pi = finish(pi)?;
        residual = system.residual(&pi);
        if residual <= bound {
            return Ok(pi);
        }
    }
    Err(SolverError::NotConverged { iterations: max_iters, residual })
}
