//! Lanczos iteration with full reorthogonalisation: the largest eigenvalue of
//! a symmetric operator and the quadratic form `⟨1, e^{TA} 1⟩`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::operator::{DenseOperator, LinearOp};
use super::EIGEN_TOLERANCE;

const MAX_BASIS: usize = 240;
const MAX_RESTARTS: usize = 60;
const CHECK_EVERY: usize = 8;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// A positive, non-constant start vector (so it overlaps the Perron vector of
/// every sector and is not accidentally invariant).
fn start_vector(dim: usize) -> Vec<f64> {
    let golden = 0.618_033_988_749_894_9;
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.25 * ((i as f64 + 1.0) * golden).fract()).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

struct Krylov {
    basis: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    /// The next (unnormalised) residual direction.
    residual: Vec<f64>,
}

impl Krylov {
    fn new(start: Vec<f64>) -> Self {
        Self {
            basis: vec![start],
            alphas: Vec::new(),
            betas: Vec::new(),
            residual: Vec::new(),
        }
    }

    /// One Lanczos step; returns the new off-diagonal `β`.
    fn step<O: LinearOp + ?Sized>(&mut self, op: &O) -> f64 {
        let j = self.alphas.len();
        let v = &self.basis[j];
        let mut w = vec![0.0; v.len()];
        op.apply(v, &mut w);
        let alpha = dot(&w, v);
        axpy(-alpha, v, &mut w);
        if j > 0 {
            axpy(-self.betas[j - 1], &self.basis[j - 1], &mut w);
        }
        for _ in 0..2 {
            for b in &self.basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let beta = norm(&w);
        self.alphas.push(alpha);
        self.betas.push(beta);
        self.residual = w;
        beta
    }

    fn extend(&mut self, beta: f64) {
        let next: Vec<f64> = self.residual.iter().map(|x| x / beta).collect();
        self.basis.push(next);
    }

    fn tridiagonal(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let k = self.alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = self.alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = self.betas[i];
                t[(i + 1, i)] = self.betas[i];
            }
        }
        t.symmetric_eigen()
    }
}

/// Result of an eigenvalue iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    /// `‖A y − θ y‖` for the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric operator, converged to a residual of
/// `1e-10` (relative to `max(1, |λ|)`).
pub fn largest_eigenvalue<O: LinearOp + ?Sized>(op: &O) -> Result<EigenEstimate> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let mut start = start_vector(dim);
    let mut iterations = 0;
    for _ in 0..MAX_RESTARTS {
        let mut kry = Krylov::new(start.clone());
        let limit = MAX_BASIS.min(dim);
        loop {
            let beta = kry.step(op);
            iterations += 1;
            let k = kry.alphas.len();
            let exhausted = beta <= 1e-13 * kry.alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            if k.is_multiple_of(CHECK_EVERY) || k == limit || exhausted {
                let eig = kry.tridiagonal();
                let top = eig.eigenvalues.imax();
                let theta = eig.eigenvalues[top];
                let s = eig.eigenvectors.column(top);
                let residual = if exhausted { 0.0 } else { beta * s[k - 1].abs() };
                if residual <= EIGEN_TOLERANCE * theta.abs().max(1.0) {
                    return Ok(EigenEstimate {
                        value: theta,
                        residual,
                        iterations,
                    });
                }
                if k == limit {
                    // restart from the current Ritz vector
                    let mut y = vec![0.0; dim];
                    for (i, b) in kry.basis.iter().take(k).enumerate() {
                        axpy(s[i], b, &mut y);
                    }
                    let ny = norm(&y);
                    start = y.into_iter().map(|x| x / ny).collect();
                    break;
                }
            }
            kry.extend(beta);
        }
    }
    Err(Error::NoConvergence(format!(
        "Lanczos did not reach residual {EIGEN_TOLERANCE:e} after {iterations} iterations"
    )))
}

/// Largest eigenvalue of an explicit matrix; fails on non-symmetric input.
pub fn largest_eigenvalue_dense(op: &DenseOperator) -> Result<f64> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric(op.symmetry_defect()));
    }
    largest_eigenvalue(op).map(|e| e.value)
}

/// `ln( (1/dim) ⟨1, e^{T A} 1⟩ )` for a symmetric operator, by Lanczos
/// quadrature started from the normalised constant vector.
pub fn log_mean_exponential<O: LinearOp + ?Sized>(op: &O, horizon: f64) -> Result<f64> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let start = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut kry = Krylov::new(start);
    let limit = MAX_BASIS.min(dim);
    let mut previous = f64::NAN;
    loop {
        let beta = kry.step(op);
        let k = kry.alphas.len();
        let exhausted = k >= dim || beta <= 1e-13 * kry.alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        if k.is_multiple_of(4) || exhausted || k == limit {
            let eig = kry.tridiagonal();
            let top = eig.eigenvalues.max();
            // e_1^T exp(T T_k) e_1 = Σ_i s_{1i}^2 e^{T θ_i}, computed relative to the top
            let sum: f64 = eig
                .eigenvalues
                .iter()
                .zip(eig.eigenvectors.row(0).iter())
                .map(|(th, s)| s * s * (horizon * (th - top)).exp())
                .sum();
            let value = horizon * top + sum.ln();
            if exhausted || (value - previous).abs() <= 1e-13 * value.abs().max(1.0) {
                return Ok(value);
            }
            if k == limit {
                return Err(Error::NoConvergence(format!(
                    "Krylov exponential did not settle after {k} steps (last change {:e})",
                    (value - previous).abs()
                )));
            }
            previous = value;
        }
        kry.extend(beta);
    }
}
