//! Exact checks on small quotients: the Feynman–Kac bound, the variational
//! formula for the top eigenvalue, and the path lemma.

use rand::Rng;
use serde::Serialize;

use crate::bundle::JumpRate;
use crate::configuration::Configuration;
use crate::dynamics::replica_rng;
use crate::error::{Error, Result};
use crate::group::Elem;
use crate::measure::{dirichlet_form, permute_bits, SmallMeasure};
use crate::tower::QuotientGraph;

use super::lanczos::{largest_eigenvalue, log_mean_exponential};
use super::operator::{GeneratorOp, LinearOp, StateSpace};
use super::{EIGEN_TOLERANCE, IDENTITY_ABS_TOLERANCE, VARIATIONAL_MAX_DIM};

/// One line of a spectral report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRecord {
    pub m: u32,
    pub a: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub lambda: f64,
    pub fk_expectation: f64,
    /// `T λ(a) − ln E exp(a ∫_0^T V dt)`; non-negative when the bound holds.
    pub bound_margin: f64,
}

/// `E^eq exp(a ∫_0^T V dt) = (1/dim) ⟨1, e^{T(t_m L_m + aV)} 1⟩` for the
/// tilted operator `op`, returned as its logarithm.
pub fn feynman_kac_log(op: &GeneratorOp, horizon: f64) -> Result<f64> {
    log_mean_exponential(op, horizon)
}

/// Top eigenvalue, Feynman–Kac expectation and the margin of the bound
/// `E exp(a∫V) ≤ exp(T λ(a))`.
pub fn spectral_record(level: u32, op: &GeneratorOp, horizon: f64) -> Result<SpectralRecord> {
    let lambda = largest_eigenvalue(op)?.value;
    let log_e = feynman_kac_log(op, horizon)?;
    Ok(SpectralRecord {
        m: level,
        a: op.tilt(),
        horizon,
        lambda,
        fk_expectation: log_e.exp(),
        bound_margin: horizon * lambda - log_e,
    })
}

/// `min_a exp(T λ(a) − a δ |V_m|)` over the grid, as `(log bound, argmin a)`.
pub fn chebyshev_fk_bound(base: &GeneratorOp, potential_full: &[f64], a_grid: &[f64], delta: f64, horizon: f64) -> Result<(f64, f64)> {
    let n = base.space().sites() as f64;
    let mut best = (f64::INFINITY, f64::NAN);
    for &a in a_grid {
        if a <= 0.0 {
            continue;
        }
        let op = base.tilted(a, potential_full)?;
        let lambda = largest_eigenvalue(&op)?.value;
        let log_bound = horizon * lambda - a * delta * n;
        if log_bound < best.0 {
            best = (log_bound, a);
        }
    }
    if best.1.is_nan() {
        return Err(Error::InvalidArgument("the a grid needs a positive value".into()));
    }
    Ok((best.0.min(0.0), best.1))
}

/// Outcome of the variational check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariationalCheck {
    pub lambda_eig: f64,
    pub lambda_var: f64,
    pub gap: f64,
    /// `a V(η*) − t_m I_m(δ_{η*})` at a maximiser `η*` of `V`.
    pub point_mass_value: f64,
}

/// `λ_var = sup_μ { a ∫V dμ − t_m I_m(μ) }` over probability measures on
/// `space`, found by locally optimal gradient ascent of the Rayleigh quotient
/// from `restarts` random positive starts and evaluated through the Dirichlet
/// form, compared with the top eigenvalue of `t_m L_m + aV`.
#[allow(clippy::too_many_arguments)]
pub fn variational_check(
    graph: &QuotientGraph,
    rate: &JumpRate,
    t_m: f64,
    a: f64,
    potential_full: &[f64],
    space: StateSpace,
    restarts: usize,
    seed: u64,
) -> Result<VariationalCheck> {
    if space.dim() > VARIATIONAL_MAX_DIM {
        return Err(Error::StateSpaceTooLarge {
            sites: space.sites(),
            cap: VARIATIONAL_MAX_DIM.ilog2() as usize,
        });
    }
    let op = GeneratorOp::new(graph, rate, t_m, space)?.tilted(a, potential_full)?;
    let lambda_eig = largest_eigenvalue(&op)?.value;
    let evaluate = |f: &[f64]| -> Result<f64> {
        let weights = op.space().extend(&f.iter().map(|x| x * x).collect::<Vec<_>>());
        let mu = SmallMeasure::from_weights(op.space().sites(), weights)?;
        let energy = mu.expectation(|idx| potential_full[idx]);
        let form = dirichlet_form(&mu, rate, graph)?;
        Ok(a * energy - t_m * form.total)
    };
    let mut lambda_var = f64::NEG_INFINITY;
    for r in 0..restarts.max(1) {
        let mut rng = replica_rng(seed, r as u64);
        let start: Vec<f64> = (0..op.dim()).map(|_| 0.5 + rng.random::<f64>()).collect();
        let f = rayleigh_ascent(&op, start)?;
        lambda_var = lambda_var.max(evaluate(&f)?);
    }
    let best = (0..op.dim())
        .max_by(|&i, &j| op.potential()[i].total_cmp(&op.potential()[j]))
        .expect("state space is not empty");
    let mut point = vec![0.0; op.dim()];
    point[best] = 1.0;
    let point_mass_value = evaluate(&point)?;
    Ok(VariationalCheck {
        lambda_eig,
        lambda_var,
        gap: (lambda_eig - lambda_var).abs(),
        point_mass_value,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Maximise `⟨F, AF⟩ / ⟨F, F⟩` by gradient steps with the step length chosen
/// optimally in the span of the iterate, its gradient and the previous step.
fn rayleigh_ascent(op: &GeneratorOp, start: Vec<f64>) -> Result<Vec<f64>> {
    let dim = op.dim();
    let mut x = start;
    normalize(&mut x);
    let mut p: Vec<f64> = Vec::new();
    let mut ax = vec![0.0; dim];
    let scale = op.max_outflow() + op.potential().iter().fold(0.0f64, |m, v| m.max((op.tilt() * v).abs())) + 1.0;
    for _ in 0..20_000 {
        op.apply(&x, &mut ax);
        let rho = dot(&x, &ax);
        let mut r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - rho * b).collect();
        if dot(&r, &r).sqrt() <= 1e-2 * EIGEN_TOLERANCE * scale {
            return Ok(x);
        }
        // orthonormal basis of span{x, r, p}
        let mut basis = vec![x.clone()];
        for mut v in [std::mem::take(&mut r), p.clone()] {
            if v.is_empty() {
                continue;
            }
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&v, b);
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
                }
            }
            if normalize(&mut v) > 1e-14 {
                basis.push(v);
            }
        }
        let k = basis.len();
        if k == 1 {
            return Ok(x);
        }
        let images: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                let mut y = vec![0.0; dim];
                op.apply(b, &mut y);
                y
            })
            .collect();
        let h = nalgebra::DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let eig = h.symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let y = eig.eigenvectors.column(top);
        let mut next = vec![0.0; dim];
        let mut step = vec![0.0; dim];
        for (i, b) in basis.iter().enumerate() {
            next.iter_mut().zip(b).for_each(|(n, bi)| *n += y[i] * bi);
            if i > 0 {
                step.iter_mut().zip(b).for_each(|(s, bi)| *s += y[i] * bi);
            }
        }
        normalize(&mut next);
        normalize(&mut step);
        x = next;
        p = step;
    }
    Ok(x)
}

/// Outcome of the path lemma comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathLemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub distance: u32,
}

/// Site permutation realising `η ↦ σ̲η` on configuration indices.
fn translation_permutation(graph: &QuotientGraph, sigma: &Elem) -> Vec<usize> {
    let inv = graph.spec().inv(sigma);
    (0..graph.num_vertices()).map(|z| graph.left_mul(&inv, z)).collect()
}

fn check_function(graph: &QuotientGraph, f: &[f64]) -> Result<usize> {
    let n = graph.num_vertices();
    if n > crate::measure::MAX_EXACT_SITES || f.len() != 1 << n {
        return Err(Error::StateSpaceTooLarge {
            sites: n,
            cap: crate::measure::MAX_EXACT_SITES,
        });
    }
    Ok(n)
}

/// `F̄(η) = |V_m|^{-1} Σ_σ̲ F(σ̲η)`.
pub fn group_average_function(graph: &QuotientGraph, f: &[f64]) -> Result<Vec<f64>> {
    let n = check_function(graph, f)?;
    let perms: Vec<Vec<usize>> = (0..n).map(|v| translation_permutation(graph, &graph.coords_of(v))).collect();
    Ok((0..1usize << n)
        .map(|idx| perms.iter().map(|p| f[permute_bits(idx, p)]).sum::<f64>() / n as f64)
        .collect())
}

/// Whether `F(σ̲η) = F(η)` for every generator `σ`.
pub fn is_invariant_function(graph: &QuotientGraph, f: &[f64], tol: f64) -> Result<bool> {
    let n = check_function(graph, f)?;
    let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for s in graph.spec().generators() {
        let perm = translation_permutation(graph, s);
        if (0..1usize << n).any(|idx| (f[permute_bits(idx, &perm)] - f[idx]).abs() > tol * scale) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compare `∫(π_{o,σ̲o}F)^2 dν_m` with `4 d(o,σ̲o)^2 Σ_{e∈E^0} ∫(π_e F)^2 dν_m`
/// for a translation-invariant `F` given on the full state space.
pub fn path_lemma_check(graph: &QuotientGraph, sigma: &Elem, f: &[f64]) -> Result<PathLemmaCheck> {
    let n = check_function(graph, f)?;
    if !is_invariant_function(graph, f, IDENTITY_ABS_TOLERANCE)? {
        return Err(Error::InvalidArgument(
            "the path lemma needs a translation-invariant function".into(),
        ));
    }
    let o = graph.origin();
    let target = graph.vertex_of(sigma);
    let distance = graph.distance_from_origin(target);
    let weight = 1.0 / (1u64 << n) as f64;
    let swap_energy = |x: usize, y: usize| -> f64 {
        if x == y {
            return 0.0;
        }
        let mask = (1usize << x) | (1usize << y);
        (0..1usize << n)
            .filter(|idx| ((idx >> x) & 1) != ((idx >> y) & 1))
            .map(|idx| (f[idx ^ mask] - f[idx]).powi(2))
            .sum::<f64>()
            * weight
    };
    let lhs = swap_energy(o, target);
    let local: f64 = graph
        .fundamental_edges()
        .map(|e| {
            let edge = graph.edge(e);
            swap_energy(edge.origin, edge.terminus)
        })
        .sum();
    let rhs = 4.0 * (distance as f64).powi(2) * local;
    Ok(PathLemmaCheck {
        lhs,
        rhs,
        margin: rhs - lhs,
        distance,
    })
}

/// `C̃ = 4C / c_0`, the constant bounding the two-blocks form by `C̃ ε^2`.
pub fn inclusion_constant(c: f64, c0: f64) -> Result<f64> {
    if !(c > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("inclusion constant needs C > 0 and c0 > 0 (got {c}, {c0})")));
    }
    Ok(4.0 * c / c0)
}

/// A random function of the configuration with i.i.d. uniform values, averaged
/// over translations.
pub fn random_invariant_function<R: Rng + ?Sized>(graph: &QuotientGraph, rng: &mut R) -> Result<Vec<f64>> {
    let n = graph.num_vertices();
    let raw: Vec<f64> = (0..1usize << n.min(crate::measure::MAX_EXACT_SITES)).map(|_| rng.random::<f64>()).collect();
    group_average_function(graph, &raw)
}

/// `F(η)` depending only on the particle count.
pub fn count_function(n: usize, g: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..1u64 << n).map(|idx| g(Configuration::from_index(n, idx).count_ones())).collect()
}
