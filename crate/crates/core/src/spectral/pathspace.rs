//! Exact law of `∫_0^T V(η(t)) dt` on small quotients.
//!
//! The integral is computed one particle-count sector at a time. Inside a
//! sector its law is a finite set of atoms (paths that never leave a level set
//! of `V`) plus an absolutely continuous part. Atom masses are
//! `π_U^T e^{T Q_UU} 1` for the level set `U`; the continuous part is
//! recovered from the characteristic function
//! `φ(θ) = π^T e^{T(Q + iθV)} 1` by Fourier inversion on a period twice the
//! support length, integrated up to the middle of the empty gap so that only
//! oscillating terms remain in the tail.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::JumpRate;
use crate::error::{Error, Result};
use crate::tower::QuotientGraph;

use super::operator::{GeneratorOp, StateSpace};

/// Largest quotient handled by the exact computation.
pub const PATHSPACE_MAX_SITES: usize = 10;

const BLOCK: usize = 64;
const MIN_TERMS: usize = 256;
const MAX_TERMS: usize = 16_384;
const TARGET_ERROR: f64 = 1e-9;

/// `P(∫_0^T V dt ≥ c)` with a truncation error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactExceedance {
    pub probability: f64,
    pub error_estimate: f64,
    /// Largest number of Fourier terms used in any sector.
    pub terms: usize,
}

/// `P_{ν_{1/2}}(∫_0^T V(η(t)) dt ≥ threshold)` for the process generated by
/// `t_m L_m`, with `V` tabulated on the full state space.
pub fn exact_exceedance(
    graph: &QuotientGraph,
    rate: &JumpRate,
    t_m: f64,
    potential_full: &[f64],
    threshold: f64,
    horizon: f64,
) -> Result<ExactExceedance> {
    let n = graph.num_vertices();
    if n > PATHSPACE_MAX_SITES {
        return Err(Error::StateSpaceTooLarge {
            sites: n,
            cap: PATHSPACE_MAX_SITES,
        });
    }
    if potential_full.len() != 1 << n {
        return Err(Error::InvalidArgument("potential must be indexed by full-space state".into()));
    }
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let mut out = ExactExceedance {
        probability: 0.0,
        error_estimate: 0.0,
        terms: 0,
    };
    for k in 0..=n {
        let space = StateSpace::sector(n, k)?;
        let weight = space.dim() as f64 / (1u64 << n) as f64;
        let v = space.restrict(potential_full);
        let q = GeneratorOp::new(graph, rate, t_m, space)?.to_dense()?;
        let sector = sector_exceedance(q.matrix(), &v, threshold, horizon)?;
        out.probability += weight * sector.probability;
        out.error_estimate += weight * sector.error_estimate;
        out.terms = out.terms.max(sector.terms);
    }
    out.probability = out.probability.clamp(0.0, 1.0);
    Ok(out)
}

/// `P_π(∫_0^T v(X_t) dt ≥ c)` for the chain with generator `q`, started from
/// the uniform distribution on its states.
pub fn sector_exceedance(q: &DMatrix<f64>, v: &[f64], c: f64, horizon: f64) -> Result<ExactExceedance> {
    let exact = |p: f64| ExactExceedance {
        probability: p,
        error_estimate: 0.0,
        terms: 0,
    };
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (vmin * horizon, vmax * horizon);
    if c <= lo {
        return Ok(exact(1.0));
    }
    if c > hi {
        return Ok(exact(0.0));
    }
    // shift so the support is centred at 0, which keeps ‖θV‖ small
    let centre = 0.5 * (vmin + vmax);
    let shifted: Vec<f64> = v.iter().map(|x| x - centre).collect();
    let c = c - centre * horizon;
    let half = 0.5 * (hi - lo);
    let atoms = level_set_atoms(q, &shifted, horizon);
    let atom_part: f64 = atoms
        .iter()
        .filter(|(loc, _)| *loc >= c - 1e-12 * half.max(1.0))
        .map(|(_, m)| m)
        .sum();
    let continuous_mass = 1.0 - atoms.iter().map(|(_, m)| m).sum::<f64>();
    if continuous_mass <= 1e-15 {
        return Ok(exact(atom_part.clamp(0.0, 1.0)));
    }
    // period 2(hi − lo): support [−half, half], empty gap [half, 3 half]
    let period = 4.0 * half;
    let upper = 2.0 * half;
    let base = (upper - c) / period * continuous_mass;
    let term = |k: usize| -> f64 {
        let theta = 2.0 * PI * k as f64 / period;
        let mut phi = characteristic(q, &shifted, horizon, theta);
        for (loc, m) in &atoms {
            phi -= Complex::from_polar(*m, theta * loc);
        }
        let diff = Complex::from_polar(1.0, -theta * c) - Complex::from_polar(1.0, -theta * upper);
        let z = phi * diff / Complex::new(0.0, theta);
        2.0 / period * z.re
    };
    let mut total = base;
    let mut k = 0;
    let mut half_sum = base;
    loop {
        let block: Vec<f64> = (k + 1..=k + BLOCK).into_par_iter().map(term).collect();
        total += block.iter().sum::<f64>();
        k += BLOCK;
        if k.is_power_of_two() {
            let err = (total - half_sum).abs();
            if (k >= MIN_TERMS && err <= TARGET_ERROR) || k >= MAX_TERMS {
                return Ok(ExactExceedance {
                    probability: (total + atom_part).clamp(0.0, 1.0),
                    error_estimate: err,
                    terms: k,
                });
            }
            half_sum = total;
        }
    }
}

/// `(location, mass)` of every atom: for each level set `U` of `v`, the mass
/// of paths that stay in `U` during `[0, T]`, located at `v|_U · T`.
fn level_set_atoms(q: &DMatrix<f64>, v: &[f64], horizon: f64) -> Vec<(f64, f64)> {
    let d = v.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if (v[g[0]] - v[i]).abs() <= 1e-12 * scale => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let sub = DMatrix::from_fn(g.len(), g.len(), |a, b| horizon * q[(g[a], g[b])]);
            let mass = sub.exp().sum() / d as f64;
            let loc = g.iter().map(|&i| v[i]).sum::<f64>() / g.len() as f64 * horizon;
            (loc, mass)
        })
        .collect()
}

fn characteristic(q: &DMatrix<f64>, v: &[f64], horizon: f64, theta: f64) -> Complex<f64> {
    let d = v.len();
    let m = DMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j { Complex::new(0.0, theta * v[i]) } else { Complex::new(0.0, 0.0) };
        (Complex::new(q[(i, j)], 0.0) + diag) * horizon
    });
    m.exp().sum() / d as f64
}
