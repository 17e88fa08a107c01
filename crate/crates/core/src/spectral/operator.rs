//! State spaces and the generator `t_m L_m + aV` as a sparse, matrix-free
//! operator or as an explicit dense matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bundle::JumpRate;
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::tower::QuotientGraph;

use super::{DENSE_MAX_SITES, MATRIX_FREE_MAX_SITES};

const ABSENT: u32 = u32::MAX;

/// A set of configurations of a small quotient: either all of `{0,1}^{V_m}` or
/// one fixed-particle-count sector. States are configuration indices
/// (bit `x` = occupation of vertex `x`) in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    sites: usize,
    particles: Option<usize>,
    states: Vec<u32>,
    index: Vec<u32>,
}

impl StateSpace {
    pub fn full(sites: usize) -> Result<Self> {
        check_sites(sites, MATRIX_FREE_MAX_SITES)?;
        let states: Vec<u32> = (0..1u32 << sites).collect();
        Ok(Self {
            sites,
            particles: None,
            index: states.clone(),
            states,
        })
    }

    /// Configurations with exactly `k` particles.
    pub fn sector(sites: usize, k: usize) -> Result<Self> {
        check_sites(sites, MATRIX_FREE_MAX_SITES)?;
        if k > sites {
            return Err(Error::InvalidArgument(format!("{k} particles on {sites} sites")));
        }
        let mut index = vec![ABSENT; 1 << sites];
        let states: Vec<u32> = (0..1u32 << sites).filter(|s| s.count_ones() as usize == k).collect();
        for (i, s) in states.iter().enumerate() {
            index[*s as usize] = i as u32;
        }
        Ok(Self {
            sites,
            particles: Some(k),
            states,
            index,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> Option<usize> {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn state(&self, i: usize) -> usize {
        self.states[i] as usize
    }

    pub fn index_of(&self, state: usize) -> Option<usize> {
        match self.index.get(state) {
            Some(&i) if i != ABSENT => Some(i as usize),
            _ => None,
        }
    }

    /// Restrict a vector indexed by full-space state to this space.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.states.iter().map(|&s| full[s as usize]).collect()
    }

    /// Extend a vector on this space by zero to the full space.
    pub fn extend(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.sites];
        for (&s, v) in self.states.iter().zip(values) {
            out[s as usize] = *v;
        }
        out
    }
}

fn check_sites(sites: usize, cap: usize) -> Result<()> {
    if sites > cap {
        return Err(Error::StateSpaceTooLarge { sites, cap });
    }
    Ok(())
}

/// A real linear operator that can be applied to vectors.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `t_m L_m + a V` on a [`StateSpace`], stored row-wise: the off-diagonal
/// transition rates, the total outflow of each state and the potential.
#[derive(Clone, Debug)]
pub struct GeneratorOp {
    space: StateSpace,
    offsets: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    outflow: Vec<f64>,
    potential: Vec<f64>,
    a: f64,
}

impl GeneratorOp {
    /// The generator `t_m L_m` restricted to `space`.
    pub fn new(graph: &QuotientGraph, rate: &JumpRate, t_m: f64, space: StateSpace) -> Result<Self> {
        let n = graph.num_vertices();
        if n != space.sites() {
            return Err(Error::InvalidArgument(format!(
                "state space has {} sites but the graph has {n} vertices",
                space.sites()
            )));
        }
        rate.check_on(graph)?;
        let rows: Vec<Vec<(u32, f64)>> = space
            .states()
            .par_iter()
            .map(|&s| {
                let eta = Configuration::from_index(n, s as u64);
                let mut row: Vec<(u32, f64)> = Vec::new();
                for e in 0..graph.num_edges() {
                    let edge = graph.edge(e);
                    if eta.get(edge.origin) == eta.get(edge.terminus) {
                        continue;
                    }
                    let target = s as usize ^ (1 << edge.origin) ^ (1 << edge.terminus);
                    let j = space.index_of(target).expect("exchanges preserve the particle count") as u32;
                    let r = t_m * rate.eval(graph, e, &eta);
                    match row.iter_mut().find(|(c, _)| *c == j) {
                        Some(entry) => entry.1 += r,
                        None => row.push((j, r)),
                    }
                }
                row.sort_unstable_by_key(|(c, _)| *c);
                row
            })
            .collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut outflow = Vec::with_capacity(rows.len());
        offsets.push(0);
        for row in rows {
            outflow.push(row.iter().map(|(_, r)| r).sum());
            for (c, r) in row {
                cols.push(c);
                vals.push(r);
            }
            offsets.push(cols.len() as u32);
        }
        let dim = space.dim();
        Ok(Self {
            space,
            offsets,
            cols,
            vals,
            outflow,
            potential: vec![0.0; dim],
            a: 0.0,
        })
    }

    /// The same generator plus `a V`, with `V` given on the full state space.
    pub fn tilted(&self, a: f64, potential_full: &[f64]) -> Result<Self> {
        if potential_full.len() != 1 << self.space.sites() {
            return Err(Error::InvalidArgument("potential must be indexed by full-space state".into()));
        }
        let mut out = self.clone();
        out.a = a;
        out.potential = self.space.restrict(potential_full);
        Ok(out)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn tilt(&self) -> f64 {
        self.a
    }

    /// `V` on this space.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Diagonal entry of row `i`.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.a * self.potential[i] - self.outflow[i]
    }

    /// Off-diagonal entries of row `i` as `(column, rate)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        self.cols[lo..hi].iter().zip(&self.vals[lo..hi]).map(|(c, v)| (*c as usize, *v))
    }

    /// Largest total exit rate.
    pub fn max_outflow(&self) -> f64 {
        self.outflow.iter().copied().fold(0.0, f64::max)
    }

    /// `max |A_ij − A_ji|` over the off-diagonal entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                let lo = self.offsets[j] as usize;
                let hi = self.offsets[j + 1] as usize;
                let back = match self.cols[lo..hi].binary_search(&(i as u32)) {
                    Ok(p) => self.vals[lo + p],
                    Err(_) => 0.0,
                };
                worst = worst.max((v - back).abs());
            }
        }
        worst
    }

    /// Explicit matrix, for spaces of at most `2^12` states.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let dim = self.dim();
        if dim > 1 << DENSE_MAX_SITES {
            return Err(Error::StateSpaceTooLarge {
                sites: self.space.sites(),
                cap: DENSE_MAX_SITES,
            });
        }
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = self.diagonal(i);
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        Ok(DenseOperator::from_matrix(m))
    }
}

impl LinearOp for GeneratorOp {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        // rows are independent, so the result does not depend on the thread count
        y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, yi)| {
            let mut acc = self.diagonal(i) * x[i];
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            *yi = acc;
        });
    }
}

/// An explicit real matrix with a cached symmetry flag.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
    symmetric: bool,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let scale = matrix.amax().max(1.0);
        let symmetric = (&matrix - matrix.transpose()).amax() <= 1e-12 * scale;
        Self { matrix, symmetric }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| r.sum()).collect()
    }

    /// `self + a diag(v)`.
    pub fn with_potential(&self, a: f64, v: &[f64]) -> Self {
        let mut m = self.matrix.clone();
        for (i, x) in v.iter().enumerate() {
            m[(i, i)] += a * x;
        }
        Self::from_matrix(m)
    }

    /// All eigenvalues in increasing order (symmetric matrices only).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.symmetric {
            return Err(Error::NotSymmetric(self.symmetry_defect()));
        }
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }
}

impl LinearOp for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.matrix.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// The dense matrix of `t_m L_m` on all `2^{|V_m|}` configurations.
pub fn build_generator(graph: &QuotientGraph, rate: &JumpRate, t_m: f64) -> Result<DenseOperator> {
    check_sites(graph.num_vertices(), DENSE_MAX_SITES)?;
    GeneratorOp::new(graph, rate, t_m, StateSpace::full(graph.num_vertices())?)?.to_dense()
}

/// A function of the configuration tabulated on the full state space.
pub fn tabulate(graph: &QuotientGraph, f: impl Fn(&Configuration) -> f64 + Sync) -> Result<Vec<f64>> {
    let n = graph.num_vertices();
    check_sites(n, MATRIX_FREE_MAX_SITES)?;
    Ok((0..1u64 << n)
        .into_par_iter()
        .map(|idx| f(&Configuration::from_index(n, idx)))
        .collect())
}
