//! Explicit probability measures on small configuration spaces and the
//! Dirichlet forms built from them.
//!
//! States are indexed by [`Configuration::to_index`]: bit `j` of the index is
//! the occupation of vertex (or window site) `j`. All densities are taken with
//! respect to the uniform measure, so `φ(η) = 2^n μ(η)`.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::JumpRate;
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::group::{Elem, TowerSpec};
use crate::tower::QuotientGraph;

/// Largest number of sites for which measures are stored as dense vectors.
pub const MAX_EXACT_SITES: usize = 16;

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

fn check_exact(n: usize) -> Result<()> {
    if n > MAX_EXACT_SITES {
        Err(Error::StateSpaceTooLarge {
            sites: n,
            cap: MAX_EXACT_SITES,
        })
    } else {
        Ok(())
    }
}

/// A probability vector over `{0,1}^n`, `n <= 16`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallMeasure {
    n: usize,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRow {
    state: u64,
    probability: f64,
}

impl SmallMeasure {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_exact(n)?;
        if probs.len() != 1 << n {
            return Err(Error::InvalidMeasure(format!(
                "{} entries for {n} sites, expected {}",
                probs.len(),
                1u64 << n
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("entry {p} is not a probability")));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {mass} differs from 1")));
        }
        Ok(Self { n, probs })
    }

    /// Normalise non-negative weights.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        let mass: f64 = weights.iter().sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMeasure("weights have no positive finite mass".into()));
        }
        Self::new(n, weights.into_iter().map(|w| w / mass).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_exact(n)?;
        Ok(Self {
            n,
            probs: vec![1.0 / (1u64 << n) as f64; 1 << n],
        })
    }

    pub fn point_mass(eta: &Configuration) -> Result<Self> {
        let n = eta.len();
        check_exact(n)?;
        let mut probs = vec![0.0; 1 << n];
        probs[eta.to_index() as usize] = 1.0;
        Ok(Self { n, probs })
    }

    /// Product Bernoulli(`rho`) measure.
    pub fn bernoulli(n: usize, rho: f64) -> Result<Self> {
        check_exact(n)?;
        check_density(rho)?;
        let probs = (0..1u64 << n)
            .map(|idx| {
                let k = idx.count_ones() as i32;
                rho.powi(k) * (1.0 - rho).powi(n as i32 - k)
            })
            .collect();
        Ok(Self { n, probs })
    }

    /// Random measure with independent exponential weights.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_exact(n)?;
        let w = (0..1 << n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        Self::from_weights(n, w)
    }

    /// Normalised histogram of observed state indices.
    pub fn from_samples<I: IntoIterator<Item = u64>>(n: usize, samples: I) -> Result<Self> {
        check_exact(n)?;
        let mut w = vec![0.0; 1 << n];
        for s in samples {
            let slot = w
                .get_mut(s as usize)
                .ok_or_else(|| Error::InvalidMeasure(format!("sample {s} outside the state space")))?;
            *slot += 1.0;
        }
        Self::from_weights(n, w)
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    /// `sqrt(dμ/dν)` for the uniform reference measure `ν`.
    pub fn sqrt_density(&self) -> Vec<f64> {
        let scale = (1u64 << self.n) as f64;
        self.probs.iter().map(|p| (p * scale).sqrt()).collect()
    }

    pub fn expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.probs.iter().enumerate().map(|(idx, p)| p * f(idx)).sum()
    }

    /// `μ ∘ σ̲`, i.e. `(μ ∘ σ̲)(η) = μ(σ̲ η)`.
    pub fn compose_translation(&self, graph: &QuotientGraph, sigma: &Elem) -> Result<Self> {
        self.check_graph(graph)?;
        let n = self.n;
        // (σ η)_z = η_{σ^{-1} z}; bit z of σ(idx) is bit perm[z] of idx
        let inv = graph.spec().inv(sigma);
        let perm: Vec<usize> = (0..n).map(|z| graph.left_mul(&inv, z)).collect();
        let probs = (0..1usize << n)
            .map(|idx| self.probs[permute_bits(idx, &perm)])
            .collect();
        Ok(Self { n, probs })
    }

    /// `μ̄ = |V_m|^{-1} Σ_σ̲ μ ∘ σ̲`.
    pub fn group_average(&self, graph: &QuotientGraph) -> Result<Self> {
        self.check_graph(graph)?;
        let n = self.n;
        let mut acc = vec![0.0; 1 << n];
        for v in 0..n {
            let sigma = graph.coords_of(v);
            let t = self.compose_translation(graph, &sigma)?;
            for (a, p) in acc.iter_mut().zip(&t.probs) {
                *a += p;
            }
        }
        Ok(Self {
            n,
            probs: acc.into_iter().map(|a| a / n as f64).collect(),
        })
    }

    /// Whether `μ ∘ σ̲ = μ` for every generator, up to `tol` per entry.
    pub fn is_invariant(&self, graph: &QuotientGraph, tol: f64) -> bool {
        graph.spec().generators().iter().all(|s| match self.compose_translation(graph, s) {
            Ok(t) => t.probs.iter().zip(&self.probs).all(|(a, b)| (a - b).abs() <= tol),
            Err(_) => false,
        })
    }

    /// Law of the pattern `(ι_m η)|_window`, bit `j` for `window[j]`.
    pub fn marginal(&self, graph: &QuotientGraph, window: &[Elem]) -> Result<Self> {
        self.check_graph(graph)?;
        check_exact(window.len())?;
        let verts: Vec<usize> = window.iter().map(|z| graph.vertex_of(z)).collect();
        let mut probs = vec![0.0; 1 << window.len()];
        for (idx, p) in self.probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            probs[gather_bits(idx, &verts)] += p;
        }
        Ok(Self {
            n: window.len(),
            probs,
        })
    }

    fn check_graph(&self, graph: &QuotientGraph) -> Result<()> {
        if graph.num_vertices() != self.n {
            return Err(Error::InvalidArgument(format!(
                "measure over {} sites used with a quotient of {} vertices",
                self.n,
                graph.num_vertices()
            )));
        }
        Ok(())
    }

    /// CSV with columns `state,probability`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (idx, p) in self.probs.iter().enumerate() {
            w.serialize(MeasureRow {
                state: idx as u64,
                probability: *p,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the CSV form; states not listed get probability 0.
    pub fn read_csv<R: Read>(n: usize, input: R) -> Result<Self> {
        check_exact(n)?;
        let mut probs = vec![0.0; 1 << n];
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: MeasureRow = row?;
            let slot = probs
                .get_mut(row.state as usize)
                .ok_or_else(|| Error::InvalidMeasure(format!("state {} out of range", row.state)))?;
            *slot = row.probability;
        }
        Self::new(n, probs)
    }
}

#[inline]
pub(crate) fn permute_bits(idx: usize, perm: &[usize]) -> usize {
    let mut out = 0;
    for (z, &src) in perm.iter().enumerate() {
        out |= ((idx >> src) & 1) << z;
    }
    out
}

#[inline]
fn gather_bits(idx: usize, verts: &[usize]) -> usize {
    permute_bits(idx, verts)
}

fn check_density(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("density {rho} outside [0, 1]")))
    }
}

/// Product Bernoulli measure: an exact vector on small quotients, a sampler otherwise.
#[derive(Clone, Debug)]
pub enum Bernoulli {
    Exact(SmallMeasure),
    Sampler { sites: usize, rho: f64 },
}

impl Bernoulli {
    pub fn new(sites: usize, rho: f64) -> Result<Self> {
        check_density(rho)?;
        if sites <= MAX_EXACT_SITES {
            Ok(Bernoulli::Exact(SmallMeasure::bernoulli(sites, rho)?))
        } else {
            Ok(Bernoulli::Sampler { sites, rho })
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        match self {
            Bernoulli::Exact(m) => {
                let rho = m.expectation(|idx| (idx & 1) as f64);
                Configuration::random(m.sites(), rho, rng)
            }
            Bernoulli::Sampler { sites, rho } => Configuration::random(*sites, *rho, rng),
        }
    }
}

/// Value of the Dirichlet form together with its edge decomposition.
#[derive(Clone, Debug)]
pub struct DirichletForm {
    /// `I_m(μ) = ½ Σ_{e ∈ E_m} ∫ c(e,η) (π_e √φ)^2 dν_m`.
    pub total: f64,
    /// `½ ∫ c(e,η) (π_e √φ)^2 dν_m` for each oriented edge.
    pub per_edge: Vec<f64>,
    /// `|V_m| · ½ Σ_{e ∈ E^0} ∫ c(e,η) (π_e √φ)^2 dν_m` with `E^0 = {e : oe = o}`;
    /// equal to `total` when `μ` is invariant.
    pub fundamental: f64,
}

impl DirichletForm {
    pub fn identity_defect(&self) -> f64 {
        (self.total - self.fundamental).abs()
    }
}

/// Dirichlet form of `μ` for the exclusion process with rate `c` on `graph`.
pub fn dirichlet_form(mu: &SmallMeasure, rate: &JumpRate, graph: &QuotientGraph) -> Result<DirichletForm> {
    mu.check_graph(graph)?;
    let n = mu.n;
    let root = mu.sqrt_density();
    let weight = 1.0 / (1u64 << n) as f64;
    let mut per_edge = vec![0.0; graph.num_edges()];
    for (e, slot) in per_edge.iter_mut().enumerate() {
        let edge = graph.edge(e);
        let mask = (1usize << edge.origin) | (1usize << edge.terminus);
        let mut acc = 0.0;
        for idx in 0..1usize << n {
            let a = (idx >> edge.origin) & 1;
            let b = (idx >> edge.terminus) & 1;
            if a == b {
                continue;
            }
            let d = root[idx ^ mask] - root[idx];
            if d != 0.0 {
                let eta = Configuration::from_index(n, idx as u64);
                acc += rate.eval(graph, e, &eta) * d * d;
            }
        }
        *slot = 0.5 * weight * acc;
    }
    let total = per_edge.iter().sum();
    let fundamental = n as f64 * graph.fundamental_edges().map(|e| per_edge[e]).sum::<f64>();
    Ok(DirichletForm {
        total,
        per_edge,
        fundamental,
    })
}

/// A finite subgraph `Λ` of the Cayley graph: sites and oriented edges between them.
#[derive(Clone, Debug)]
pub struct Subgraph {
    sites: Vec<Elem>,
    edges: Vec<(usize, usize)>,
}

impl Subgraph {
    /// `V_Λ = B(o, K)`, `E_Λ = {e : oe, te ∈ V_Λ}` (both orientations).
    pub fn ball(spec: &TowerSpec, k: u32) -> Result<Self> {
        let sites = spec.ball(k);
        check_exact(sites.len())?;
        let mut edges = Vec::new();
        for (a, x) in sites.iter().enumerate() {
            for s in spec.generators() {
                let y = spec.mul(x, s);
                if let Some(b) = sites.iter().position(|z| *z == y) {
                    edges.push((a, b));
                }
            }
        }
        Ok(Self { sites, edges })
    }

    /// Arbitrary sites with oriented edges given as pairs of site positions.
    pub fn new(sites: Vec<Elem>, edges: Vec<(usize, usize)>) -> Result<Self> {
        check_exact(sites.len())?;
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= sites.len() || *b >= sites.len() || a == b) {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) is not between distinct sites")));
        }
        Ok(Self { sites, edges })
    }

    pub fn sites(&self) -> &[Elem] {
        &self.sites
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// `Σ_{(a,b) ∈ E_Λ} ∫ (π_{ab} g)^2 dν` for a function `g` on `{0,1}^n` given by
/// its values, with `flip(idx, a, b)` the index after exchanging bits `a`, `b`.
fn edge_energy(g: &[f64], n_bits: usize, edges: &[(usize, usize)]) -> f64 {
    let weight = 1.0 / g.len() as f64;
    let mut acc = 0.0;
    for &(a, b) in edges {
        let mask = (1usize << a) | (1usize << b);
        for idx in 0..1usize << n_bits {
            if ((idx >> a) & 1) != ((idx >> b) & 1) {
                let d = g[idx ^ mask] - g[idx];
                acc += d * d;
            }
        }
    }
    acc * weight
}

/// `I°_Λ(μ) = -∫ √φ_Λ L°_Λ √φ_Λ dν_Λ` with `L°_Λ = ½ Σ_{e ∈ E_Λ} π_e`, for
/// the law `marginal` of the pattern on `Λ`. Since each `π_e` is an involution
/// this equals `¼ Σ_{e ∈ E_Λ} ∫ (π_e √φ_Λ)^2 dν_Λ`.
pub fn restricted_dirichlet(marginal: &SmallMeasure, lambda: &Subgraph) -> Result<f64> {
    if marginal.sites() != lambda.sites.len() {
        return Err(Error::InvalidArgument("marginal and subgraph have different sizes".into()));
    }
    let root = marginal.sqrt_density();
    Ok(0.25 * edge_energy(&root, marginal.n, &lambda.edges))
}

/// A probability vector over `{0,1}^Λ × {0,1}^Λ`; the first copy occupies the
/// low `n` bits of the index.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMeasure {
    n: usize,
    probs: Vec<f64>,
}

impl PairMeasure {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        check_exact(2 * n)?;
        let inner = SmallMeasure::new(2 * n, probs)?;
        Ok(Self { n, probs: inner.probs })
    }

    pub fn product(a: &SmallMeasure, b: &SmallMeasure) -> Result<Self> {
        if a.n != b.n {
            return Err(Error::InvalidArgument("factors have different sizes".into()));
        }
        let n = a.n;
        check_exact(2 * n)?;
        let mut probs = vec![0.0; 1 << (2 * n)];
        for (i, pa) in a.probs.iter().enumerate() {
            for (j, pb) in b.probs.iter().enumerate() {
                probs[i | (j << n)] = pa * pb;
            }
        }
        Ok(Self { n, probs })
    }

    pub fn point_mass(first: &Configuration, second: &Configuration) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::InvalidArgument("patterns have different sizes".into()));
        }
        let n = first.len();
        check_exact(2 * n)?;
        let mut probs = vec![0.0; 1 << (2 * n)];
        probs[(first.to_index() | (second.to_index() << n)) as usize] = 1.0;
        Ok(Self { n, probs })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `(σ̂ μ)|_{Λ×Λ}`: the joint law of `(η|_Λ, (σ^{-1}η)|_Λ)` where
/// `(σ^{-1}η)_z = η_{σ z}`, computed through the periodic lift.
pub fn pair_marginal(mu: &SmallMeasure, graph: &QuotientGraph, lambda: &Subgraph, sigma: &Elem) -> Result<PairMeasure> {
    mu.check_graph(graph)?;
    let n = lambda.sites.len();
    check_exact(2 * n)?;
    let spec = graph.spec();
    let mut verts: Vec<usize> = lambda.sites.iter().map(|z| graph.vertex_of(z)).collect();
    verts.extend(lambda.sites.iter().map(|z| graph.vertex_of(&spec.mul(sigma, z))));
    let mut probs = vec![0.0; 1 << (2 * n)];
    for (idx, p) in mu.probs.iter().enumerate() {
        if *p != 0.0 {
            probs[gather_bits(idx, &verts)] += p;
        }
    }
    Ok(PairMeasure { n, probs })
}

/// The two Dirichlet forms on `Λ × Λ`: the product form for
/// `L°_Λ ⊗ 1 + 1 ⊗ L°_Λ` and the origin-exchange form for `π̃_{o,o}`, which
/// swaps the value at the origin site of the first copy with the value at the
/// origin site of the second. `origin` is the position of `o` in `Λ`.
pub fn two_block_forms(mu: &PairMeasure, lambda: &Subgraph, origin: usize) -> Result<(f64, f64)> {
    let n = mu.n;
    if lambda.sites.len() != n || origin >= n {
        return Err(Error::InvalidArgument("pair measure, subgraph and origin disagree".into()));
    }
    let scale = (1u64 << (2 * n)) as f64;
    let root: Vec<f64> = mu.probs.iter().map(|p| (p * scale).sqrt()).collect();
    let mut edges: Vec<(usize, usize)> = lambda.edges.clone();
    edges.extend(lambda.edges.iter().map(|&(a, b)| (a + n, b + n)));
    let product = 0.25 * edge_energy(&root, 2 * n, &edges);
    let exchange = 0.5 * edge_energy(&root, 2 * n, &[(origin, origin + n)]);
    Ok((product, exchange))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::TowerLimits;

    fn cycle(m: u32) -> QuotientGraph {
        QuotientGraph::new(&TowerSpec::integer_lattice(1, 2).unwrap(), m, TowerLimits::default()).unwrap()
    }

    #[test]
    fn bernoulli_entries() {
        let mu = SmallMeasure::bernoulli(4, 0.3).unwrap();
        let idx = Configuration::parse_bits("1010").unwrap().to_index() as usize;
        assert!((mu.prob(idx) - 0.0441).abs() < 1e-15);
        let zero = SmallMeasure::bernoulli(4, 0.0).unwrap();
        assert_eq!(zero.prob(0), 1.0);
    }

    #[test]
    fn orbit_average_of_point_mass() {
        let g = cycle(2);
        let mu = SmallMeasure::point_mass(&Configuration::parse_bits("1000").unwrap()).unwrap();
        let avg = mu.group_average(&g).unwrap();
        for s in ["1000", "0100", "0010", "0001"] {
            let idx = Configuration::parse_bits(s).unwrap().to_index() as usize;
            assert!((avg.prob(idx) - 0.25).abs() < 1e-15);
        }
        assert!(avg.is_invariant(&g, 1e-15));
        assert!(!mu.is_invariant(&g, 1e-15));
    }

    #[test]
    fn csv_round_trip() {
        let mu = SmallMeasure::bernoulli(3, 0.2).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("state,probability\n"));
        assert_eq!(SmallMeasure::read_csv(3, buf.as_slice()).unwrap(), mu);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(SmallMeasure::new(1, vec![0.5, 0.6]).is_err());
        assert!(SmallMeasure::new(1, vec![-0.5, 1.5]).is_err());
        assert!(SmallMeasure::uniform(17).is_err());
    }
}
