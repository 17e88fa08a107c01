//! The functional
//! `V(η) = Σ_{x ∈ V_m} | f̄_{x,i}(η) − ⟨f_o⟩(η̄_{x,b}) |`
//! comparing local averages of a bundle with its global average evaluated at
//! the local particle density, plus an incremental evaluator for use along
//! simulated trajectories.
//!
//! Local averages translate on the right, `f̄_{x,i} = |F_i|^{-1} Σ_{τ ∈ F_i} f_{x τ}`.
//! On abelian groups this is the usual average over `τ x`; on the Heisenberg
//! group it is the variant that remains invariant under the left action.

use crate::bundle::{GlobalAverage, VertexBundle};
use crate::configuration::Configuration;
use crate::error::Result;
use crate::folner::{b_index, folner_set, FolnerData};
use crate::group::Elem;
use crate::tower::QuotientGraph;

/// `f̄_{x,i}(η)` evaluated through the periodic lift.
pub fn local_average(f: &VertexBundle, graph: &QuotientGraph, folner: &FolnerData, x: usize, eta: &Configuration) -> f64 {
    let sum: f64 = folner
        .elements()
        .iter()
        .map(|t| f.eval(graph, graph.right_mul(x, t), eta))
        .sum();
    sum / folner.len() as f64
}

/// Occupation count `Σ_{τ ∈ F} η_{x τ}` through the periodic lift.
pub fn local_count(graph: &QuotientGraph, folner: &FolnerData, x: usize, eta: &Configuration) -> usize {
    folner
        .elements()
        .iter()
        .filter(|t| eta.get(graph.right_mul(x, t)))
        .count()
}

/// `V_{o,m,ε,i}` for a fixed bundle, averaging index `i` and density index `b`.
#[derive(Clone, Debug)]
pub struct TheoremFunctional {
    f: VertexBundle,
    poly: GlobalAverage,
    folner_i: FolnerData,
    folner_b: FolnerData,
    /// `⟨f_o⟩(k / |F_b|)` for `k = 0..=|F_b|`.
    poly_at_count: Vec<f64>,
}

impl TheoremFunctional {
    pub fn new(f: VertexBundle, i: u32, b: u32) -> Result<Self> {
        let folner_i = folner_set(f.spec(), i)?;
        let folner_b = folner_set(f.spec(), b)?;
        let poly = f.global_average();
        let nb = folner_b.len();
        let poly_at_count = (0..=nb).map(|k| poly.eval(k as f64 / nb as f64)).collect();
        Ok(Self {
            f,
            poly,
            folner_i,
            folner_b,
            poly_at_count,
        })
    }

    /// Density index `b = b(ε √t_m)`, as in the super-exponential estimate.
    pub fn at_scale(f: VertexBundle, i: u32, eps: f64, t_m: f64) -> Result<Self> {
        let b = b_index(f.spec(), eps * t_m.sqrt());
        Self::new(f, i, b)
    }

    pub fn bundle(&self) -> &VertexBundle {
        &self.f
    }

    pub fn global_average(&self) -> &GlobalAverage {
        &self.poly
    }

    pub fn i(&self) -> u32 {
        self.folner_i.index()
    }

    pub fn b(&self) -> u32 {
        self.folner_b.index()
    }

    pub fn folner_i(&self) -> &FolnerData {
        &self.folner_i
    }

    pub fn folner_b(&self) -> &FolnerData {
        &self.folner_b
    }

    /// Pointwise bound `V ≤ C(f) |V_m|`.
    pub fn upper_bound(&self, graph: &QuotientGraph) -> f64 {
        self.f.c_f() * graph.num_vertices() as f64
    }

    /// `| f̄_{x,i}(η) − ⟨f_o⟩(η̄_{x,b}) |`.
    pub fn term(&self, graph: &QuotientGraph, x: usize, eta: &Configuration) -> f64 {
        let avg = local_average(&self.f, graph, &self.folner_i, x, eta);
        let k = local_count(graph, &self.folner_b, x, eta);
        (avg - self.poly_at_count[k]).abs()
    }

    pub fn eval(&self, graph: &QuotientGraph, eta: &Configuration) -> f64 {
        (0..graph.num_vertices()).map(|x| self.term(graph, x, eta)).sum()
    }

    /// Values of `V` on every configuration of a small quotient, indexed by
    /// state index.
    pub fn tabulate(&self, graph: &QuotientGraph) -> Vec<f64> {
        let n = graph.num_vertices();
        assert!(n <= 24, "tabulating V needs a small quotient");
        let field = CompiledField::new(self, graph);
        let mut state = field.state(&Configuration::empty(n));
        (0..1u64 << n)
            .map(|idx| {
                state.reset(&field, &Configuration::from_index(n, idx));
                state.value()
            })
            .collect()
    }
}

/// Site tables of a [`TheoremFunctional`] on one quotient graph. Immutable and
/// shared by all replicas.
#[derive(Clone, Debug)]
pub struct CompiledField {
    n: usize,
    inv_fi: f64,
    table: Vec<f64>,
    poly_at_count: Vec<f64>,
    /// `f_sites[u * w + j]`: vertex read by site `j` of `f_u`.
    f_sites: Vec<u32>,
    f_width: usize,
    /// For each vertex `z`, the vertices `u` whose `f_u` reads `z` (with multiplicity).
    f_readers: Csr,
    /// For each vertex `u`, the vertices `v` with `u = v τ`, `τ ∈ F_i` (with multiplicity).
    avg_readers: Csr,
    /// For each vertex `z`, the vertices `v` with `z = v τ`, `τ ∈ F_b` (with multiplicity).
    count_readers: Csr,
}

#[derive(Clone, Debug, Default)]
struct Csr {
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl Csr {
    fn from_pairs(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Self {
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (k, v) in pairs {
            lists[k].push(v as u32);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for l in lists {
            items.extend(l);
            offsets.push(items.len() as u32);
        }
        Self { offsets, items }
    }

    #[inline]
    fn get(&self, k: usize) -> &[u32] {
        &self.items[self.offsets[k] as usize..self.offsets[k + 1] as usize]
    }
}

impl CompiledField {
    pub fn new(functional: &TheoremFunctional, graph: &QuotientGraph) -> Self {
        let n = graph.num_vertices();
        let f = &functional.f;
        let w = f.sites().len();
        let mut f_sites = Vec::with_capacity(n * w);
        for u in 0..n {
            for b in f.sites() {
                f_sites.push(graph.right_mul(u, b) as u32);
            }
        }
        let f_readers = Csr::from_pairs(n, (0..n).flat_map(|u| (0..w).map(move |j| (u, j))).map(|(u, j)| (f_sites[u * w + j] as usize, u)));
        let translates = |elems: &[Elem]| -> Vec<(usize, usize)> {
            (0..n)
                .flat_map(|v| elems.iter().map(move |t| (v, *t)))
                .map(|(v, t)| (graph.right_mul(v, &t), v))
                .collect()
        };
        let avg_readers = Csr::from_pairs(n, translates(functional.folner_i.elements()).into_iter());
        let count_readers = Csr::from_pairs(n, translates(functional.folner_b.elements()).into_iter());
        Self {
            n,
            inv_fi: 1.0 / functional.folner_i.len() as f64,
            table: f.table().to_vec(),
            poly_at_count: functional.poly_at_count.clone(),
            f_sites,
            f_width: w,
            f_readers,
            avg_readers,
            count_readers,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn state(&self, eta: &Configuration) -> FieldState {
        let mut s = FieldState {
            f_val: vec![0.0; self.n],
            avg_sum: vec![0.0; self.n],
            count: vec![0; self.n],
            term: vec![0.0; self.n],
            total: 0.0,
            stamp: vec![0; self.n],
            epoch: 0,
            touched: Vec::new(),
            updates: 0,
        };
        s.reset(self, eta);
        s
    }

    #[inline]
    fn f_at(&self, u: usize, eta: &Configuration) -> f64 {
        let mut p = 0;
        for (j, &z) in self.f_sites[u * self.f_width..(u + 1) * self.f_width].iter().enumerate() {
            if eta.get(z as usize) {
                p |= 1 << j;
            }
        }
        self.table[p]
    }

    #[inline]
    fn term_of(&self, avg_sum: f64, count: i32) -> f64 {
        (avg_sum * self.inv_fi - self.poly_at_count[count as usize]).abs()
    }
}

/// Mutable per-trajectory state of a [`CompiledField`].
#[derive(Clone, Debug)]
pub struct FieldState {
    f_val: Vec<f64>,
    avg_sum: Vec<f64>,
    count: Vec<i32>,
    term: Vec<f64>,
    total: f64,
    stamp: Vec<u32>,
    epoch: u32,
    touched: Vec<u32>,
    updates: u32,
}

/// Number of incremental updates between full recomputations of the total.
const RESUM_INTERVAL: u32 = 4096;

impl FieldState {
    /// Recompute everything from scratch for `eta`.
    pub fn reset(&mut self, field: &CompiledField, eta: &Configuration) {
        let n = field.n;
        for u in 0..n {
            self.f_val[u] = field.f_at(u, eta);
        }
        self.avg_sum.fill(0.0);
        self.count.fill(0);
        for u in 0..n {
            for &v in field.avg_readers.get(u) {
                self.avg_sum[v as usize] += self.f_val[u];
            }
            if eta.get(u) {
                for &v in field.count_readers.get(u) {
                    self.count[v as usize] += 1;
                }
            }
        }
        for v in 0..n {
            self.term[v] = field.term_of(self.avg_sum[v], self.count[v]);
        }
        self.resum();
    }

    fn resum(&mut self) {
        self.total = self.term.iter().sum();
        self.updates = 0;
    }

    /// Current value of `V`.
    #[inline]
    pub fn value(&self) -> f64 {
        self.total
    }

    #[inline]
    fn touch(&mut self, v: u32) {
        if self.stamp[v as usize] != self.epoch {
            self.stamp[v as usize] = self.epoch;
            self.touched.push(v);
        }
    }

    /// Update after the values at `x` and `y` were exchanged; `eta` is the
    /// configuration after the exchange.
    pub fn apply_swap(&mut self, field: &CompiledField, eta: &Configuration, x: usize, y: usize) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.touched.clear();
        // occupation counts
        let (dx, dy) = if eta.get(x) { (1, -1) } else { (-1, 1) };
        for &v in field.count_readers.get(x) {
            self.count[v as usize] += dx;
            self.touch(v);
        }
        for &v in field.count_readers.get(y) {
            self.count[v as usize] += dy;
            self.touch(v);
        }
        // bundle values and their averages
        for z in [x, y] {
            for &u in field.f_readers.get(z) {
                let u = u as usize;
                let new = field.f_at(u, eta);
                let delta = new - self.f_val[u];
                if delta != 0.0 {
                    self.f_val[u] = new;
                    for &v in field.avg_readers.get(u) {
                        self.avg_sum[v as usize] += delta;
                        self.touch(v);
                    }
                }
            }
        }
        let mut delta_total = 0.0;
        for k in 0..self.touched.len() {
            let v = self.touched[k] as usize;
            let t = field.term_of(self.avg_sum[v], self.count[v]);
            delta_total += t - self.term[v];
            self.term[v] = t;
        }
        self.total += delta_total;
        self.updates += 1;
        if self.updates >= RESUM_INTERVAL {
            self.resum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::TowerSpec;
    use crate::tower::TowerLimits;

    #[test]
    fn incremental_matches_direct() {
        let spec = TowerSpec::integer_lattice(1, 2).unwrap();
        let g = QuotientGraph::new(&spec, 4, TowerLimits::default()).unwrap();
        let f = VertexBundle::neighbor_product(&spec).unwrap();
        let v = TheoremFunctional::new(f, 2, 3).unwrap();
        let field = CompiledField::new(&v, &g);
        let mut eta = Configuration::parse_bits("1101001110100011").unwrap();
        let mut state = field.state(&eta);
        assert!((state.value() - v.eval(&g, &eta)).abs() < 1e-12);
        for (x, y) in [(0, 1), (5, 6), (15, 0), (9, 10), (3, 2)] {
            if eta.get(x) != eta.get(y) {
                eta.swap_sites(x, y);
                state.apply_swap(&field, &eta, x, y);
                assert!((state.value() - v.eval(&g, &eta)).abs() < 1e-12);
            }
        }
    }
}
