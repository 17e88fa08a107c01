//! Finite quotient graphs `X_m = Γ_m \ X` of a Cayley graph and the tower of
//! coverings they form.
//!
//! Vertices are indexed by their fundamental-domain coordinates: a vertex is
//! a vector of residues modulo `k^m`, encoded in mixed radix with the first
//! coordinate least significant. The covering `X_{m+1} -> X_m` is therefore a
//! coordinate reduction.

use std::collections::HashSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::group::{Elem, TowerSpec, IDENTITY};

/// Resource limits applied when building quotients.
#[derive(Clone, Copy, Debug)]
pub struct TowerLimits {
    pub max_vertices: usize,
}

impl Default for TowerLimits {
    fn default() -> Self {
        Self {
            max_vertices: 1 << 20,
        }
    }
}

/// An oriented edge `(x, xs)` with generator label `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub origin: usize,
    pub terminus: usize,
    pub label: usize,
}

/// The quotient graph at one level of the tower.
///
/// Oriented edges are indexed `v * degree + s`. Loops and multiple edges occur
/// on small quotients and are kept: every vertex has out-degree `|S|`.
#[derive(Clone, Debug)]
pub struct QuotientGraph {
    spec: TowerSpec,
    level: u32,
    modulus: i64,
    coords: usize,
    num_vertices: usize,
    neighbors: Vec<u32>,
    origin_dist: Vec<u32>,
    diameter: u32,
}

impl QuotientGraph {
    pub fn new(spec: &TowerSpec, level: u32, limits: TowerLimits) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidArgument("tower levels start at 1".into()));
        }
        let family = spec.family();
        let coords = family.coords();
        let base = family.base() as u128;
        let modulus = base
            .checked_pow(level)
            .filter(|m| *m <= i64::MAX as u128)
            .ok_or(Error::QuotientTooLarge {
                level,
                vertices: u128::MAX,
                cap: limits.max_vertices,
            })?;
        let vertices = modulus.checked_pow(coords as u32).unwrap_or(u128::MAX);
        if vertices > limits.max_vertices as u128 {
            return Err(Error::QuotientTooLarge {
                level,
                vertices,
                cap: limits.max_vertices,
            });
        }
        let num_vertices = vertices as usize;
        let mut graph = Self {
            spec: spec.clone(),
            level,
            modulus: modulus as i64,
            coords,
            num_vertices,
            neighbors: Vec::new(),
            origin_dist: Vec::new(),
            diameter: 0,
        };
        let degree = spec.degree();
        let mut neighbors = Vec::with_capacity(num_vertices * degree);
        for v in 0..num_vertices {
            let x = graph.coords_of(v);
            for s in spec.generators() {
                neighbors.push(graph.vertex_of(&spec.mul(&x, s)) as u32);
            }
        }
        graph.neighbors = neighbors;
        graph.origin_dist = graph.bfs_distances(0);
        if graph.origin_dist.contains(&u32::MAX) {
            return Err(Error::InvalidGenerators(format!(
                "generators do not connect the level-{level} quotient"
            )));
        }
        graph.diameter = graph.origin_dist.iter().copied().max().unwrap_or(0);
        Ok(graph)
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.spec
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// The congruence modulus `k^m`.
    pub fn modulus(&self) -> i64 {
        self.modulus
    }

    /// `|V_m| = [Γ : Γ_m]`.
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn degree(&self) -> usize {
        self.spec.degree()
    }

    pub fn num_edges(&self) -> usize {
        self.num_vertices * self.degree()
    }

    /// The distinguished vertex `o`, image of the identity.
    pub fn origin(&self) -> usize {
        0
    }

    pub fn diameter(&self) -> u32 {
        self.diameter
    }

    /// Fundamental-domain coordinates of a vertex.
    #[inline]
    pub fn coords_of(&self, v: usize) -> Elem {
        let n = self.modulus as usize;
        let mut out = IDENTITY;
        let mut rest = v;
        for c in out.iter_mut().take(self.coords) {
            *c = (rest % n) as i64;
            rest /= n;
        }
        out
    }

    /// Covering map `π_m : V -> V_m`.
    #[inline]
    pub fn vertex_of(&self, x: &Elem) -> usize {
        let r = self.spec.family().reduce(x, self.modulus);
        let n = self.modulus as usize;
        let mut idx = 0usize;
        for j in (0..self.coords).rev() {
            idx = idx * n + r[j] as usize;
        }
        idx
    }

    /// Group product in `Γ/Γ_m`.
    #[inline]
    pub fn mul(&self, u: usize, v: usize) -> usize {
        self.vertex_of(&self.spec.mul(&self.coords_of(u), &self.coords_of(v)))
    }

    #[inline]
    pub fn inv(&self, v: usize) -> usize {
        self.vertex_of(&self.spec.inv(&self.coords_of(v)))
    }

    /// `v · g`, translating the vertex by a group element on the right.
    #[inline]
    pub fn right_mul(&self, v: usize, g: &Elem) -> usize {
        self.vertex_of(&self.spec.mul(&self.coords_of(v), g))
    }

    /// `g · v`, the action of `Γ` (through `Γ/Γ_m`) on vertices.
    #[inline]
    pub fn left_mul(&self, g: &Elem, v: usize) -> usize {
        self.vertex_of(&self.spec.mul(g, &self.coords_of(v)))
    }

    #[inline]
    pub fn neighbor(&self, v: usize, s: usize) -> usize {
        self.neighbors[v * self.degree() + s] as usize
    }

    #[inline]
    pub fn edge_id(&self, v: usize, s: usize) -> usize {
        v * self.degree() + s
    }

    #[inline]
    pub fn edge(&self, e: usize) -> Edge {
        let d = self.degree();
        Edge {
            origin: e / d,
            terminus: self.neighbors[e] as usize,
            label: e % d,
        }
    }

    /// Index of the reversed edge `ē = (xs, x, s^{-1})`.
    #[inline]
    pub fn reverse(&self, e: usize) -> usize {
        let d = self.degree();
        let t = self.neighbors[e] as usize;
        t * d + self.spec.inverse_label(e % d)
    }

    /// Edges of the fundamental domain `E^0 = {e : oe = o}`.
    pub fn fundamental_edges(&self) -> std::ops::Range<usize> {
        0..self.degree()
    }

    pub fn distance_from_origin(&self, v: usize) -> u32 {
        self.origin_dist[v]
    }

    /// Graph distance, using vertex transitivity: `d(x, y) = d(o, x^{-1} y)`.
    pub fn distance(&self, x: usize, y: usize) -> u32 {
        self.origin_dist[self.mul(self.inv(x), y)]
    }

    fn bfs_distances(&self, from: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_vertices];
        let mut queue = std::collections::VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        let d = self.degree();
        while let Some(x) = queue.pop_front() {
            for s in 0..d {
                let y = self.neighbors[x * d + s] as usize;
                if dist[y] == u32::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Ball `B(x, r)` in breadth-first order.
    pub fn ball(&self, x: usize, r: u32) -> Vec<usize> {
        let mut seen = HashSet::new();
        let mut order = vec![x];
        let mut dist = vec![0u32];
        seen.insert(x);
        let d = self.degree();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            let dv = dist[head];
            head += 1;
            if dv == r {
                continue;
            }
            for s in 0..d {
                let y = self.neighbors[v * d + s] as usize;
                if seen.insert(y) {
                    order.push(y);
                    dist.push(dv + 1);
                }
            }
        }
        order
    }

    /// Largest `r` such that the covering `X -> X_m` is injective on every
    /// ball of radius `r`. By transitivity only the ball at `o` is examined.
    pub fn injectivity_radius(&self) -> u32 {
        let mut r = 0;
        loop {
            let ball = self.spec.ball(r + 1);
            let mut image = HashSet::with_capacity(ball.len());
            if !ball.iter().all(|x| image.insert(self.vertex_of(x))) {
                return r;
            }
            r += 1;
        }
    }

    /// The covering map `X_self -> X_lower` on vertices, validated to be a
    /// surjective, label-preserving graph morphism.
    pub fn covering_map_to(&self, lower: &QuotientGraph) -> Result<Vec<usize>> {
        let mismatch = |reason: String| Error::CoveringMismatch {
            upper: self.level,
            lower: lower.level,
            reason,
        };
        if self.spec != lower.spec || lower.level > self.level {
            return Err(mismatch("graphs do not belong to one tower".into()));
        }
        let map: Vec<usize> = (0..self.num_vertices)
            .map(|v| lower.vertex_of(&self.coords_of(v)))
            .collect();
        let d = self.degree();
        for v in 0..self.num_vertices {
            for s in 0..d {
                if map[self.neighbor(v, s)] != lower.neighbor(map[v], s) {
                    return Err(mismatch(format!("edge ({v}, {s}) is not mapped to an edge")));
                }
            }
        }
        let mut hit = vec![false; lower.num_vertices];
        for &w in &map {
            hit[w] = true;
        }
        if hit.iter().any(|h| !h) {
            return Err(mismatch("map is not surjective".into()));
        }
        Ok(map)
    }

    /// One `origin terminus generator` triple per oriented edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in 0..self.num_edges() {
            let edge = self.edge(e);
            writeln!(out, "{} {} {}", edge.origin, edge.terminus, edge.label)?;
        }
        Ok(())
    }
}

/// Levels `1..=depth` of the tower, with each covering `X_{m+1} -> X_m` checked.
pub fn build_tower(spec: &TowerSpec, depth: u32, limits: TowerLimits) -> Result<Vec<QuotientGraph>> {
    if depth == 0 {
        return Err(Error::InvalidArgument("tower depth must be at least 1".into()));
    }
    let mut levels: Vec<QuotientGraph> = Vec::with_capacity(depth as usize);
    for m in 1..=depth {
        let graph = QuotientGraph::new(spec, m, limits)?;
        if let Some(prev) = levels.last() {
            graph.covering_map_to(prev)?;
        }
        levels.push(graph);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(m: u32) -> QuotientGraph {
        QuotientGraph::new(&TowerSpec::integer_lattice(1, 2).unwrap(), m, TowerLimits::default()).unwrap()
    }

    #[test]
    fn edges_and_reversal() {
        let g = cycle(3);
        assert_eq!(g.num_vertices(), 8);
        assert_eq!(g.num_edges(), 16);
        for e in 0..g.num_edges() {
            let r = g.reverse(e);
            assert_eq!(g.reverse(r), e);
            let (a, b) = (g.edge(e), g.edge(r));
            assert_eq!((a.origin, a.terminus), (b.terminus, b.origin));
        }
        assert_eq!(g.edge(g.edge_id(7, 0)).terminus, 0);
    }

    #[test]
    fn cycle_of_two_has_multi_edges() {
        let g = cycle(1);
        assert_eq!(g.neighbor(0, 0), 1);
        assert_eq!(g.neighbor(0, 1), 1);
        assert_eq!(g.diameter(), 1);
        assert_eq!(g.injectivity_radius(), 0);
    }

    #[test]
    fn distances_on_torus() {
        let g = QuotientGraph::new(&TowerSpec::integer_lattice(2, 2).unwrap(), 2, TowerLimits::default()).unwrap();
        assert_eq!(g.diameter(), 4);
        let x = g.vertex_of(&[1, 3, 0]);
        let y = g.vertex_of(&[3, 0, 0]);
        assert_eq!(g.distance(x, y), 3);
    }

    #[test]
    fn size_cap_is_enforced() {
        let spec = TowerSpec::integer_lattice(2, 2).unwrap();
        let err = QuotientGraph::new(&spec, 6, TowerLimits { max_vertices: 1000 }).unwrap_err();
        assert!(matches!(err, Error::QuotientTooLarge { .. }));
    }

    #[test]
    fn edge_list_export() {
        let mut buf = Vec::new();
        cycle(1).write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1 0\n0 1 1\n1 0 0\n1 0 1\n");
    }
}
