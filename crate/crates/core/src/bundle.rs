//! Γ-invariant local function bundles stored as truth tables.
//!
//! A vertex bundle of radius `r` is a table indexed by occupation patterns on
//! the canonical ball `B(o, r)` (breadth-first order, generator-label
//! tie-break); bit `j` of a pattern is the occupation of site `j`. It is
//! evaluated at a vertex `x` by reading the sites `x · b`, `b ∈ B(o, r)`, so
//! invariance under the left action holds by construction.
//!
//! An edge bundle has one table per generator label `s`, over the window
//! `B(o, r) ∪ s·B(o, r)` listed as the ball followed by the new sites of the
//! translated ball.

use std::collections::HashMap;
use std::fmt;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::group::{Elem, TowerSpec};
use crate::tower::QuotientGraph;

/// Largest number of sites a truth table may range over.
pub const MAX_TABLE_SITES: usize = 22;

fn check_sites(n: usize) -> Result<()> {
    if n > MAX_TABLE_SITES {
        Err(Error::BallTooLarge {
            sites: n,
            cap: MAX_TABLE_SITES,
        })
    } else {
        Ok(())
    }
}

fn tabulate<F: Fn(&dyn Fn(&Elem) -> bool) -> f64>(sites: &[Elem], f: F) -> Vec<f64> {
    let index: HashMap<Elem, usize> = sites.iter().enumerate().map(|(j, z)| (*z, j)).collect();
    (0..1u64 << sites.len())
        .map(|p| {
            let eta = |z: &Elem| -> bool {
                let j = *index
                    .get(z)
                    .unwrap_or_else(|| panic!("bundle reads site {z:?} outside its window"));
                (p >> j) & 1 == 1
            };
            f(&eta)
        })
        .collect()
}

/// `⟨f⟩(ρ)` in Bernstein form: `Σ_k g_k ρ^k (1-ρ)^{n-k}` where `g_k` sums the
/// table over patterns with `k` occupied sites.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalAverage {
    bernstein: Vec<f64>,
}

impl GlobalAverage {
    pub fn from_table(table: &[f64]) -> Self {
        let n = table.len().trailing_zeros() as usize;
        let mut bernstein = vec![0.0; n + 1];
        for (p, v) in table.iter().enumerate() {
            bernstein[p.count_ones() as usize] += v;
        }
        Self { bernstein }
    }

    pub fn degree_bound(&self) -> usize {
        self.bernstein.len() - 1
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let n = self.degree_bound() as i32;
        self.bernstein
            .iter()
            .enumerate()
            .map(|(k, g)| {
                if *g == 0.0 {
                    0.0
                } else {
                    g * rho.powi(k as i32) * (1.0 - rho).powi(n - k as i32)
                }
            })
            .sum()
    }

    /// Coefficients `a_j` of `Σ_j a_j ρ^j`, trailing zeros removed.
    pub fn coefficients(&self) -> Vec<f64> {
        let n = self.degree_bound();
        let mut out = vec![0.0; n + 1];
        for (k, g) in self.bernstein.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            // ρ^k (1-ρ)^{n-k} = Σ_j C(n-k, j) (-1)^j ρ^{k+j}
            let mut binom = 1.0;
            for j in 0..=(n - k) {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                out[k + j] += sign * binom * g;
                binom = binom * (n - k - j) as f64 / (j + 1) as f64;
            }
        }
        while out.len() > 1 && out.last().is_some_and(|c| c.abs() < 1e-12) {
            out.pop();
        }
        out
    }
}

impl fmt::Display for GlobalAverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, a) in self.coefficients().iter().enumerate() {
            if a.abs() < 1e-12 {
                continue;
            }
            if !first {
                f.write_str(if *a < 0.0 { " - " } else { " + " })?;
            } else if *a < 0.0 {
                f.write_str("-")?;
            }
            first = false;
            let mag = a.abs();
            match j {
                0 => write!(f, "{mag}")?,
                1 if mag == 1.0 => f.write_str("rho")?,
                1 => write!(f, "{mag} rho")?,
                _ if mag == 1.0 => write!(f, "rho^{j}")?,
                _ => write!(f, "{mag} rho^{j}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VertexBundle {
    name: String,
    spec: TowerSpec,
    radius: u32,
    sites: Vec<Elem>,
    table: Vec<f64>,
}

impl VertexBundle {
    pub fn from_table(name: &str, spec: &TowerSpec, radius: u32, table: Vec<f64>) -> Result<Self> {
        let sites = spec.ball(radius);
        check_sites(sites.len())?;
        if table.len() != 1 << sites.len() {
            return Err(Error::InvalidArgument(format!(
                "table for radius {radius} needs {} entries, got {}",
                1u64 << sites.len(),
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("table contains non-finite values".into()));
        }
        Ok(Self {
            name: name.to_string(),
            spec: spec.clone(),
            radius,
            sites,
            table,
        })
    }

    /// Tabulate `f`, which reads occupations by group element relative to `o`.
    pub fn from_fn<F>(name: &str, spec: &TowerSpec, radius: u32, f: F) -> Result<Self>
    where
        F: Fn(&dyn Fn(&Elem) -> bool) -> f64,
    {
        let sites = spec.ball(radius);
        check_sites(sites.len())?;
        let table = tabulate(&sites, f);
        Self::from_table(name, spec, radius, table)
    }

    /// `f_x(η) = η_x`.
    pub fn occupancy(spec: &TowerSpec) -> Self {
        Self::from_fn("occupancy", spec, 0, |eta| if eta(&[0, 0, 0]) { 1.0 } else { 0.0 })
            .expect("radius-0 table always fits")
    }

    /// `f_x(η) = Π_{e: oe = x} η_{te}`.
    pub fn neighbor_product(spec: &TowerSpec) -> Result<Self> {
        let gens = spec.generators().to_vec();
        Self::from_fn("neighbor-product", spec, 1, move |eta| {
            if gens.iter().all(eta) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.spec
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// The canonical ball `B(o, r)`.
    pub fn sites(&self) -> &[Elem] {
        &self.sites
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn value(&self, pattern: usize) -> f64 {
        self.table[pattern]
    }

    pub fn max_abs(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The constant `C(f) = 2 max|f|` bounding each term of the theorem functional.
    pub fn c_f(&self) -> f64 {
        2.0 * self.max_abs()
    }

    /// Pattern of the periodic lift of `η` on `B(x̃, r)` for a lift `x̃` of `x`.
    #[inline]
    pub fn pattern_at(&self, graph: &QuotientGraph, x: usize, eta: &Configuration) -> usize {
        let mut p = 0;
        for (j, b) in self.sites.iter().enumerate() {
            if eta.get(graph.right_mul(x, b)) {
                p |= 1 << j;
            }
        }
        p
    }

    /// `f_x(η)` evaluated through the periodic lift.
    pub fn eval(&self, graph: &QuotientGraph, x: usize, eta: &Configuration) -> f64 {
        debug_assert_eq!(graph.spec(), &self.spec);
        self.table[self.pattern_at(graph, x, eta)]
    }

    /// Value on a pattern given for the infinite configuration.
    pub fn eval_lifted(&self, occupied: &dyn Fn(&Elem) -> bool) -> f64 {
        let mut p = 0;
        for (j, b) in self.sites.iter().enumerate() {
            if occupied(b) {
                p |= 1 << j;
            }
        }
        self.table[p]
    }

    /// `⟨f_o⟩(ρ) = E_{ν_ρ}[f_o]`.
    pub fn global_average(&self) -> GlobalAverage {
        GlobalAverage::from_table(&self.table)
    }

    /// The same function, tabulated over a larger ball.
    pub fn with_radius(&self, radius: u32) -> Result<Self> {
        if radius < self.radius {
            return Err(Error::InvalidArgument("cannot shrink a bundle's radius".into()));
        }
        let inner = self.clone();
        Self::from_fn(&self.name, &self.spec, radius, move |eta| inner.eval_lifted(eta))
    }

    /// `α f + β g`, over the larger of the two radii.
    pub fn linear_combination(&self, alpha: f64, other: &VertexBundle, beta: f64) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::InvalidArgument("bundles belong to different groups".into()));
        }
        let r = self.radius.max(other.radius);
        let (f, g) = (self.clone(), other.clone());
        Self::from_fn(
            &format!("{alpha}*{}+{beta}*{}", self.name, other.name),
            &self.spec,
            r,
            move |eta| alpha * f.eval_lifted(eta) + beta * g.eval_lifted(eta),
        )
    }
}

#[derive(Clone, Debug)]
pub struct EdgeBundle {
    name: String,
    spec: TowerSpec,
    radius: u32,
    windows: Vec<Vec<Elem>>,
    terminus_pos: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

fn edge_window(spec: &TowerSpec, radius: u32, s: usize) -> Vec<Elem> {
    let ball = spec.ball(radius);
    let g = spec.generators()[s];
    let mut window = ball.clone();
    for b in &ball {
        let y = spec.mul(&g, b);
        if !window.contains(&y) {
            window.push(y);
        }
    }
    window
}

impl EdgeBundle {
    /// Tabulate `f(s, η)` for the edge `(o, s)`, reading occupations by group
    /// element relative to `o`.
    pub fn from_fn<F>(name: &str, spec: &TowerSpec, radius: u32, f: F) -> Result<Self>
    where
        F: Fn(usize, &dyn Fn(&Elem) -> bool) -> f64,
    {
        let windows: Vec<Vec<Elem>> = (0..spec.degree()).map(|s| edge_window(spec, radius, s)).collect();
        let mut tables = Vec::with_capacity(windows.len());
        for (s, w) in windows.iter().enumerate() {
            check_sites(w.len())?;
            tables.push(tabulate(w, |eta| f(s, eta)));
        }
        Self::from_tables(name, spec, radius, tables)
    }

    /// One table per generator label, each over that label's window.
    pub fn from_tables(name: &str, spec: &TowerSpec, radius: u32, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != spec.degree() {
            return Err(Error::InvalidArgument(format!(
                "expected {} tables, one per generator, got {}",
                spec.degree(),
                tables.len()
            )));
        }
        let windows: Vec<Vec<Elem>> = (0..spec.degree()).map(|s| edge_window(spec, radius, s)).collect();
        let mut terminus_pos = Vec::with_capacity(windows.len());
        for (s, (w, t)) in windows.iter().zip(&tables).enumerate() {
            check_sites(w.len())?;
            if t.len() != 1 << w.len() {
                return Err(Error::InvalidArgument(format!(
                    "table for generator {s} needs {} entries, got {}",
                    1u64 << w.len(),
                    t.len()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("table contains non-finite values".into()));
            }
            let g = spec.generators()[s];
            terminus_pos.push(w.iter().position(|z| *z == g).expect("terminus lies in its window"));
        }
        Ok(Self {
            name: name.to_string(),
            spec: spec.clone(),
            radius,
            windows,
            terminus_pos,
            tables,
        })
    }

    /// `f_e(η) = η_{oe} + η_{te}`.
    pub fn edge_sum(spec: &TowerSpec) -> Self {
        let gens = spec.generators().to_vec();
        Self::from_fn("edge-sum", spec, 0, move |s, eta| {
            eta(&[0, 0, 0]) as u8 as f64 + eta(&gens[s]) as u8 as f64
        })
        .expect("radius-0 tables always fit")
    }

    /// `f_e(η) = Π_{e' ∈ E_{oe}} η_{te'} + Π_{e' ∈ E_{te}} η_{te'} + c`.
    pub fn product_plus_c(spec: &TowerSpec, c: f64) -> Result<Self> {
        let gens = spec.generators().to_vec();
        let sp = spec.clone();
        Self::from_fn("edge-product-plus-c", spec, 1, move |s, eta| {
            let at_origin = gens.iter().all(eta);
            let at_terminus = gens.iter().all(|t| eta(&sp.mul(&gens[s], t)));
            at_origin as u8 as f64 + at_terminus as u8 as f64 + c
        })
    }

    /// `c(e, η) ≡ c`.
    pub fn constant(spec: &TowerSpec, c: f64) -> Self {
        Self::from_fn("constant", spec, 0, move |_, _| c).expect("radius-0 tables always fit")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &TowerSpec {
        &self.spec
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn window(&self, s: usize) -> &[Elem] {
        &self.windows[s]
    }

    pub fn table(&self, s: usize) -> &[f64] {
        &self.tables[s]
    }

    #[inline]
    pub fn value(&self, s: usize, pattern: usize) -> f64 {
        self.tables[s][pattern]
    }

    pub fn min_value(&self) -> f64 {
        self.tables.iter().flatten().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max_value(&self) -> f64 {
        self.tables.iter().flatten().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    #[inline]
    pub fn pattern_at(&self, graph: &QuotientGraph, e: usize, eta: &Configuration) -> usize {
        let edge = graph.edge(e);
        let mut p = 0;
        for (j, w) in self.windows[edge.label].iter().enumerate() {
            if eta.get(graph.right_mul(edge.origin, w)) {
                p |= 1 << j;
            }
        }
        p
    }

    /// `f_e(η)` evaluated through the periodic lift.
    pub fn eval(&self, graph: &QuotientGraph, e: usize, eta: &Configuration) -> f64 {
        debug_assert_eq!(graph.spec(), &self.spec);
        self.tables[graph.edge(e).label][self.pattern_at(graph, e, eta)]
    }

    /// Pattern of `η^e` given the pattern of `η` on the window of `e`.
    pub fn swap_pattern(&self, s: usize, p: usize) -> usize {
        let t = self.terminus_pos[s];
        let (a, b) = (p & 1, (p >> t) & 1);
        if a == b {
            p
        } else {
            p ^ 1 ^ (1 << t)
        }
    }

    /// Label and pattern of the reversed edge `ē = (xs, x, s^{-1})` seen from
    /// its own window, which is the same set of sites as the window of `e`.
    pub fn reverse_pattern(&self, s: usize, p: usize) -> (usize, usize) {
        let si = self.spec.inverse_label(s);
        let g = self.spec.generators()[s];
        let mut q = 0;
        for (j, w) in self.windows[si].iter().enumerate() {
            let y = self.spec.mul(&g, w);
            let k = self.windows[s].iter().position(|z| *z == y).expect("reversed window matches");
            if (p >> k) & 1 == 1 {
                q |= 1 << j;
            }
        }
        (si, q)
    }

    /// Largest violation of `c(e, η) = c(e, η^e)` and `c(e, η) = c(ē, η)` over
    /// every table entry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.tables.len() {
            for p in 0..self.tables[s].len() {
                let v = self.tables[s][p];
                worst = worst.max((v - self.tables[s][self.swap_pattern(s, p)]).abs());
                let (si, q) = self.reverse_pattern(s, p);
                worst = worst.max((v - self.tables[si][q]).abs());
            }
        }
        worst
    }

    /// Average over the swap `η ↦ η^e` and the reversal `e ↦ ē`, which always
    /// yields a bundle satisfying both symmetry conditions.
    pub fn symmetrized(&self, name: &str) -> Self {
        let mut tables = self.tables.clone();
        for (s, table) in tables.iter_mut().enumerate() {
            for (p, slot) in table.iter_mut().enumerate() {
                let sw = self.swap_pattern(s, p);
                let (si, q) = self.reverse_pattern(s, p);
                let (_, q_sw) = self.reverse_pattern(s, sw);
                *slot = 0.25 * (self.tables[s][p] + self.tables[s][sw] + self.tables[si][q] + self.tables[si][q_sw]);
            }
        }
        Self {
            name: name.to_string(),
            tables,
            ..self.clone()
        }
    }

    /// `E_{ν_ρ}[f_e]` for each generator label.
    pub fn global_average(&self, s: usize) -> GlobalAverage {
        GlobalAverage::from_table(&self.tables[s])
    }
}

/// A symmetric, non-degenerate edge bundle.
#[derive(Clone, Debug)]
pub struct JumpRate {
    bundle: EdgeBundle,
    c0: f64,
}

impl JumpRate {
    /// Validate both symmetry conditions and non-degeneracy exhaustively.
    pub fn new(bundle: EdgeBundle) -> Result<Self> {
        let c0 = bundle.min_value();
        if c0 <= 0.0 {
            return Err(Error::InvalidJumpRate(format!(
                "{}: minimum value {c0} is not positive",
                bundle.name()
            )));
        }
        let defect = bundle.symmetry_defect();
        if defect > 1e-12 * bundle.max_value().max(1.0) {
            return Err(Error::InvalidJumpRate(format!(
                "{}: not symmetric under swap or reversal (defect {defect:e})",
                bundle.name()
            )));
        }
        Ok(Self { bundle, c0 })
    }

    pub fn constant(spec: &TowerSpec, c: f64) -> Result<Self> {
        Self::new(EdgeBundle::constant(spec, c))
    }

    /// Check that the rate stays symmetric once projected onto `graph`.
    ///
    /// Symmetry on the Cayley graph carries over when every edge window maps
    /// injectively into the quotient. On small quotients a window can wrap
    /// onto itself (an endpoint of `e` is also a neighbour read by the rate),
    /// and then both symmetries are checked by enumerating the window.
    pub fn check_on(&self, graph: &QuotientGraph) -> Result<()> {
        let n = graph.num_vertices();
        for e in 0..graph.num_edges() {
            let edge = graph.edge(e);
            let window = self.bundle.window(edge.label);
            let mut sites: Vec<usize> = window.iter().map(|w| graph.right_mul(edge.origin, w)).collect();
            sites.sort_unstable();
            sites.dedup();
            if sites.len() == window.len() {
                continue;
            }
            let reverse = graph.reverse(e);
            for mask in 0usize..1 << sites.len() {
                let mut eta = Configuration::empty(n);
                for (k, &z) in sites.iter().enumerate() {
                    eta.set(z, (mask >> k) & 1 == 1);
                }
                let c = self.eval(graph, e, &eta);
                let swapped = self.eval(graph, e, &eta.swap(graph, e));
                let reversed = self.eval(graph, reverse, &eta);
                if (c - swapped).abs() > 1e-12 * c.max(1.0) || (c - reversed).abs() > 1e-12 * c.max(1.0) {
                    return Err(Error::InvalidJumpRate(format!(
                        "{}: not symmetric on the level {} quotient ({n} sites), where the window of edge {e} wraps onto itself",
                        self.name(),
                        graph.level()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn bundle(&self) -> &EdgeBundle {
        &self.bundle
    }

    /// The non-degeneracy constant `c_0 = min c`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn name(&self) -> &str {
        self.bundle.name()
    }

    #[inline]
    pub fn eval(&self, graph: &QuotientGraph, e: usize, eta: &Configuration) -> f64 {
        self.bundle.eval(graph, e, eta)
    }
}

pub const VERTEX_BUNDLE_NAMES: &[&str] = &["occupancy", "neighbor-product"];
pub const EDGE_BUNDLE_NAMES: &[&str] = &["edge-sum", "edge-product-plus-c", "symmetrized-product-plus-c", "constant"];

/// A vertex bundle from the built-in catalog.
pub fn builtin_vertex_bundle(name: &str, spec: &TowerSpec) -> Result<VertexBundle> {
    match name {
        "occupancy" => Ok(VertexBundle::occupancy(spec)),
        "neighbor-product" => VertexBundle::neighbor_product(spec),
        other => Err(Error::InvalidArgument(format!("unknown vertex bundle {other:?}"))),
    }
}

/// An edge bundle from the built-in catalog; `c` parametrises the
/// product-plus-c family and the constant rate.
pub fn builtin_edge_bundle(name: &str, spec: &TowerSpec, c: f64) -> Result<EdgeBundle> {
    match name {
        "edge-sum" => Ok(EdgeBundle::edge_sum(spec)),
        "edge-product-plus-c" => EdgeBundle::product_plus_c(spec, c),
        "symmetrized-product-plus-c" => {
            Ok(EdgeBundle::product_plus_c(spec, c)?.symmetrized("symmetrized-product-plus-c"))
        }
        "constant" => Ok(EdgeBundle::constant(spec, c)),
        other => Err(Error::InvalidArgument(format!("unknown edge bundle {other:?}"))),
    }
}

/// A bundle read from the text format.
#[derive(Clone, Debug)]
pub enum BundleFile {
    Vertex(VertexBundle),
    Edge(EdgeBundle),
}

/// Parse the text format:
///
/// ```text
/// # comments and blank lines are ignored
/// kind = vertex          # or edge
/// name = my-bundle
/// radius = 1
/// default = 0            # optional value for unlisted patterns
/// 011 1.5                # vertex: pattern value
/// 0 0110 2.0             # edge: generator-label pattern value
/// ```
///
/// Pattern strings list site occupations in canonical order, site 0 first.
pub fn parse_bundle(text: &str, spec: &TowerSpec) -> Result<BundleFile> {
    let mut kind = None;
    let mut name = String::from("custom");
    let mut radius = None;
    let mut default = None;
    let mut entries: Vec<(Option<usize>, String, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "kind" => kind = Some(value.to_string()),
                "name" => name = value.to_string(),
                "radius" => radius = Some(value.parse::<u32>().map_err(|e| err(format!("radius: {e}")))?),
                "default" => default = Some(value.parse::<f64>().map_err(|e| err(format!("default: {e}")))?),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_val = |s: &str| s.parse::<f64>().map_err(|e| err(format!("value: {e}")));
        match fields.as_slice() {
            [pattern, value] => entries.push((None, pattern.to_string(), parse_val(value)?)),
            [label, pattern, value] => {
                let s = label.parse::<usize>().map_err(|e| err(format!("generator label: {e}")))?;
                entries.push((Some(s), pattern.to_string(), parse_val(value)?))
            }
            _ => return Err(err("expected `pattern value` or `label pattern value`".into())),
        }
    }
    let radius = radius.ok_or_else(|| Error::Parse("missing `radius`".into()))?;
    let pattern_index = |p: &str, width: usize| -> Result<usize> {
        if p.len() != width {
            return Err(Error::Parse(format!("pattern {p:?} should have {width} sites")));
        }
        let mut idx = 0;
        for (j, ch) in p.chars().enumerate() {
            match ch {
                '1' => idx |= 1 << j,
                '0' => {}
                _ => return Err(Error::Parse(format!("bad character in pattern {p:?}"))),
            }
        }
        Ok(idx)
    };
    let fill = |width: usize, listed: Vec<(usize, f64)>| -> Result<Vec<f64>> {
        check_sites(width)?;
        let mut table = vec![f64::NAN; 1 << width];
        for (idx, v) in listed {
            table[idx] = v;
        }
        for v in table.iter_mut() {
            if v.is_nan() {
                *v = default.ok_or_else(|| Error::Parse("patterns missing and no `default` given".into()))?;
            }
        }
        Ok(table)
    };
    match kind.as_deref() {
        Some("vertex") => {
            let width = spec.ball(radius).len();
            let mut listed = Vec::new();
            for (label, p, v) in entries {
                if label.is_some() {
                    return Err(Error::Parse("vertex bundles take `pattern value` lines".into()));
                }
                listed.push((pattern_index(&p, width)?, v));
            }
            Ok(BundleFile::Vertex(VertexBundle::from_table(&name, spec, radius, fill(width, listed)?)?))
        }
        Some("edge") => {
            let mut per_label: Vec<Vec<(usize, f64)>> = vec![Vec::new(); spec.degree()];
            let widths: Vec<usize> = (0..spec.degree()).map(|s| edge_window(spec, radius, s).len()).collect();
            for (label, p, v) in entries {
                let s = label.ok_or_else(|| Error::Parse("edge bundles take `label pattern value` lines".into()))?;
                if s >= spec.degree() {
                    return Err(Error::Parse(format!("generator label {s} out of range")));
                }
                per_label[s].push((pattern_index(&p, widths[s])?, v));
            }
            let tables = per_label
                .into_iter()
                .zip(&widths)
                .map(|(listed, w)| fill(*w, listed))
                .collect::<Result<Vec<_>>>()?;
            Ok(BundleFile::Edge(EdgeBundle::from_tables(&name, spec, radius, tables)?))
        }
        Some(other) => Err(Error::Parse(format!("unknown kind {other:?}"))),
        None => Err(Error::Parse("missing `kind`".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        let z = TowerSpec::integer_lattice(1, 2).unwrap();
        let occ = VertexBundle::occupancy(&z);
        assert_eq!(occ.table(), &[0.0, 1.0]);
        let np = VertexBundle::neighbor_product(&z).unwrap();
        assert_eq!(np.value(0b111), 1.0);
        assert_eq!(np.value(0b110), 1.0);
        assert_eq!(np.value(0b011), 0.0);
        let iv = EdgeBundle::product_plus_c(&z, 0.5).unwrap();
        assert_eq!(iv.value(0, 0), 0.5);
    }

    #[test]
    fn literal_product_plus_c_is_not_swap_invariant() {
        let z = TowerSpec::integer_lattice(1, 2).unwrap();
        let iv = EdgeBundle::product_plus_c(&z, 1.0).unwrap();
        assert!(JumpRate::new(iv.clone()).is_err());
        let sym = iv.symmetrized("sym");
        assert!(sym.symmetry_defect() < 1e-15);
        assert!(JumpRate::new(sym).is_ok());
    }

    #[test]
    fn polynomial_display() {
        let z = TowerSpec::integer_lattice(1, 2).unwrap();
        let np = VertexBundle::neighbor_product(&z).unwrap();
        assert_eq!(np.global_average().to_string(), "rho^2");
        assert_eq!(VertexBundle::occupancy(&z).global_average().to_string(), "rho");
    }

    #[test]
    fn parse_text_bundle() {
        let z = TowerSpec::integer_lattice(1, 2).unwrap();
        let text = "kind = vertex\nname = left\nradius = 1\ndefault = 0\n# occupied left neighbour\n001 1\n011 1\n101 1\n111 1\n";
        let BundleFile::Vertex(b) = parse_bundle(text, &z).unwrap() else {
            panic!("expected vertex bundle")
        };
        assert_eq!(b.global_average().to_string(), "rho");
        let edge = "kind = edge\nradius = 0\n0 00 1\n0 01 1\n0 10 1\n0 11 1\n1 00 1\n1 01 1\n1 10 1\n1 11 1\n";
        let BundleFile::Edge(e) = parse_bundle(edge, &z).unwrap() else {
            panic!("expected edge bundle")
        };
        assert!(JumpRate::new(e).is_ok());
        assert!(parse_bundle("kind = vertex\nradius = 0\n1 1\n", &z).is_err());
    }
}
