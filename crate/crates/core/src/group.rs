//! Finitely generated groups with explicit congruence towers.
//!
//! Two families are supported: the integer lattice `Z^d` (`1 <= d <= 3`) with
//! the subgroups `(k^m Z)^d`, and the discrete Heisenberg group with the
//! congruence subgroups `H(k^m Z)`. Elements are stored as three integer
//! coordinates; lattice elements leave the unused coordinates at zero.
//!
//! Heisenberg elements `(a, b, c)` stand for the unipotent matrix
//! `[[1, a, c], [0, 1, b], [0, 0, 1]]`, so that
//! `(a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b')`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A group element in coordinates.
pub type Elem = [i64; 3];

pub const IDENTITY: Elem = [0, 0, 0];

/// Upper bound on the number of elements a breadth-first search in the
/// infinite Cayley graph may visit.
pub const MAX_BFS_ELEMENTS: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GroupFamily {
    IntegerLattice { dim: usize, base: u64 },
    Heisenberg { base: u64 },
}

impl GroupFamily {
    pub fn base(&self) -> u64 {
        match *self {
            GroupFamily::IntegerLattice { base, .. } | GroupFamily::Heisenberg { base } => base,
        }
    }

    /// Number of meaningful coordinates.
    pub fn coords(&self) -> usize {
        match *self {
            GroupFamily::IntegerLattice { dim, .. } => dim,
            GroupFamily::Heisenberg { .. } => 3,
        }
    }

    pub fn is_abelian(&self) -> bool {
        matches!(self, GroupFamily::IntegerLattice { .. })
    }

    #[inline]
    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match self {
            GroupFamily::IntegerLattice { .. } => [a[0] + b[0], a[1] + b[1], a[2] + b[2]],
            GroupFamily::Heisenberg { .. } => [a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]],
        }
    }

    #[inline]
    pub fn inv(&self, a: &Elem) -> Elem {
        match self {
            GroupFamily::IntegerLattice { .. } => [-a[0], -a[1], -a[2]],
            GroupFamily::Heisenberg { .. } => [-a[0], -a[1], -a[2] + a[0] * a[1]],
        }
    }

    /// Image of `a` in `Γ/Γ_m` where `Γ_m` is the congruence subgroup of
    /// modulus `modulus`, as canonical residues in `[0, modulus)`.
    #[inline]
    pub fn reduce(&self, a: &Elem, modulus: i64) -> Elem {
        let n = self.coords();
        let mut out = IDENTITY;
        for j in 0..n {
            out[j] = a[j].rem_euclid(modulus);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GroupFamily::IntegerLattice { dim, base } => {
                if !(1..=3).contains(&dim) {
                    return Err(Error::UnsupportedFamily(format!(
                        "integer lattice of dimension {dim} (supported: 1 to 3)"
                    )));
                }
                if base < 2 {
                    return Err(Error::UnsupportedFamily(format!("congruence base {base} < 2")));
                }
            }
            GroupFamily::Heisenberg { base } => {
                if base < 2 {
                    return Err(Error::UnsupportedFamily(format!("congruence base {base} < 2")));
                }
            }
        }
        Ok(())
    }

    fn default_generators(&self) -> Vec<Elem> {
        // x and y generate the Heisenberg group; z = [x, y] is not needed
        let axes = match *self {
            GroupFamily::IntegerLattice { dim, .. } => dim,
            GroupFamily::Heisenberg { .. } => 2,
        };
        let mut gens = Vec::new();
        for j in 0..axes {
            let mut plus = IDENTITY;
            plus[j] = 1;
            let mut minus = IDENTITY;
            minus[j] = -1;
            gens.push(plus);
            gens.push(minus);
        }
        gens
    }
}

/// A group family together with its symmetric generating set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSpec {
    family: GroupFamily,
    generators: Vec<Elem>,
    inverse_label: Vec<usize>,
}

impl TowerSpec {
    /// Family with its standard generators: `±e_j` for lattices, `x^{±1}, y^{±1}`
    /// for the Heisenberg group.
    pub fn new(family: GroupFamily) -> Result<Self> {
        family.validate()?;
        let gens = family.default_generators();
        Self::with_generators(family, gens)
    }

    pub fn integer_lattice(dim: usize, base: u64) -> Result<Self> {
        Self::new(GroupFamily::IntegerLattice { dim, base })
    }

    pub fn heisenberg(base: u64) -> Result<Self> {
        Self::new(GroupFamily::Heisenberg { base })
    }

    /// Custom generating set. It must be symmetric, free of duplicates and must
    /// not contain the identity. Generation of the whole group is not checked.
    pub fn with_generators(family: GroupFamily, generators: Vec<Elem>) -> Result<Self> {
        family.validate()?;
        if generators.is_empty() {
            return Err(Error::InvalidGenerators("empty generating set".into()));
        }
        let n = family.coords();
        for g in &generators {
            if g[n..].iter().any(|&c| c != 0) {
                return Err(Error::InvalidGenerators(format!(
                    "{g:?} has coordinates beyond the group dimension"
                )));
            }
            if *g == IDENTITY {
                return Err(Error::InvalidGenerators("identity in generating set".into()));
            }
        }
        let mut inverse_label = Vec::with_capacity(generators.len());
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(Error::InvalidGenerators(format!("duplicate generator {g:?}")));
            }
            let gi = family.inv(g);
            match generators.iter().position(|h| *h == gi) {
                Some(j) => inverse_label.push(j),
                None => {
                    return Err(Error::InvalidGenerators(format!(
                        "inverse of {g:?} missing, the set is not symmetric"
                    )))
                }
            }
        }
        Ok(Self {
            family,
            generators,
            inverse_label,
        })
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn generators(&self) -> &[Elem] {
        &self.generators
    }

    pub fn degree(&self) -> usize {
        self.generators.len()
    }

    /// Label of `s^{-1}` for the generator with label `s`.
    pub fn inverse_label(&self, s: usize) -> usize {
        self.inverse_label[s]
    }

    #[inline]
    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.family.mul(a, b)
    }

    #[inline]
    pub fn inv(&self, a: &Elem) -> Elem {
        self.family.inv(a)
    }

    /// Ball `B(o, r)` in the Cayley graph, in canonical order: breadth-first
    /// from the identity, expanding neighbours in generator-label order.
    pub fn ball(&self, r: u32) -> Vec<Elem> {
        let mut order = vec![IDENTITY];
        let mut dist: HashMap<Elem, u32> = HashMap::new();
        dist.insert(IDENTITY, 0);
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            let d = dist[&x];
            if d == r {
                continue;
            }
            for s in &self.generators {
                let y = self.mul(&x, s);
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                    e.insert(d + 1);
                    order.push(y);
                }
            }
        }
        order
    }

    /// Word norms of every element of `targets`, found by breadth-first search.
    /// Returns `None` if the search exceeds [`MAX_BFS_ELEMENTS`].
    pub fn word_norms(&self, targets: &[Elem]) -> Option<Vec<u32>> {
        let mut remaining: HashMap<Elem, Vec<usize>> = HashMap::new();
        for (i, t) in targets.iter().enumerate() {
            remaining.entry(*t).or_default().push(i);
        }
        let mut out = vec![0u32; targets.len()];
        let mut dist: HashMap<Elem, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(IDENTITY, 0);
        queue.push_back(IDENTITY);
        while let Some(x) = queue.pop_front() {
            let d = dist[&x];
            if let Some(idx) = remaining.remove(&x) {
                for i in idx {
                    out[i] = d;
                }
                if remaining.is_empty() {
                    return Some(out);
                }
            }
            for s in &self.generators {
                let y = self.mul(&x, s);
                if !dist.contains_key(&y) {
                    if dist.len() >= MAX_BFS_ELEMENTS {
                        return None;
                    }
                    dist.insert(y, d + 1);
                    queue.push_back(y);
                }
            }
        }
        if remaining.is_empty() {
            Some(out)
        } else {
            None
        }
    }

    /// Word norm `|x|` for a single element.
    pub fn word_norm(&self, x: &Elem) -> Option<u32> {
        self.word_norms(std::slice::from_ref(x)).map(|v| v[0])
    }
}
