//! Følner sets and the index `b(K)`.
//!
//! Lattices use the boxes `[-i, i]^d`. For the Heisenberg group the box
//! `{|a| <= i, |b| <= i, |c| <= i^2}` is used; the quadratic range in the
//! central coordinate matches the volume growth and makes the boundary ratio
//! decay like `1/i`.

use std::collections::HashSet;

use log::warn;

use crate::error::{Error, Result};
use crate::group::{Elem, GroupFamily, TowerSpec};

/// A Følner set `F_i` together with its exact boundary `F_i S \ F_i`.
#[derive(Clone, Debug)]
pub struct FolnerData {
    index: u32,
    elements: Vec<Elem>,
    boundary: Vec<Elem>,
}

impl FolnerData {
    pub fn index(&self) -> u32 {
        self.index
    }

    /// Elements in lexicographic coordinate order.
    pub fn elements(&self) -> &[Elem] {
        &self.elements
    }

    pub fn boundary(&self) -> &[Elem] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `|∂_S F_i| / |F_i|`.
    pub fn boundary_ratio(&self) -> f64 {
        self.boundary.len() as f64 / self.elements.len() as f64
    }

    /// Largest word norm over the set, or `None` if the search is too large.
    pub fn max_word_norm(&self, spec: &TowerSpec) -> Option<u32> {
        max_norm(spec, self.index)
    }
}

fn box_elements(family: GroupFamily, i: u32) -> Vec<Elem> {
    let i = i as i64;
    let ranges: [i64; 3] = match family {
        GroupFamily::IntegerLattice { dim, .. } => {
            let mut r = [0; 3];
            r[..dim].fill(i);
            r
        }
        GroupFamily::Heisenberg { .. } => [i, i, i * i],
    };
    let mut out = Vec::new();
    for a in -ranges[0]..=ranges[0] {
        for b in -ranges[1]..=ranges[1] {
            for c in -ranges[2]..=ranges[2] {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// The Følner set `F_i` of the implemented family, `i >= 1`.
pub fn folner_set(spec: &TowerSpec, i: u32) -> Result<FolnerData> {
    if i == 0 {
        return Err(Error::InvalidArgument("Følner index must be at least 1".into()));
    }
    let elements = box_elements(spec.family(), i);
    let members: HashSet<Elem> = elements.iter().copied().collect();
    let mut boundary: Vec<Elem> = elements
        .iter()
        .flat_map(|x| spec.generators().iter().map(move |s| spec.mul(x, s)))
        .filter(|y| !members.contains(y))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    boundary.sort_unstable();
    Ok(FolnerData {
        index: i,
        elements,
        boundary,
    })
}

fn max_norm(spec: &TowerSpec, i: u32) -> Option<u32> {
    let family = spec.family();
    let default = TowerSpec::new(family).ok();
    match family {
        // the box [-i, i]^d has maximal L1 norm d * i under the standard generators
        GroupFamily::IntegerLattice { dim, .. } if default.as_ref() == Some(spec) => Some(dim as u32 * i),
        _ => {
            let norms = spec.word_norms(&box_elements(family, i))?;
            norms.into_iter().max()
        }
    }
}

/// `b(K) = max{i : F_i ⊆ B(o, K)}`, clamped to 1 when even `F_1` does not fit.
pub fn b_index(spec: &TowerSpec, k: f64) -> u32 {
    let mut best = 0;
    let mut i = 1;
    loop {
        match max_norm(spec, i) {
            Some(n) if (n as f64) <= k => best = i,
            Some(_) => break,
            None => {
                warn!("word norms of F_{i} not computable within the search cap; b({k}) truncated at {best}");
                break;
            }
        }
        i += 1;
    }
    if best == 0 {
        warn!("no Følner set fits in B(o, {k}); clamping b to 1");
        1
    } else {
        best
    }
}

/// `|B_Γ(r)|`, the number of group elements of word norm at most `r`.
pub fn group_ball_size(spec: &TowerSpec, r: u32) -> usize {
    spec.ball(r).len()
}

/// Whether `x` belongs to `F_i` (used to avoid materialising large sets).
pub fn in_folner_box(family: GroupFamily, i: u32, x: &Elem) -> bool {
    let i = i as i64;
    match family {
        GroupFamily::IntegerLattice { dim, .. } => x[..dim].iter().all(|c| c.abs() <= i) && x[dim..].iter().all(|&c| c == 0),
        GroupFamily::Heisenberg { .. } => x[0].abs() <= i && x[1].abs() <= i && x[2].abs() <= i * i,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::IDENTITY;

    #[test]
    fn identity_is_in_every_box() {
        let h = TowerSpec::heisenberg(2).unwrap();
        let f = folner_set(&h, 1).unwrap();
        assert!(f.elements().contains(&IDENTITY));
        assert_eq!(f.len(), 27);
        assert!(in_folner_box(h.family(), 1, &[1, -1, 1]));
        assert!(!in_folner_box(h.family(), 1, &[0, 0, 2]));
    }

    #[test]
    fn index_zero_is_rejected() {
        let z = TowerSpec::integer_lattice(1, 2).unwrap();
        assert!(folner_set(&z, 0).is_err());
    }
}
