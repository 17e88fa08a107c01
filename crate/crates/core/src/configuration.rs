//! Bit-packed occupation configurations `η ∈ {0,1}^{V_m}`.
//!
//! Vertex `j` is bit `j % 64` of word `j / 64`. The text form lists `η_0 η_1 …`
//! left to right; the hex form encodes the little-endian bytes of the packing,
//! so the lowest vertex is the least significant bit of the first byte.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::group::Elem;
use crate::tower::QuotientGraph;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Configuration {
    len: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut c = Self::empty(len);
        for w in c.words.iter_mut() {
            *w = u64::MAX;
        }
        c.clear_padding();
        c
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { len, words }
    }

    /// Configuration whose bit `j` is bit `j` of `index`; requires `len <= 64`.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "state index form needs at most 64 vertices");
        let mut c = Self::empty(len);
        if len > 0 {
            c.words[0] = index;
            c.clear_padding();
        }
        c
    }

    /// Inverse of [`Configuration::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "state index form needs at most 64 vertices");
        self.words.first().copied().unwrap_or(0)
    }

    /// Independent Bernoulli(`rho`) occupations.
    pub fn random<R: Rng + ?Sized>(len: usize, rho: f64, rng: &mut R) -> Self {
        if rho == 0.5 {
            let mut c = Self::empty(len);
            for w in c.words.iter_mut() {
                *w = rng.random();
            }
            c.clear_padding();
            c
        } else {
            Self::from_bits((0..len).map(|_| rng.random::<f64>() < rho))
        }
    }

    fn clear_padding(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, v: usize) -> bool {
        debug_assert!(v < self.len);
        (self.words[v >> 6] >> (v & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, v: usize, value: bool) {
        debug_assert!(v < self.len);
        let mask = 1u64 << (v & 63);
        if value {
            self.words[v >> 6] |= mask;
        } else {
            self.words[v >> 6] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Exchange the values at `x` and `y` in place.
    #[inline]
    pub fn swap_sites(&mut self, x: usize, y: usize) {
        let (a, b) = (self.get(x), self.get(y));
        if a != b {
            self.set(x, b);
            self.set(y, a);
        }
    }

    /// `π_{x,y}`: a copy with the values at `x` and `y` exchanged.
    pub fn pair_swap(&self, x: usize, y: usize) -> Self {
        let mut out = self.clone();
        out.swap_sites(x, y);
        out
    }

    /// `η^e` for the oriented edge `e` of `graph`.
    pub fn swap(&self, graph: &QuotientGraph, e: usize) -> Self {
        let edge = graph.edge(e);
        self.pair_swap(edge.origin, edge.terminus)
    }

    /// `σ̲η` with `(σ̲η)_z = η_{σ̲^{-1} z}`, `σ̲` acting on the left.
    pub fn translate(&self, graph: &QuotientGraph, sigma: &Elem) -> Self {
        let inv = graph.spec().inv(sigma);
        Self::from_bits((0..self.len).map(|z| self.get(graph.left_mul(&inv, z))))
    }

    /// `(ι_m η)_z = η_{π_m(z)}` for every `z` in `window`.
    pub fn periodic_lift(&self, graph: &QuotientGraph, window: &[Elem]) -> Vec<bool> {
        window.iter().map(|z| self.get(graph.vertex_of(z))).collect()
    }

    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(self.len.div_ceil(8))
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(len: usize, s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Parse(format!("hex configuration: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Parse(format!(
                "hex configuration has {} bytes, expected {} for {len} vertices",
                bytes.len(),
                len.div_ceil(8)
            )));
        }
        let mut c = Self::empty(len);
        for (k, byte) in bytes.iter().enumerate() {
            c.words[k / 8] |= (*byte as u64) << (8 * (k % 8));
        }
        let before = c.words.clone();
        c.clear_padding();
        if before != c.words {
            return Err(Error::Parse("hex configuration has bits beyond its length".into()));
        }
        Ok(c)
    }

    /// Parse the `0`/`1` text form.
    pub fn parse_bits(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected character {other:?} in configuration"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(bits))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in 0..self.len {
            f.write_str(if self.get(v) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::TowerSpec;
    use crate::tower::TowerLimits;

    fn cycle(m: u32) -> QuotientGraph {
        QuotientGraph::new(&TowerSpec::integer_lattice(1, 2).unwrap(), m, TowerLimits::default()).unwrap()
    }

    #[test]
    fn hand_swaps() {
        let g = cycle(2);
        let eta = Configuration::parse_bits("1010").unwrap();
        let e = g.edge_id(0, 0);
        assert_eq!(g.edge(e).terminus, 1);
        assert_eq!(eta.swap(&g, e).to_string(), "0110");
        assert_eq!(eta.swap(&g, g.reverse(e)), eta.swap(&g, e));
        assert_eq!(eta.pair_swap(0, 3).to_string(), "0011");
        assert_eq!(eta.pair_swap(2, 2), eta);
    }

    #[test]
    fn lift_on_cycle_of_two() {
        let g = cycle(1);
        let eta = Configuration::parse_bits("10").unwrap();
        let window: Vec<Elem> = (-2..=2).map(|a| [a, 0, 0]).collect();
        let bits: String = eta.periodic_lift(&g, &window).iter().map(|&b| if b { '1' } else { '0' }).collect();
        assert_eq!(bits, "10101");
    }

    #[test]
    fn hex_round_trip() {
        let eta = Configuration::parse_bits("1000000011").unwrap();
        assert_eq!(eta.to_hex(), "0103");
        assert_eq!(Configuration::from_hex(10, "0103").unwrap(), eta);
        assert!(Configuration::from_hex(10, "01ff").is_err());
        let wide = Configuration::from_bits((0..130).map(|j| j % 3 == 0));
        assert_eq!(Configuration::from_hex(130, &wide.to_hex()).unwrap(), wide);
    }

    #[test]
    fn index_round_trip() {
        let eta = Configuration::from_index(4, 0b0101);
        assert_eq!(eta.to_string(), "1010");
        assert_eq!(eta.to_index(), 5);
        assert_eq!(Configuration::full(70).count_ones(), 70);
    }
}
