//! 3-bit reversible gates.
//!
//! A gate is a permutation of the 8 local values. Local bit 1 is the most
//! significant bit of the value, matching the wire convention where wire 1 is
//! the leftmost bit of a string. Two gate distributions are supported: uniform
//! over the 20160 even permutations, and uniform over the 48 two-bit-controlled
//! forms (a target bit XORed with an arbitrary function of the other two bits).

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of local values a 3-bit gate permutes.
pub const GATE_VALUES: usize = 8;
/// Order of the even-permutation group on 8 values.
pub const ALTERNATING_ORDER: usize = 20160;
/// Order of the full permutation group on 8 values.
pub const SYMMETRIC_ORDER: usize = 40320;
/// Number of (target, control function) pairs.
pub const DES2_PAIRS: usize = 48;
/// Number of distinct gates those pairs induce (the all-zero function gives
/// the identity at every target).
pub const DES2_DISTINCT: usize = 46;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gate3 {
    perm: [u8; 8],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Debug for Gate3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Gate3{:?}", self.perm)
    }
}

impl Gate3 {
    pub fn from_perm(perm: [u8; 8]) -> Result<Self> {
        let mut seen = [false; 8];
        for &v in &perm {
            if v >= 8 || seen[v as usize] {
                return Err(Error::NotBijective);
            }
            seen[v as usize] = true;
        }
        Ok(Gate3 { perm })
    }

    pub fn identity() -> Self {
        Gate3 { perm: [0, 1, 2, 3, 4, 5, 6, 7] }
    }

    pub fn perm(&self) -> &[u8; 8] {
        &self.perm
    }

    pub fn image(&self, v: u8) -> u8 {
        self.perm[v as usize]
    }

    /// Sign of the permutation, by counting inversions over the 28 pairs.
    pub fn parity(&self) -> Parity {
        let mut inv = 0u32;
        for i in 0..8 {
            for j in i + 1..8 {
                if self.perm[i] > self.perm[j] {
                    inv += 1;
                }
            }
        }
        if inv.is_multiple_of(2) { Parity::Even } else { Parity::Odd }
    }

    pub fn is_even(&self) -> bool {
        self.parity() == Parity::Even
    }

    pub fn inverse(&self) -> Self {
        let mut perm = [0u8; 8];
        for (v, &w) in self.perm.iter().enumerate() {
            perm[w as usize] = v as u8;
        }
        Gate3 { perm }
    }

    /// `self . other`: `other` acts first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut perm = [0u8; 8];
        for (v, slot) in perm.iter_mut().enumerate() {
            *slot = self.perm[other.perm[v] as usize];
        }
        Gate3 { perm }
    }

    /// Gate exchanging two of the three local bit positions (1-based,
    /// position 1 most significant). Always an even permutation: it splits
    /// into two disjoint transpositions of values.
    pub fn swap_local_bits(p: usize, q: usize) -> Self {
        assert!((1..=3).contains(&p) && (1..=3).contains(&q) && p != q);
        let mut perm = [0u8; 8];
        for v in 0..8u8 {
            let bp = (v >> (3 - p)) & 1;
            let bq = (v >> (3 - q)) & 1;
            let mut w = v & !(1 << (3 - p)) & !(1 << (3 - q));
            w |= bq << (3 - p);
            w |= bp << (3 - q);
            perm[v as usize] = w;
        }
        Gate3 { perm }
    }

    /// Rank in 0..40320 via the Lehmer code; stable indexing for tables.
    pub fn lehmer_rank(&self) -> u16 {
        const FACT: [u16; 8] = [5040, 720, 120, 24, 6, 2, 1, 1];
        let mut rank = 0u16;
        for (i, &place) in FACT.iter().enumerate() {
            let smaller = (i + 1..8).filter(|&j| self.perm[j] < self.perm[i]).count() as u16;
            rank += smaller * place;
        }
        rank
    }

    pub fn from_lehmer_rank(rank: u16) -> Result<Self> {
        if rank as usize >= SYMMETRIC_ORDER {
            return Err(Error::NotBijective);
        }
        const FACT: [u16; 8] = [5040, 720, 120, 24, 6, 2, 1, 1];
        let mut rest: Vec<u8> = (0..8).collect();
        let mut r = rank;
        let mut perm = [0u8; 8];
        for i in 0..8 {
            let d = (r / FACT[i]) as usize;
            r %= FACT[i];
            perm[i] = rest.remove(d);
        }
        Ok(Gate3 { perm })
    }
}

/// Two-bit-controlled form: the target wire of the site gets XORed with
/// `f(controls)`; the two control bits pass through unchanged. `table` holds
/// the truth table of `f`, bit `i` for input `i = 2*c_hi + c_lo`, where `c_hi`
/// is the control on the lower (more significant) site position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Des2Form {
    pub target: u8,
    pub table: u8,
}

impl Des2Form {
    pub fn new(target: u8, table: u8) -> Result<Self> {
        if !(1..=3).contains(&target) || table >= 16 {
            return Err(Error::Parse(format!(
                "controlled form needs target in 1..=3 and a 4-bit table, got ({target}, {table})"
            )));
        }
        Ok(Des2Form { target, table })
    }

    pub fn eval(&self, controls: u8) -> u8 {
        (self.table >> controls) & 1
    }

    fn control_positions(&self) -> (usize, usize) {
        match self.target {
            1 => (2, 3),
            2 => (1, 3),
            _ => (1, 2),
        }
    }

    pub fn gate(&self) -> Gate3 {
        let (p, q) = self.control_positions();
        let t = self.target as usize;
        let mut perm = [0u8; 8];
        for v in 0..8u8 {
            let c = (((v >> (3 - p)) & 1) << 1) | ((v >> (3 - q)) & 1);
            perm[v as usize] = v ^ (self.eval(c) << (3 - t));
        }
        Gate3 { perm }
    }
}

/// Recover a controlled form from a gate table, if one exists. Targets are
/// tried in ascending order, so the identity reports target 1.
pub fn classify_des2(g: &Gate3) -> Option<Des2Form> {
    'target: for target in 1..=3u8 {
        let probe = Des2Form { target, table: 0 };
        let (p, q) = probe.control_positions();
        let mut table = 0u8;
        // Derive f from the images of target-bit-0 values, then check all 8.
        for v in 0..8u8 {
            if (v >> (3 - target)) & 1 == 1 {
                continue;
            }
            let c = (((v >> (3 - p)) & 1) << 1) | ((v >> (3 - q)) & 1);
            let w = g.image(v);
            if w & !(1 << (3 - target)) != v {
                continue 'target;
            }
            table |= ((w >> (3 - target)) & 1) << c;
        }
        let candidate = Des2Form { target, table };
        if candidate.gate() == *g {
            return Some(candidate);
        }
    }
    None
}

/// Uniform even gate: Fisher-Yates over the 8 values, then a fixed
/// transposition of values 6 and 7 if the draw came out odd. The repair map
/// is a bijection from odd onto even permutations, so the result is uniform
/// over the 20160 even gates.
pub fn sample_gate_alternating<R: Rng + ?Sized>(rng: &mut R) -> Gate3 {
    let mut perm: [u8; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
    for i in (1..8usize).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let g = Gate3 { perm };
    if g.is_even() {
        g
    } else {
        let mut perm = g.perm;
        perm.swap(6, 7);
        Gate3 { perm }
    }
}

/// Uniform over the 48 (target, table) pairs.
pub fn sample_des2_form<R: Rng + ?Sized>(rng: &mut R) -> Des2Form {
    let pick = rng.gen_range(0..DES2_PAIRS as u8);
    Des2Form { target: pick / 16 + 1, table: pick % 16 }
}

pub fn sample_gate_des2<R: Rng + ?Sized>(rng: &mut R) -> Gate3 {
    sample_des2_form(rng).gate()
}

/// All 20160 even gates, ordered by Lehmer rank.
pub fn enumerate_alternating() -> Vec<Gate3> {
    let mut out = Vec::with_capacity(ALTERNATING_ORDER);
    for rank in 0..SYMMETRIC_ORDER as u16 {
        let g = Gate3::from_lehmer_rank(rank).unwrap();
        if g.is_even() {
            out.push(g);
        }
    }
    out
}

/// All 48 controlled pairs in (target, table) order.
pub fn enumerate_des2_forms() -> Vec<Des2Form> {
    let mut out = Vec::with_capacity(DES2_PAIRS);
    for target in 1..=3 {
        for table in 0..16 {
            out.push(Des2Form { target, table });
        }
    }
    out
}

/// The 46 distinct gates in the image of the 48 pairs, deduplicated,
/// identity first, otherwise in (target, table) order of first occurrence.
pub fn distinct_des2_gates() -> Vec<Gate3> {
    let mut out: Vec<Gate3> = vec![Gate3::identity()];
    for form in enumerate_des2_forms() {
        let g = form.gate();
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use std::collections::HashSet;

    #[test]
    fn rejects_non_bijections() {
        assert!(Gate3::from_perm([0, 0, 2, 3, 4, 5, 6, 7]).is_err());
        assert!(Gate3::from_perm([0, 1, 2, 3, 4, 5, 6, 9]).is_err());
    }

    #[test]
    fn parity_matches_cycle_structure() {
        assert_eq!(Gate3::identity().parity(), Parity::Even);
        // single transposition: odd
        let t = Gate3::from_perm([1, 0, 2, 3, 4, 5, 6, 7]).unwrap();
        assert_eq!(t.parity(), Parity::Odd);
        // 3-cycle: even
        let c = Gate3::from_perm([1, 2, 0, 3, 4, 5, 6, 7]).unwrap();
        assert_eq!(c.parity(), Parity::Even);
    }

    #[test]
    fn compose_and_inverse() {
        let mut rng = seeded(3);
        for _ in 0..50 {
            let g = sample_gate_alternating(&mut rng);
            let h = sample_gate_alternating(&mut rng);
            let gh = g.compose(&h);
            for v in 0..8u8 {
                assert_eq!(gh.image(v), g.image(h.image(v)));
            }
            assert_eq!(g.compose(&g.inverse()), Gate3::identity());
        }
    }

    #[test]
    fn lehmer_rank_roundtrip() {
        for rank in (0..SYMMETRIC_ORDER as u16).step_by(97) {
            let g = Gate3::from_lehmer_rank(rank).unwrap();
            assert_eq!(g.lehmer_rank(), rank);
        }
    }

    #[test]
    fn alternating_enumeration_has_20160_even_elements() {
        let all = enumerate_alternating();
        assert_eq!(all.len(), ALTERNATING_ORDER);
        assert!(all.iter().all(Gate3::is_even));
        let distinct: HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), ALTERNATING_ORDER);
    }

    #[test]
    fn sampled_even_gates_are_even_and_streams_repeat() {
        let mut a = seeded(11);
        let mut b = seeded(11);
        for _ in 0..200 {
            let g = sample_gate_alternating(&mut a);
            assert!(g.is_even());
            assert_eq!(g, sample_gate_alternating(&mut b));
        }
    }

    /// Chi-square of 2e6 draws against the exact uniform distribution over
    /// the 20160 even gates. Threshold: mean + 5 sd of the chi-square law.
    #[test]
    fn alternating_sampler_is_uniform() {
        let all = enumerate_alternating();
        let index: std::collections::HashMap<Gate3, usize> =
            all.iter().enumerate().map(|(i, g)| (*g, i)).collect();
        let mut counts = vec![0u32; ALTERNATING_ORDER];
        let mut rng = seeded(20160);
        let samples = 2_000_000usize;
        for _ in 0..samples {
            counts[index[&sample_gate_alternating(&mut rng)]] += 1;
        }
        let expected = samples as f64 / ALTERNATING_ORDER as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        let dof = (ALTERNATING_ORDER - 1) as f64;
        let threshold = dof + 5.0 * (2.0 * dof).sqrt();
        assert!(stat < threshold, "chi-square {stat} over threshold {threshold}");
    }

    #[test]
    fn des2_pairs_induce_46_distinct_gates() {
        let forms = enumerate_des2_forms();
        assert_eq!(forms.len(), DES2_PAIRS);
        let distinct: HashSet<Gate3> = forms.iter().map(Des2Form::gate).collect();
        assert_eq!(distinct.len(), DES2_DISTINCT);
        assert_eq!(distinct_des2_gates().len(), DES2_DISTINCT);
        // all-zero tables collapse onto the identity
        for target in 1..=3 {
            assert_eq!(Des2Form { target, table: 0 }.gate(), Gate3::identity());
        }
    }

    #[test]
    fn des2_gates_are_involutions() {
        for form in enumerate_des2_forms() {
            let g = form.gate();
            assert_eq!(g.compose(&g), Gate3::identity());
        }
    }

    #[test]
    fn classify_recovers_known_gates() {
        // identity: target 1 with the zero function
        let id = classify_des2(&Gate3::identity()).unwrap();
        assert_eq!((id.target, id.table), (1, 0));

        // doubly controlled NOT: target 3, f = AND (only input 3 maps to 1)
        let ccx = Des2Form { target: 3, table: 0b1000 }.gate();
        assert_eq!(ccx.image(0b110), 0b111);
        assert_eq!(ccx.image(0b111), 0b110);
        assert_eq!(ccx.image(0b101), 0b101);
        let back = classify_des2(&ccx).unwrap();
        assert_eq!((back.target, back.table), (3, 0b1000));

        // a 3-cycle of values is not of controlled form
        let c = Gate3::from_perm([1, 2, 0, 3, 4, 5, 6, 7]).unwrap();
        assert!(classify_des2(&c).is_none());
    }

    #[test]
    fn classify_roundtrips_all_forms() {
        for form in enumerate_des2_forms() {
            let got = classify_des2(&form.gate()).unwrap();
            assert_eq!(got.gate(), form.gate());
        }
    }

    #[test]
    fn des2_sampler_hits_all_pairs_uniformly() {
        let mut counts = [0u32; DES2_PAIRS];
        let mut rng = seeded(48);
        let samples = 480_000;
        for _ in 0..samples {
            let form = sample_des2_form(&mut rng);
            counts[((form.target - 1) * 16 + form.table) as usize] += 1;
        }
        let expected = samples as f64 / DES2_PAIRS as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        let dof = (DES2_PAIRS - 1) as f64;
        assert!(stat < dof + 5.0 * (2.0 * dof).sqrt());
    }

    #[test]
    fn swap_gates_are_even_and_swap() {
        for (p, q) in [(1usize, 2usize), (2, 3), (1, 3)] {
            let g = Gate3::swap_local_bits(p, q);
            assert!(g.is_even());
            assert_eq!(g.compose(&g), Gate3::identity());
        }
        let g = Gate3::swap_local_bits(1, 2);
        assert_eq!(g.image(0b100), 0b010);
        assert_eq!(g.image(0b101), 0b011);
        assert_eq!(g.image(0b110), 0b110);
    }
}
