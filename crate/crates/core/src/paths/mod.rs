//! Canonical paths between generator sets of the even-gate group action.
//!
//! A generator is a 3-bit gate at a placement; a path map rewrites each
//! generator of a domain set as a word over a codomain set with the same
//! action. Words are read left to right, leftmost letter applied first, so a
//! word (w_1, ..., w_T) composes to w_T . ... . w_1. The congestion ratio of a
//! path map controls how the spectral gaps of the two induced walks compare.

mod des2;

pub use des2::{des2_word, shared_table, Des2Table};

use crate::circuit::{apply_gate, BitString, PlacedGate, Placement};
use crate::error::{Error, Result};
use crate::gate::{
    distinct_des2_gates, enumerate_alternating, enumerate_des2_forms, Gate3,
};
use crate::linalg::DenseMatrix;
use crate::spectral::{dense_sym_eigs, distinct_eigenvalues, EIGENVALUE_MERGE_TOL};
use crate::walk::state_count;
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};

/// One generator of the group action: a gate at a placement.
pub type GeneratorEdge = PlacedGate;

/// Slack when checking eigenvalue inequalities against exactly computed B.
const COMPARISON_TOL: f64 = 1e-9;

/// Swap of wires `i` and `i+1` as a 3-bit gate on a contiguous window. The
/// window is anchored at `i-1` (swapping local bits 2,3) except at the left
/// edge, where anchor 1 swaps local bits 1,2.
pub fn adjacent_swap_edge(i: usize, n: usize) -> Result<GeneratorEdge> {
    if i == 0 || i + 1 > n {
        return Err(Error::Placement { site: [i, i + 1, i + 2], n });
    }
    let (anchor, p, q) = if i >= 2 { (i - 1, 2, 3) } else { (1, 1, 2) };
    Ok(GeneratorEdge { gate: Gate3::swap_local_bits(p, q), site: Placement::window(anchor, n)? })
}

/// Word of adjacent swaps routing the site wires a, b, c to positions d,
/// d+1, d+2. Wires that move left go first in ascending target order, then
/// wires that move right in descending target order; with the targets
/// contiguous and the relative order preserved, no move ever crosses a wire
/// that has already settled, so original positions can be used throughout.
/// Length is at most 3(n-1).
pub fn sort_word(site: &Placement, d: usize, n: usize) -> Result<Vec<GeneratorEdge>> {
    Placement::new(site.wires(), n)?;
    Placement::window(d, n)?;
    let [a, b, c] = site.wires();
    let targets = [(a, d), (b, d + 1), (c, d + 2)];

    let mut swaps: Vec<usize> = Vec::new();
    for &(cur, tgt) in &targets {
        if cur > tgt {
            swaps.extend((tgt..cur).rev());
        }
    }
    for &(cur, tgt) in targets.iter().rev() {
        if cur < tgt {
            swaps.extend(cur..tgt);
        }
    }

    debug_assert!({
        let mut pos = [a, b, c];
        for &s in &swaps {
            for p in pos.iter_mut() {
                if *p == s {
                    *p = s + 1;
                } else if *p == s + 1 {
                    *p = s;
                }
            }
        }
        pos == [d, d + 1, d + 2]
    });
    debug_assert!(swaps.len() <= 3 * (n - 1));

    swaps.into_iter().map(|i| adjacent_swap_edge(i, n)).collect()
}

/// Rewrite a gate at an arbitrary site as a word of nearest-neighbor
/// generators: route the site to the contiguous window at the site's first
/// wire, apply the gate there, and undo the routing (the swaps are
/// involutions, so the return trip is the same word reversed).
pub fn general_to_nn_path(g: &Gate3, site: &Placement, n: usize) -> Result<Vec<GeneratorEdge>> {
    let d = site.wires()[0];
    let sort = sort_word(site, d, n)?;
    let mut word = sort.clone();
    word.push(GeneratorEdge { gate: *g, site: Placement::window(d, n)? });
    word.extend(sort.into_iter().rev());
    Ok(word)
}

/// Rewrite a nearest-neighbor generator at anchor `a` as a word over anchors
/// not divisible by 3. Anchors already allowed pass through unchanged; an
/// anchor divisible by 3 is rerouted through its two neighbors: three swaps
/// bring the window's wires onto the window at a-1, the gate fires there, and
/// the swaps are undone. Both helper anchors a-1 and a+1 must exist.
pub fn nn_to_mod3_path(g: &Gate3, a: usize, n: usize) -> Result<Vec<GeneratorEdge>> {
    let window = Placement::window(a, n)?;
    if !a.is_multiple_of(3) {
        return Ok(vec![GeneratorEdge { gate: *g, site: window }]);
    }
    if a < 2 || a + 1 > n.saturating_sub(2) {
        return Err(Error::RerouteBoundary { anchor: a, n });
    }
    let left = Placement::window(a - 1, n)?;
    let right = Placement::window(a + 1, n)?;
    let s1 = GeneratorEdge { gate: Gate3::swap_local_bits(1, 2), site: left };
    let s2 = GeneratorEdge { gate: Gate3::swap_local_bits(2, 3), site: left };
    let s3 = GeneratorEdge { gate: Gate3::swap_local_bits(1, 2), site: right };
    let central = GeneratorEdge { gate: *g, site: left };
    Ok(vec![s1, s2, s3, central, s3, s2, s1])
}

/// Apply a word to a string, leftmost letter first.
pub fn apply_word(word: &[GeneratorEdge], x: &BitString) -> Result<BitString> {
    let mut y = *x;
    for e in word {
        y = apply_gate(&e.gate, &e.site, &y)?;
    }
    Ok(y)
}

/// All even gates at every 3-subset of the wires, sites in lexicographic
/// order, gates in rank order within a site.
pub fn general_generators(n: usize) -> Result<Vec<GeneratorEdge>> {
    let gates = enumerate_alternating();
    let mut out = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                let site = Placement::new([a, b, c], n)?;
                out.extend(gates.iter().map(|&gate| GeneratorEdge { gate, site }));
            }
        }
    }
    Ok(out)
}

/// All even gates at the given contiguous anchors.
pub fn nn_generators_at(n: usize, anchors: &[usize]) -> Result<Vec<GeneratorEdge>> {
    let gates = enumerate_alternating();
    let mut out = Vec::new();
    for &a in anchors {
        let site = Placement::window(a, n)?;
        out.extend(gates.iter().map(|&gate| GeneratorEdge { gate, site }));
    }
    Ok(out)
}

/// All even gates at every contiguous anchor.
pub fn nn_generators(n: usize) -> Result<Vec<GeneratorEdge>> {
    let anchors: Vec<usize> = (1..=n.saturating_sub(2)).collect();
    nn_generators_at(n, &anchors)
}

fn mod3_anchors(n: usize) -> Vec<usize> {
    (1..=n.saturating_sub(2)).filter(|a| !a.is_multiple_of(3)).collect()
}

type RewriteRule = Box<dyn Fn(&GeneratorEdge) -> Result<Vec<GeneratorEdge>> + Send + Sync>;

/// A deterministic rewriting of every domain generator as a word over the
/// codomain generators with the same action.
pub struct PathMap {
    n: usize,
    domain: Vec<GeneratorEdge>,
    codomain: Vec<GeneratorEdge>,
    rule: RewriteRule,
}

/// Congestion of a path map: with d = |domain| and e = |codomain|, the load
/// on a codomain generator is (e/d) * sum over domain words of
/// (occurrences in the word) * (word length), and B is the largest load.
#[derive(Clone, Debug)]
pub struct CongestionReport {
    pub b: f64,
    pub argmax: GeneratorEdge,
    /// Unscaled count at the argmax: sum of occurrences * word length.
    pub max_weighted_count: u64,
    /// Loads aligned with the codomain, already scaled by e/d.
    pub loads: Vec<f64>,
    pub domain_size: usize,
    pub codomain_size: usize,
}

/// Exact second-smallest Laplacian eigenvalues of the two induced walks on
/// k-tuples, together with the congestion ratio, checked against both ways
/// of placing B in the comparison inequality. Neither direction is asserted;
/// both outcomes are reported.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub n: usize,
    pub k: usize,
    pub lambda2_domain: f64,
    pub lambda2_codomain: f64,
    pub b: f64,
    /// lambda2(codomain) >= lambda2(domain) / B
    pub divisor_reading_holds: bool,
    /// lambda2(domain) >= B * lambda2(codomain)
    pub multiplier_reading_holds: bool,
}

impl PathMap {
    pub fn new(
        n: usize,
        domain: Vec<GeneratorEdge>,
        codomain: Vec<GeneratorEdge>,
        rule: impl Fn(&GeneratorEdge) -> Result<Vec<GeneratorEdge>> + Send + Sync + 'static,
    ) -> Self {
        PathMap { n, domain, codomain, rule: Box::new(rule) }
    }

    /// Every generator maps to itself.
    pub fn identity(n: usize, gens: Vec<GeneratorEdge>) -> Self {
        PathMap::new(n, gens.clone(), gens, |e| Ok(vec![*e]))
    }

    /// Arbitrary-site even gates rewritten over nearest-neighbor generators.
    pub fn general_to_nn(n: usize) -> Result<Self> {
        Ok(PathMap::new(
            n,
            general_generators(n)?,
            nn_generators(n)?,
            move |e| general_to_nn_path(&e.gate, &e.site, n),
        ))
    }

    /// Nearest-neighbor generators rewritten over anchors not divisible by 3.
    pub fn nn_to_mod3(n: usize) -> Result<Self> {
        Ok(PathMap::new(
            n,
            nn_generators(n)?,
            nn_generators_at(n, &mod3_anchors(n))?,
            move |e| {
                let a = e.site.anchor().ok_or(Error::Placement { site: e.site.wires(), n })?;
                nn_to_mod3_path(&e.gate, a, n)
            },
        ))
    }

    /// The 48 two-bit-controlled draws at each anchor, expanded over the 45
    /// non-identity controlled gates at the same anchor. The identity draws
    /// map to the empty word.
    pub fn des2_expansion(n: usize) -> Result<Self> {
        let mut domain = Vec::new();
        let mut codomain = Vec::new();
        for a in 1..=n.saturating_sub(2) {
            let site = Placement::window(a, n)?;
            domain.extend(
                enumerate_des2_forms().iter().map(|f| GeneratorEdge { gate: f.gate(), site }),
            );
            codomain
                .extend(distinct_des2_gates()[1..].iter().map(|&gate| GeneratorEdge { gate, site }));
        }
        Ok(PathMap::new(n, domain, codomain, |e| {
            let word = des2_word(&e.gate)?;
            Ok(word.into_iter().map(|gate| GeneratorEdge { gate, site: e.site }).collect())
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &[GeneratorEdge] {
        &self.domain
    }

    pub fn codomain(&self) -> &[GeneratorEdge] {
        &self.codomain
    }

    pub fn word(&self, e: &GeneratorEdge) -> Result<Vec<GeneratorEdge>> {
        (self.rule)(e)
    }

    /// Check, for every domain generator, that its word stays inside the
    /// codomain and acts identically on every n-bit string.
    pub fn verify(&self) -> Result<()> {
        let codomain: HashSet<(u16, [usize; 3])> =
            self.codomain.iter().map(|e| (e.gate.lehmer_rank(), e.site.wires())).collect();
        self.domain.par_iter().try_for_each(|e| {
            let word = (self.rule)(e).map_err(|err| {
                Error::IncompleteMap(format!("{:?} at {:?}: {err}", e.gate, e.site))
            })?;
            for l in &word {
                if !codomain.contains(&(l.gate.lehmer_rank(), l.site.wires())) {
                    return Err(Error::ForeignGenerator(format!("{:?} at {:?}", l.gate, l.site)));
                }
            }
            for w in 0..1u64 << self.n {
                let x = BitString::from_word(self.n, w)?;
                if apply_word(&word, &x)? != apply_gate(&e.gate, &e.site, &x)? {
                    return Err(Error::IncompleteMap(format!(
                        "word for {:?} at {:?} acts wrongly on {x}",
                        e.gate, e.site
                    )));
                }
            }
            Ok(())
        })
    }

    pub fn congestion(&self) -> Result<CongestionReport> {
        let mut index: HashMap<(u16, [usize; 3]), usize> = HashMap::new();
        for (i, e) in self.codomain.iter().enumerate() {
            index.entry((e.gate.lehmer_rank(), e.site.wires())).or_insert(i);
        }
        let mut counts = vec![0u64; self.codomain.len()];
        for e in &self.domain {
            let word = (self.rule)(e).map_err(|err| {
                Error::IncompleteMap(format!("{:?} at {:?}: {err}", e.gate, e.site))
            })?;
            let len = word.len() as u64;
            for l in &word {
                let key = (l.gate.lehmer_rank(), l.site.wires());
                let &i = index
                    .get(&key)
                    .ok_or_else(|| {
                        Error::ForeignGenerator(format!("{:?} at {:?}", l.gate, l.site))
                    })?;
                counts[i] += len;
            }
        }
        let ratio = self.codomain.len() as f64 / self.domain.len() as f64;
        let (argmax_idx, &max_weighted_count) =
            counts.iter().enumerate().max_by_key(|&(_, &c)| c).expect("nonempty codomain");
        Ok(CongestionReport {
            b: ratio * max_weighted_count as f64,
            argmax: self.codomain[argmax_idx],
            max_weighted_count,
            loads: counts.iter().map(|&c| ratio * c as f64).collect(),
            domain_size: self.domain.len(),
            codomain_size: self.codomain.len(),
        })
    }
}

/// Transition matrix of the walk averaging the permutation action of the
/// generators over k-tuples; entry (row, col) is the mass moved from the
/// column state to the row state.
pub fn walk_matrix(gens: &[GeneratorEdge], n: usize, k: usize, cap: usize) -> Result<DenseMatrix> {
    if gens.is_empty() {
        return Err(Error::Dimension("empty generator set has no walk".into()));
    }
    let dim = state_count(n, k)?;
    if dim > cap {
        return Err(Error::SizeCap { dim, cap });
    }
    let mask = (1usize << n) - 1;
    let w = 1.0 / gens.len() as f64;
    let mut m = DenseMatrix::zeros(dim);
    for e in gens {
        let mut perm = vec![0usize; 1 << n];
        for (v, slot) in perm.iter_mut().enumerate() {
            let x = BitString::from_word(n, v as u64)?;
            *slot = apply_gate(&e.gate, &e.site, &x)?.word() as usize;
        }
        for x in 0..dim {
            let mut y = 0usize;
            for i in 0..k {
                let shift = n * (k - 1 - i);
                y |= perm[(x >> shift) & mask] << shift;
            }
            m.set(y, x, m.get(y, x) + w);
        }
    }
    Ok(m)
}

fn laplacian_lambda2(gens: &[GeneratorEdge], n: usize, k: usize, cap: usize) -> Result<f64> {
    let m = walk_matrix(gens, n, k, cap)?;
    let l = DenseMatrix::identity(m.dim()).sub(&m);
    let eigs = dense_sym_eigs(&l)?;
    let distinct = distinct_eigenvalues(&eigs, EIGENVALUE_MERGE_TOL);
    if distinct.len() < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(distinct[1])
}

/// Exact spectral comparison of the two walks a path map relates. Both ways
/// of placing B are evaluated and reported; callers decide what to make of
/// them.
pub fn comparison_check(pm: &PathMap, k: usize, cap: usize) -> Result<ComparisonReport> {
    let b = pm.congestion()?.b;
    let lambda2_domain = laplacian_lambda2(pm.domain(), pm.n, k, cap)?;
    let lambda2_codomain = laplacian_lambda2(pm.codomain(), pm.n, k, cap)?;
    Ok(ComparisonReport {
        n: pm.n,
        k,
        lambda2_domain,
        lambda2_codomain,
        b,
        divisor_reading_holds: lambda2_codomain >= lambda2_domain / b - COMPARISON_TOL,
        multiplier_reading_holds: lambda2_domain >= b * lambda2_codomain - COMPARISON_TOL,
    })
}
