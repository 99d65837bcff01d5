//! Reversible block network over s blocks of n bits.
//!
//! A state is an s-tuple of n-bit blocks; the only arithmetic is bitwise XOR.
//! The elementary move is a counter gate: block b receives x_b XOR f(x_a) for
//! a directed pair a != b and a block function f, which is an involution for
//! fixed (a, b, f). The full network applies two phases: every directed pair
//! in a fixed order, then two extra gates inside each disjoint partner pair.
//! Random block functions are lazy oracles whose outputs are a pure function
//! of (seed, input), so query order never matters.

use crate::circuit::BitString;
use crate::error::{Error, Result};
use crate::rng::{derive, mix64, trial_rng};
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashSet;
use std::io::Write;

/// s blocks of n bits; block 1 is the leftmost (most significant) chunk of
/// the packed N = n*s bit word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BlockState {
    n: usize,
    s: usize,
    blocks: Vec<u64>,
}

impl BlockState {
    pub fn from_words(n: usize, s: usize, blocks: Vec<u64>) -> Result<Self> {
        if n == 0 || n > 64 || s == 0 {
            return Err(Error::Dimension(format!("block shape n={n}, s={s} is unusable")));
        }
        if blocks.len() != s {
            return Err(Error::Dimension(format!(
                "expected {s} blocks, got {}",
                blocks.len()
            )));
        }
        for &b in &blocks {
            if n < 64 && b >> n != 0 {
                return Err(Error::ValueWidth(b, n));
            }
        }
        Ok(BlockState { n, s, blocks })
    }

    pub fn new(n: usize, s: usize, blocks: Vec<BitString>) -> Result<Self> {
        for b in &blocks {
            if b.n() != n {
                return Err(Error::WireMismatch { expected: n, got: b.n() });
            }
        }
        BlockState::from_words(n, s, blocks.iter().map(BitString::word).collect())
    }

    /// Unpack a packed N = n*s bit word, block 1 in the top bits.
    pub fn from_wide(n: usize, s: usize, w: u64) -> Result<Self> {
        let total = n * s;
        if total == 0 || total > 64 {
            return Err(Error::ValueWidth(w, total));
        }
        if total < 64 && w >> total != 0 {
            return Err(Error::ValueWidth(w, total));
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let blocks = (1..=s).map(|a| (w >> (n * (s - a))) & mask).collect();
        BlockState::from_words(n, s, blocks)
    }

    pub fn to_wide(&self) -> u64 {
        let mut w = 0u64;
        for (i, &b) in self.blocks.iter().enumerate() {
            w |= b << (self.n * (self.s - 1 - i));
        }
        w
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn total_width(&self) -> usize {
        self.n * self.s
    }

    /// Block index is 1-based.
    pub fn block_word(&self, a: usize) -> u64 {
        debug_assert!((1..=self.s).contains(&a));
        self.blocks[a - 1]
    }

    pub fn block(&self, a: usize) -> BitString {
        BitString::from_word(self.n, self.block_word(a)).expect("block already validated")
    }
}

impl std::fmt::Debug for BlockState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = (1..=self.s).map(|a| self.block(a).to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// A total function {0,1}^n -> {0,1}^n used as a counter-gate round function.
#[derive(Clone, Debug)]
pub enum BlockFn {
    Zero,
    Identity,
    /// Explicit table of 2^n entries.
    Table(Vec<u64>),
    Lazy(LazyRandomFunction),
    Keyed(KeyedToy),
}

impl BlockFn {
    pub fn table(n: usize, values: Vec<u64>) -> Result<Self> {
        if n >= 32 || values.len() != 1 << n {
            return Err(Error::Dimension(format!(
                "table for width {n} needs {} entries, got {}",
                1usize << n.min(32),
                values.len()
            )));
        }
        for &v in &values {
            if v >> n != 0 {
                return Err(Error::ValueWidth(v, n));
            }
        }
        Ok(BlockFn::Table(values))
    }

    pub fn eval(&self, x: u64) -> u64 {
        match self {
            BlockFn::Zero => 0,
            BlockFn::Identity => x,
            BlockFn::Table(t) => t[x as usize],
            BlockFn::Lazy(f) => f.query(x),
            BlockFn::Keyed(f) => f.eval(x),
        }
    }
}

/// Random function oracle: the value at x is a pure function of (seed, x),
/// so repeated queries agree, query order is irrelevant, and concurrent use
/// is safe without any shared state. This replaces an explicit memo table
/// with the same observable behavior.
#[derive(Clone, Copy, Debug)]
pub struct LazyRandomFunction {
    seed: u64,
    n: usize,
}

impl LazyRandomFunction {
    pub fn new(seed: u64, n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::ValueWidth(0, n));
        }
        Ok(LazyRandomFunction { seed, n })
    }

    pub fn query(&self, x: u64) -> u64 {
        let mask = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        derive(self.seed, &[x]) & mask
    }
}

/// Four rounds of XOR-with-round-key, odd-constant multiply modulo 2^n, and
/// a round-dependent left rotation. A permutation of {0,1}^n, usable as a
/// reproducible bank source. Plain mixing scaffolding, not a cipher.
#[derive(Clone, Copy, Debug)]
pub struct KeyedToy {
    key: u64,
    n: usize,
}

impl KeyedToy {
    pub fn new(key: u64, n: usize) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::ValueWidth(0, n));
        }
        Ok(KeyedToy { key, n })
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mask = (1u64 << self.n) - 1;
        let mut v = x & mask;
        for r in 0..4u64 {
            v ^= mix64(self.key.wrapping_add(r)) & mask;
            v = v.wrapping_mul(0x9e37_79b9_7f4a_7c15 | 1) & mask;
            let rot = ((3 * r + 1) as usize) % self.n;
            if rot != 0 {
                v = ((v << rot) | (v >> (self.n - rot))) & mask;
            }
        }
        v
    }
}

/// One gate of the two-phase network schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnGate {
    /// Phase 1: control a, target b, function f_(a,b).
    Directed { a: usize, b: usize },
    /// Phase 2, first gate of the partner pair (a, a+1): control a.
    PairForward { a: usize },
    /// Phase 2, second gate: control a+1, target a.
    PairBackward { a: usize },
}

/// Gate order of the network: phase 1 iterates controls a = 1..s and, for
/// each a, targets b over [s] without a in ascending order; phase 2 visits
/// each odd a with an in-range partner a+1. Earlier entries apply first,
/// matching a right-to-left product of the gate matrices. With s odd the
/// last block has no partner and phase 2 skips it.
pub fn pn_schedule(s: usize) -> Vec<PnGate> {
    let mut gates = Vec::new();
    for a in 1..=s {
        for b in (1..=s).filter(|&b| b != a) {
            gates.push(PnGate::Directed { a, b });
        }
    }
    for a in (1..=s).step_by(2) {
        if a < s {
            gates.push(PnGate::PairForward { a });
            gates.push(PnGate::PairBackward { a });
        }
    }
    gates
}

/// Number of counter gates the network applies: s(s-1) + 2*floor(s/2).
pub fn pn_gate_count(s: usize) -> usize {
    s * (s - 1) + 2 * (s / 2)
}

/// The round functions the schedule draws from: one directed function per
/// ordered pair, two extra functions per phase-2 partner pair.
pub struct FunctionBank {
    n: usize,
    s: usize,
    directed: Vec<Option<BlockFn>>,
    pair_forward: Vec<Option<BlockFn>>,
    pair_backward: Vec<Option<BlockFn>>,
}

impl FunctionBank {
    pub fn empty(n: usize, s: usize) -> Result<Self> {
        if n == 0 || n > 64 || s == 0 {
            return Err(Error::Dimension(format!("bank shape n={n}, s={s} is unusable")));
        }
        Ok(FunctionBank {
            n,
            s,
            directed: vec![None; s * s],
            pair_forward: vec![None; s],
            pair_backward: vec![None; s],
        })
    }

    /// Every slot the all-zero function: the network becomes the identity.
    pub fn zeros(n: usize, s: usize) -> Result<Self> {
        let mut bank = FunctionBank::empty(n, s)?;
        bank.fill_with(|_| BlockFn::Zero);
        Ok(bank)
    }

    /// Fresh random-function oracles in every slot, with per-slot seeds
    /// derived from one bank seed.
    pub fn lazy(n: usize, s: usize, seed: u64) -> Result<Self> {
        let mut bank = FunctionBank::empty(n, s)?;
        bank.fill_with(|tags| {
            BlockFn::Lazy(
                LazyRandomFunction::new(derive(seed, &tags), n).expect("validated width"),
            )
        });
        Ok(bank)
    }

    /// Keyed toy permutations in every slot.
    pub fn keyed(n: usize, s: usize, key: u64) -> Result<Self> {
        let mut bank = FunctionBank::empty(n, s)?;
        bank.fill_with(|tags| {
            BlockFn::Keyed(KeyedToy::new(derive(key, &tags), n).expect("validated width"))
        });
        Ok(bank)
    }

    fn fill_with(&mut self, mut make: impl FnMut([u64; 3]) -> BlockFn) {
        for a in 1..=self.s {
            for b in 1..=self.s {
                if a != b {
                    self.directed[(a - 1) * self.s + (b - 1)] =
                        Some(make([1, a as u64, b as u64]));
                }
            }
        }
        for a in (1..=self.s).step_by(2) {
            if a < self.s {
                self.pair_forward[a - 1] = Some(make([2, a as u64, 1]));
                self.pair_backward[a - 1] = Some(make([2, a as u64, 2]));
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn set_directed(&mut self, a: usize, b: usize, f: BlockFn) -> Result<()> {
        self.check_pair(a, b)?;
        self.directed[(a - 1) * self.s + (b - 1)] = Some(f);
        Ok(())
    }

    /// `which` is 1 for the forward gate of the pair at odd a, 2 for the
    /// backward gate.
    pub fn set_pair(&mut self, a: usize, which: u8, f: BlockFn) -> Result<()> {
        if a.is_multiple_of(2) || a + 1 > self.s || !(1..=2).contains(&which) {
            return Err(Error::Dimension(format!(
                "phase-2 slot (a={a}, which={which}) out of range for s={}",
                self.s
            )));
        }
        if which == 1 {
            self.pair_forward[a - 1] = Some(f);
        } else {
            self.pair_backward[a - 1] = Some(f);
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        if a == b || a == 0 || b == 0 || a > self.s || b > self.s {
            return Err(Error::Dimension(format!(
                "directed pair ({a},{b}) out of range for s={}",
                self.s
            )));
        }
        Ok(())
    }

    pub fn directed_fn(&self, a: usize, b: usize) -> Result<&BlockFn> {
        self.check_pair(a, b)?;
        self.directed[(a - 1) * self.s + (b - 1)]
            .as_ref()
            .ok_or_else(|| Error::MissingFunction(format!("directed pair ({a},{b})")))
    }

    pub fn pair_fn(&self, a: usize, which: u8) -> Result<&BlockFn> {
        let slot = if which == 1 { &self.pair_forward } else { &self.pair_backward };
        slot.get(a - 1)
            .and_then(|f| f.as_ref())
            .ok_or_else(|| Error::MissingFunction(format!("partner pair (a={a}, {which})")))
    }

    fn gate_fn(&self, gate: &PnGate) -> Result<(usize, usize, &BlockFn)> {
        match *gate {
            PnGate::Directed { a, b } => Ok((a, b, self.directed_fn(a, b)?)),
            PnGate::PairForward { a } => Ok((a, a + 1, self.pair_fn(a, 1)?)),
            PnGate::PairBackward { a } => Ok((a + 1, a, self.pair_fn(a, 2)?)),
        }
    }
}

/// Counter gate: block b becomes x_b XOR f(x_a); everything else passes
/// through. An involution for fixed (a, b, f).
pub fn ctr_apply(a: usize, b: usize, f: &BlockFn, x: &BlockState) -> Result<BlockState> {
    if a == b || a == 0 || b == 0 || a > x.s || b > x.s {
        return Err(Error::Dimension(format!(
            "counter gate needs distinct blocks in 1..={}, got ({a},{b})",
            x.s
        )));
    }
    let mut y = x.clone();
    y.blocks[b - 1] ^= f.eval(x.blocks[a - 1]);
    Ok(y)
}

/// Apply only the phase-1 gates of the schedule.
pub fn pn_phase1_apply(bank: &FunctionBank, x: &BlockState) -> Result<BlockState> {
    let mut y = x.clone();
    for gate in pn_schedule(bank.s).iter().filter(|g| matches!(g, PnGate::Directed { .. })) {
        let (a, b, f) = bank.gate_fn(gate)?;
        y = ctr_apply(a, b, f, &y)?;
    }
    Ok(y)
}

/// Apply the full two-phase network.
pub fn pn_apply(bank: &FunctionBank, x: &BlockState) -> Result<BlockState> {
    if x.n != bank.n || x.s != bank.s {
        return Err(Error::Dimension(format!(
            "state shape ({}, {}) does not match bank shape ({}, {})",
            x.n, x.s, bank.n, bank.s
        )));
    }
    let mut y = x.clone();
    for gate in pn_schedule(bank.s) {
        let (a, b, f) = bank.gate_fn(&gate)?;
        y = ctr_apply(a, b, f, &y)?;
    }
    Ok(y)
}

/// Undo the network: every counter gate is an involution, so the inverse
/// applies the same gates in exactly reverse order.
pub fn pn_invert(bank: &FunctionBank, y: &BlockState) -> Result<BlockState> {
    if y.n != bank.n || y.s != bank.s {
        return Err(Error::Dimension(format!(
            "state shape ({}, {}) does not match bank shape ({}, {})",
            y.n, y.s, bank.n, bank.s
        )));
    }
    let mut x = y.clone();
    for gate in pn_schedule(bank.s).iter().rev() {
        let (a, b, f) = bank.gate_fn(gate)?;
        x = ctr_apply(a, b, f, &x)?;
    }
    Ok(x)
}

/// Sample q distinct packed rows of width n*s.
fn sample_distinct_rows(n: usize, s: usize, q: usize, seed: u64) -> Result<Vec<u64>> {
    let total = n * s;
    if total == 0 || total > 64 {
        return Err(Error::ValueWidth(0, total));
    }
    let space = if total == 64 { u64::MAX } else { (1u64 << total) - 1 };
    if q as u64 > space.saturating_add(1) {
        return Err(Error::TooManyRows { need: q as u64, have: space.saturating_add(1) });
    }
    let mut rng = trial_rng(seed, u64::MAX);
    let mut seen = HashSet::new();
    let mut rows = Vec::with_capacity(q);
    while rows.len() < q {
        let w = rng.gen::<u64>() & space;
        if seen.insert(w) {
            rows.push(w);
        }
    }
    Ok(rows)
}

fn any_cell_collision(states: &[BlockState]) -> bool {
    let mut seen = HashSet::new();
    for y in states {
        for a in 1..=y.s {
            if !seen.insert(y.block_word(a)) {
                return true;
            }
        }
    }
    false
}

/// Frequency with which phase 1, with fresh random functions per trial,
/// maps q fixed distinct rows to a cell grid with any repeated block value.
#[derive(Clone, Debug, Serialize)]
pub struct CollisionReport {
    pub n: usize,
    pub s: usize,
    pub q: usize,
    pub trials: usize,
    pub failures: usize,
    pub empirical: f64,
    /// q^2 s^2 / 2^(n-1)
    pub bound: f64,
    /// three binomial standard deviations of the empirical frequency under
    /// the bound
    pub three_sigma: f64,
    pub within_bound: bool,
    pub seed: u64,
    pub rows: Vec<u64>,
}

pub fn phase1_collision_experiment(
    n: usize,
    s: usize,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<CollisionReport> {
    if trials == 0 {
        return Err(Error::Dimension("need at least one trial".into()));
    }
    let rows = sample_distinct_rows(n, s, q, seed)?;
    let states: Vec<BlockState> =
        rows.iter().map(|&w| BlockState::from_wide(n, s, w)).collect::<Result<_>>()?;

    let mut failures = 0usize;
    for trial in 0..trials {
        let bank_seed = trial_rng(seed, trial as u64).gen::<u64>();
        let bank = FunctionBank::lazy(n, s, bank_seed)?;
        let images: Vec<BlockState> =
            states.iter().map(|x| pn_phase1_apply(&bank, x)).collect::<Result<_>>()?;
        if any_cell_collision(&images) {
            failures += 1;
        }
    }

    let empirical = failures as f64 / trials as f64;
    let bound = (q * q * s * s) as f64 / 2f64.powi(n as i32 - 1);
    let three_sigma = 3.0 * (bound.min(1.0) * (1.0 - bound.min(1.0)) / trials as f64).sqrt();
    Ok(CollisionReport {
        n,
        s,
        q,
        trials,
        failures,
        empirical,
        bound,
        three_sigma,
        within_bound: empirical <= bound + three_sigma,
        seed,
        rows,
    })
}

/// Exact phase-1 collision probability for the given rows: enumerate every
/// possible assignment of the s(s-1) directed function tables. Only sane for
/// tiny n and s; the combination count is (2^n)^(s(s-1)*2^n).
pub fn exact_phase1_collision_probability(
    n: usize,
    s: usize,
    rows: &[u64],
    cap: usize,
) -> Result<f64> {
    let states: Vec<BlockState> =
        rows.iter().map(|&w| BlockState::from_wide(n, s, w)).collect::<Result<_>>()?;
    let values = 1usize << n;
    let nfun = s * (s - 1);
    let digits = nfun * values;
    let combos = (values as u128).checked_pow(digits as u32).ok_or(Error::SizeCap {
        dim: usize::MAX,
        cap,
    })?;
    if combos > cap as u128 {
        return Err(Error::SizeCap { dim: combos.min(usize::MAX as u128) as usize, cap });
    }

    // odometer over all table entries, one digit in 0..2^n per entry
    let mut tables = vec![vec![0u64; values]; nfun];
    let pairs: Vec<(usize, usize)> = {
        let mut p = Vec::new();
        for a in 1..=s {
            for b in (1..=s).filter(|&b| b != a) {
                p.push((a, b));
            }
        }
        p
    };
    let mut failures = 0u64;
    let mut bank = FunctionBank::empty(n, s)?;
    loop {
        for (fi, &(a, b)) in pairs.iter().enumerate() {
            bank.set_directed(a, b, BlockFn::table(n, tables[fi].clone())?)?;
        }
        let images: Vec<BlockState> =
            states.iter().map(|x| pn_phase1_apply(&bank, x)).collect::<Result<_>>()?;
        if any_cell_collision(&images) {
            failures += 1;
        }

        // increment the odometer
        let mut done = true;
        'outer: for t in tables.iter_mut() {
            for e in t.iter_mut() {
                *e += 1;
                if *e < values as u64 {
                    done = false;
                    break 'outer;
                }
                *e = 0;
            }
        }
        if done {
            break;
        }
    }
    Ok(failures as f64 / combos as f64)
}

/// Marginal and pairwise uniformity diagnostics for the full network with
/// fresh random functions per trial.
#[derive(Clone, Debug, Serialize)]
pub struct UniformityReport {
    pub n: usize,
    pub s: usize,
    pub q: usize,
    pub trials: usize,
    /// chi-square statistic per cell (q rows * s blocks, row-major)
    pub cell_chi_square: Vec<f64>,
    /// Bonferroni-corrected upper-tail p-value per cell
    pub cell_corrected_p: Vec<f64>,
    pub min_corrected_p: f64,
    pub marginals_ok: bool,
    /// largest collision rate over distinct cell pairs
    pub max_pair_collision: f64,
    /// 2^-n plus three binomial standard deviations
    pub pair_threshold: f64,
    pub pairs_ok: bool,
    pub seed: u64,
    pub rows: Vec<u64>,
}

pub fn uniformity_experiment(
    n: usize,
    s: usize,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<UniformityReport> {
    if trials == 0 {
        return Err(Error::Dimension("need at least one trial".into()));
    }
    if n >= 24 {
        return Err(Error::SizeCap { dim: 1 << n, cap: 1 << 24 });
    }
    let rows = sample_distinct_rows(n, s, q, seed)?;
    let states: Vec<BlockState> =
        rows.iter().map(|&w| BlockState::from_wide(n, s, w)).collect::<Result<_>>()?;

    let values = 1usize << n;
    let cells = q * s;
    let mut counts = vec![vec![0u64; values]; cells];
    let mut pair_hits = vec![0u64; cells * cells];
    for trial in 0..trials {
        let bank_seed = trial_rng(seed, trial as u64).gen::<u64>();
        let bank = FunctionBank::lazy(n, s, bank_seed)?;
        let images: Vec<BlockState> =
            states.iter().map(|x| pn_apply(&bank, x)).collect::<Result<_>>()?;
        let cell_values: Vec<u64> = images
            .iter()
            .flat_map(|y| (1..=s).map(|a| y.block_word(a)).collect::<Vec<_>>())
            .collect();
        for (c, &v) in cell_values.iter().enumerate() {
            counts[c][v as usize] += 1;
            for (c2, &v2) in cell_values.iter().enumerate().skip(c + 1) {
                if v == v2 {
                    pair_hits[c * cells + c2] += 1;
                }
            }
        }
    }

    let expected = trials as f64 / values as f64;
    let dof = (values - 1) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::Dimension(e.to_string()))?;
    let mut cell_chi_square = Vec::with_capacity(cells);
    let mut cell_corrected_p = Vec::with_capacity(cells);
    for cell in &counts {
        let stat: f64 = cell
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        let p = 1.0 - chi.cdf(stat);
        cell_chi_square.push(stat);
        cell_corrected_p.push((p * cells as f64).min(1.0));
    }
    let min_corrected_p = cell_corrected_p.iter().copied().fold(f64::INFINITY, f64::min);

    let p_pair = 1.0 / values as f64;
    let pair_threshold = p_pair + 3.0 * (p_pair * (1.0 - p_pair) / trials as f64).sqrt();
    let max_pair_collision = pair_hits
        .iter()
        .copied()
        .max()
        .map(|h| h as f64 / trials as f64)
        .unwrap_or(0.0);

    Ok(UniformityReport {
        n,
        s,
        q,
        trials,
        cell_chi_square,
        cell_corrected_p,
        min_corrected_p,
        marginals_ok: min_corrected_p > 1e-3,
        max_pair_collision,
        pair_threshold,
        pairs_ok: cells < 2 || max_pair_collision <= pair_threshold,
        seed,
        rows,
    })
}

/// Write the full truth table of the network as hex "input output" lines in
/// ascending input order.
pub fn export_truth_table<W: Write>(bank: &FunctionBank, out: &mut W) -> Result<()> {
    let total = bank.n * bank.s;
    if total > 24 {
        return Err(Error::SizeCap { dim: 1 << total.min(63), cap: 1 << 24 });
    }
    let width = total.div_ceil(4);
    for w in 0..1u64 << total {
        let x = BlockState::from_wide(bank.n, bank.s, w)?;
        let y = pn_apply(bank, &x)?;
        writeln!(out, "{:0width$x} {:0width$x}", w, y.to_wide(), width = width)?;
    }
    Ok(())
}
