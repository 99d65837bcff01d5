//! Walks on k-tuples of n-bit strings.
//!
//! A tuple state is k rows of n bits. Its canonical index packs the rows
//! row-major with row 1 most significant, so the state space is 0..2^(n*k).
//! Functions on states are plain `f64` vectors under the expectation inner
//! product; parity characters indexed by one wire subset per row form an
//! orthonormal basis.

mod operator;
mod parse;
mod region;

pub use operator::{OperatorSpec, DEFAULT_STATE_CAP};
pub use parse::parse_operator;
pub use region::{
    classify_region, escape_bounds_report, escape_probability, hamming_class, hit_probability,
    region_indicator, suffix_class, suffix_window, tilde_class, tilde_indicator,
    witness_coordinates, EscapeBoundsReport, HammingClass, RegionLabel, RegionScheme, SuffixClass,
};

use crate::error::{Error, Result};

/// k rows of n bits. Rows are stored as words with wire a at bit n-a,
/// matching `BitString`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TupleState {
    n: usize,
    k: usize,
    rows: Vec<u64>,
}

impl TupleState {
    pub fn new(n: usize, k: usize, rows: Vec<u64>) -> Result<Self> {
        check_dims(n, k)?;
        if rows.len() != k {
            return Err(Error::Dimension(format!("expected {k} rows, got {}", rows.len())));
        }
        for &r in &rows {
            if n < 64 && r >> n != 0 {
                return Err(Error::ValueWidth(r, n));
            }
        }
        Ok(TupleState { n, k, rows })
    }

    pub fn from_index(n: usize, k: usize, idx: usize) -> Result<Self> {
        check_dims(n, k)?;
        let mask = (1usize << n) - 1;
        let rows = (0..k).map(|i| ((idx >> ((k - 1 - i) * n)) & mask) as u64).collect();
        TupleState::new(n, k, rows)
    }

    /// Canonical index: rows packed row-major, row 1 most significant.
    pub fn index(&self) -> usize {
        self.rows.iter().fold(0usize, |acc, &r| (acc << self.n) | r as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Row index is 0-based.
    pub fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Bit of row i (0-based) at wire a (1-based).
    pub fn bit(&self, i: usize, a: usize) -> u8 {
        ((self.rows[i] >> (self.n - a)) & 1) as u8
    }

    pub fn hamming(&self, i: usize, j: usize) -> u32 {
        (self.rows[i] ^ self.rows[j]).count_ones()
    }

    pub fn rows_all_distinct(&self) -> bool {
        for i in 0..self.k {
            for j in i + 1..self.k {
                if self.rows[i] == self.rows[j] {
                    return false;
                }
            }
        }
        true
    }
}

fn check_dims(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || n * k > usize::BITS as usize - 2 {
        return Err(Error::Dimension(format!("unsupported dimensions n={n}, k={k}")));
    }
    Ok(())
}

pub fn state_count(n: usize, k: usize) -> Result<usize> {
    check_dims(n, k)?;
    Ok(1usize << (n * k))
}

/// Dense function on tuple states.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionVector {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl FunctionVector {
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != state_count(n, k)? {
            return Err(Error::Dimension(format!(
                "function vector needs 2^({n}*{k}) entries, got {}",
                values.len()
            )));
        }
        Ok(FunctionVector { n, k, values })
    }

    pub fn constant(n: usize, k: usize, c: f64) -> Result<Self> {
        Ok(FunctionVector { n, k, values: vec![c; state_count(n, k)?] })
    }

    pub fn basis(n: usize, k: usize, idx: usize) -> Result<Self> {
        let mut v = FunctionVector::constant(n, k, 0.0)?;
        v.values[idx] = 1.0;
        Ok(v)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Expectation inner product: averages over the state space.
    pub fn inner(&self, other: &FunctionVector) -> f64 {
        assert_eq!(self.dims(), other.dims());
        let total: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        total / self.values.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn add_assign(&mut self, other: &FunctionVector) {
        assert_eq!(self.dims(), other.dims());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn max_abs_diff(&self, other: &FunctionVector) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One wire subset per row; indexes a parity character.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierIndex {
    sets: Vec<Vec<usize>>,
}

impl FourierIndex {
    pub fn new(sets: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        for s in &sets {
            for w in s.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Parse("wire sets must be strictly ascending".into()));
                }
            }
            if s.iter().any(|&a| a == 0 || a > n) {
                return Err(Error::Dimension(format!("wire outside 1..={n}")));
            }
        }
        Ok(FourierIndex { sets })
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    /// Union of all row sets, sorted.
    pub fn support(&self) -> Vec<usize> {
        let mut u: Vec<usize> = self.sets.iter().flatten().copied().collect();
        u.sort_unstable();
        u.dedup();
        u
    }

    pub fn is_empty(&self) -> bool {
        self.sets.iter().all(Vec::is_empty)
    }
}

/// Parity character: bit 0 maps to +1, bit 1 to -1, multiplied over all
/// selected (row, wire) cells. The empty index is the constant 1.
pub fn chi_vector(idx: &FourierIndex, n: usize, k: usize) -> Result<FunctionVector> {
    if idx.k() != k {
        return Err(Error::Dimension(format!("character has {} rows, walk has {k}", idx.k())));
    }
    let dim = state_count(n, k)?;
    let mut mask = 0usize;
    for (i, set) in idx.sets().iter().enumerate() {
        for &a in set {
            if a == 0 || a > n {
                return Err(Error::Dimension(format!("wire {a} outside 1..={n}")));
            }
            mask |= 1 << ((k - 1 - i) * n + (n - a));
        }
    }
    let values = (0..dim)
        .map(|x| if (x & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 })
        .collect();
    FunctionVector::new(n, k, values)
}
