//! Markov operators induced on k-tuples by one random gate application.
//!
//! The R family applies a single random even permutation of the selected
//! column values simultaneously to all k rows (without replacement across
//! rows: rows with equal selected values stay equal, distinct stay distinct).
//! The Q family resamples selected columns of every row independently and
//! uniformly (with replacement). Both are exact: application averages over
//! pattern orbits, never over sampled gates.

use super::{state_count, FunctionVector, TupleState};
use crate::circuit::{brickwork_anchors, GateDist};
use crate::error::{Error, Result};
use crate::gate::{enumerate_des2_forms, Gate3};
use crate::linalg::DenseMatrix;
use itertools::Itertools;
use rayon::prelude::*;

/// Default cap on the number of tuple states for dense work.
pub const DEFAULT_STATE_CAP: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorSpec {
    /// One uniform even permutation of the values on a fixed wire subset.
    RSite { n: usize, k: usize, site: Vec<usize> },
    /// Uniform random m-subset of wires, then `RSite` on it.
    RSubset { n: usize, k: usize, m: usize },
    /// Uniform anchor from `anchors`, then `RSite` on the 3-wire window.
    RNn { n: usize, k: usize, anchors: Vec<usize> },
    /// Fair coin over the two layer parities, then independent gates on
    /// every window of that layer.
    RBrickwork { n: usize, k: usize, dist: GateDist },
    /// `RSite` on all wires.
    RFull { n: usize, k: usize },
    /// Independent uniform resampling of the selected columns of every row.
    QSite { n: usize, k: usize, site: Vec<usize> },
    /// Uniform column is kept, all others resampled.
    QLoo { n: usize, k: usize },
    /// Everything resampled: projection onto constants.
    QFull { n: usize, k: usize },
}

impl OperatorSpec {
    pub fn r_site(n: usize, k: usize, site: Vec<usize>) -> Result<Self> {
        let spec = OperatorSpec::RSite { n, k, site };
        spec.validate()?;
        Ok(spec)
    }

    pub fn r_subset(n: usize, k: usize, m: usize) -> Result<Self> {
        let spec = OperatorSpec::RSubset { n, k, m };
        spec.validate()?;
        Ok(spec)
    }

    /// Nearest-neighbor walk over all anchors 1..=n-2.
    pub fn r_nn(n: usize, k: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Architecture(n));
        }
        OperatorSpec::r_nn_anchors(n, k, (1..=n - 2).collect())
    }

    pub fn r_nn_anchors(n: usize, k: usize, anchors: Vec<usize>) -> Result<Self> {
        let spec = OperatorSpec::RNn { n, k, anchors };
        spec.validate()?;
        Ok(spec)
    }

    pub fn r_brickwork(n: usize, k: usize, dist: GateDist) -> Result<Self> {
        let spec = OperatorSpec::RBrickwork { n, k, dist };
        spec.validate()?;
        Ok(spec)
    }

    pub fn r_full(n: usize, k: usize) -> Result<Self> {
        let spec = OperatorSpec::RFull { n, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn q_site(n: usize, k: usize, site: Vec<usize>) -> Result<Self> {
        let spec = OperatorSpec::QSite { n, k, site };
        spec.validate()?;
        Ok(spec)
    }

    pub fn q_loo(n: usize, k: usize) -> Result<Self> {
        let spec = OperatorSpec::QLoo { n, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn q_full(n: usize, k: usize) -> Result<Self> {
        let spec = OperatorSpec::QFull { n, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            OperatorSpec::RSite { n, k, .. }
            | OperatorSpec::RSubset { n, k, .. }
            | OperatorSpec::RNn { n, k, .. }
            | OperatorSpec::RBrickwork { n, k, .. }
            | OperatorSpec::RFull { n, k }
            | OperatorSpec::QSite { n, k, .. }
            | OperatorSpec::QLoo { n, k }
            | OperatorSpec::QFull { n, k } => (n, k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = self.dims();
        state_count(n, k)?;
        match self {
            OperatorSpec::RSite { site, .. } => {
                check_site(site, n)?;
                check_regime(k, site.len())
            }
            OperatorSpec::RSubset { m, .. } => {
                if *m == 0 || *m > n {
                    return Err(Error::Dimension(format!("subset size {m} outside 1..={n}")));
                }
                check_regime(k, *m)
            }
            OperatorSpec::RNn { anchors, .. } => {
                if n < 3 {
                    return Err(Error::Architecture(n));
                }
                if anchors.is_empty() || anchors.iter().any(|&a| a == 0 || a > n - 2) {
                    return Err(Error::Dimension(format!(
                        "anchors {anchors:?} outside 1..={}",
                        n - 2
                    )));
                }
                check_regime(k, 3)
            }
            OperatorSpec::RBrickwork { dist, .. } => {
                if n < 3 {
                    return Err(Error::Architecture(n));
                }
                match dist {
                    GateDist::Alternating => check_regime(k, 3),
                    GateDist::Des2 => Ok(()),
                }
            }
            OperatorSpec::RFull { .. } => check_regime(k, n),
            OperatorSpec::QSite { site, .. } => check_site(site, n),
            OperatorSpec::QLoo { .. } | OperatorSpec::QFull { .. } => Ok(()),
        }
    }

    /// Projection operators: applying twice equals applying once.
    pub fn is_projector_family(&self) -> bool {
        matches!(
            self,
            OperatorSpec::RSite { .. }
                | OperatorSpec::RFull { .. }
                | OperatorSpec::QSite { .. }
                | OperatorSpec::QFull { .. }
        )
    }

    /// Canonical text form, re-parsed by `parse_operator`.
    pub fn text(&self) -> String {
        match self {
            OperatorSpec::RSite { site, .. } => format!("R[site={}]", set_text(site)),
            OperatorSpec::RSubset { m, .. } => format!("R[m={m}]"),
            OperatorSpec::RNn { n, anchors, .. } => {
                let full: Vec<usize> = (1..=n - 2).collect();
                if *anchors == full {
                    "R[nn]".into()
                } else if is_contiguous(anchors) {
                    format!("R[nn,I={}..{}]", anchors[0], anchors[anchors.len() - 1])
                } else {
                    format!("R[nn,I={}]", set_text(anchors))
                }
            }
            OperatorSpec::RBrickwork { dist, .. } => match dist {
                GateDist::Alternating => "R[brickwork,dist=alt]".into(),
                GateDist::Des2 => "R[brickwork,dist=des2]".into(),
            },
            OperatorSpec::RFull { .. } => "R[full]".into(),
            OperatorSpec::QSite { site, .. } => format!("Q[site={}]", set_text(site)),
            OperatorSpec::QLoo { .. } => "Q[loo]".into(),
            OperatorSpec::QFull { .. } => "Q[full]".into(),
        }
    }

    /// Exact application to a function vector.
    pub fn apply(&self, f: &FunctionVector) -> Result<FunctionVector> {
        let (n, k) = self.dims();
        if f.dims() != (n, k) {
            return Err(Error::Dimension(format!(
                "operator is on (n,k)=({n},{k}), vector on {:?}",
                f.dims()
            )));
        }
        self.validate()?;
        let out = match self {
            OperatorSpec::RSite { site, .. } => apply_r_site(n, k, site, f.values())?,
            OperatorSpec::RFull { .. } => {
                let site: Vec<usize> = (1..=n).collect();
                apply_r_site(n, k, &site, f.values())?
            }
            OperatorSpec::RSubset { m, .. } => {
                let subsets: Vec<Vec<usize>> = (1..=n).combinations(*m).collect();
                average_applies(f.values().len(), subsets.len(), |i| {
                    apply_r_site(n, k, &subsets[i], f.values())
                })?
            }
            OperatorSpec::RNn { anchors, .. } => {
                average_applies(f.values().len(), anchors.len(), |i| {
                    let a = anchors[i];
                    apply_r_site(n, k, &[a, a + 1, a + 2], f.values())
                })?
            }
            OperatorSpec::RBrickwork { dist, .. } => {
                average_applies(f.values().len(), 2, |p| {
                    apply_brickwork_layer(n, k, p as u8, *dist, f.values())
                })?
            }
            OperatorSpec::QSite { site, .. } => apply_q_site(n, k, site, f.values()),
            OperatorSpec::QLoo { .. } => average_applies(f.values().len(), n, |i| {
                let site: Vec<usize> = (1..=n).filter(|&a| a != i + 1).collect();
                Ok(apply_q_site(n, k, &site, f.values()))
            })?,
            OperatorSpec::QFull { .. } => {
                let site: Vec<usize> = (1..=n).collect();
                apply_q_site(n, k, &site, f.values())
            }
        };
        FunctionVector::new(n, k, out)
    }

    /// Exact one-step transition probability between two states.
    pub fn transition(&self, x: &TupleState, y: &TupleState) -> Result<f64> {
        let (n, k) = self.dims();
        if (x.n(), x.k()) != (n, k) || (y.n(), y.k()) != (n, k) {
            return Err(Error::Dimension("state dims do not match operator".into()));
        }
        self.validate()?;
        Ok(match self {
            OperatorSpec::RSite { site, .. } => transition_r_site(x, y, site),
            OperatorSpec::RFull { .. } => {
                let site: Vec<usize> = (1..=n).collect();
                transition_r_site(x, y, &site)
            }
            OperatorSpec::RSubset { m, .. } => {
                let mut total = 0.0;
                let mut count = 0usize;
                for site in (1..=n).combinations(*m) {
                    total += transition_r_site(x, y, &site);
                    count += 1;
                }
                total / count as f64
            }
            OperatorSpec::RNn { anchors, .. } => {
                let total: f64 = anchors
                    .iter()
                    .map(|&a| transition_r_site(x, y, &[a, a + 1, a + 2]))
                    .sum();
                total / anchors.len() as f64
            }
            OperatorSpec::RBrickwork { dist, .. } => {
                0.5 * transition_brickwork_layer(x, y, 0, *dist)
                    + 0.5 * transition_brickwork_layer(x, y, 1, *dist)
            }
            OperatorSpec::QSite { site, .. } => transition_q_site(x, y, site),
            OperatorSpec::QLoo { .. } => {
                let mut total = 0.0;
                for a in 1..=n {
                    let site: Vec<usize> = (1..=n).filter(|&b| b != a).collect();
                    total += transition_q_site(x, y, &site);
                }
                total / n as f64
            }
            OperatorSpec::QFull { .. } => {
                let dim = state_count(n, k)? as f64;
                1.0 / dim
            }
        })
    }

    /// Dense symmetric matrix of the operator in the counting basis.
    pub fn materialize(&self, cap: usize) -> Result<DenseMatrix> {
        let (n, k) = self.dims();
        let dim = state_count(n, k)?;
        if dim > cap {
            return Err(Error::SizeCap { dim, cap });
        }
        self.validate()?;
        let mut data = vec![0.0f64; dim * dim];
        data.par_chunks_mut(dim).enumerate().try_for_each(|(row, out)| -> Result<()> {
            let y = TupleState::from_index(n, k, row)?;
            for (col, slot) in out.iter_mut().enumerate() {
                let x = TupleState::from_index(n, k, col)?;
                // column-stochastic convention: entry (row, col) = P(col -> row),
                // so materialize(spec).apply(f) matches spec.apply(f)
                *slot = self.transition(&x, &y)?;
            }
            Ok(())
        })?;
        let mut m = DenseMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, data[i * dim + j]);
            }
        }
        Ok(m)
    }
}

fn check_site(site: &[usize], n: usize) -> Result<()> {
    for w in site.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Dimension(format!("site {site:?} must be strictly ascending")));
        }
    }
    if site.iter().any(|&a| a == 0 || a > n) {
        return Err(Error::Dimension(format!("site {site:?} outside 1..={n}")));
    }
    Ok(())
}

/// The without-replacement law is exact only while even and odd extensions
/// both exist, i.e. k + 2 <= 2^|S|.
fn check_regime(k: usize, s: usize) -> Result<()> {
    let values = 1usize << s.min(40);
    if k + 2 > values {
        return Err(Error::DegenerateRegime { k, values });
    }
    Ok(())
}

fn set_text(site: &[usize]) -> String {
    let inner = site.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    format!("{{{inner}}}")
}

fn is_contiguous(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[1] == w[0] + 1) && !v.is_empty()
}

/// Per-row split of an n-bit row into site bits and off-site bits.
/// `sval` keeps site wires in ascending order, first wire most significant;
/// `oval` does the same for the complement; `asm` reassembles.
struct SiteTables {
    s: usize,
    sval: Vec<u32>,
    oval: Vec<u32>,
    asm: Vec<u64>,
}

fn site_tables(n: usize, site: &[usize]) -> SiteTables {
    let s = site.len();
    let rows = 1usize << n;
    let off: Vec<usize> = (1..=n).filter(|a| !site.contains(a)).collect();
    let mut sval = vec![0u32; rows];
    let mut oval = vec![0u32; rows];
    let mut asm = vec![0u64; rows];
    for r in 0..rows {
        let mut sv = 0u32;
        for &a in site {
            sv = (sv << 1) | ((r >> (n - a)) & 1) as u32;
        }
        let mut ov = 0u32;
        for &a in &off {
            ov = (ov << 1) | ((r >> (n - a)) & 1) as u32;
        }
        sval[r] = sv;
        oval[r] = ov;
        asm[((ov as usize) << s) | sv as usize] = r as u64;
    }
    SiteTables { s, sval, oval, asm }
}

/// Exact application of `RSite`: the image of a state under a uniform even
/// permutation of site values is uniform over the states with the same
/// off-site bits and the same equality pattern of site values. So the result
/// is the orbit average, computed in two linear passes keyed by the orbit's
/// canonical state (site values replaced by first-occurrence class labels).
fn apply_r_site(n: usize, k: usize, site: &[usize], f: &[f64]) -> Result<Vec<f64>> {
    check_regime(k, site.len())?;
    let t = site_tables(n, site);
    let dim = f.len();
    let row_mask = (1usize << n) - 1;

    let canon = |x: usize| -> usize {
        let mut svals = [0u32; 32];
        let mut classes = [0u32; 32];
        let mut next = 0u32;
        let mut out = 0usize;
        for i in 0..k {
            let row = (x >> ((k - 1 - i) * n)) & row_mask;
            let sv = t.sval[row];
            let mut class = next;
            for j in 0..i {
                if svals[j] == sv {
                    class = classes[j];
                    break;
                }
            }
            if class == next {
                next += 1;
            }
            svals[i] = sv;
            classes[i] = class;
            let crow = t.asm[((t.oval[row] as usize) << t.s) | class as usize] as usize;
            out = (out << n) | crow;
        }
        out
    };

    let mut sums = vec![0.0f64; dim];
    let mut counts = vec![0u32; dim];
    for (x, &v) in f.iter().enumerate() {
        let c = canon(x);
        sums[c] += v;
        counts[c] += 1;
    }
    let out = (0..dim).map(|x| {
        let c = canon(x);
        sums[c] / counts[c] as f64
    });
    Ok(out.collect())
}

/// Independent uniform resampling of site columns: fiber average.
fn apply_q_site(n: usize, k: usize, site: &[usize], f: &[f64]) -> Vec<f64> {
    if site.is_empty() {
        return f.to_vec();
    }
    let t = site_tables(n, site);
    let dim = f.len();
    let row_mask = (1usize << n) - 1;

    let fiber = |x: usize| -> usize {
        let mut out = 0usize;
        for i in 0..k {
            let row = (x >> ((k - 1 - i) * n)) & row_mask;
            out = (out << n) | t.asm[(t.oval[row] as usize) << t.s] as usize;
        }
        out
    };

    let mut sums = vec![0.0f64; dim];
    for (x, &v) in f.iter().enumerate() {
        sums[fiber(x)] += v;
    }
    let count = 1u64 << (t.s * k);
    (0..dim).map(|x| sums[fiber(x)] / count as f64).collect()
}

/// One brickwork layer: product of commuting window factors.
fn apply_brickwork_layer(
    n: usize,
    k: usize,
    parity: u8,
    dist: GateDist,
    f: &[f64],
) -> Result<Vec<f64>> {
    let mut cur = f.to_vec();
    for a in brickwork_anchors(n, parity) {
        let site = [a, a + 1, a + 2];
        cur = match dist {
            GateDist::Alternating => apply_r_site(n, k, &site, &cur)?,
            GateDist::Des2 => apply_des2_site(n, k, &site, &cur),
        };
    }
    Ok(cur)
}

/// Average over the 48 controlled gates applied to the window columns of
/// every row. Unlike the even-uniform factor this is not a projection.
fn apply_des2_site(n: usize, k: usize, site: &[usize; 3], f: &[f64]) -> Vec<f64> {
    let t = site_tables(n, site.as_slice());
    let rows = 1usize << n;
    let row_mask = (1usize << n) - 1;
    let gates: Vec<Gate3> = enumerate_des2_forms().iter().map(|d| d.gate()).collect();
    // per-gate row image tables
    let img: Vec<Vec<u64>> = gates
        .iter()
        .map(|g| {
            (0..rows)
                .map(|r| {
                    let sv = g.image(t.sval[r] as u8) as usize;
                    t.asm[((t.oval[r] as usize) << t.s) | sv]
                })
                .collect()
        })
        .collect();

    let dim = f.len();
    let mut out = vec![0.0f64; dim];
    for (x, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for tbl in &img {
            let mut y = 0usize;
            for i in 0..k {
                let row = (x >> ((k - 1 - i) * n)) & row_mask;
                y = (y << n) | tbl[row] as usize;
            }
            acc += f[y];
        }
        *slot = acc / gates.len() as f64;
    }
    out
}

/// Ordered average of independent exact applications; the reduction order is
/// fixed, so results do not depend on scheduling.
fn average_applies(
    dim: usize,
    count: usize,
    apply_one: impl Fn(usize) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<f64>> {
    let parts: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(&apply_one)
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0f64; dim];
    for part in &parts {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    let inv = 1.0 / count as f64;
    for o in &mut out {
        *o *= inv;
    }
    Ok(out)
}

/// Closed-form site transition: states must agree off the site, the map of
/// site values must be a well-defined injection, and then the probability is
/// the inverse falling factorial over the d distinct source values.
fn transition_r_site(x: &TupleState, y: &TupleState, site: &[usize]) -> f64 {
    let n = x.n();
    let k = x.k();
    let s = site.len();
    let values = 1u64 << s;
    let mut site_mask = 0u64;
    for &a in site {
        site_mask |= 1 << (n - a);
    }
    let mut xv = [0u64; 32];
    let mut yv = [0u64; 32];
    let mut d = 0usize;
    for i in 0..k {
        if (x.row(i) ^ y.row(i)) & !site_mask != 0 {
            return 0.0;
        }
        let sx = x.row(i) & site_mask;
        let sy = y.row(i) & site_mask;
        let mut found = false;
        for j in 0..d {
            if xv[j] == sx {
                if yv[j] != sy {
                    return 0.0; // not a function
                }
                found = true;
                break;
            }
            if yv[j] == sy {
                return 0.0; // not injective
            }
        }
        if !found {
            xv[d] = sx;
            yv[d] = sy;
            d += 1;
        }
    }
    let mut p = 1.0;
    for i in 0..d {
        p /= (values - i as u64) as f64;
    }
    p
}

fn transition_q_site(x: &TupleState, y: &TupleState, site: &[usize]) -> f64 {
    let n = x.n();
    let mut site_mask = 0u64;
    for &a in site {
        site_mask |= 1 << (n - a);
    }
    for i in 0..x.k() {
        if (x.row(i) ^ y.row(i)) & !site_mask != 0 {
            return 0.0;
        }
    }
    let per_row = 1.0 / (1u64 << site.len()) as f64;
    per_row.powi(x.k() as i32)
}

fn transition_brickwork_layer(x: &TupleState, y: &TupleState, parity: u8, dist: GateDist) -> f64 {
    let n = x.n();
    let anchors = brickwork_anchors(n, parity);
    let mut covered = 0u64;
    for &a in &anchors {
        for b in a..a + 3 {
            covered |= 1 << (n - b);
        }
    }
    for i in 0..x.k() {
        if (x.row(i) ^ y.row(i)) & !covered != 0 {
            return 0.0;
        }
    }
    let mut p = 1.0;
    for &a in &anchors {
        let site = [a, a + 1, a + 2];
        let local = match dist {
            GateDist::Alternating => transition_r_site(x, y, &site),
            GateDist::Des2 => transition_des2_site(x, y, &site),
        };
        if local == 0.0 {
            return 0.0;
        }
        p *= local;
    }
    p
}

fn transition_des2_site(x: &TupleState, y: &TupleState, site: &[usize; 3]) -> f64 {
    let n = x.n();
    let k = x.k();
    let mut xloc = [0u8; 32];
    let mut yloc = [0u8; 32];
    for i in 0..k {
        xloc[i] = (x.bit(i, site[0]) << 2) | (x.bit(i, site[1]) << 1) | x.bit(i, site[2]);
        yloc[i] = (y.bit(i, site[0]) << 2) | (y.bit(i, site[1]) << 1) | y.bit(i, site[2]);
        let mut same = x.row(i) ^ y.row(i);
        for &a in site {
            same &= !(1 << (n - a));
        }
        if same != 0 {
            return 0.0;
        }
    }
    let mut hits = 0usize;
    for form in enumerate_des2_forms() {
        let g = form.gate();
        if (0..k).all(|i| g.image(xloc[i]) == yloc[i]) {
            hits += 1;
        }
    }
    hits as f64 / 48.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::enumerate_alternating;
    use crate::walk::state_count;

    fn all_specs(n: usize, k: usize) -> Vec<OperatorSpec> {
        vec![
            OperatorSpec::r_site(n, k, vec![1, 2, 3]).unwrap(),
            OperatorSpec::r_subset(n, k, n - 1).unwrap(),
            OperatorSpec::r_nn(n, k).unwrap(),
            OperatorSpec::r_brickwork(n, k, GateDist::Alternating).unwrap(),
            OperatorSpec::r_brickwork(n, k, GateDist::Des2).unwrap(),
            OperatorSpec::r_full(n, k).unwrap(),
            OperatorSpec::q_loo(n, k).unwrap(),
            OperatorSpec::q_full(n, k).unwrap(),
        ]
    }

    #[test]
    fn constants_are_fixed_by_every_operator() {
        for (n, k) in [(3, 1), (3, 2), (4, 2)] {
            let one = FunctionVector::constant(n, k, 1.0).unwrap();
            for spec in all_specs(n, k) {
                let out = spec.apply(&one).unwrap();
                assert!(
                    out.max_abs_diff(&one) < 1e-14,
                    "{} does not fix constants",
                    spec.text()
                );
            }
        }
    }

    #[test]
    fn full_shuffle_on_single_rows_is_global_mean() {
        // k=1: a uniform even permutation of all values takes any value to a
        // uniform value, so R[full] averages the function
        let n = 3;
        let f = FunctionVector::new(n, 1, (0..8).map(|x| x as f64).collect()).unwrap();
        let spec = OperatorSpec::r_full(n, 1).unwrap();
        let out = spec.apply(&f).unwrap();
        for &v in out.values() {
            assert!((v - 3.5).abs() < 1e-14);
        }
    }

    /// Ground-truth oracle: enumerate all 20160 even permutations and average
    /// the permuted basis vector directly.
    #[test]
    fn site_shuffle_matches_group_enumeration() {
        let n = 3;
        let k = 2;
        let dim = state_count(n, k).unwrap();
        let spec = OperatorSpec::r_site(n, k, vec![1, 2, 3]).unwrap();
        let gates = enumerate_alternating();
        for basis_idx in [0usize, 9, 27, 63, 40] {
            let f = FunctionVector::basis(n, k, basis_idx).unwrap();
            let got = spec.apply(&f).unwrap();
            let mut expect = vec![0.0f64; dim];
            for g in &gates {
                // (R f)(x) = E_g f(g x); here f is an indicator, so each x
                // whose image under g is the basis state picks up 1/|group|
                for (x, slot) in expect.iter_mut().enumerate() {
                    let x1 = (x >> n) as u8;
                    let x2 = (x & ((1 << n) - 1)) as u8;
                    let gx = ((g.image(x1) as usize) << n) | g.image(x2) as usize;
                    if gx == basis_idx {
                        *slot += 1.0;
                    }
                }
            }
            for e in &mut expect {
                *e /= gates.len() as f64;
            }
            for (x, e) in expect.iter().enumerate() {
                assert!(
                    (got.values()[x] - e).abs() < 1e-12,
                    "basis {basis_idx}, state {x}: {} vs {}",
                    got.values()[x],
                    e
                );
            }
        }
    }

    #[test]
    fn transition_rows_sum_to_one() {
        for (n, k) in [(3, 1), (3, 2)] {
            let dim = state_count(n, k).unwrap();
            for spec in all_specs(n, k) {
                for xi in 0..dim {
                    let x = TupleState::from_index(n, k, xi).unwrap();
                    let mut total = 0.0;
                    for yi in 0..dim {
                        let y = TupleState::from_index(n, k, yi).unwrap();
                        total += spec.transition(&x, &y).unwrap();
                    }
                    assert!(
                        (total - 1.0).abs() < 1e-12,
                        "{} row {xi} sums to {total}",
                        spec.text()
                    );
                }
            }
        }
    }

    #[test]
    fn transition_is_symmetric() {
        let n = 4;
        let k = 2;
        let dim = state_count(n, k).unwrap();
        let mut rng = crate::rng::seeded(23);
        use rand::Rng;
        for spec in all_specs(n, k) {
            for _ in 0..200 {
                let xi = rng.gen_range(0..dim);
                let yi = rng.gen_range(0..dim);
                let x = TupleState::from_index(n, k, xi).unwrap();
                let y = TupleState::from_index(n, k, yi).unwrap();
                let fwd = spec.transition(&x, &y).unwrap();
                let bwd = spec.transition(&y, &x).unwrap();
                assert!((fwd - bwd).abs() < 1e-15, "{}", spec.text());
            }
        }
    }

    #[test]
    fn known_transition_values() {
        // two distinct rows on the full site of n=3: d=2, probability 1/(8*7)
        let x = TupleState::new(3, 2, vec![0b000, 0b001]).unwrap();
        let y = TupleState::new(3, 2, vec![0b101, 0b110]).unwrap();
        let spec = OperatorSpec::r_site(3, 2, vec![1, 2, 3]).unwrap();
        assert_eq!(spec.transition(&x, &y).unwrap(), 1.0 / 56.0);

        // merging two distinct rows is impossible without replacement
        let merged = TupleState::new(3, 2, vec![0b101, 0b101]).unwrap();
        assert_eq!(spec.transition(&x, &merged).unwrap(), 0.0);

        // equal rows must stay equal
        let eq = TupleState::new(3, 2, vec![0b011, 0b011]).unwrap();
        let split = TupleState::new(3, 2, vec![0b011, 0b100]).unwrap();
        assert_eq!(spec.transition(&eq, &split).unwrap(), 0.0);
        assert_eq!(spec.transition(&eq, &merged).unwrap(), 1.0 / 8.0);

        // with replacement, merging is allowed
        let q = OperatorSpec::q_site(3, 2, vec![1, 2, 3]).unwrap();
        assert_eq!(q.transition(&x, &merged).unwrap(), 1.0 / 64.0);
    }

    #[test]
    fn materialize_agrees_with_apply_on_basis_vectors() {
        for (n, k) in [(3, 2), (4, 2)] {
            let dim = state_count(n, k).unwrap();
            for spec in all_specs(n, k) {
                let m = spec.materialize(DEFAULT_STATE_CAP).unwrap();
                for idx in (0..dim).step_by(7) {
                    let e = FunctionVector::basis(n, k, idx).unwrap();
                    let via_apply = spec.apply(&e).unwrap();
                    let via_matrix = m.apply(e.values());
                    for (x, v) in via_matrix.iter().enumerate() {
                        assert!(
                            (via_apply.values()[x] - v).abs() < 1e-12,
                            "{} basis {idx} state {x}",
                            spec.text()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn projector_specs_are_idempotent_in_matrix_form() {
        let n = 4;
        let k = 2;
        for spec in [
            OperatorSpec::r_site(n, k, vec![1, 2, 3]).unwrap(),
            OperatorSpec::r_full(n, k).unwrap(),
            OperatorSpec::q_site(n, k, vec![2, 4]).unwrap(),
            OperatorSpec::q_full(n, k).unwrap(),
        ] {
            assert!(spec.is_projector_family());
            let m = spec.materialize(DEFAULT_STATE_CAP).unwrap();
            let mm = m.matmul(&m);
            assert!(mm.max_abs_diff(&m) < 1e-12, "{}", spec.text());
        }
        assert!(!OperatorSpec::r_nn(n, k).unwrap().is_projector_family());
    }

    #[test]
    fn degenerate_regime_is_rejected() {
        // k=7 tuples over 8 site values: no room for both parities
        assert!(matches!(
            OperatorSpec::r_site(3, 7, vec![1, 2, 3]),
            Err(Error::DegenerateRegime { .. })
        ));
        // k=6 is the boundary and fine
        assert!(OperatorSpec::r_site(3, 6, vec![1, 2, 3]).is_ok());
    }

    #[test]
    fn degenerate_transitions_near_group_size() {
        // exhaustive check that the closed form matches group enumeration
        // on a 1-wire site (4 even permutations of 2 values... none), so use
        // the 2-wire site: A_4 has 12 elements, k <= 2 valid
        let spec = OperatorSpec::r_site(3, 2, vec![1, 3]).unwrap();
        let x = TupleState::new(3, 2, vec![0b000, 0b101]).unwrap();
        // site values: row0 -> (0,0)=0b00, row1 -> (1,1)=0b11; distinct, d=2
        let y = TupleState::new(3, 2, vec![0b001, 0b100]).unwrap();
        // y site values: row0 -> 0b01, row1 -> 0b10; off-site (wire 2) kept
        assert_eq!(spec.transition(&x, &y).unwrap(), 1.0 / 12.0);
    }

    #[test]
    fn text_forms_are_canonical() {
        assert_eq!(OperatorSpec::r_site(4, 2, vec![1, 2, 3]).unwrap().text(), "R[site={1,2,3}]");
        assert_eq!(OperatorSpec::r_subset(4, 2, 3).unwrap().text(), "R[m=3]");
        assert_eq!(OperatorSpec::r_nn(4, 2).unwrap().text(), "R[nn]");
        assert_eq!(
            OperatorSpec::r_nn_anchors(5, 2, vec![1, 2]).unwrap().text(),
            "R[nn,I=1..2]"
        );
        assert_eq!(OperatorSpec::r_full(4, 2).unwrap().text(), "R[full]");
        assert_eq!(OperatorSpec::q_loo(4, 2).unwrap().text(), "Q[loo]");
    }
}
