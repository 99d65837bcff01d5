//! Regions of tuple space by row-collision structure, and exact hitting
//! probabilities of walk steps into them.

use super::{state_count, FunctionVector, TupleState};
use crate::error::{Error, Result};
use crate::walk::OperatorSpec;

/// Classes by minimal pairwise Hamming distance between rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HammingClass {
    /// Some pair of rows equal.
    Equal0,
    /// Minimal pairwise distance exactly 1.
    Equal1,
    /// All pairs at distance 2 or more.
    AtLeast2,
}

/// Classes by collisions of row slices on a trailing window of wires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SuffixClass {
    /// Some pair of rows equal outright.
    Equal0,
    /// Rows distinct but two window slices collide.
    Collision,
    /// All window slices pairwise distinct.
    Safe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionScheme {
    Hamming,
    /// Window covers the `ell+1` wires ending one before the last wire.
    Suffix { ell: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    Hamming(HammingClass),
    Suffix(SuffixClass),
}

pub fn hamming_class(x: &TupleState) -> HammingClass {
    let mut min = u32::MAX;
    for i in 0..x.k() {
        for j in i + 1..x.k() {
            min = min.min(x.hamming(i, j));
        }
    }
    match min {
        0 => HammingClass::Equal0,
        1 => HammingClass::Equal1,
        _ => HammingClass::AtLeast2,
    }
}

/// Inclusive 1-indexed wire range of the suffix window.
pub fn suffix_window(n: usize, ell: usize) -> Result<(usize, usize)> {
    if ell == 0 || ell + 2 > n {
        return Err(Error::Dimension(format!(
            "window length {} does not fit before the last of {n} wires",
            ell + 1
        )));
    }
    Ok((n - ell - 1, n - 1))
}

fn window_mask(n: usize, ell: usize) -> Result<u64> {
    let (lo, hi) = suffix_window(n, ell)?;
    let mut mask = 0u64;
    for a in lo..=hi {
        mask |= 1 << (n - a);
    }
    Ok(mask)
}

pub fn suffix_class(x: &TupleState, ell: usize) -> Result<SuffixClass> {
    let mask = window_mask(x.n(), ell)?;
    let mut collision = false;
    for i in 0..x.k() {
        for j in i + 1..x.k() {
            let diff = x.row(i) ^ x.row(j);
            if diff == 0 {
                return Ok(SuffixClass::Equal0);
            }
            if diff & mask == 0 {
                collision = true;
            }
        }
    }
    Ok(if collision { SuffixClass::Collision } else { SuffixClass::Safe })
}

/// Witness coordinates: wires where some pair of rows differs in exactly
/// that one place. Nonempty exactly on the minimal-distance-1 class.
pub fn witness_coordinates(x: &TupleState) -> Vec<usize> {
    let n = x.n();
    let mut seen = vec![false; n + 1];
    for i in 0..x.k() {
        for j in i + 1..x.k() {
            let diff = x.row(i) ^ x.row(j);
            if diff.count_ones() == 1 {
                let a = n - diff.trailing_zeros() as usize;
                seen[a] = true;
            }
        }
    }
    (1..=n).filter(|&a| seen[a]).collect()
}

/// Finest-class assignment within the minimal-distance-1 region: the witness
/// coordinate if unique, otherwise the lexicographically least pair of
/// witness coordinates. `None` off the region.
pub fn tilde_class(x: &TupleState) -> Option<Vec<usize>> {
    if hamming_class(x) != HammingClass::Equal1 {
        return None;
    }
    let d = witness_coordinates(x);
    if d.len() == 1 {
        Some(d)
    } else {
        Some(vec![d[0], d[1]])
    }
}

pub fn classify_region(x: &TupleState, scheme: RegionScheme) -> Result<RegionLabel> {
    Ok(match scheme {
        RegionScheme::Hamming => RegionLabel::Hamming(hamming_class(x)),
        RegionScheme::Suffix { ell } => RegionLabel::Suffix(suffix_class(x, ell)?),
    })
}

/// 0/1 indicator of a region over all tuple states.
pub fn region_indicator(
    n: usize,
    k: usize,
    scheme: RegionScheme,
    label: RegionLabel,
) -> Result<FunctionVector> {
    let dim = state_count(n, k)?;
    let mut vals = vec![0.0f64; dim];
    for (idx, v) in vals.iter_mut().enumerate() {
        let x = TupleState::from_index(n, k, idx)?;
        if classify_region(&x, scheme)? == label {
            *v = 1.0;
        }
    }
    FunctionVector::new(n, k, vals)
}

/// 0/1 indicator of one tilde class.
pub fn tilde_indicator(n: usize, k: usize, class: &[usize]) -> Result<FunctionVector> {
    let dim = state_count(n, k)?;
    let mut vals = vec![0.0f64; dim];
    for (idx, v) in vals.iter_mut().enumerate() {
        let x = TupleState::from_index(n, k, idx)?;
        if tilde_class(&x).as_deref() == Some(class) {
            *v = 1.0;
        }
    }
    FunctionVector::new(n, k, vals)
}

/// Probability that the chain started at `x` lands in the support of
/// `target` after applying `steps` in order. Exact: pushes the indicator
/// back through the steps (last step first) and reads off the entry at `x`.
pub fn hit_probability(
    steps: &[OperatorSpec],
    x: &TupleState,
    target: &FunctionVector,
) -> Result<f64> {
    let mut f = target.clone();
    for spec in steps.iter().rev() {
        f = spec.apply(&f)?;
    }
    if f.dims() != (x.n(), x.k()) {
        return Err(Error::Dimension("state dims do not match target".into()));
    }
    Ok(f.values()[x.index()])
}

/// Exact probability of landing in a region after the given steps.
pub fn escape_probability(
    steps: &[OperatorSpec],
    x: &TupleState,
    scheme: RegionScheme,
    label: RegionLabel,
) -> Result<f64> {
    let target = region_indicator(x.n(), x.k(), scheme, label)?;
    hit_probability(steps, x, &target)
}

/// Worst-case one- and two-step escape probabilities between regions,
/// against the closed-form ceilings they must stay under. Everything is an
/// exact sum over the 2^{nk} states; nothing is sampled.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EscapeBoundsReport {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    /// Largest probability of entering the equal-rows region from outside
    /// it, under the leave-one-out and full shuffles. Must be exactly zero:
    /// permutations preserve row equality.
    pub zero_law_max: f64,
    /// Largest probability of staying in one's own finest distance-1 class
    /// under the leave-one-out shuffle.
    pub same_class_max: f64,
    /// 1/n + n k^2 / 2^(n-1)
    pub same_class_bound: f64,
    /// Largest probability of crossing into a different distance-1 class.
    pub cross_class_max: f64,
    /// n k^2 / 2^(n-1)
    pub cross_class_bound: f64,
    /// Largest summed probability, from the distance >= 2 region, of landing
    /// in the distance-1 region under leave-one-out plus under full shuffle.
    pub into_equal1_sum_max: f64,
    /// k^2 n / 2^(n-2)
    pub into_equal1_bound: f64,
    /// Largest probability, over all admissible two-step site pairs and all
    /// distinct-rows starts, of landing in the window-collision region.
    pub window_two_step_max: f64,
    /// k^2 / 2^(ell-2)
    pub window_two_step_bound: f64,
    pub all_hold: bool,
}

/// Admissible site pairs for the two-step window check: both sites contain
/// the window, and together they cover every wire.
fn window_site_pairs(n: usize, ell: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let (lo, hi) = suffix_window(n, ell)?;
    let window: Vec<usize> = (lo..=hi).collect();
    let free: Vec<usize> = (1..=n).filter(|a| !window.contains(a)).collect();
    let mut pairs = Vec::new();
    for ia in 0u32..1 << free.len() {
        for jb in 0u32..1 << free.len() {
            if ia | jb != (1 << free.len()) - 1 {
                continue;
            }
            let pick = |bits: u32| -> Vec<usize> {
                let mut site: Vec<usize> = window.clone();
                site.extend(free.iter().enumerate().filter(|(t, _)| bits >> t & 1 == 1).map(|(_, &a)| a));
                site.sort_unstable();
                site
            };
            pairs.push((pick(ia), pick(jb)));
        }
    }
    Ok(pairs)
}

pub fn escape_bounds_report(n: usize, k: usize, ell: usize, cap: usize) -> Result<EscapeBoundsReport> {
    let dim = state_count(n, k)?;
    if dim > cap {
        return Err(Error::SizeCap { dim, cap });
    }
    let r_loo = OperatorSpec::r_subset(n, k, n - 1)?;
    let r_full = OperatorSpec::r_full(n, k)?;
    let states: Vec<TupleState> =
        (0..dim).map(|idx| TupleState::from_index(n, k, idx)).collect::<Result<_>>()?;
    let classes: Vec<Option<Vec<usize>>> = states.iter().map(tilde_class).collect();

    let eq0 = region_indicator(n, k, RegionScheme::Hamming, RegionLabel::Hamming(HammingClass::Equal0))?;
    let into_eq0_loo = r_loo.apply(&eq0)?;
    let into_eq0_full = r_full.apply(&eq0)?;
    let mut zero_law_max = 0.0f64;
    for (idx, x) in states.iter().enumerate() {
        if hamming_class(x) != HammingClass::Equal0 {
            zero_law_max = zero_law_max
                .max(into_eq0_loo.values()[idx])
                .max(into_eq0_full.values()[idx]);
        }
    }

    let mut distinct_classes: Vec<Vec<usize>> = classes.iter().flatten().cloned().collect();
    distinct_classes.sort();
    distinct_classes.dedup();
    let mut same_class_max = 0.0f64;
    let mut cross_class_max = 0.0f64;
    for class in &distinct_classes {
        let into_class = r_loo.apply(&tilde_indicator(n, k, class)?)?;
        for (idx, c) in classes.iter().enumerate() {
            match c {
                Some(c) if c == class => same_class_max = same_class_max.max(into_class.values()[idx]),
                Some(_) => cross_class_max = cross_class_max.max(into_class.values()[idx]),
                None => {}
            }
        }
    }

    let eq1 = region_indicator(n, k, RegionScheme::Hamming, RegionLabel::Hamming(HammingClass::Equal1))?;
    let into_eq1_loo = r_loo.apply(&eq1)?;
    let into_eq1_full = r_full.apply(&eq1)?;
    let mut into_equal1_sum_max = 0.0f64;
    for (idx, x) in states.iter().enumerate() {
        if hamming_class(x) == HammingClass::AtLeast2 {
            into_equal1_sum_max =
                into_equal1_sum_max.max(into_eq1_loo.values()[idx] + into_eq1_full.values()[idx]);
        }
    }

    let coll = region_indicator(n, k, RegionScheme::Suffix { ell }, RegionLabel::Suffix(SuffixClass::Collision))?;
    let mut window_two_step_max = 0.0f64;
    for (site_i, site_j) in window_site_pairs(n, ell)? {
        let steps = [OperatorSpec::r_site(n, k, site_i)?, OperatorSpec::r_site(n, k, site_j)?];
        let mut f = coll.clone();
        for spec in steps.iter().rev() {
            f = spec.apply(&f)?;
        }
        for (idx, x) in states.iter().enumerate() {
            if x.rows_all_distinct() {
                window_two_step_max = window_two_step_max.max(f.values()[idx]);
            }
        }
    }

    let nf = n as f64;
    let kf = k as f64;
    let same_class_bound = 1.0 / nf + nf * kf * kf / 2f64.powi(n as i32 - 1);
    let cross_class_bound = nf * kf * kf / 2f64.powi(n as i32 - 1);
    let into_equal1_bound = kf * kf * nf / 2f64.powi(n as i32 - 2);
    let window_two_step_bound = kf * kf / 2f64.powi(ell as i32 - 2);
    let all_hold = zero_law_max == 0.0
        && same_class_max <= same_class_bound
        && cross_class_max <= cross_class_bound
        && into_equal1_sum_max <= into_equal1_bound
        && window_two_step_max <= window_two_step_bound;
    Ok(EscapeBoundsReport {
        n,
        k,
        ell,
        zero_law_max,
        same_class_max,
        same_class_bound,
        cross_class_max,
        cross_class_bound,
        into_equal1_sum_max,
        into_equal1_bound,
        window_two_step_max,
        window_two_step_bound,
        all_hold,
    })
}
