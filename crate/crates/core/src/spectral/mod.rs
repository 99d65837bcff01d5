//! Spectral analysis of walk operators: dense symmetric eigensolving, power
//! iteration on matrix-free operator expressions, spectral gaps, the PSD
//! order, and mixing metrics.

mod parse;

pub use parse::{parse_expression, parse_query, Query};

use crate::circuit::GateDist;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, DenseMatrix, JACOBI_OFF_THRESHOLD};
use crate::rng;
use crate::walk::{
    chi_vector, state_count, FourierIndex, FunctionVector, OperatorSpec, TupleState,
};
use rand::Rng;
use serde::Serialize;

/// Eigenvalues closer than this are one distinct eigenvalue.
pub const EIGENVALUE_MERGE_TOL: f64 = 1e-9;
/// Symmetry slack accepted by the dense symmetric solver.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack accepted when testing PSD dominance.
pub const PSD_TOL: f64 = 1e-10;

/// Formal combination of walk operators. Products apply the rightmost
/// factor first.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorExpr {
    Identity { n: usize, k: usize },
    Leaf(OperatorSpec),
    Scale(f64, Box<OperatorExpr>),
    Sum(Vec<OperatorExpr>),
    Product(Vec<OperatorExpr>),
    Power(Box<OperatorExpr>, u32),
}

impl OperatorExpr {
    pub fn identity(n: usize, k: usize) -> Self {
        OperatorExpr::Identity { n, k }
    }

    pub fn leaf(spec: OperatorSpec) -> Self {
        OperatorExpr::Leaf(spec)
    }

    /// Id - expr.
    pub fn laplacian(e: OperatorExpr) -> Result<Self> {
        let (n, k) = e.dims()?;
        Ok(OperatorExpr::identity(n, k) - e)
    }

    /// spec - full shuffle, the deviation whose norm is the design error.
    pub fn minus_full(spec: &OperatorSpec) -> Result<Self> {
        let (n, k) = spec.dims();
        Ok(OperatorExpr::leaf(spec.clone()) - OperatorExpr::leaf(OperatorSpec::r_full(n, k)?))
    }

    pub fn dims(&self) -> Result<(usize, usize)> {
        match self {
            OperatorExpr::Identity { n, k } => Ok((*n, *k)),
            OperatorExpr::Leaf(spec) => Ok(spec.dims()),
            OperatorExpr::Scale(_, e) => e.dims(),
            OperatorExpr::Power(e, _) => e.dims(),
            OperatorExpr::Sum(es) | OperatorExpr::Product(es) => {
                let mut dims = None;
                for e in es {
                    let d = e.dims()?;
                    match dims {
                        None => dims = Some(d),
                        Some(prev) if prev != d => {
                            return Err(Error::Dimension(format!(
                                "expression mixes shapes {prev:?} and {d:?}"
                            )))
                        }
                        _ => {}
                    }
                }
                dims.ok_or_else(|| Error::Dimension("empty expression".into()))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        match self {
            OperatorExpr::Identity { .. } => Ok(()),
            OperatorExpr::Leaf(spec) => spec.validate(),
            OperatorExpr::Scale(c, e) => {
                if !c.is_finite() {
                    return Err(Error::Dimension(format!("non-finite coefficient {c}")));
                }
                e.validate()
            }
            OperatorExpr::Power(e, _) => e.validate(),
            OperatorExpr::Sum(es) | OperatorExpr::Product(es) => {
                es.iter().try_for_each(OperatorExpr::validate)
            }
        }
    }

    /// Re-parsable text form.
    pub fn text(&self) -> String {
        match self {
            OperatorExpr::Identity { .. } => "Id".into(),
            OperatorExpr::Leaf(spec) => spec.text(),
            OperatorExpr::Scale(c, e) => format!("{c}*({})", e.text()),
            OperatorExpr::Sum(es) => {
                let inner = es.iter().map(OperatorExpr::text).collect::<Vec<_>>().join(" + ");
                format!("({inner})")
            }
            OperatorExpr::Product(es) => {
                let inner = es.iter().map(OperatorExpr::text).collect::<Vec<_>>().join(" * ");
                format!("({inner})")
            }
            OperatorExpr::Power(e, p) => format!("({})^{p}", e.text()),
        }
    }

    pub fn apply(&self, f: &FunctionVector) -> Result<FunctionVector> {
        match self {
            OperatorExpr::Identity { n, k } => {
                check_shape(f, *n, *k)?;
                Ok(f.clone())
            }
            OperatorExpr::Leaf(spec) => spec.apply(f),
            OperatorExpr::Scale(c, e) => {
                let mut out = e.apply(f)?;
                out.scale(*c);
                Ok(out)
            }
            OperatorExpr::Sum(es) => {
                let (n, k) = self.dims()?;
                check_shape(f, n, k)?;
                let mut out = FunctionVector::constant(n, k, 0.0)?;
                for e in es {
                    out.add_assign(&e.apply(f)?);
                }
                Ok(out)
            }
            OperatorExpr::Product(es) => {
                let mut cur = f.clone();
                for e in es.iter().rev() {
                    cur = e.apply(&cur)?;
                }
                Ok(cur)
            }
            OperatorExpr::Power(e, p) => {
                let mut cur = f.clone();
                for _ in 0..*p {
                    cur = e.apply(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    /// Application of the adjoint. Every leaf is self-adjoint, so only
    /// product order changes.
    pub fn adjoint_apply(&self, f: &FunctionVector) -> Result<FunctionVector> {
        match self {
            OperatorExpr::Identity { .. } | OperatorExpr::Leaf(_) => self.apply(f),
            OperatorExpr::Scale(c, e) => {
                let mut out = e.adjoint_apply(f)?;
                out.scale(*c);
                Ok(out)
            }
            OperatorExpr::Sum(es) => {
                let (n, k) = self.dims()?;
                check_shape(f, n, k)?;
                let mut out = FunctionVector::constant(n, k, 0.0)?;
                for e in es {
                    out.add_assign(&e.adjoint_apply(f)?);
                }
                Ok(out)
            }
            OperatorExpr::Product(es) => {
                let mut cur = f.clone();
                for e in es {
                    cur = e.adjoint_apply(&cur)?;
                }
                Ok(cur)
            }
            OperatorExpr::Power(e, p) => {
                let mut cur = f.clone();
                for _ in 0..*p {
                    cur = e.adjoint_apply(&cur)?;
                }
                Ok(cur)
            }
        }
    }

    pub fn materialize(&self, cap: usize) -> Result<DenseMatrix> {
        match self {
            OperatorExpr::Identity { n, k } => {
                let dim = state_count(*n, *k)?;
                if dim > cap {
                    return Err(Error::SizeCap { dim, cap });
                }
                Ok(DenseMatrix::identity(dim))
            }
            OperatorExpr::Leaf(spec) => spec.materialize(cap),
            OperatorExpr::Scale(c, e) => Ok(e.materialize(cap)?.scaled(*c)),
            OperatorExpr::Sum(es) => {
                let mut out: Option<DenseMatrix> = None;
                for e in es {
                    let m = e.materialize(cap)?;
                    match &mut out {
                        None => out = Some(m),
                        Some(acc) => acc.add_assign_scaled(&m, 1.0),
                    }
                }
                out.ok_or_else(|| Error::Dimension("empty expression".into()))
            }
            OperatorExpr::Product(es) => {
                let mut out: Option<DenseMatrix> = None;
                for e in es.iter().rev() {
                    let m = e.materialize(cap)?;
                    out = Some(match out {
                        None => m,
                        // accumulated acc applies first, m applies after
                        Some(acc) => m.matmul(&acc),
                    });
                }
                out.ok_or_else(|| Error::Dimension("empty expression".into()))
            }
            OperatorExpr::Power(e, p) => {
                let (n, k) = e.dims()?;
                let dim = state_count(n, k)?;
                if dim > cap {
                    return Err(Error::SizeCap { dim, cap });
                }
                let base = e.materialize(cap)?;
                let mut out = DenseMatrix::identity(dim);
                for _ in 0..*p {
                    out = base.matmul(&out);
                }
                Ok(out)
            }
        }
    }
}

impl std::ops::Sub for OperatorExpr {
    type Output = OperatorExpr;

    fn sub(self, rhs: OperatorExpr) -> OperatorExpr {
        OperatorExpr::Sum(vec![self, OperatorExpr::Scale(-1.0, Box::new(rhs))])
    }
}

fn check_shape(f: &FunctionVector, n: usize, k: usize) -> Result<()> {
    if f.dims() != (n, k) {
        return Err(Error::Dimension(format!(
            "vector shape {:?} does not match operator (n,k)=({n},{k})",
            f.dims()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralMethod {
    Dense,
    Power,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub method: SpectralMethod,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct PowerConfig {
    /// Relative tolerance on the Rayleigh quotient residual.
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig { tol: 1e-10, max_iters: 100_000, restarts: 3, seed: 1 }
    }
}

impl PowerConfig {
    pub fn seeded(seed: u64) -> Self {
        PowerConfig { seed, ..PowerConfig::default() }
    }
}

/// Eigenvalues of a symmetric matrix, ascending. Rejects asymmetric input.
pub fn dense_sym_eigs(m: &DenseMatrix) -> Result<Vec<f64>> {
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Dimension(format!("matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}")));
    }
    jacobi_eigenvalues(m, JACOBI_OFF_THRESHOLD)
}

/// Merge eigenvalues closer than `tol` into clusters; returns one
/// representative (cluster mean) per distinct eigenvalue, ascending.
pub fn distinct_eigenvalues(eigs: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < eigs.len() {
        let mut j = i + 1;
        while j < eigs.len() && eigs[j] - eigs[j - 1] <= tol {
            j += 1;
        }
        let mean = eigs[i..j].iter().sum::<f64>() / (j - i) as f64;
        out.push(mean);
        i = j;
    }
    out
}

/// Largest absolute eigenvalue (operator norm for self-adjoint expressions;
/// largest singular value otherwise).
pub fn op_norm(
    expr: &OperatorExpr,
    method: SpectralMethod,
    cfg: &PowerConfig,
    cap: usize,
) -> Result<SpectralReport> {
    expr.validate()?;
    match method {
        SpectralMethod::Dense => {
            let m = expr.materialize(cap)?;
            let value = if m.max_asymmetry() <= SYMMETRY_TOL {
                let eigs = jacobi_eigenvalues(&m, JACOBI_OFF_THRESHOLD)?;
                eigs.iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
            } else {
                let gram = m.transpose().matmul(&m);
                let eigs = jacobi_eigenvalues(&gram, JACOBI_OFF_THRESHOLD)?;
                eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt()
            };
            Ok(SpectralReport {
                method,
                value,
                iterations: 0,
                residual: 0.0,
                tolerance: JACOBI_OFF_THRESHOLD,
                converged: true,
            })
        }
        SpectralMethod::Power => power_norm(expr, cfg),
    }
}

/// Power iteration on adjoint(expr)∘expr; reports the square root of its top
/// eigenvalue. Gram form keeps the iteration on a PSD operator, so Rayleigh
/// quotients increase and signs cannot flip.
fn power_norm(expr: &OperatorExpr, cfg: &PowerConfig) -> Result<SpectralReport> {
    let (n, k) = expr.dims()?;
    let dim = state_count(n, k)?;
    let mut best: Option<SpectralReport> = None;
    let mut iterations = 0usize;

    for restart in 0..cfg.restarts.max(1) {
        let mut r = rng::seeded(rng::derive(cfg.seed, &[0x706f_7765_7200, restart as u64]));
        let mut v = FunctionVector::new(n, k, (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect())?;
        let nv = v.norm();
        if nv == 0.0 {
            continue;
        }
        v.scale(1.0 / nv);

        let mut prev_nu = f64::NAN;
        let mut stagnant = 0usize;
        let mut run: Option<SpectralReport> = None;
        while iterations < cfg.max_iters * (restart + 1) {
            iterations += 1;
            let w = expr.adjoint_apply(&expr.apply(&v)?)?;
            let nu = v.inner(&w);
            let wn = w.norm();
            if wn <= 1e-300 {
                run = Some(SpectralReport {
                    method: SpectralMethod::Power,
                    value: 0.0,
                    iterations,
                    residual: 0.0,
                    tolerance: cfg.tol,
                    converged: true,
                });
                break;
            }
            // relative eigen-residual of the Gram operator
            let mut resid = v.clone();
            resid.scale(-nu);
            resid.add_assign(&w);
            let rel = resid.norm() / nu.abs().max(1e-300);

            let drift = if prev_nu.is_nan() { f64::INFINITY } else { (nu - prev_nu).abs() / nu.abs().max(1e-300) };
            prev_nu = nu;
            v = w;
            v.scale(1.0 / wn);

            if rel <= cfg.tol {
                run = Some(SpectralReport {
                    method: SpectralMethod::Power,
                    value: nu.max(0.0).sqrt(),
                    iterations,
                    residual: rel,
                    tolerance: cfg.tol,
                    converged: true,
                });
                break;
            }
            if drift <= cfg.tol * 1e-2 {
                stagnant += 1;
                if stagnant >= 100 {
                    run = Some(SpectralReport {
                        method: SpectralMethod::Power,
                        value: nu.max(0.0).sqrt(),
                        iterations,
                        residual: rel,
                        tolerance: cfg.tol,
                        converged: false,
                    });
                    break;
                }
            } else {
                stagnant = 0;
            }
            if iterations >= cfg.max_iters * (restart + 1) {
                run = Some(SpectralReport {
                    method: SpectralMethod::Power,
                    value: nu.max(0.0).sqrt(),
                    iterations,
                    residual: rel,
                    tolerance: cfg.tol,
                    converged: false,
                });
            }
        }
        if let Some(rep) = run {
            let better = match &best {
                None => true,
                Some(b) => {
                    (rep.converged && !b.converged) || (rep.converged == b.converged && rep.value > b.value)
                }
            };
            if better {
                best = Some(rep);
            }
            if best.as_ref().is_some_and(|b| b.converged && restart >= 1) {
                break;
            }
        }
    }
    best.ok_or(Error::NonConvergence { residual: f64::INFINITY, iterations })
}

/// 1 − ‖spec − R_full‖.
pub fn spectral_gap(
    spec: &OperatorSpec,
    method: SpectralMethod,
    cfg: &PowerConfig,
    cap: usize,
) -> Result<SpectralReport> {
    let norm = op_norm(&OperatorExpr::minus_full(spec)?, method, cfg, cap)?;
    Ok(SpectralReport { value: 1.0 - norm.value, ..norm })
}

/// Second-smallest distinct eigenvalue.
pub fn lambda2(expr: &OperatorExpr, cap: usize) -> Result<f64> {
    let m = expr.materialize(cap)?;
    let eigs = dense_sym_eigs(&m)?;
    let distinct = distinct_eigenvalues(&eigs, EIGENVALUE_MERGE_TOL);
    if distinct.len() < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(distinct[1])
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdReport {
    pub dominates: bool,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
}

/// Whether A − c·B is PSD up to tolerance, with the witness eigenvalue.
pub fn psd_dominates(
    a: &OperatorExpr,
    b: &OperatorExpr,
    c: f64,
    cap: usize,
) -> Result<PsdReport> {
    let expr = a.clone() - OperatorExpr::Scale(c, Box::new(b.clone()));
    let m = expr.materialize(cap)?;
    let eigs = dense_sym_eigs(&m)?;
    let min = eigs.first().copied().unwrap_or(0.0);
    Ok(PsdReport { dominates: min >= -PSD_TOL, min_eigenvalue: min, tolerance: PSD_TOL })
}

/// ⟨f, expr·g⟩ under the expectation inner product.
pub fn quadratic_form(
    f: &FunctionVector,
    expr: &OperatorExpr,
    g: &FunctionVector,
) -> Result<f64> {
    Ok(f.inner(&expr.apply(g)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignEpsilonReport {
    pub t: u32,
    /// ‖spec^t − R_full‖ measured on the t-step operator.
    pub direct: SpectralReport,
    /// ‖spec − R_full‖, the one-step deviation.
    pub base: SpectralReport,
    /// base^t, equal to direct when the deviation telescopes.
    pub telescoped: f64,
}

/// Design error after t steps, computed directly and via telescoping.
pub fn design_epsilon(
    spec: &OperatorSpec,
    t: u32,
    method: SpectralMethod,
    cfg: &PowerConfig,
    cap: usize,
) -> Result<DesignEpsilonReport> {
    let (n, k) = spec.dims();
    let base_expr = OperatorExpr::minus_full(spec)?;
    let base = op_norm(&base_expr, method, cfg, cap)?;
    let direct_expr = OperatorExpr::Power(Box::new(OperatorExpr::leaf(spec.clone())), t)
        - OperatorExpr::leaf(OperatorSpec::r_full(n, k)?);
    let direct = op_norm(&direct_expr, method, cfg, cap)?;
    let telescoped = base.value.powi(t as i32);
    Ok(DesignEpsilonReport { t, direct, base, telescoped })
}

#[derive(Clone, Debug, Serialize)]
pub struct KwiseTvReport {
    pub t: u32,
    /// Worst-case total variation distance to uniform over distinct tuples.
    pub value: f64,
    pub distinct_states: usize,
    /// Worst-case mass leaked onto tuples with repeated rows.
    pub offdistinct_mass: f64,
}

/// Worst-case TV distance between the t-step law from a distinct tuple and
/// the uniform law on distinct tuples.
pub fn kwise_tv(spec: &OperatorSpec, t: u32, cap: usize) -> Result<KwiseTvReport> {
    let (n, k) = spec.dims();
    let dim = state_count(n, k)?;
    let m = spec.materialize(cap)?;
    let mut p = DenseMatrix::identity(dim);
    for _ in 0..t {
        p = m.matmul(&p);
    }
    let distinct: Vec<bool> = (0..dim)
        .map(|idx| TupleState::from_index(n, k, idx).map(|x| x.rows_all_distinct()))
        .collect::<Result<_>>()?;
    let dcount = distinct.iter().filter(|&&b| b).count();
    if dcount == 0 {
        return Err(Error::Dimension(format!("no distinct {k}-tuples over {n} bits")));
    }
    let uniform = 1.0 / dcount as f64;
    let mut worst = 0.0f64;
    let mut worst_leak = 0.0f64;
    for x in 0..dim {
        if !distinct[x] {
            continue;
        }
        let mut tv = 0.0;
        let mut leak = 0.0;
        for (y, &y_distinct) in distinct.iter().enumerate() {
            // entry (y, x) is the mass moved from x to y
            let mass = p.get(y, x);
            if y_distinct {
                tv += (mass - uniform).abs();
            } else {
                tv += mass;
                leak += mass;
            }
        }
        worst = worst.max(0.5 * tv);
        worst_leak = worst_leak.max(leak);
    }
    Ok(KwiseTvReport { t, value: worst, distinct_states: dcount, offdistinct_mass: worst_leak })
}

#[derive(Clone, Debug, Serialize)]
pub enum CheckOutcome {
    Pass { deviation: f64 },
    Fail { deviation: f64 },
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub tolerance: f64,
    pub outcome: CheckOutcome,
}

impl AxiomCheck {
    fn measured(name: &'static str, tolerance: f64, deviation: f64) -> Self {
        let outcome = if deviation <= tolerance {
            CheckOutcome::Pass { deviation }
        } else {
            CheckOutcome::Fail { deviation }
        };
        AxiomCheck { name, tolerance, outcome }
    }

    fn skipped(name: &'static str, tolerance: f64) -> Self {
        AxiomCheck { name, tolerance, outcome: CheckOutcome::Skipped }
    }

    pub fn passed(&self) -> bool {
        !matches!(self.outcome, CheckOutcome::Fail { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub operator: String,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(AxiomCheck::passed)
    }
}

/// Structural facts about a single operator, checked densely: symmetry,
/// double stochasticity, fixing constants, idempotence (projection family
/// only), and domination of the full-shuffle projection (shuffle family
/// only; the controlled-gate average is not a projection average, and the
/// resampling family sits below the full shuffle, so both skip it).
pub fn verify_operator_axioms(spec: &OperatorSpec, cap: usize) -> Result<AxiomReport> {
    let (n, k) = spec.dims();
    let m = spec.materialize(cap)?;
    let dim = m.dim();
    let mut checks = Vec::new();

    checks.push(AxiomCheck::measured("symmetry", SYMMETRY_TOL, m.max_asymmetry()));

    let mut col_dev = 0.0f64;
    let mut row_dev = 0.0f64;
    let mut neg = 0.0f64;
    for i in 0..dim {
        let mut rs = 0.0;
        let mut cs = 0.0;
        for j in 0..dim {
            rs += m.get(i, j);
            cs += m.get(j, i);
            neg = neg.max(-m.get(i, j));
        }
        row_dev = row_dev.max((rs - 1.0).abs());
        col_dev = col_dev.max((cs - 1.0).abs());
    }
    checks.push(AxiomCheck::measured("row-stochastic", SYMMETRY_TOL, row_dev));
    checks.push(AxiomCheck::measured("column-stochastic", SYMMETRY_TOL, col_dev));
    checks.push(AxiomCheck::measured("nonnegative-entries", SYMMETRY_TOL, neg));

    let one = FunctionVector::constant(n, k, 1.0)?;
    let fixed_dev = spec.apply(&one)?.max_abs_diff(&one);
    checks.push(AxiomCheck::measured("fixes-constants", SYMMETRY_TOL, fixed_dev));

    if spec.is_projector_family() {
        let dev = m.matmul(&m).max_abs_diff(&m);
        checks.push(AxiomCheck::measured("idempotent", SYMMETRY_TOL, dev));
    } else {
        checks.push(AxiomCheck::skipped("idempotent", SYMMETRY_TOL));
    }

    let dominates_full = matches!(
        spec,
        OperatorSpec::RSite { .. }
            | OperatorSpec::RSubset { .. }
            | OperatorSpec::RNn { .. }
            | OperatorSpec::RFull { .. }
            | OperatorSpec::RBrickwork { dist: GateDist::Alternating, .. }
    );
    if dominates_full {
        let full = OperatorSpec::r_full(n, k)?.materialize(cap)?;
        let eigs = dense_sym_eigs(&m.sub(&full))?;
        let min = eigs.first().copied().unwrap_or(0.0);
        checks.push(AxiomCheck::measured("dominates-full-projection", PSD_TOL, (-min).max(0.0)));
    } else {
        checks.push(AxiomCheck::skipped("dominates-full-projection", PSD_TOL));
    }

    Ok(AxiomReport { operator: spec.text(), checks })
}

#[derive(Clone, Debug, Serialize)]
pub struct EigencheckReport {
    pub n: usize,
    pub k: usize,
    /// Characters checked (all of them).
    pub checked: usize,
    /// Characters whose wire-set union is a single wire.
    pub singletons: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Dense ‖Q_loo − Q_full‖, which the eigenstructure forces to 1/n.
    pub norm: SpectralReport,
    pub expected_norm: f64,
}

/// Exhaustive eigenstructure of Q_loo − Q_full on the character basis: a
/// character whose union of wire sets is one wire is an eigenvector with
/// eigenvalue 1/n, every other character is annihilated.
pub fn fourier_eigencheck(n: usize, k: usize, cap: usize) -> Result<EigencheckReport> {
    let dim = state_count(n, k)?;
    if dim > cap {
        return Err(Error::SizeCap { dim, cap });
    }
    let q_loo = OperatorSpec::q_loo(n, k)?;
    let q_full = OperatorSpec::q_full(n, k)?;
    let tolerance = 1e-12;

    let mut max_dev = 0.0f64;
    let mut singletons = 0usize;
    for packed in 0..dim {
        let pattern = TupleState::from_index(n, k, packed)?;
        let sets: Vec<Vec<usize>> =
            (0..k).map(|i| (1..=n).filter(|&a| pattern.bit(i, a) == 1).collect()).collect();
        let idx = FourierIndex::new(sets, n)?;
        let chi = chi_vector(&idx, n, k)?;
        let mut image = q_loo.apply(&chi)?;
        let qf = q_full.apply(&chi)?;
        for (v, w) in image.values_mut().iter_mut().zip(qf.values()) {
            *v -= w;
        }
        let singleton = idx.support().len() == 1;
        if singleton {
            singletons += 1;
        }
        let scale = if singleton { 1.0 / n as f64 } else { 0.0 };
        let mut expected = chi.clone();
        expected.scale(scale);
        max_dev = max_dev.max(image.max_abs_diff(&expected));
    }

    let diff = OperatorExpr::leaf(q_loo) - OperatorExpr::leaf(q_full);
    let norm = op_norm(&diff, SpectralMethod::Dense, &PowerConfig::default(), cap)?;

    Ok(EigencheckReport {
        n,
        k,
        checked: dim,
        singletons,
        max_deviation: max_dev,
        tolerance,
        pass: max_dev <= tolerance,
        norm,
        expected_norm: 1.0 / n as f64,
    })
}
