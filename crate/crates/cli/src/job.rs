//! Typed experiments, resolved either from subcommand flags or from a JSON
//! config, and their execution into result records.

use crate::record::{OutFormat, ResultRecord};
use revmix_core::circuit::GateDist;
use revmix_core::feistel::{phase1_collision_experiment, uniformity_experiment};
use revmix_core::paths::{comparison_check, PathMap};
use revmix_core::spectral::{
    design_epsilon, fourier_eigencheck, kwise_tv, lambda2, op_norm, parse_query,
    quadratic_form, spectral_gap, verify_operator_axioms, CheckOutcome, PowerConfig, Query,
    SpectralMethod, SpectralReport,
};
use revmix_core::walk::{
    chi_vector, escape_bounds_report, state_count, suffix_window, DEFAULT_STATE_CAP,
};
use revmix_core::{Error, OperatorSpec, Result};
use serde::Deserialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Arch {
    /// One gate on a uniform 3-wire subset.
    Generic,
    /// One gate on a uniform nearest-neighbor window.
    Nn,
    /// One brickwork layer of uniform parity.
    Brickwork,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Dist {
    /// Uniform even 3-bit gates.
    Alt,
    /// Uniform two-bit-controlled gates.
    Des2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Dense,
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MapKind {
    /// Arbitrary 3-wire sites expressed through nearest-neighbor windows.
    Nn,
    /// Nearest-neighbor windows rerouted off anchors divisible by three.
    Mod3,
    /// Even gates expanded into controlled-gate words.
    Des2,
}

/// A fully resolved experiment. Construction validates parameters; running
/// it only computes.
#[derive(Clone, Debug)]
pub enum Job {
    Gap { n: usize, k: usize, arch: Arch, dist: Dist, method: Method },
    Design { n: usize, k: usize, arch: Arch, dist: Dist, t: u32, method: Method },
    Tv { n: usize, k: usize, arch: Arch, dist: Dist, t: u32 },
    Verify { n: usize, k: usize },
    Eigencheck { m: usize, k: usize },
    Compare { n: usize, k: usize, map: MapKind },
    Regioncheck { m: usize, k: usize, ell: usize },
    FeistelCollision { n: usize, s: usize, q: usize, trials: usize },
    FeistelUniformity { n: usize, s: usize, q: usize, trials: usize },
    Eval { n: usize, k: usize, query: String, method: Method },
}

/// Run-wide settings shared by every experiment.
#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub cap: usize,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: OutFormat,
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Gap { .. } => "gap",
            Job::Design { .. } => "design",
            Job::Tv { .. } => "tv",
            Job::Verify { .. } => "verify",
            Job::Eigencheck { .. } => "eigencheck",
            Job::Compare { .. } => "compare",
            Job::Regioncheck { .. } => "regioncheck",
            Job::FeistelCollision { .. } => "feistel-collision",
            Job::FeistelUniformity { .. } => "feistel-uniformity",
            Job::Eval { .. } => "eval",
        }
    }

    /// Dense state dimension the job works in, if it has one.
    fn state_dim(&self) -> Result<Option<usize>> {
        let nk = match *self {
            Job::Gap { n, k, .. }
            | Job::Design { n, k, .. }
            | Job::Tv { n, k, .. }
            | Job::Verify { n, k }
            | Job::Eigencheck { m: n, k }
            | Job::Compare { n, k, .. }
            | Job::Regioncheck { m: n, k, .. }
            | Job::Eval { n, k, .. } => Some((n, k)),
            Job::FeistelCollision { .. } | Job::FeistelUniformity { .. } => None,
        };
        nk.map(|(n, k)| state_count(n, k)).transpose()
    }
}

fn base_record(job: &Job, seed: u64) -> ResultRecord {
    let r = ResultRecord::new(job.name(), seed);
    match *job {
        Job::Gap { n, k, arch, dist, method } => r
            .param("n", n)
            .param("k", k)
            .param("arch", arch_name(arch))
            .param("dist", dist_name(dist))
            .param("method", method_name(method)),
        Job::Design { n, k, arch, dist, t, method } => r
            .param("n", n)
            .param("k", k)
            .param("arch", arch_name(arch))
            .param("dist", dist_name(dist))
            .param("t", t)
            .param("method", method_name(method)),
        Job::Tv { n, k, arch, dist, t } => r
            .param("n", n)
            .param("k", k)
            .param("arch", arch_name(arch))
            .param("dist", dist_name(dist))
            .param("t", t),
        Job::Verify { n, k } => r.param("n", n).param("k", k),
        Job::Eigencheck { m, k } => r.param("m", m).param("k", k),
        Job::Compare { n, k, map } => r.param("n", n).param("k", k).param("map", map_name(map)),
        Job::Regioncheck { m, k, ell } => r.param("m", m).param("k", k).param("ell", ell),
        Job::FeistelCollision { n, s, q, trials } => {
            r.param("n", n).param("s", s).param("q", q).param("trials", trials)
        }
        Job::FeistelUniformity { n, s, q, trials } => {
            r.param("n", n).param("s", s).param("q", q).param("trials", trials)
        }
        Job::Eval { n, k, ref query, method } => {
            r.param("n", n).param("k", k).param("query", query).param("method", method_name(method))
        }
    }
}

fn arch_name(a: Arch) -> &'static str {
    match a {
        Arch::Generic => "generic",
        Arch::Nn => "nn",
        Arch::Brickwork => "brickwork",
    }
}

fn dist_name(d: Dist) -> &'static str {
    match d {
        Dist::Alt => "alt",
        Dist::Des2 => "des2",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Dense => "dense",
        Method::Power => "power",
    }
}

fn map_name(m: MapKind) -> &'static str {
    match m {
        MapKind::Nn => "nn",
        MapKind::Mod3 => "mod3",
        MapKind::Des2 => "des2",
    }
}

/// Operator for one step of the chosen architecture. The generic and
/// nearest-neighbor steps are site shuffles, which act on k-tuples exactly
/// like a uniform even gate as long as k stays in the exact regime.
fn step_operator(n: usize, k: usize, arch: Arch, dist: Dist) -> Result<OperatorSpec> {
    match (arch, dist) {
        (Arch::Generic, Dist::Alt) => OperatorSpec::r_subset(n, k, 3),
        (Arch::Nn, Dist::Alt) => OperatorSpec::r_nn(n, k),
        (Arch::Brickwork, d) => OperatorSpec::r_brickwork(n, k, gate_dist(d)),
        (a, Dist::Des2) => Err(Error::Parse(format!(
            "dist=des2 is only defined for arch=brickwork, not arch={}",
            arch_name(a)
        ))),
    }
}

fn gate_dist(d: Dist) -> GateDist {
    match d {
        Dist::Alt => GateDist::Alternating,
        Dist::Des2 => GateDist::Des2,
    }
}

fn spectral_method(m: Method) -> SpectralMethod {
    match m {
        Method::Dense => SpectralMethod::Dense,
        Method::Power => SpectralMethod::Power,
    }
}

fn spectral_fields(r: ResultRecord, s: &SpectralReport) -> ResultRecord {
    r.method(match s.method {
        SpectralMethod::Dense => "dense",
        SpectralMethod::Power => "power",
    })
    .residual(s.residual)
    .tolerance(s.tolerance)
    .value("iterations", s.iterations)
    .value("converged", s.converged)
}

/// Execute a job into records. Everything downstream of (job, seed) is
/// deterministic, so reruns and different worker counts reproduce values.
pub fn execute(job: &Job, st: &Settings) -> Result<Vec<ResultRecord>> {
    let started = Instant::now();
    let seed = st.seed;
    let cap = st.cap;
    let mut records = match *job {
        Job::Gap { n, k, arch, dist, method } => {
            let spec = step_operator(n, k, arch, dist)?;
            let report =
                spectral_gap(&spec, spectral_method(method), &PowerConfig::seeded(seed), cap)?;
            let rec = spectral_fields(base_record(job, seed), &report)
                .value("operator", spec.text())
                .value("gap", report.value)
                .value("deviation_norm", 1.0 - report.value);
            vec![rec]
        }
        Job::Design { n, k, arch, dist, t, method } => {
            let spec = step_operator(n, k, arch, dist)?;
            let report =
                design_epsilon(&spec, t, spectral_method(method), &PowerConfig::seeded(seed), cap)?;
            let rec = spectral_fields(base_record(job, seed), &report.direct)
                .value("operator", spec.text())
                .value("direct", report.direct.value)
                .value("base", report.base.value)
                .value("telescoped", report.telescoped)
                .value("telescoping_gap", (report.direct.value - report.telescoped).abs());
            vec![rec]
        }
        Job::Tv { n, k, arch, dist, t } => {
            let spec = step_operator(n, k, arch, dist)?;
            let report = kwise_tv(&spec, t, cap)?;
            let rec = base_record(job, seed)
                .method("dense")
                .value("operator", spec.text())
                .value("tv", report.value)
                .value("distinct_states", report.distinct_states)
                .value("offdistinct_mass", report.offdistinct_mass);
            vec![rec]
        }
        Job::Verify { n, k } => {
            let specs = standard_family(n, k)?;
            let mut out = Vec::new();
            for spec in &specs {
                let report = verify_operator_axioms(spec, cap)?;
                let mut rec = base_record(job, seed)
                    .method("dense")
                    .value("operator", report.operator.clone())
                    .value("pass", report.all_pass());
                for check in &report.checks {
                    let v = match check.outcome {
                        CheckOutcome::Pass { deviation } | CheckOutcome::Fail { deviation } => {
                            Value::from(deviation)
                        }
                        CheckOutcome::Skipped => Value::from("skipped"),
                    };
                    rec = rec.value(check.name, v);
                }
                out.push(rec);
            }
            out
        }
        Job::Eigencheck { m, k } => {
            let report = fourier_eigencheck(m, k, cap)?;
            let rec = base_record(job, seed)
                .method("dense")
                .tolerance(report.tolerance)
                .value("checked", report.checked)
                .value("singletons", report.singletons)
                .value("max_deviation", report.max_deviation)
                .value("norm", report.norm.value)
                .value("expected_norm", report.expected_norm)
                .value("pass", report.pass);
            vec![rec]
        }
        Job::Compare { n, k, map } => {
            let pm = build_map(n, map)?;
            pm.verify()?;
            let report = comparison_check(&pm, k, cap)?;
            let rec = base_record(job, seed)
                .method("dense")
                .value("domain_generators", pm.domain().len())
                .value("codomain_generators", pm.codomain().len())
                .value("lambda2_domain", report.lambda2_domain)
                .value("lambda2_codomain", report.lambda2_codomain)
                .value("b", report.b)
                .value("divisor_reading_holds", report.divisor_reading_holds)
                .value("multiplier_reading_holds", report.multiplier_reading_holds);
            vec![rec]
        }
        Job::Regioncheck { m, k, ell } => {
            let report = escape_bounds_report(m, k, ell, cap)?;
            let rec = base_record(job, seed)
                .method("exact")
                .value("zero_law_max", report.zero_law_max)
                .value("same_class_max", report.same_class_max)
                .value("same_class_bound", report.same_class_bound)
                .value("cross_class_max", report.cross_class_max)
                .value("cross_class_bound", report.cross_class_bound)
                .value("into_equal1_sum_max", report.into_equal1_sum_max)
                .value("into_equal1_bound", report.into_equal1_bound)
                .value("window_two_step_max", report.window_two_step_max)
                .value("window_two_step_bound", report.window_two_step_bound)
                .value("all_hold", report.all_hold);
            vec![rec]
        }
        Job::FeistelCollision { n, s, q, trials } => {
            let report = phase1_collision_experiment(n, s, q, trials, seed)?;
            let rec = base_record(job, seed)
                .method("monte-carlo")
                .tolerance(report.three_sigma)
                .value("failures", report.failures)
                .value("empirical", report.empirical)
                .value("bound", report.bound)
                .value("three_sigma", report.three_sigma)
                .value("within_bound", report.within_bound);
            vec![rec]
        }
        Job::FeistelUniformity { n, s, q, trials } => {
            let report = uniformity_experiment(n, s, q, trials, seed)?;
            let rec = base_record(job, seed)
                .method("monte-carlo")
                .value("min_corrected_p", report.min_corrected_p)
                .value("marginals_ok", report.marginals_ok)
                .value("max_pair_collision", report.max_pair_collision)
                .value("pair_threshold", report.pair_threshold)
                .value("pairs_ok", report.pairs_ok)
                .value("pass", report.marginals_ok && report.pairs_ok);
            vec![rec]
        }
        Job::Eval { n, k, ref query, method } => {
            let cfg = PowerConfig::seeded(seed);
            let rec = match parse_query(query, n, k)? {
                Query::Norm(expr) => {
                    let report = op_norm(&expr, spectral_method(method), &cfg, cap)?;
                    spectral_fields(base_record(job, seed), &report)
                        .value("norm", report.value)
                }
                Query::Lambda2(expr) => {
                    let v = lambda2(&expr, cap)?;
                    base_record(job, seed).method("dense").value("lambda2", v)
                }
                Query::QForm(f, expr, g) => {
                    let fv = chi_vector(&f, n, k)?;
                    let gv = chi_vector(&g, n, k)?;
                    let v = quadratic_form(&fv, &expr, &gv)?;
                    base_record(job, seed).method("exact").value("qform", v)
                }
            };
            vec![rec]
        }
    };
    let elapsed = started.elapsed().as_millis() as u64;
    for r in &mut records {
        r.runtime_ms = elapsed;
    }
    Ok(records)
}

/// The operator family structural checks run over.
fn standard_family(n: usize, k: usize) -> Result<Vec<OperatorSpec>> {
    Ok(vec![
        OperatorSpec::r_site(n, k, vec![1, 2, 3])?,
        OperatorSpec::r_subset(n, k, n - 1)?,
        OperatorSpec::r_nn(n, k)?,
        OperatorSpec::r_brickwork(n, k, GateDist::Alternating)?,
        OperatorSpec::r_full(n, k)?,
        OperatorSpec::q_loo(n, k)?,
        OperatorSpec::q_full(n, k)?,
    ])
}

fn build_map(n: usize, map: MapKind) -> Result<PathMap> {
    match map {
        MapKind::Nn => PathMap::general_to_nn(n),
        MapKind::Mod3 => PathMap::nn_to_mod3(n),
        MapKind::Des2 => PathMap::des2_expansion(n),
    }
}

/// Dry-run check: runs the same parameter validation the constructors
/// would, then reports the resource footprint against the cap, all without
/// touching the actual computation.
pub fn validate(job: &Job, st: &Settings) -> Result<Vec<ResultRecord>> {
    let mut rec = base_record(job, st.seed).method("dry-run");
    match *job {
        Job::Gap { n, k, arch, dist, .. }
        | Job::Design { n, k, arch, dist, .. }
        | Job::Tv { n, k, arch, dist, .. } => {
            step_operator(n, k, arch, dist)?;
        }
        Job::Verify { n, k } => {
            standard_family(n, k)?;
        }
        Job::Eigencheck { m, k } => {
            OperatorSpec::q_loo(m, k)?;
        }
        Job::Compare { n, map, .. } => {
            check_map_params(n, map)?;
        }
        Job::Regioncheck { m, k, ell } => {
            OperatorSpec::r_subset(m, k, m - 1)?;
            suffix_window(m, ell)?;
        }
        Job::FeistelCollision { n, s, q, .. } | Job::FeistelUniformity { n, s, q, .. } => {
            let total = n * s;
            if n == 0 || s == 0 || total > 64 {
                return Err(Error::Parse(format!(
                    "block shape n={n}, s={s} must fit a 64-bit row"
                )));
            }
            if total < 64 && (q as u64) > 1u64 << total {
                return Err(Error::TooManyRows { need: q as u64, have: 1u64 << total });
            }
            rec = rec.value("row_bits", total);
        }
        Job::Eval { n, k, ref query, .. } => {
            parse_query(query, n, k)?;
        }
    }
    if let Some(dim) = job.state_dim()? {
        if dim > st.cap {
            return Err(Error::SizeCap { dim, cap: st.cap });
        }
        let dense = !matches!(
            job,
            Job::Gap { method: Method::Power, .. }
                | Job::Design { method: Method::Power, .. }
                | Job::Eval { method: Method::Power, .. }
        );
        let vector_bytes = 8 * dim;
        let peak =
            if dense { 8usize.saturating_mul(dim).saturating_mul(dim) } else { vector_bytes };
        rec = rec
            .value("state_dim", dim)
            .value("vector_bytes", vector_bytes)
            .value("estimated_peak_bytes", peak);
    }
    rec = rec.value("ok", true);
    Ok(vec![rec])
}

/// Path-map parameter preflight. Mirrors the construction-time checks
/// without materializing any generator list.
fn check_map_params(n: usize, map: MapKind) -> Result<()> {
    if n < 3 {
        return Err(Error::Dimension(format!("path maps need at least 3 wires, got {n}")));
    }
    if map == MapKind::Mod3 && (n - 2).is_multiple_of(3) {
        // the rightmost anchor needs rerouting but has no room for it
        return Err(Error::RerouteBoundary { anchor: n - 2, n });
    }
    Ok(())
}

/// On-disk experiment description, mirroring the subcommand flags.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutFormat>,
    #[serde(default)]
    pub cap: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn into_job_and_settings(self) -> Result<(Job, Settings)> {
        let mut p = Params::new(self.params);
        let job = match self.experiment.as_str() {
            "gap" => Job::Gap {
                n: p.need_usize("n")?,
                k: p.need_usize("k")?,
                arch: p.arch()?,
                dist: p.dist()?,
                method: p.method()?,
            },
            "design" => Job::Design {
                n: p.need_usize("n")?,
                k: p.need_usize("k")?,
                arch: p.arch()?,
                dist: p.dist()?,
                t: p.need_usize("t")? as u32,
                method: p.method()?,
            },
            "tv" => Job::Tv {
                n: p.need_usize("n")?,
                k: p.need_usize("k")?,
                arch: p.arch()?,
                dist: p.dist()?,
                t: p.need_usize("t")? as u32,
            },
            "verify" => Job::Verify { n: p.need_usize("n")?, k: p.need_usize("k")? },
            "eigencheck" => Job::Eigencheck { m: p.need_usize("m")?, k: p.need_usize("k")? },
            "compare" => Job::Compare {
                n: p.need_usize("n")?,
                k: p.need_usize("k")?,
                map: p.map_kind()?,
            },
            "regioncheck" => Job::Regioncheck {
                m: p.need_usize("m")?,
                k: p.need_usize("k")?,
                ell: p.usize_or("ell", 3)?,
            },
            "feistel-collision" => Job::FeistelCollision {
                n: p.need_usize("n")?,
                s: p.need_usize("s")?,
                q: p.need_usize("q")?,
                trials: p.need_usize("trials")?,
            },
            "feistel-uniformity" => Job::FeistelUniformity {
                n: p.need_usize("n")?,
                s: p.need_usize("s")?,
                q: p.need_usize("q")?,
                trials: p.need_usize("trials")?,
            },
            "eval" => Job::Eval {
                n: p.need_usize("n")?,
                k: p.need_usize("k")?,
                query: p.need_str("query")?,
                method: p.method()?,
            },
            other => return Err(Error::Parse(format!("unknown experiment {other:?}"))),
        };
        p.finish()?;
        let settings = Settings {
            seed: self.seed,
            cap: self.cap.unwrap_or(DEFAULT_STATE_CAP),
            workers: self.workers,
            out: self.out,
            format: self.format.unwrap_or(OutFormat::Jsonl),
        };
        Ok((job, settings))
    }
}

/// Named parameter map with consume-and-check-leftovers semantics, so a
/// config with a misspelled or extraneous key is rejected up front.
struct Params {
    map: BTreeMap<String, Value>,
}

impl Params {
    fn new(map: BTreeMap<String, Value>) -> Self {
        Params { map }
    }

    fn need_usize(&mut self, key: &str) -> Result<usize> {
        let v = self
            .map
            .remove(key)
            .ok_or_else(|| Error::Parse(format!("missing required param {key:?}")))?;
        v.as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| Error::Parse(format!("param {key:?} must be a nonnegative integer")))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Parse(format!("param {key:?} must be a nonnegative integer"))),
        }
    }

    fn need_str(&mut self, key: &str) -> Result<String> {
        let v = self
            .map
            .remove(key)
            .ok_or_else(|| Error::Parse(format!("missing required param {key:?}")))?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Parse(format!("param {key:?} must be a string")))
    }

    fn str_or(&mut self, key: &str, default: &str) -> Result<String> {
        match self.map.remove(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("param {key:?} must be a string"))),
        }
    }

    fn arch(&mut self) -> Result<Arch> {
        match self.str_or("arch", "generic")?.as_str() {
            "generic" => Ok(Arch::Generic),
            "nn" => Ok(Arch::Nn),
            "brickwork" => Ok(Arch::Brickwork),
            other => Err(Error::Parse(format!("unknown arch {other:?}"))),
        }
    }

    fn dist(&mut self) -> Result<Dist> {
        match self.str_or("dist", "alt")?.as_str() {
            "alt" => Ok(Dist::Alt),
            "des2" => Ok(Dist::Des2),
            other => Err(Error::Parse(format!("unknown dist {other:?}"))),
        }
    }

    fn method(&mut self) -> Result<Method> {
        match self.str_or("method", "dense")?.as_str() {
            "dense" => Ok(Method::Dense),
            "power" => Ok(Method::Power),
            other => Err(Error::Parse(format!("unknown method {other:?}"))),
        }
    }

    fn map_kind(&mut self) -> Result<MapKind> {
        match self.str_or("map", "nn")?.as_str() {
            "nn" => Ok(MapKind::Nn),
            "mod3" => Ok(MapKind::Mod3),
            "des2" => Ok(MapKind::Des2),
            other => Err(Error::Parse(format!("unknown map {other:?}"))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(Error::Parse(format!("unknown param {key:?}")));
        }
        Ok(())
    }
}
