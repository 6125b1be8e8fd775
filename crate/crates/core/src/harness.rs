//! Experiment driver: configuration, sweeps, replicas, output files and the
//! built-in property suites.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::{linear_fit, perturbation_report, weyl_audit, write_table_csv, PerturbationReport};
use crate::engine::{conditional_mean_check, exhaustive_mean, run, sample_gradient, EngineConfig, IterateState, InitialGuess, RunSetup, RunTrace};
use crate::error::{Error, Result};
use crate::fejer::{interior_grid, reconstruction_error, FejerExpansion};
use crate::filter::{FilterConfig, FilteredOperator};
use crate::model::{build_tfim, exact_reference, ModelSpec, PauliHamiltonian, SpectralReference, MAX_DENSE_QUBITS};
use crate::operator::{inner, DenseHermitian, LinearOperator, StateVector};
use crate::oracle::{fejer_alpha, trotter_unitary_error, ElementCache, ElementOracle, FreshElements, OracleConfig, Regime};
use crate::rng::{derive_seed, substream, TAG_ENGINE, TAG_INIT, TAG_POINT};

/// Explicit parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// A model parameter (`j`, `d`, `t`, `u`) or `shots`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub replicas: usize,
    pub model: ModelSpec,
    /// Absent means the raw Hamiltonian drives the iteration.
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub engine: EngineConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Parse TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reject every invalid field, listing all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.replicas == 0 {
            problems.push("replicas must be at least 1".to_string());
        }
        if self.engine.m_r == 0 || self.engine.m_c == 0 {
            problems.push("engine.m_r and engine.m_c must be at least 1".to_string());
        }
        let n = self.model.n_qubits();
        if n < 63 {
            let dim = 1usize << n;
            if self.engine.m_r > dim || self.engine.m_c > dim {
                problems.push(format!("engine.m_r and engine.m_c must not exceed N = {dim}"));
            }
        }
        if let Some(a0) = self.engine.a0 {
            if !(a0 > 0.0 && a0.is_finite()) {
                problems.push(format!("engine.a0 must be positive, got {a0}"));
            }
        }
        if !(self.engine.decay > 0.0 && self.engine.decay <= 1.0) {
            problems.push(format!("engine.decay must lie in (0, 1], got {}", self.engine.decay));
        }
        if self.engine.period == 0 {
            problems.push("engine.period must be at least 1".to_string());
        }
        if self.oracle.regime != Regime::Exact && self.oracle.shots == Some(0) {
            problems.push("oracle.shots must be at least 1".to_string());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                problems.push("sweep.values must not be empty".to_string());
            }
            if s.parameter == "shots" {
                if s.values.iter().any(|v| !(*v >= 1.0 && v.fract() == 0.0)) {
                    problems.push("shot sweep values must be positive integers".to_string());
                }
            } else if let Err(e) = self.model.with_parameter(&s.parameter, 0.0) {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// `(label, value, model, oracle)` for every sweep point.
    pub fn points(&self) -> Result<Vec<Point>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![Point {
                index: 0,
                label: "base".into(),
                value: None,
                model: self.model.clone(),
                oracle: self.oracle,
            }]);
        };
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(index, &v)| {
                let (model, oracle) = if sweep.parameter == "shots" {
                    (self.model.clone(), OracleConfig { shots: Some(v as u64), ..self.oracle })
                } else {
                    (self.model.with_parameter(&sweep.parameter, v)?, self.oracle)
                };
                Ok(Point { index, label: format!("{}_{}", sweep.parameter, v), value: Some(v), model, oracle })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub label: String,
    pub value: Option<f64>,
    pub model: ModelSpec,
    pub oracle: OracleConfig,
}

/// Everything built for one sweep point.
pub struct PointContext {
    pub point: Point,
    pub hamiltonian: PauliHamiltonian,
    pub reference: Option<SpectralReference>,
    pub cache: ElementCache,
}

impl PointContext {
    pub fn build(cfg: &ExperimentConfig, point: Point) -> Result<Self> {
        let h = point.model.build()?;
        let reference = if h.n_qubits() <= MAX_DENSE_QUBITS { Some(exact_reference(&h)?) } else { None };
        let spec = match &cfg.filter {
            Some(f) => Some(f.resolve(&h, reference.as_ref())?),
            None => None,
        };
        let op = FilteredOperator::new(h.clone(), spec);
        let oracle = ElementOracle::from_config(op, &point.oracle)?;
        let seed = derive_seed(cfg.seed, &[TAG_POINT, point.index as u64]);
        let cache = ElementCache::new(oracle, seed, point.oracle.hermitian_fill);
        Ok(Self { point, hamiltonian: h, reference, cache })
    }

    pub fn operator(&self) -> &FilteredOperator {
        self.cache.oracle().operator()
    }
}

fn initial_guess(cfg: &ExperimentConfig, dim: usize) -> StateVector {
    match cfg.engine.initial {
        InitialGuess::Uniform => StateVector::uniform(dim),
        InitialGuess::Random => StateVector::random(dim, &mut substream(cfg.seed, &[TAG_INIT])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: String,
    pub parameter: Option<String>,
    pub value: Option<f64>,
    pub n_qubits: usize,
    pub regime: Regime,
    pub shots: Option<u64>,
    pub degree: Option<usize>,
    pub normalization: f64,
    pub orientation: f64,
    pub step_size: f64,
    pub ground_energy: Option<f64>,
    pub degeneracy: Option<usize>,
    pub replicas: usize,
    pub fidelity_mean: Option<f64>,
    pub fidelity_std: Option<f64>,
    pub rayleigh_mean: f64,
    pub rayleigh_std: f64,
    pub cache_entries: usize,
    pub cache_sha256: String,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 { xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v.sqrt())
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn cache_bytes(cache: &ElementCache) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    cache.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Replica traces for one point, run in parallel over the shared cache.
pub fn run_point(cfg: &ExperimentConfig, ctx: &PointContext) -> Result<Vec<RunTrace>> {
    let op = ctx.operator();
    let schedule = cfg.engine.schedule(op.normalization())?;
    let ground = ctx.reference.as_ref().map(|r| r.ground_states()).unwrap_or_default();
    let setup = RunSetup {
        h: &ctx.hamiltonian,
        sigma: op.orientation(),
        m_r: cfg.engine.m_r,
        m_c: cfg.engine.m_c,
        schedule,
        iterations: cfg.engine.iterations,
        renorm_period: cfg.engine.renorm_period,
        norm_floor: cfg.engine.norm_floor,
        initial: initial_guess(cfg, ctx.hamiltonian.dim()),
        ground,
    };
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, &[TAG_ENGINE, ctx.point.index as u64, r as u64]);
            run(&setup, &ctx.cache, &mut rng)
        })
        .collect()
}

/// Run every sweep point and write
/// `output_dir/{point}/{cache.csv, trace_{r}.csv, summary.csv, report.json}`
/// plus a top-level `summary.csv`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<PointSummary>> {
    cfg.validate()?;
    let points = cfg.points()?;
    let results: Vec<(PointSummary, Vec<RunTrace>, Vec<u8>)> = points
        .into_par_iter()
        .map(|p| {
            let ctx = PointContext::build(cfg, p)?;
            let traces = run_point(cfg, &ctx)?;
            let cache = cache_bytes(&ctx.cache)?;
            Ok((summarize(cfg, &ctx, &traces, &cache), traces, cache))
        })
        .collect::<Result<_>>()?;

    let root = &cfg.output_dir;
    fs::create_dir_all(root)?;
    let mut top = csv::Writer::from_writer(Vec::new());
    top.write_record(["point", "value", "fidelity_mean", "fidelity_std", "rayleigh_mean", "rayleigh_std", "ground_energy", "cache_sha256"])?;
    for (s, traces, cache) in &results {
        let dir = root.join(&s.point);
        write_file(&dir.join("cache.csv"), cache)?;
        let mut per = csv::Writer::from_writer(Vec::new());
        per.write_record(["replica", "final_fidelity", "final_rayleigh", "final_norm"])?;
        for (r, t) in traces.iter().enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            write_file(&dir.join(format!("trace_{r}.csv")), &buf)?;
            let last = t.last().expect("trace has the initial row");
            per.write_record([r.to_string(), opt(last.fidelity), f(last.rayleigh_energy), f(last.norm)])?;
        }
        write_file(&dir.join("summary.csv"), &per.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
        write_file(&dir.join("report.json"), &serde_json::to_vec_pretty(s)?)?;
        top.write_record([
            s.point.clone(),
            opt(s.value),
            opt(s.fidelity_mean),
            opt(s.fidelity_std),
            f(s.rayleigh_mean),
            f(s.rayleigh_std),
            opt(s.ground_energy),
            s.cache_sha256.clone(),
        ])?;
    }
    write_file(&root.join("summary.csv"), &top.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    Ok(results.into_iter().map(|(s, _, _)| s).collect())
}

fn summarize(cfg: &ExperimentConfig, ctx: &PointContext, traces: &[RunTrace], cache: &[u8]) -> PointSummary {
    let op = ctx.operator();
    let fids: Vec<f64> = traces.iter().filter_map(|t| t.final_fidelity()).collect();
    let rayleigh: Vec<f64> = traces.iter().filter_map(|t| t.last().map(|r| r.rayleigh_energy)).collect();
    let (fm, fs) = if fids.is_empty() { (None, None) } else {
        let (m, s) = mean_std(&fids);
        (Some(m), Some(s))
    };
    let (rm, rs) = mean_std(&rayleigh);
    PointSummary {
        point: ctx.point.label.clone(),
        parameter: cfg.sweep.as_ref().map(|s| s.parameter.clone()),
        value: ctx.point.value,
        n_qubits: ctx.hamiltonian.n_qubits(),
        regime: ctx.point.oracle.regime,
        shots: ctx.point.oracle.shots,
        degree: op.spec().map(|s| s.degree),
        normalization: op.normalization(),
        orientation: op.orientation(),
        step_size: cfg.engine.a0.unwrap_or(0.5 / op.normalization()),
        ground_energy: ctx.reference.as_ref().map(|r| r.ground_energy()),
        degeneracy: ctx.reference.as_ref().map(|r| r.degeneracy),
        replicas: traces.len(),
        fidelity_mean: fm,
        fidelity_std: fs,
        rayleigh_mean: rm,
        rayleigh_std: rs,
        cache_entries: ctx.cache.len(),
        cache_sha256: sha256_hex(cache),
    }
}

fn oriented(m: &DenseHermitian, sigma: f64) -> Result<DenseHermitian> {
    DenseHermitian::new(m.matrix() * Complex64::new(sigma, 0.0))
}

/// Full-cache perturbation report for one point: `(σ p(H), σ p̃(H))`.
pub fn point_report(ctx: &PointContext) -> Result<PerturbationReport> {
    if ctx.hamiltonian.n_qubits() > MAX_DENSE_QUBITS {
        return Err(Error::TooLarge { what: "qubit count", size: ctx.hamiltonian.n_qubits(), limit: MAX_DENSE_QUBITS });
    }
    let op = ctx.operator();
    let sigma = op.orientation();
    let p = oriented(&op.to_dense()?, sigma)?;
    let p_tilde = oriented(&DenseHermitian::new(ctx.cache.fill_dense()?)?, sigma)?;
    perturbation_report(&p, &p_tilde)
}

/// Per point: full cache fill and perturbation report; writes
/// `output_dir/table.csv` and `output_dir/{point}/{cache.csv, report.json}`.
pub fn cmd_table(cfg: &ExperimentConfig) -> Result<Vec<(f64, PerturbationReport)>> {
    cfg.validate()?;
    let rows: Vec<(Point, PerturbationReport, Vec<u8>)> = cfg
        .points()?
        .into_par_iter()
        .map(|p| {
            let ctx = PointContext::build(cfg, p)?;
            let rep = point_report(&ctx)?;
            Ok((ctx.point.clone(), rep, cache_bytes(&ctx.cache)?))
        })
        .collect::<Result<_>>()?;
    for (p, rep, cache) in &rows {
        let dir = cfg.output_dir.join(&p.label);
        write_file(&dir.join("cache.csv"), cache)?;
        write_file(&dir.join("report.json"), &serde_json::to_vec_pretty(rep)?)?;
    }
    let table: Vec<(f64, PerturbationReport)> = rows.into_iter().map(|(p, r, _)| (p.value.unwrap_or(0.0), r)).collect();
    let mut buf = Vec::new();
    write_table_csv(&table, &mut buf)?;
    write_file(&cfg.output_dir.join("table.csv"), &buf)?;
    Ok(table)
}

/// Write the Fejér expansion of each point to `output_dir/{point}/expansion.csv`.
pub fn cmd_expand(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut paths = Vec::new();
    for p in cfg.points()? {
        let ctx = PointContext::build(cfg, p)?;
        let op = ctx.operator();
        let exp = FejerExpansion::build(op.degree(), fejer_alpha(op), ctx.point.oracle.fejer_order)?;
        let mut buf = Vec::new();
        exp.write_csv(&mut buf)?;
        let path = cfg.output_dir.join(&ctx.point.label).join("expansion.csv");
        write_file(&path, &buf)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Fill the full cache of every point and write `cache.csv`.
pub fn cmd_cache_fill(cfg: &ExperimentConfig) -> Result<Vec<(PathBuf, String)>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for p in cfg.points()? {
        let ctx = PointContext::build(cfg, p)?;
        ctx.cache.fill_dense()?;
        let bytes = cache_bytes(&ctx.cache)?;
        let path = cfg.output_dir.join(&ctx.point.label).join("cache.csv");
        write_file(&path, &bytes)?;
        out.push((path, sha256_hex(&bytes)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheSummary {
    pub entries: usize,
    pub max_index: usize,
    pub regimes: Vec<String>,
    pub total_shots: u64,
    pub max_abs: f64,
    /// Largest `|ξ(i,j) − conj ξ(j,i)|` over stored pairs.
    pub hermitian_deviation: f64,
    pub sha256: String,
}

/// Summarize a cache file without rebuilding its oracle.
pub fn cmd_cache_inspect(path: &Path) -> Result<CacheSummary> {
    let bytes = fs::read(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let mut map = std::collections::BTreeMap::new();
    let mut regimes = std::collections::BTreeSet::new();
    let (mut total_shots, mut max_abs, mut max_index) = (0u64, 0.0f64, 0usize);
    for rec in rdr.records() {
        let rec = rec?;
        let bad = || Error::Config(format!("malformed cache row {:?}", rec.position()));
        if rec.len() != 6 {
            return Err(bad());
        }
        let i: usize = rec[0].parse().map_err(|_| bad())?;
        let j: usize = rec[1].parse().map_err(|_| bad())?;
        let z = Complex64::new(rec[2].parse().map_err(|_| bad())?, rec[3].parse().map_err(|_| bad())?);
        total_shots += rec[4].parse::<u64>().map_err(|_| bad())?;
        regimes.insert(rec[5].parse::<Regime>()?.to_string());
        max_abs = max_abs.max(z.norm());
        max_index = max_index.max(i).max(j);
        map.insert((i, j), z);
    }
    let hermitian_deviation = map
        .iter()
        .filter_map(|(&(i, j), z)| map.get(&(j, i)).map(|w| (z - w.conj()).norm()))
        .fold(0.0, f64::max);
    Ok(CacheSummary {
        entries: map.len(),
        max_index,
        regimes: regimes.into_iter().collect(),
        total_shots,
        max_abs,
        hermitian_deviation,
        sha256: sha256_hex(&bytes),
    })
}

pub const SUITES: [&str; 6] = ["weyl", "estimator", "fejer", "trotter", "recursion", "unbiasedness"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub passed: bool,
    pub metrics: Vec<(String, f64)>,
}

impl CheckReport {
    fn new(suite: &str, passed: bool, metrics: Vec<(&str, f64)>) -> Self {
        Self { suite: suite.into(), passed, metrics: metrics.into_iter().map(|(k, v)| (k.into(), v)).collect() }
    }

    /// `suite=<name> verdict=<pass|fail> key=value ...`
    pub fn line(&self) -> String {
        let mut s = format!("suite={} verdict={}", self.suite, if self.passed { "pass" } else { "fail" });
        for (k, v) in &self.metrics {
            s.push_str(&format!(" {k}={v:.6e}"));
        }
        s
    }
}

/// Random Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseHermitian {
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let z = if i == j {
                Complex64::new(rng.random_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    DenseHermitian::new(m).expect("constructed Hermitian")
}

fn tfim2_filtered(d: f64, degree: usize) -> Result<FilteredOperator> {
    let h = build_tfim(2, 1.0, d)?;
    let r = exact_reference(&h)?;
    let cfg = FilterConfig { bounds: crate::filter::FilterBounds::Fractions { f_ub: 0.2, f_lb: 0.2 }, degree };
    let spec = cfg.resolve(&h, Some(&r))?;
    Ok(FilteredOperator::new(h, Some(spec)))
}

/// Run a named property suite.
pub fn cmd_check(suite: &str, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        "weyl" => {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..200 {
                let a = random_hermitian(32, &mut rng);
                let e = random_hermitian(32, &mut rng);
                worst = worst.max(weyl_audit(&a, &e)?);
            }
            Ok(CheckReport::new(suite, worst <= 1e-9, vec![("max_violation", worst)]))
        }
        "estimator" => {
            let p = tfim2_filtered(1.0, 3)?.to_dense()?;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let x = StateVector::random(4, &mut rng);
                let mean = exhaustive_mean(&x, &p, 1, 1)?;
                let px = p.apply(&x)?;
                for c in 0..4 {
                    worst = worst.max((mean[c] - px[c] / 16.0).norm());
                }
            }
            Ok(CheckReport::new(suite, worst <= 1e-12, vec![("max_error", worst)]))
        }
        "fejer" => {
            let op = tfim2_filtered(1.0, 3)?;
            let alpha = fejer_alpha(&op);
            let grid = interior_grid(0.5, 401);
            let errs = [10, 30, 100]
                .iter()
                .map(|&k| Ok(reconstruction_error(&FejerExpansion::build(3, alpha, k)?, &grid)))
                .collect::<Result<Vec<f64>>>()?;
            let ok = errs[0] > errs[1] && errs[1] > errs[2];
            Ok(CheckReport::new(suite, ok, vec![("err_k10", errs[0]), ("err_k30", errs[1]), ("err_k100", errs[2])]))
        }
        "trotter" => {
            let slope = trotter_slope()?;
            Ok(CheckReport::new(suite, (slope + 1.0).abs() <= 0.15, vec![("slope", slope)]))
        }
        "recursion" => {
            let worst = recursion_drift(&mut rng, 1000)?;
            Ok(CheckReport::new(suite, worst <= 1e-8, vec![("max_relative_drift", worst)]))
        }
        "unbiasedness" => {
            let op = tfim2_filtered(1.0, 3)?;
            let cache = ElementCache::new(ElementOracle::hadamard(op, Some(100)), seed, false);
            let fresh = FreshElements::new(&cache, 0);
            let p = cache.oracle().operator().to_dense()?;
            let x = StateVector::random(4, &mut rng);
            let px = p.apply(&x)?;
            let norm = p.spectral_norm()?;
            let rep = conditional_mean_check(&x, &px, norm, &fresh, 1, 1, 100_000, &mut rng)?;
            Ok(CheckReport::new(suite, rep.mean_ok(5.0), vec![("max_z", rep.max_z)]))
        }
        other => Err(Error::UnknownSuite { name: other.into(), available: SUITES.join(", ") }),
    }
}

/// Log-log slope of the worst Trotter entry error against step count for a
/// four-qubit transverse-field chain at `t = 1` in units of `H̄`.
pub fn trotter_slope() -> Result<f64> {
    let h = build_tfim(4, 1.0, 1.0)?;
    let r = exact_reference(&h)?;
    let cfg = FilterConfig { bounds: crate::filter::FilterBounds::Fractions { f_ub: 0.2, f_lb: 0.2 }, degree: 3 };
    let op = FilteredOperator::new(h.clone(), Some(cfg.resolve(&h, Some(&r))?));
    let (s, b) = op.scale_shift();
    let alpha = fejer_alpha(&op);
    let t = 3.0 / alpha;
    let steps = [8usize, 16, 32, 64, 128, 256];
    let errs = steps.iter().map(|&n| trotter_unitary_error(&h, s, b, t, n)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = steps.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}

/// Largest relative drift between recursively tracked and directly
/// recomputed `‖x‖²`, `(x, Hx)` and `Hx` over random steps at `N = 16`.
pub fn recursion_drift<R: Rng + ?Sized>(rng: &mut R, steps: usize) -> Result<f64> {
    let h = build_tfim(4, 1.0, 0.8)?;
    let p = random_hermitian(16, rng);
    let mut state = IterateState::new(StateVector::random(16, rng), &h, vec![])?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let m_r = rng.random_range(1..=16);
        let m_c = rng.random_range(1..=16);
        let a = rng.random_range(0.0..0.05);
        let g = sample_gradient(&state.x, &p, m_r, m_c, rng)?;
        state.step(&g.g, a, 1.0, &h)?;
        let hx = h.apply(&state.x)?;
        let n2 = state.x.norm_sqr();
        let q = inner(&state.x, &hx).re;
        let hx_norm = hx.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let hx_dev = state.hx.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / hx_norm;
        worst = worst
            .max((state.norm_sq - n2).abs() / n2)
            .max((state.quad - q).abs() / q.abs().max(1e-300))
            .max(hx_dev);
    }
    Ok(worst)
}
