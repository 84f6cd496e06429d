//! Configuration, seeded sampling, report emission and geodesic
//! integration behind the `finsler` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use finsler_core::betachange::{apply_change_unchecked, theorem_suite};
use finsler_core::classify::{implication_audit, classify, AuditStatus, ClassificationReport};
use finsler_core::concurrent::{identity_suite, verify_concurrent};
use finsler_core::connections::{connection_at, connection_suite, spray_at, ConnectionCoefficients, ConnectionKind};
use finsler_core::dsl::{parse_model, Domain, ModelSpec};
use finsler_core::error::FinslerError;
use finsler_core::fixtures;
use finsler_core::geometry::{metric_at, metric_suite, riemannian_test};
use finsler_core::point::SamplePoint;
use finsler_core::report::{CheckResult, VerificationReport};
use finsler_core::tensor::Tensor;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Prefix that selects a built-in fixture instead of a file, e.g. `fixture:f1`.
pub const FIXTURE_PREFIX: &str = "fixture:";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Engine(#[from] FinslerError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    VerifyConcurrent,
    BetaChange,
    Classify,
    Geodesic,
}

impl Command {
    /// Tolerance used when `--tol` is not given.
    pub fn default_tol(self) -> f64 {
        match self {
            Command::Analyze => 1e-9,
            Command::VerifyConcurrent => 1e-8,
            Command::BetaChange | Command::Classify => 1e-7,
            Command::Geodesic => 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicConfig {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Model file path, or `fixture:NAME`.
    pub model: String,
    pub command: Command,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub geodesic: Option<GeodesicConfig>,
}

impl RunConfig {
    pub fn new(model: impl Into<String>, command: Command) -> Self {
        Self {
            model: model.into(),
            command,
            samples: 200,
            seed: 0,
            tol: command.default_tol(),
            out: None,
            format: Format::Json,
            geodesic: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        if self.command == Command::Geodesic && self.geodesic.is_none() {
            return Err(CliError::Config("geodesic needs --x0 and --y0".into()));
        }
        Ok(())
    }
}

/// Reads a model file, or a built-in fixture named with [`FIXTURE_PREFIX`].
pub fn load_model(spec: &str) -> Result<ModelSpec> {
    if let Some(name) = spec.strip_prefix(FIXTURE_PREFIX) {
        return fixtures::by_name(name).ok_or_else(|| {
            CliError::Config(format!("unknown fixture `{name}`; known: {}", fixtures::NAMES.join(", ")))
        });
    }
    let path = Path::new(spec);
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(parse_model(&src)?)
}

/// Deterministic sample set: the box's low and high corners, then points
/// drawn uniformly from the box by ChaCha8 seeded with `seed`.
pub fn sample_points(domain: &Domain, count: usize, seed: u64) -> Result<Vec<SamplePoint>> {
    let empty = |lo: f64, hi: f64| !(lo <= hi) || !lo.is_finite() || !hi.is_finite();
    if domain.x.is_empty() || domain.x.iter().chain(&domain.y).any(|iv| empty(iv.lo, iv.hi)) {
        return Err(FinslerError::EmptyBox.into());
    }
    if count == 0 {
        return Err(CliError::Config("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![domain.lo_corner(), domain.hi_corner()];
    out.truncate(count);
    while out.len() < count {
        let x: Vec<f64> = domain.x.iter().map(|iv| rng.random_range(iv.lo..=iv.hi)).collect();
        let y: Vec<f64> = domain.y.iter().map(|iv| rng.random_range(iv.lo..=iv.hi)).collect();
        out.push(SamplePoint::new(x, y));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub dim: usize,
    /// SHA-256 of the model source text.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    /// `null` when the residual is not a number.
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_sample: Option<SamplePoint>,
}

impl From<&CheckResult> for CheckEntry {
    fn from(c: &CheckResult) -> Self {
        Self { name: c.name.clone(), residual: c.residual, tol: c.tol, pass: c.pass, worst_sample: c.worst_sample.clone() }
    }
}

/// Pointwise objects listed by `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub point: SamplePoint,
    pub l2: f64,
    pub g: Vec<Vec<f64>>,
    pub spray: Vec<f64>,
    pub barthel: Vec<Vec<f64>>,
    pub connections: Vec<ProbeConnection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConnection {
    pub kind: ConnectionKind,
    /// `H^i_jk` at `[i][j][k]`.
    pub h: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// The flow left the domain box (or the model's region of definition)
    /// before `t_end`.
    pub truncated: bool,
    /// `max_t |L^2(t) - L^2(0)| / L^2(0)`.
    pub l2_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("a trajectory holds its initial point")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub model: ModelInfo,
    pub config: RunConfig,
    pub checks: Vec<CheckEntry>,
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<Probe>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// 0 when every check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    fn absorb(&mut self, r: &VerificationReport) {
        self.checks.extend(r.checks.iter().map(CheckEntry::from));
        self.scalars.extend(r.scalars.iter().map(|(k, v)| (k.clone(), *v)));
        self.notes.extend(r.notes.iter().cloned());
    }
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.to_rows()
}

fn cube(t: &Tensor) -> Vec<Vec<Vec<f64>>> {
    let n = t.shape()[0];
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| t[[i, j, k]]).collect()).collect()).collect()
}

fn probe(model: &ModelSpec, s: &SamplePoint) -> Result<Probe> {
    let m = metric_at(model, s)?;
    let mut connections = Vec::new();
    let mut barthel = None;
    for kind in ConnectionKind::ALL {
        let ConnectionCoefficients { n, h, v, .. } = connection_at(model, kind, s)?;
        barthel.get_or_insert_with(|| rows(&n));
        connections.push(ProbeConnection { kind, h: cube(&h), v: cube(&v) });
    }
    Ok(Probe {
        point: s.clone(),
        l2: m.l2,
        g: rows(&m.g),
        spray: spray_at(model, s)?,
        barthel: barthel.unwrap_or_default(),
        connections,
    })
}

/// Probe points for `analyze`: the two corners and the box center.
fn probe_points(domain: &Domain) -> Vec<SamplePoint> {
    let center = domain.grid(1).remove(0);
    vec![domain.lo_corner(), center, domain.hi_corner()]
}

fn require_zeta(model: &ModelSpec) -> Result<()> {
    if model.zeta.is_none() {
        return Err(FinslerError::ZetaRequired.into());
    }
    Ok(())
}

/// `-2 G(x, y)`, the acceleration of the geodesic flow.
fn acceleration(model: &ModelSpec, x: &[f64], y: &[f64]) -> finsler_core::error::Result<Vec<f64>> {
    let g = spray_at(model, &SamplePoint::new(x.to_vec(), y.to_vec()))?;
    Ok(g.into_iter().map(|v| -2.0 * v).collect())
}

fn axpy(a: &[f64], h: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + h * v).collect()
}

/// Fixed-step RK4 on `x'' = -2 G(x, x')`. Stops early, with `truncated`
/// set, once `x` leaves the domain box or the model cannot be evaluated.
pub fn geodesic(model: &ModelSpec, x0: &[f64], y0: &[f64], t_end: f64, steps: usize) -> Result<Trajectory> {
    let n = model.dim;
    if x0.len() != n || y0.len() != n {
        return Err(CliError::Config(format!("x0 and y0 need {n} components")));
    }
    if steps == 0 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CliError::Config("geodesic needs steps >= 1 and t_end > 0".into()));
    }
    if y0.iter().all(|v| *v == 0.0) {
        return Err(CliError::Config("y0 must be non-zero".into()));
    }
    let inside = |x: &[f64]| x.iter().zip(&model.domain.x).all(|(v, iv)| iv.contains(*v));
    if !inside(x0) {
        return Err(CliError::Config(format!("x0 = {x0:?} lies outside the domain box")));
    }
    let l2_of = |x: &[f64], y: &[f64]| model.lagrangian.eval(x, y);
    let l2_0 = l2_of(x0, y0)?;
    let h = t_end / steps as f64;
    let (mut x, mut y) = (x0.to_vec(), y0.to_vec());
    let mut points = vec![TrajectoryPoint { t: 0.0, x: x.clone(), y: y.clone(), l2: l2_0 }];
    let mut truncated = false;
    let mut drift = 0.0f64;
    for step in 1..=steps {
        let stage = || -> finsler_core::error::Result<(Vec<f64>, Vec<f64>)> {
            let a1 = acceleration(model, &x, &y)?;
            let (x2, y2) = (axpy(&x, 0.5 * h, &y), axpy(&y, 0.5 * h, &a1));
            let a2 = acceleration(model, &x2, &y2)?;
            let (x3, y3) = (axpy(&x, 0.5 * h, &y2), axpy(&y, 0.5 * h, &a2));
            let a3 = acceleration(model, &x3, &y3)?;
            let (x4, y4) = (axpy(&x, h, &y3), axpy(&y, h, &a3));
            let a4 = acceleration(model, &x4, &y4)?;
            let nx = (0..n).map(|i| x[i] + h / 6.0 * (y[i] + 2.0 * y2[i] + 2.0 * y3[i] + y4[i])).collect();
            let ny = (0..n).map(|i| y[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])).collect();
            Ok((nx, ny))
        };
        let Ok((nx, ny)) = stage() else {
            truncated = true;
            break;
        };
        if !inside(&nx) {
            truncated = true;
            break;
        }
        let Ok(l2) = l2_of(&nx, &ny) else {
            truncated = true;
            break;
        };
        drift = drift.max((l2 - l2_0).abs() / l2_0);
        x = nx;
        y = ny;
        points.push(TrajectoryPoint { t: step as f64 * h, x: x.clone(), y: y.clone(), l2 });
    }
    Ok(Trajectory { points, truncated, l2_drift: drift })
}

/// Runs the configured suite and assembles the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    let total = Instant::now();
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let model = load_model(&config.model)?;
    timings.insert("load".to_string(), t.elapsed().as_secs_f64());
    let source = model.source.clone().or_else(|| model.to_source()).unwrap_or_default();
    let mut report = Report {
        version: VERSION.to_string(),
        model: ModelInfo { name: model.name.clone(), dim: model.dim, sha256: sha256_hex(&source) },
        config: config.clone(),
        checks: Vec::new(),
        scalars: BTreeMap::new(),
        notes: Vec::new(),
        timings: BTreeMap::new(),
        classification: None,
        probes: None,
        trajectory: None,
    };
    let tol = config.tol;

    if config.command == Command::Geodesic {
        let gc = config.geodesic.as_ref().expect("validated");
        let t = Instant::now();
        let traj = geodesic(&model, &gc.x0, &gc.y0, gc.t_end, gc.steps)?;
        timings.insert("suite".to_string(), t.elapsed().as_secs_f64());
        report.checks.push(CheckEntry {
            name: "geodesic: L^2 conserved along the flow".into(),
            residual: traj.l2_drift,
            tol,
            pass: traj.l2_drift < tol,
            worst_sample: None,
        });
        report.checks.push(CheckEntry {
            name: "geodesic: reached t_end inside the domain".into(),
            residual: if traj.truncated { 1.0 } else { 0.0 },
            tol,
            pass: !traj.truncated,
            worst_sample: None,
        });
        report.scalars.insert("geodesic: t reached".into(), traj.last().t);
        report.trajectory = Some(traj);
        timings.insert("total".to_string(), total.elapsed().as_secs_f64());
        report.timings = timings;
        return Ok(report);
    }

    if matches!(config.command, Command::VerifyConcurrent | Command::BetaChange) {
        require_zeta(&model)?;
    }
    let t = Instant::now();
    let samples = sample_points(&model.domain, config.samples, config.seed)?;
    timings.insert("sampling".to_string(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    match config.command {
        Command::Analyze => {
            report.absorb(&metric_suite(&model, &samples, tol)?);
            report.absorb(&connection_suite(&model, &samples, tol)?);
            let rt = riemannian_test(&model, &samples, tol)?;
            report.scalars.insert("max |C3|".into(), rt.max_c3);
            report.scalars.insert("max |C1|".into(), rt.max_c1);
            report.checks.push(CheckEntry {
                name: "metric: max|C3| < tol agrees with max|C1| < tol".into(),
                residual: if rt.deicke_consistent { 0.0 } else { 1.0 },
                tol,
                pass: rt.deicke_consistent,
                worst_sample: None,
            });
            report.notes.push(format!("riemannian: {}", rt.is_riemannian));
            report.probes =
                Some(probe_points(&model.domain).iter().map(|s| probe(&model, s)).collect::<Result<Vec<_>>>()?);
        }
        Command::VerifyConcurrent => {
            let conc = verify_concurrent(&model, &samples, tol)?;
            let ok = conc.passed();
            report.absorb(&conc);
            if ok {
                report.absorb(&identity_suite(&model, &samples, tol)?);
            } else {
                report.notes.push("identity suite skipped: zeta is not concurrent".into());
            }
        }
        Command::BetaChange => {
            let conc = verify_concurrent(&model, &samples, tol)?;
            if conc.passed() {
                let cm = apply_change_unchecked(&model)?;
                report.absorb(&theorem_suite(&cm, &samples, tol)?);
            } else {
                report.absorb(&conc);
                report.notes.push("beta-change skipped: zeta is not concurrent".into());
            }
        }
        Command::Classify => {
            if model.zeta.is_some() {
                let audit = implication_audit(&model, &samples, tol)?;
                report.absorb(&audit.report);
                if audit.status == AuditStatus::NoConcurrentField {
                    report.classification = Some(classify(&model, &samples, tol)?);
                } else {
                    report.classification = audit.classification;
                }
            } else {
                report.classification = Some(classify(&model, &samples, tol)?);
                report.notes.push("implication audit skipped: no zeta declared".into());
            }
            if let Some(cls) = &report.classification {
                for (k, s) in &cls.fits {
                    report.scalars.insert(format!("{k} (mean)"), s.mean);
                }
            }
        }
        Command::Geodesic => unreachable!("handled above"),
    }
    timings.insert("suite".to_string(), t.elapsed().as_secs_f64());
    timings.insert("total".to_string(), total.elapsed().as_secs_f64());
    report.timings = timings;
    Ok(report)
}

pub fn to_json(report: &Report) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

fn num(v: &serde_json::Value) -> String {
    v.as_f64().map_or_else(|| "NaN".to_string(), |f| format!("{f:.3e}"))
}

/// Plain-text rendering of the JSON report.
pub fn to_table(report: &Report) -> Result<String> {
    let v = serde_json::to_value(report)?;
    let mut out = String::new();
    let m = &v["model"];
    let _ = writeln!(
        out,
        "finsler {}  model {} (dim {})  command {}",
        v["version"].as_str().unwrap_or(""),
        m["name"].as_str().unwrap_or(""),
        m["dim"],
        v["config"]["command"].as_str().unwrap_or("")
    );
    let checks = v["checks"].as_array().cloned().unwrap_or_default();
    let width = checks.iter().filter_map(|c| c["name"].as_str()).map(str::len).max().unwrap_or(0);
    for c in &checks {
        let status = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{status}  {:<width$}  {}  (tol {})",
            c["name"].as_str().unwrap_or(""),
            num(&c["residual"]),
            num(&c["tol"])
        );
    }
    if let Some(cls) = v.get("classification") {
        for c in cls["classes"].as_array().into_iter().flatten() {
            let _ = writeln!(
                out,
                "class  {:<22} {:<12} {}",
                c["class"].as_str().unwrap_or(""),
                c["verdict"].as_str().unwrap_or(""),
                num(&c["residual"])
            );
        }
    }
    for (k, s) in v["scalars"].as_object().into_iter().flatten() {
        let _ = writeln!(out, "scalar  {k} = {}", num(s));
    }
    if let Some(tr) = v.get("trajectory") {
        let pts = tr["points"].as_array().map_or(0, Vec::len);
        let _ = writeln!(out, "trajectory  {pts} points, truncated {}, L^2 drift {}", tr["truncated"], num(&tr["l2_drift"]));
    }
    for n in v["notes"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "note  {}", n.as_str().unwrap_or(""));
    }
    for (k, s) in v["timings"].as_object().into_iter().flatten() {
        let _ = writeln!(out, "time  {k} {:.3}s", s.as_f64().unwrap_or(0.0));
    }
    Ok(out)
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        Format::Table => to_table(report),
    }
}

/// Runs, writes the rendered report and returns the process exit code.
pub fn execute(config: &RunConfig) -> i32 {
    let outcome = run(config).and_then(|r| {
        let text = render(&r, config.format)?;
        match &config.out {
            Some(p) => std::fs::write(p, text + "\n").map_err(|source| CliError::Io { path: p.clone(), source })?,
            None => {
                // a closed pipe is not a failed run
                let _ = writeln!(std::io::stdout().lock(), "{text}");
            }
        }
        Ok(r.exit_code())
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
