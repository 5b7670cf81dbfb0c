//! Experiment configs, the eigenfunction-versus-Gaussian comparison table,
//! a content-addressed result cache, plot-ready CSV and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eigen::{build_coefficients, CoefficientSpec, EigenError, SlowGrowth};
use crate::gaussian::{estimate_cns, Convention, GaussianError};
use crate::lattice::{condition_i_report, is_sum_of_two_squares, lattice_points, LatticeError, SearchBudget};
use crate::measure::{prokhorov_distance, MeasureError, ProkhorovOptions, SpectralMeasure};
use crate::nodal::{auto_resolution, count_nodal_domains, CensusOptions, Domain, NodalError};

/// Environment variable naming the cache root.
pub const CACHE_ENV: &str = "TORAL_CACHE_DIR";
const LOCK_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("empty table")]
    EmptyTable,
    #[error("table is missing column '{0}'")]
    MissingColumn(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("timed out waiting for cache lock {0}")]
    Lock(PathBuf),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ExperimentError {
    /// Process exit status: 1 precondition, 2 empty or invalid data, 3 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Invalid(_) => 1,
            Self::EmptyTable | Self::MissingColumn(_) => 2,
            Self::Budget(_) => 3,
            Self::Lock(_) | Self::Io(_) => 2,
        }
    }
}

/// Key–value experiment description; `#` starts a comment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub energies: Vec<u64>,
    pub coeffs: String,
    pub r: f64,
    pub arcs: usize,
    pub delta: f64,
    pub gamma: f64,
    pub b: usize,
    pub trials: usize,
    pub seeds: Vec<u64>,
    /// Torus resolutions for the nodal count; empty means automatic.
    pub resolutions: Vec<usize>,
    pub output: PathBuf,
    /// Named target measure for the Prokhorov column.
    pub target: String,
    pub growth: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: "compare".into(),
            energies: Vec::new(),
            coeffs: "equal".into(),
            r: 10.0,
            arcs: 8,
            delta: 1e-3,
            gamma: 0.25,
            b: 4,
            trials: 8,
            seeds: vec![0],
            resolutions: Vec::new(),
            output: PathBuf::from("out"),
            target: "uniform".into(),
            growth: "log".into(),
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| s.parse().ok()).collect()
}

pub fn parse_growth(text: &str) -> Option<SlowGrowth> {
    let (name, arg) = text.split_once(':').map_or((text, None), |(n, a)| (n, Some(a)));
    match (name, arg) {
        ("log", None) => Some(SlowGrowth::Log),
        ("const", Some(c)) => c.parse().ok().map(SlowGrowth::Constant),
        ("logpow", Some(p)) => p.parse().ok().map(SlowGrowth::LogPow),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ExperimentError::Parse { line: i + 1, msg: msg.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || err(&format!("bad value for {key}: '{value}'"));
            match key {
                "command" => cfg.command = value.to_string(),
                "energies" => cfg.energies = parse_list(value).ok_or_else(bad)?,
                "coeffs" => cfg.coeffs = value.to_string(),
                "R" => cfg.r = value.parse().map_err(|_| bad())?,
                "K" => cfg.arcs = value.parse().map_err(|_| bad())?,
                "delta" => cfg.delta = value.parse().map_err(|_| bad())?,
                "gamma" => cfg.gamma = value.parse().map_err(|_| bad())?,
                "B" => cfg.b = value.parse().map_err(|_| bad())?,
                "trials" => cfg.trials = value.parse().map_err(|_| bad())?,
                "seeds" => cfg.seeds = parse_list(value).ok_or_else(bad)?,
                "resolutions" if value == "auto" => cfg.resolutions.clear(),
                "resolutions" => cfg.resolutions = parse_list(value).ok_or_else(bad)?,
                "output" => cfg.output = PathBuf::from(value),
                "target" => cfg.target = value.to_string(),
                "growth" => cfg.growth = value.to_string(),
                _ => return Err(err(&format!("unknown key '{key}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every parameter against the preconditions of the operation it feeds.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Invalid(m));
        if self.command != "compare" {
            return bad(format!("unsupported command '{}'", self.command));
        }
        if self.energies.is_empty() {
            return bad("energies must be non-empty".into());
        }
        if CoefficientSpec::parse(&self.coeffs).is_none() {
            return bad(format!("bad coefficient spec '{}'", self.coeffs));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("R must be positive, got {}", self.r));
        }
        if self.arcs == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0,1), got {}", self.delta));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return bad(format!("gamma must lie in (0,1/2), got {}", self.gamma));
        }
        if !(3..=SearchBudget::default().max_len).contains(&self.b) {
            return bad(format!("B must lie in 3..={}", SearchBudget::default().max_len));
        }
        if self.trials < crate::gaussian::MIN_CNS_TRIALS {
            return bad(format!("trials must be at least {}", crate::gaussian::MIN_CNS_TRIALS));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if let Some(&n) = self.resolutions.iter().find(|&&n| n < crate::nodal::MIN_RESOLUTION) {
            return bad(format!("resolution {n} below {}", crate::nodal::MIN_RESOLUTION));
        }
        if SpectralMeasure::named(&self.target).is_err() {
            return bad(format!("unknown target measure '{}'", self.target));
        }
        if parse_growth(&self.growth).is_none() {
            return bad(format!("bad growth '{}', expected log|const:<c>|logpow:<p>", self.growth));
        }
        Ok(())
    }

    /// Canonical `key=value` text; equal configs give equal text.
    pub fn canonical(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "energies={}", join(&self.energies.iter().map(u64::to_string).collect::<Vec<_>>()));
        let _ = writeln!(s, "coeffs={}", self.coeffs);
        let _ = writeln!(s, "R={}", self.r);
        let _ = writeln!(s, "K={}", self.arcs);
        let _ = writeln!(s, "delta={}", self.delta);
        let _ = writeln!(s, "gamma={}", self.gamma);
        let _ = writeln!(s, "B={}", self.b);
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "seeds={}", join(&self.seeds.iter().map(u64::to_string).collect::<Vec<_>>()));
        let res = if self.resolutions.is_empty() {
            "auto".to_string()
        } else {
            join(&self.resolutions.iter().map(usize::to_string).collect::<Vec<_>>())
        };
        let _ = writeln!(s, "resolutions={res}");
        let _ = writeln!(s, "output={}", self.output.display());
        let _ = writeln!(s, "target={}", self.target);
        let _ = writeln!(s, "growth={}", self.growth);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RowStatus {
    Ok,
    NotInS,
    Failed(String),
}

impl RowStatus {
    fn label(&self) -> String {
        match self {
            Self::Ok => "ok".into(),
            Self::NotInS => "E not in S".into(),
            Self::Failed(m) => format!("failed: {}", m.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub energy: u64,
    pub size: usize,
    pub coeffs: String,
    pub seed: u64,
    pub resolution: usize,
    pub nodal_count: Option<usize>,
    pub cns: Option<f64>,
    pub cns_stderr: Option<f64>,
    pub prokhorov: Option<f64>,
    pub condition_i: Option<bool>,
    pub class_a: Option<bool>,
    pub status: RowStatus,
}

impl ComparisonRow {
    pub const CSV_HEADER: &'static str =
        "E,N,coeffs,seed,resolution,Nf,Nf_over_E,cns,cns_err,prokhorov,condition_I,class_A,status";

    fn blank(energy: u64, coeffs: &str, seed: u64, status: RowStatus) -> Self {
        Self {
            energy,
            size: 0,
            coeffs: coeffs.to_string(),
            seed,
            resolution: 0,
            nodal_count: None,
            cns: None,
            cns_stderr: None,
            prokhorov: None,
            condition_i: None,
            class_a: None,
            status,
        }
    }

    pub fn nf_over_e(&self) -> Option<f64> {
        self.nodal_count.map(|n| n as f64 / self.energy as f64)
    }

    pub fn csv_row(&self) -> String {
        fn f(v: Option<f64>) -> String {
            v.map_or(String::new(), |x| format!("{x:.9e}"))
        }
        fn b(v: Option<bool>) -> &'static str {
            match v {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            }
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.energy,
            self.size,
            self.coeffs,
            self.seed,
            self.resolution,
            self.nodal_count.map_or(String::new(), |n| n.to_string()),
            f(self.nf_over_e()),
            f(self.cns),
            f(self.cns_stderr),
            f(self.prokhorov),
            b(self.condition_i),
            b(self.class_a),
            self.status.label()
        )
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(ComparisonRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

#[derive(Debug, Error)]
enum RowError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Nodal(#[from] NodalError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

fn compute_row(cfg: &ExperimentConfig, energy: u64, seed: u64) -> Result<ComparisonRow, RowError> {
    let points = lattice_points(energy);
    let spec = CoefficientSpec::parse(&cfg.coeffs).expect("validated");
    let a = build_coefficients(&points, &spec)?;
    let growth = parse_growth(&cfg.growth).expect("validated");
    let class_a = a.class_a_check(growth).passes;
    let condition = condition_i_report(energy, cfg.gamma, cfg.b, SearchBudget::default())?.passes;

    let field = a.torus_field();
    let resolution = match cfg.resolutions.first() {
        Some(&n) => n,
        None => auto_resolution(&field, Domain::Torus),
    };
    let mut opts = CensusOptions::new(resolution);
    if let Some(&max) = cfg.resolutions.last() {
        opts.max_resolution = max.max(2 * resolution);
    }
    let nodal = count_nodal_domains(&field, Domain::Torus, opts)?;

    let mu = a.spectral_measure();
    let cns = estimate_cns(&mu, &spec.id(), cfg.r, cfg.trials, seed, Convention::Square)?;
    let target = SpectralMeasure::named(&cfg.target)?;
    let prokhorov = prokhorov_distance(&mu, &target, ProkhorovOptions::default())?;
    Ok(ComparisonRow {
        energy,
        size: points.len(),
        coeffs: spec.id(),
        seed,
        resolution: nodal.census.resolution,
        nodal_count: Some(nodal.count()),
        cns: Some(cns.estimate),
        cns_stderr: Some(cns.stderr),
        prokhorov: Some(prokhorov),
        condition_i: Some(condition),
        class_a: Some(class_a),
        status: RowStatus::Ok,
    })
}

/// One row per `(E, seed)`; a failing row is marked and the run continues.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>, ExperimentError> {
    run_comparison_cached(cfg, None)
}

/// As [`run_comparison`], reusing and storing per-row results in `cache`.
pub fn run_comparison_cached(cfg: &ExperimentConfig, cache: Option<&Cache>) -> Result<Vec<ComparisonRow>, ExperimentError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        for &energy in &cfg.energies {
            if energy == 0 || !is_sum_of_two_squares(energy) {
                rows.push(ComparisonRow::blank(energy, &cfg.coeffs, seed, RowStatus::NotInS));
                continue;
            }
            let key = CacheKey::new("compare", &row_params(cfg, energy, seed));
            if let Some(c) = cache {
                if let CacheLookup::Hit(bytes) = c.get(&key)? {
                    if let Ok(row) = serde_json::from_slice::<CachedRow>(&bytes) {
                        rows.push(row.into());
                        continue;
                    }
                }
            }
            let row = compute_row(cfg, energy, seed).unwrap_or_else(|e| {
                ComparisonRow::blank(energy, &cfg.coeffs, seed, RowStatus::Failed(e.to_string()))
            });
            if let (Some(c), RowStatus::Ok) = (cache, &row.status) {
                c.put(&key, serde_json::to_string(&CachedRow::from(&row)).expect("serializable").as_bytes())?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn row_params(cfg: &ExperimentConfig, energy: u64, seed: u64) -> String {
    format!(
        "E={energy};coeffs={};R={};gamma={};B={};trials={};seed={seed};resolutions={:?};target={};growth={};version={}",
        cfg.coeffs,
        cfg.r,
        cfg.gamma,
        cfg.b,
        cfg.trials,
        cfg.resolutions,
        cfg.target,
        cfg.growth,
        env!("CARGO_PKG_VERSION")
    )
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CachedRow {
    energy: u64,
    size: usize,
    coeffs: String,
    seed: u64,
    resolution: usize,
    nodal_count: usize,
    cns: f64,
    cns_stderr: f64,
    prokhorov: f64,
    condition_i: bool,
    class_a: bool,
}

impl From<&ComparisonRow> for CachedRow {
    fn from(r: &ComparisonRow) -> Self {
        Self {
            energy: r.energy,
            size: r.size,
            coeffs: r.coeffs.clone(),
            seed: r.seed,
            resolution: r.resolution,
            nodal_count: r.nodal_count.unwrap_or(0),
            cns: r.cns.unwrap_or(f64::NAN),
            cns_stderr: r.cns_stderr.unwrap_or(f64::NAN),
            prokhorov: r.prokhorov.unwrap_or(f64::NAN),
            condition_i: r.condition_i.unwrap_or(false),
            class_a: r.class_a.unwrap_or(false),
        }
    }
}

impl From<CachedRow> for ComparisonRow {
    fn from(c: CachedRow) -> Self {
        Self {
            energy: c.energy,
            size: c.size,
            coeffs: c.coeffs,
            seed: c.seed,
            resolution: c.resolution,
            nodal_count: Some(c.nodal_count),
            cns: Some(c.cns),
            cns_stderr: Some(c.cns_stderr),
            prokhorov: Some(c.prokhorov),
            condition_i: Some(c.condition_i),
            class_a: Some(c.class_a),
            status: RowStatus::Ok,
        }
    }
}

/// `(module, SHA-256 of the canonical parameter string)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub module: String,
    pub hash: String,
}

impl CacheKey {
    pub fn new(module: &str, params: &str) -> Self {
        Self { module: module.to_string(), hash: sha256_hex(params.as_bytes()) }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheLookup {
    Hit(Vec<u8>),
    Miss,
    /// Stored digest disagrees with the blob; the caller should recompute.
    Corrupt,
}

/// Content-addressed blob store: `<root>/<module>/<hash>.blob` with a
/// `.sha256` sidecar holding the blob digest.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// Root from [`CACHE_ENV`], else `default`.
    pub fn from_env(default: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(p) => Self::new(PathBuf::from(p)),
            None => Self::new(default),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn paths(&self, key: &CacheKey) -> (PathBuf, PathBuf, PathBuf) {
        let dir = self.root.join(&key.module);
        (
            dir.join(format!("{}.blob", key.hash)),
            dir.join(format!("{}.sha256", key.hash)),
            dir.join(format!("{}.lock", key.hash)),
        )
    }

    pub fn get(&self, key: &CacheKey) -> Result<CacheLookup, ExperimentError> {
        let (blob, digest, _) = self.paths(key);
        let bytes = match fs::read(&blob) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(CacheLookup::Miss),
            Err(e) => return Err(e.into()),
        };
        let stored = fs::read_to_string(&digest).unwrap_or_default();
        if stored.trim() != sha256_hex(&bytes) {
            eprintln!("warning: cache entry {}/{} failed its hash check; recomputing", key.module, key.hash);
            return Ok(CacheLookup::Corrupt);
        }
        eprintln!("cache hit {}/{}", key.module, key.hash);
        Ok(CacheLookup::Hit(bytes))
    }

    /// Writes under an exclusive lock file; the blob appears atomically.
    pub fn put(&self, key: &CacheKey, bytes: &[u8]) -> Result<(), ExperimentError> {
        let (blob, digest, lock) = self.paths(key);
        fs::create_dir_all(blob.parent().expect("has parent"))?;
        let start = Instant::now();
        let _guard = loop {
            match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
                Ok(_) => break LockGuard(lock.clone()),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    if start.elapsed() > LOCK_TIMEOUT {
                        return Err(ExperimentError::Lock(lock));
                    }
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(e.into()),
            }
        };
        let tmp = blob.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(bytes)?;
        fs::write(&digest, sha256_hex(bytes))?;
        fs::rename(&tmp, &blob)?;
        Ok(())
    }
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// From a comparison table: `E,Nf_over_E,cns,cns_err`.
    Scatter,
    /// From a radius sweep: `R,estimate,stderr`.
    Trend,
}

impl PlotKind {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Scatter => &["E", "Nf_over_E", "cns", "cns_err"],
            Self::Trend => &["R", "estimate", "stderr"],
        }
    }
}

/// Projects a CSV table onto the stable column schema of `kind`, dropping rows
/// with any empty selected field.
pub fn emit_plot_data(table: &str, kind: PlotKind) -> Result<String, ExperimentError> {
    let mut lines = table.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or(ExperimentError::EmptyTable)?.split(',').collect();
    let idx: Vec<usize> = kind
        .columns()
        .iter()
        .map(|c| header.iter().position(|h| h.trim() == *c).ok_or_else(|| ExperimentError::MissingColumn(c.to_string())))
        .collect::<Result<_, _>>()?;
    let mut out = kind.columns().join(",");
    out.push('\n');
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let picked: Vec<&str> = idx.iter().map(|&i| fields.get(i).copied().unwrap_or("").trim()).collect();
        if picked.iter().any(|f| f.is_empty()) {
            continue;
        }
        out.push_str(&picked.join(","));
        out.push('\n');
        rows += 1;
    }
    if rows == 0 {
        return Err(ExperimentError::EmptyTable);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config: Option<String>,
    pub seeds: Vec<u64>,
    pub version: String,
    /// Output file name → SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, arguments: Vec<String>, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            arguments,
            config: None,
            seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, ExperimentError> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self).expect("serializable"))?;
        Ok(path)
    }
}
