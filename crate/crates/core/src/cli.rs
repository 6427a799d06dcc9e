//! The `grenlab` command line: argument parsing, run manifests, atomic
//! output files and the on-disk cache of limit constants.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chernoff::{self, ArgmaxConfig};
use crate::constants::{self, LimitConstants};
use crate::density::{DensityFamily, MonotoneDensity};
use crate::error::{Error, Result};
use crate::functionals::{self, ErrorSpec, Weight};
use crate::grenander::{fit_lcm, EmpiricalCdf};
use crate::harness::{self, DivergencePart, ExperimentConfig, ExperimentReport, Mode};
use crate::inverse_process::{self, LocalizedArgmaxSpec, ProcessKind};
use crate::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECKS_FAILED: i32 = 3;

pub const CONSTANTS_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "GRENLAB_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "grenlab", version, about = "Grenander estimator and L_k-error Monte Carlo lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the least concave majorant of a sample in [0, 1].
    Fit(FitArgs),
    /// L_k-distance between the estimate of a sample and a reference density.
    Error(ErrorArgs),
    /// Estimate the centring and scale constants of the L_k-error.
    Constants(ConstantsArgs),
    /// Simulate localized argmax processes.
    InverseProcess(InverseArgs),
    /// Trend of the standardised L_k-error towards the normal law.
    Clt(CltArgs),
    /// Behaviour of the estimator at the left boundary.
    Boundary(BoundaryArgs),
    /// Growth of the scaled error outside the normal regime.
    Diverge(DivergeArgs),
    /// Render a report as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Newline-separated sample.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ErrorArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `linear:F0,F1`, `truncexp:THETA` or the JSON object form.
    #[arg(long, value_parser = parse_density)]
    pub density: DensityFamily,
    #[arg(long)]
    pub k: f64,
    /// Integration range `lo:hi`.
    #[arg(long, value_parser = parse_range)]
    pub range: Option<(f64, f64)>,
    /// `none` or `inv-sd`.
    #[arg(long, default_value = "none")]
    pub weight: String,
    /// Integrate over `[n^-eps, 1 - n^-eps]`.
    #[arg(long)]
    pub modified_eps: Option<f64>,
    /// Also print the standardised statistic.
    #[arg(long)]
    pub standardize: bool,
    /// Constants file written by `grenlab constants`; defaults to the cache.
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub k: f64,
    #[arg(long, value_parser = parse_density)]
    pub density: DensityFamily,
    #[arg(long, default_value_t = ArgmaxConfig::default().reps)]
    pub reps: usize,
    #[arg(long, default_value_t = ArgmaxConfig::default().horizon)]
    pub horizon: f64,
    /// Coarse grid step of the simulated Brownian paths.
    #[arg(long, default_value_t = ArgmaxConfig::default().step)]
    pub grid: f64,
    #[arg(long, default_value_t = ArgmaxConfig::default().refinements)]
    pub refinements: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "none")]
    pub weight: String,
    /// Recompute even when the cache holds a result.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InverseArgs {
    #[arg(long, value_parser = parse_density)]
    pub density: DensityFamily,
    /// Processes to simulate: any of E, B, W.
    #[arg(long, value_delimiter = ',', default_value = "W")]
    pub process: Vec<ProcessKind>,
    /// Levels in `(f(1), f(0))`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0 / 128.0)]
    pub step: f64,
    #[arg(long, default_value_t = 3)]
    pub refinements: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, value_parser = parse_density, default_value = "linear:1.5,0.5")]
    pub density: DensityFamily,
    /// Sample sizes, comma separated and increasing.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Report JSON; the raw CSV and the manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CltArgs {
    #[arg(long)]
    pub k: f64,
    /// Trimming exponent; the trimmed error is used whenever k >= 2.5.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// `f_n(0) / f(0)` against the Gamma partial-sum supremum.
    Zero,
    /// Scaled error at `x = n^-alpha`.
    Rate,
    /// Size of the boundary integrals.
    Integral,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundaryArgs {
    #[arg(long, value_enum, default_value = "zero")]
    pub mode: BoundaryMode,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Terms of the Gamma partial sums.
    #[arg(long)]
    pub truncation: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergeKind {
    Mean,
    NearZeroVariance,
    Control,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DivergeArgs {
    #[arg(long, value_enum, default_value = "mean")]
    pub part: DivergeKind,
    #[arg(long)]
    pub k: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_density(s: &str) -> std::result::Result<DensityFamily, String> {
    let fam = DensityFamily::parse(s).map_err(|e| e.to_string())?;
    MonotoneDensity::new(fam).map_err(|e| e.to_string())?;
    Ok(fam)
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

/// Everything needed to repeat a run with the same binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub artifact_version: String,
    /// SHA-256 of each input file, keyed by path.
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

/// Output of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub vertices: Vec<[f64; 2]>,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

/// Output of `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorOutput {
    pub n: usize,
    pub k: f64,
    pub range: [f64; 2],
    pub weight: String,
    pub error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

/// Output of `constants`, also the format of cache entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub constants_version: u32,
    pub cache_key: String,
    pub density: DensityFamily,
    pub weight: String,
    pub config: ArgmaxConfig,
    pub c_grid: Vec<f64>,
    #[serde(flatten)]
    pub constants: LimitConstants,
    pub kappa_trapezoid: f64,
    pub kappa_tail: f64,
    pub truncated_fraction: f64,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    density: &'a DensityFamily,
    k: f64,
    weight: &'a str,
    config: &'a ArgmaxConfig,
    c_grid: &'a [f64],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Hash of every input that determines a constants file.
pub fn constants_key(density: &DensityFamily, k: f64, weight: &str, cfg: &ArgmaxConfig, c_grid: &[f64]) -> String {
    let key = CacheKey {
        version: CONSTANTS_VERSION,
        density,
        k,
        weight,
        config: cfg,
        c_grid,
    };
    sha256_hex(&serde_json::to_vec(&key).expect("cache key serialises"))
}

pub fn cache_dir() -> PathBuf {
    if let Some(d) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(d);
    }
    match std::env::var_os("HOME") {
        Some(h) => PathBuf::from(h).join(".cache").join("grenlab"),
        None => PathBuf::from(".grenlab-cache"),
    }
}

fn cache_path(key: &str) -> PathBuf {
    cache_dir().join(format!("constants-{key}.json"))
}

/// Write through a temporary file in the target directory and rename it
/// into place, so an interrupted run leaves no partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp-{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Parse newline-separated decimal floats; blank lines are skipped.
pub fn parse_sample(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("line {}: '{}': {e}", i + 1, l.trim())))
        })
        .collect()
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Collects inputs and outputs of one invocation.
struct Run {
    manifest: RunManifest,
}

impl Run {
    fn new<A: Serialize>(subcommand: &str, argv: &[String], args: &A, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                argv: argv.to_vec(),
                config: serde_json::to_value(args)?,
                seed,
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                input_hashes: BTreeMap::new(),
                outputs: Vec::new(),
            },
        })
    }

    fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read {}: {e}", path.display()))
        })?;
        self.manifest
            .input_hashes
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn note_config<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        if let serde_json::Value::Object(m) = &mut self.manifest.config {
            m.insert(key.to_string(), serde_json::to_value(value)?);
        }
        Ok(())
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Write the manifest next to `primary`.
    fn finish(self, primary: &Path) -> Result<()> {
        write_atomic(&manifest_path(primary), &to_json(&self.manifest)?)
    }
}

/// Parse arguments and run; returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, &argv) {
        Ok(passed) => {
            if passed {
                EXIT_OK
            } else {
                EXIT_CHECKS_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Inconsistent(_) => EXIT_INTERNAL,
                _ => EXIT_CONFIG,
            }
        }
    }
}

/// Run one subcommand; `Ok(false)` means a report check failed.
pub fn dispatch(command: Command, argv: &[String]) -> Result<bool> {
    match command {
        Command::Fit(a) => fit(&a, argv).map(|_| true),
        Command::Error(a) => error(&a, argv).map(|_| true),
        Command::Constants(a) => constants_cmd(&a, argv).map(|_| true),
        Command::InverseProcess(a) => inverse(&a, argv).map(|_| true),
        Command::Clt(a) => clt(&a, argv),
        Command::Boundary(a) => boundary(&a, argv),
        Command::Diverge(a) => diverge(&a, argv),
        Command::Render(a) => render_cmd(&a, argv).map(|_| true),
    }
}

fn emit(run: &mut Run, out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => run.write(p, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn fit(a: &FitArgs, argv: &[String]) -> Result<FitOutput> {
    let mut run = Run::new("fit", argv, a, None)?;
    let text = String::from_utf8_lossy(&run.read_input(&a.input)?).into_owned();
    let lcm = fit_lcm(&EmpiricalCdf::new(parse_sample(&text)?)?);
    let est = lcm.estimate();
    let out = FitOutput {
        vertices: lcm.vertices().into_iter().map(|(t, y)| [t, y]).collect(),
        breakpoints: est.breaks,
        values: est.values,
        manifest: a.out.as_deref().map(|p| file_name(&manifest_path(p))),
    };
    emit(&mut run, a.out.as_deref(), &to_json(&out)?)?;
    if let Some(p) = &a.out {
        run.finish(p)?;
    }
    Ok(out)
}

/// Constants for `(density, k, weight)` from an explicit file or the cache
/// entry of the default simulation settings.
pub fn load_constants(
    file: Option<&Path>,
    density: &DensityFamily,
    k: f64,
    weight: &str,
) -> Result<(LimitConstants, Option<PathBuf>)> {
    let (path, from_cache) = match file {
        Some(p) => (p.to_path_buf(), false),
        None => {
            let key = constants_key(density, k, weight, &ArgmaxConfig::default(), &chernoff::default_c_grid());
            (cache_path(&key), true)
        }
    };
    if !path.exists() {
        let hint = if from_cache {
            format!(
                "no cached constants for k = {k}, {}; run `grenlab constants --k {k} --density {}` first",
                density.label(),
                density.label()
            )
        } else {
            format!("constants file {} does not exist", path.display())
        };
        return Err(Error::MissingConstants(hint));
    }
    let cf: ConstantsFile = serde_json::from_slice(&fs::read(&path)?)?;
    if cf.constants_version != CONSTANTS_VERSION {
        return Err(Error::Schema(format!(
            "constants_version {} (supported: {CONSTANTS_VERSION})",
            cf.constants_version
        )));
    }
    if (cf.constants.k - k).abs() > 1e-12 || cf.density != *density || cf.weight != weight {
        return Err(Error::MissingConstants(format!(
            "{} holds constants for k = {}, {}, weight {}",
            path.display(),
            cf.constants.k,
            cf.density.label(),
            cf.weight
        )));
    }
    Ok((cf.constants, Some(path)))
}

fn error(a: &ErrorArgs, argv: &[String]) -> Result<ErrorOutput> {
    let mut run = Run::new("error", argv, a, None)?;
    let d = MonotoneDensity::new(a.density)?;
    let weight = Weight::parse(&a.weight)?;
    let text = String::from_utf8_lossy(&run.read_input(&a.input)?).into_owned();
    let e = EmpiricalCdf::new(parse_sample(&text)?)?;
    let n = e.n();
    let g = fit_lcm(&e).estimate();
    let (lo, hi) = match (a.modified_eps, a.range) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument("--range and --modified-eps exclude each other".into()))
        }
        (Some(eps), None) => {
            functionals::check_eps(a.k, eps)?;
            let edge = (n as f64).powf(-eps);
            if edge >= 0.5 {
                return Err(Error::InvalidArgument(format!("n = {n} too small for eps = {eps}")));
            }
            (edge, 1.0 - edge)
        }
        (None, Some(r)) => r,
        (None, None) => (0.0, 1.0),
    };
    let err = functionals::lk_error(&g, &d, &ErrorSpec::new(a.k).with_range(lo, hi).with_weight(weight))?;
    let statistic = if a.standardize {
        let (c, path) = load_constants(a.constants.as_deref(), &a.density, a.k, &a.weight)?;
        if let Some(p) = path {
            run.read_input(&p)?;
        }
        Some(functionals::standardize(err, n, a.k, c.mu_k, c.sigma_k)?.value)
    } else {
        None
    };
    let out = ErrorOutput {
        n,
        k: a.k,
        range: [lo, hi],
        weight: a.weight.clone(),
        error: err,
        statistic,
        manifest: a.out.as_deref().map(|p| file_name(&manifest_path(p))),
    };
    match &a.out {
        Some(p) => {
            run.write(p, &to_json(&out)?)?;
            run.finish(p)?;
        }
        None => {
            println!("error = {err:?}");
            if let Some(t) = statistic {
                println!("T = {t:?}");
            }
        }
    }
    Ok(out)
}

/// Estimate (or fetch from the cache) the constants for one exponent.
pub fn compute_constants_file(a: &ConstantsArgs) -> Result<ConstantsFile> {
    let d = MonotoneDensity::new(a.density)?;
    let weight = Weight::parse(&a.weight)?;
    let cfg = ArgmaxConfig {
        horizon: a.horizon,
        step: a.grid,
        refinements: a.refinements,
        reps: a.reps,
        seed: a.seed,
    };
    cfg.validate()?;
    if !(a.k >= 1.0 && a.k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k = {} must be >= 1", a.k)));
    }
    let c_grid = chernoff::default_c_grid();
    let key = constants_key(&a.density, a.k, &a.weight, &cfg, &c_grid);
    let cached = cache_path(&key);
    if !a.no_cache && cached.exists() {
        if let Ok(cf) = serde_json::from_slice::<ConstantsFile>(&fs::read(&cached)?) {
            if cf.cache_key == key {
                log::info!("constants read from {}", cached.display());
                return Ok(cf);
            }
        }
    }
    let est = chernoff::estimate_chernoff(&[a.k], &c_grid, &cfg)?;
    for w in &est.warnings {
        log::warn!("{w}");
    }
    let kappa = est.kappa(a.k)?;
    let lc = constants::weighted_constants(&d, a.k, est.abs_moment(a.k)?, kappa.estimate(), &weight)?;
    let cf = ConstantsFile {
        constants_version: CONSTANTS_VERSION,
        cache_key: key,
        density: a.density,
        weight: a.weight.clone(),
        config: cfg,
        c_grid: est.c_grid.clone(),
        constants: lc,
        kappa_trapezoid: kappa.trapezoid,
        kappa_tail: kappa.tail,
        truncated_fraction: est.truncated_fraction(),
        warnings: est.warnings.clone(),
        manifest: None,
    };
    if let Err(e) = write_atomic(&cached, &to_json(&cf)?) {
        log::warn!("could not write cache entry {}: {e}", cached.display());
    }
    Ok(cf)
}

fn constants_cmd(a: &ConstantsArgs, argv: &[String]) -> Result<ConstantsFile> {
    let mut run = Run::new("constants", argv, a, Some(a.seed))?;
    let mut cf = compute_constants_file(a)?;
    cf.manifest = a.out.as_deref().map(|p| file_name(&manifest_path(p)));
    emit(&mut run, a.out.as_deref(), &to_json(&cf)?)?;
    if let Some(p) = &a.out {
        run.finish(p)?;
    }
    Ok(cf)
}

fn inverse(a: &InverseArgs, argv: &[String]) -> Result<String> {
    let mut run = Run::new("inverse-process", argv, a, Some(a.seed))?;
    if a.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let d = MonotoneDensity::new(a.density)?;
    let mut csv = String::from("J,a,n,replication,value\n");
    let mut truncated = 0usize;
    for &process in &a.process {
        for &level in &a.a {
            let spec = LocalizedArgmaxSpec {
                step: a.step,
                refinements: a.refinements,
                seed: a.seed,
                ..LocalizedArgmaxSpec::new(d, level, a.n, process)
            };
            spec.validate()?;
            for (i, s) in inverse_process::sample_vn(&spec, a.reps)?.iter().enumerate() {
                truncated += s.truncated as usize;
                csv.push_str(&format!("{process},{level:?},{},{i},{:?}\n", a.n, s.v));
            }
        }
    }
    if truncated > 0 {
        log::warn!("{truncated} maximisers sit at the edge of [0, 1]");
    }
    emit(&mut run, a.out.as_deref(), csv.as_bytes())?;
    if let Some(p) = &a.out {
        run.finish(p)?;
    }
    Ok(csv)
}

fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

fn write_report(mut run: Run, mut report: ExperimentReport, out: &Path) -> Result<bool> {
    report.manifest = Some(file_name(&manifest_path(out)));
    run.write(out, &to_json(&report)?)?;
    run.write(&csv_path(out), report.csv().as_bytes())?;
    run.finish(out)?;
    for c in &report.checks {
        println!("{:<32} {} {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
    }
    Ok(report.passed())
}

fn grid_config(g: &GridArgs, k: f64, mode: Mode) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(g.density, k, g.n_grid.clone(), g.reps, mode);
    cfg.seed = g.seed;
    cfg
}

fn clt(a: &CltArgs, argv: &[String]) -> Result<bool> {
    let mut run = Run::new("clt", argv, a, Some(a.grid.seed))?;
    let mode = if a.k >= 2.5 { Mode::Modified } else { Mode::Plain };
    let mut cfg = grid_config(&a.grid, a.k, mode);
    cfg.eps = a.eps;
    if a.eps.is_some() && mode == Mode::Plain {
        return Err(Error::Regime(format!("--eps applies to k >= 2.5, got k = {}", a.k)));
    }
    cfg.validate()?;
    let (c, path) = load_constants(a.constants.as_deref(), &a.grid.density, a.k, "none")?;
    if let Some(p) = path {
        run.read_input(&p)?;
    }
    cfg.constants = Some(c);
    run.note_config("experiment", &cfg)?;
    let report = harness::run(&cfg)?;
    write_report(run, report, &a.grid.out)
}

fn boundary(a: &BoundaryArgs, argv: &[String]) -> Result<bool> {
    let mut run = Run::new("boundary", argv, a, Some(a.grid.seed))?;
    let mode = match a.mode {
        BoundaryMode::Zero => Mode::BoundaryZero,
        BoundaryMode::Rate => Mode::BoundaryRate,
        BoundaryMode::Integral => Mode::BoundaryIntegral,
    };
    let mut cfg = grid_config(&a.grid, a.k, mode);
    cfg.alpha = match (a.mode, a.alpha) {
        (BoundaryMode::Rate, None) => Some(0.5),
        (_, x) => x,
    };
    cfg.gamma_truncation = a.truncation;
    run.note_config("experiment", &cfg)?;
    let report = harness::run(&cfg)?;
    write_report(run, report, &a.grid.out)
}

fn diverge(a: &DivergeArgs, argv: &[String]) -> Result<bool> {
    let mut run = Run::new("diverge", argv, a, Some(a.grid.seed))?;
    let mut cfg = grid_config(&a.grid, a.k, Mode::Divergence);
    cfg.divergence = Some(match a.part {
        DivergeKind::Mean => DivergencePart::Mean,
        DivergeKind::NearZeroVariance => DivergencePart::NearZeroVariance,
        DivergeKind::Control => DivergencePart::Control,
    });
    run.note_config("experiment", &cfg)?;
    let report = harness::run(&cfg)?;
    write_report(run, report, &a.grid.out)
}

fn render_cmd(a: &RenderArgs, argv: &[String]) -> Result<String> {
    let mut run = Run::new("render", argv, a, None)?;
    let bytes = run.read_input(&a.report)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)?;
    let version = value.get("report_version").and_then(|v| v.as_u64());
    if version != Some(harness::REPORT_VERSION as u64) {
        return Err(Error::Schema(format!(
            "report_version {:?} (supported: {})",
            version,
            harness::REPORT_VERSION
        )));
    }
    let report: ExperimentReport = serde_json::from_value(value)?;
    let svg = render::render_report(&report)?;
    run.write(&a.out, svg.as_bytes())?;
    run.finish(&a.out)?;
    Ok(svg)
}
