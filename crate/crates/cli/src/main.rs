use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use toral_nodal::derandom::{self, DerandomError, MomentComparison};
use toral_nodal::eigen::{self, build_coefficients, CoefficientSpec, CoefficientVector, EigenError};
use toral_nodal::experiment::{self, Cache, ExperimentConfig, ExperimentError, Manifest, PlotKind};
use toral_nodal::gaussian::{self, Convention, GaussianError};
use toral_nodal::lattice::{self, lattice_points, LatticeError, SearchBudget};
use toral_nodal::measure::{self, MeasureError, ProkhorovOptions, SpectralMeasure};
use toral_nodal::nodal::{self, CensusOptions, Domain, NodalError};

#[derive(Parser)]
#[command(name = "toral", version, about = "Nodal domains of toral eigenfunctions and monochromatic Gaussian waves")]
struct Cli {
    /// Directory for CSV outputs and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice points on circles and minimally vanishing subset counts.
    Lattice(LatticeArgs),
    /// Spectral measures: construction, binning, Prokhorov distance.
    Measure(MeasureArgs),
    /// Toral eigenfunctions: evaluation and local residual statistics.
    Eigen(EigenArgs),
    /// Nodal domain census of a toral eigenfunction.
    Nodal(NodalArgs),
    /// Monte Carlo Nazarov–Sodin constant of a Gaussian wave.
    Cns(CnsArgs),
    /// Kac–Rice line zero intensity against Monte Carlo.
    Kacrice(KacRiceArgs),
    /// Joint moments of the arc coefficients b_k against Gaussian moments.
    Moments(MomentsArgs),
    /// Eigenfunction-versus-Gaussian comparison table from a config file.
    ///
    /// Plot data schemas: scatter = E,Nf_over_E,cns,cns_err; trend = R,estimate,stderr.
    Compare(CompareArgs),
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long)]
    energy: Option<u64>,
    /// List every E ≤ limit in S with its point count.
    #[arg(long)]
    limit: Option<u64>,
    /// Count minimally vanishing l-subsets for 3 ≤ l ≤ B.
    #[arg(long, value_name = "B")]
    correlations: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    gamma: f64,
    /// Print the points as xi1,xi2 rows.
    #[arg(long)]
    points: bool,
}

#[derive(Args)]
struct MeasureArgs {
    /// cilleruelo | tilted | uniform | pair:<angle> | atomized:<pairs>
    #[arg(long)]
    named: Option<String>,
    /// Coefficient CSV (xi1,xi2,re,im); needs --energy.
    #[arg(long)]
    from_coeffs: Option<PathBuf>,
    #[arg(long)]
    energy: Option<u64>,
    /// Two measure JSON files or names.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    prokhorov: Option<Vec<String>>,
    /// Bin into 2K arcs and print the kept arcs.
    #[arg(long = "K")]
    arcs: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Fourier coefficient index.
    #[arg(long)]
    fourier: Option<i64>,
}

#[derive(Args)]
struct CoeffArgs {
    #[arg(long)]
    energy: u64,
    /// equal | random:<seed> | file:<path>
    #[arg(long, default_value = "equal")]
    coeffs: String,
}

#[derive(Args)]
struct EigenArgs {
    #[command(flatten)]
    coeffs: CoeffArgs,
    /// Evaluate f and ∇f at x1,x2.
    #[arg(long, value_parser = parse_pair)]
    eval: Option<[f64; 2]>,
    /// Residual and leftover statistics of the local decomposition.
    #[arg(long)]
    residuals: bool,
    #[arg(long = "R", default_value_t = 4.0)]
    r: f64,
    #[arg(long = "K", default_value_t = 8)]
    arcs: usize,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Torus,
}

#[derive(Args)]
struct NodalArgs {
    #[command(flatten)]
    coeffs: CoeffArgs,
    #[arg(long, value_enum, default_value = "torus")]
    domain: DomainArg,
    /// Starting resolution; defaults to the wavelength guard.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, default_value_t = nodal::DEFAULT_MAX_RESOLUTION)]
    max_resolution: usize,
    /// Integral-geometric sandwich with boxes: R,x_grid.
    #[arg(long, value_parser = parse_boxes)]
    boxes: Option<(f64, usize)>,
    /// Also write the label grid as labels.pgm and labels.csv.
    #[arg(long)]
    labels: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Square,
    Disc,
}

#[derive(Args)]
struct CnsArgs {
    /// Measure JSON file or name.
    #[arg(long)]
    measure: String,
    /// One or more radii; several give a trend table.
    #[arg(long = "R", value_delimiter = ',', required = true)]
    r: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "square")]
    convention: ConventionArg,
}

#[derive(Args)]
struct KacRiceArgs {
    #[arg(long)]
    measure: String,
    /// Fixed direction; random per segment when absent.
    #[arg(long, value_parser = parse_pair)]
    direction: Option<[f64; 2]>,
    #[arg(long, default_value_t = 500)]
    segments: usize,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    wavenumber: f64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    coeffs: CoeffArgs,
    #[arg(long = "K", default_value_t = 2)]
    arcs: usize,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Every spec with total order below B.
    #[arg(long = "B", default_value_t = 5)]
    b: u32,
    /// Cross-check each moment by exact quadrature.
    #[arg(long)]
    quadrature: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// Skip the result cache (root from TORAL_CACHE_DIR, else <out>/cache).
    #[arg(long)]
    no_cache: bool,
    /// Also write plot data of this kind.
    #[arg(long, value_enum)]
    plot: Option<PlotArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotArg {
    Scatter,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err("expected two comma-separated numbers".into()),
    }
}

fn parse_boxes(s: &str) -> Result<(f64, usize), String> {
    let (r, g) = s.split_once(',').ok_or("expected R,x_grid")?;
    Ok((r.trim().parse().map_err(|_| "bad R")?, g.trim().parse().map_err(|_| "bad x_grid")?))
}

/// Exit status and message.
struct Failure(u8, String);

impl Failure {
    fn precondition(e: impl Display) -> Self {
        Self(1, e.to_string())
    }
    fn data(e: impl Display) -> Self {
        Self(2, e.to_string())
    }
}

impl From<LatticeError> for Failure {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::SearchTooLarge { .. } | LatticeError::LengthCap { .. } => Self(3, e.to_string()),
            _ => Self::precondition(e),
        }
    }
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Json(_) => Self::data(e),
            _ => Self::precondition(e),
        }
    }
}

impl From<EigenError> for Failure {
    fn from(e: EigenError) -> Self {
        match e {
            EigenError::Lattice(l) => l.into(),
            EigenError::Measure(m) => m.into(),
            EigenError::Parse(_) => Self::data(e),
            _ => Self::precondition(e),
        }
    }
}

impl From<NodalError> for Failure {
    fn from(e: NodalError) -> Self {
        match e {
            NodalError::Eigen(inner) => inner.into(),
            NodalError::DegenerateSampling(_) | NodalError::Unresolved { .. } => Self::data(e),
            _ => Self::precondition(e),
        }
    }
}

impl From<GaussianError> for Failure {
    fn from(e: GaussianError) -> Self {
        match e {
            GaussianError::Nodal(n) => n.into(),
            GaussianError::TooManyDiscards { .. } => Self::data(e),
            _ => Self::precondition(e),
        }
    }
}

impl From<DerandomError> for Failure {
    fn from(e: DerandomError) -> Self {
        match e {
            DerandomError::Budget { .. } | DerandomError::CubeBudget { .. } | DerandomError::Order { .. } => {
                Self(3, e.to_string())
            }
            _ => Self::precondition(e),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Self(e.exit_code() as u8, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::data(e)
    }
}

/// Outputs of one run, echoed to stdout and written with a manifest.
struct Run {
    manifest: Manifest,
    files: Vec<(String, Vec<u8>)>,
}

impl Run {
    fn new(command: &str, seeds: Vec<u64>) -> Self {
        Self { manifest: Manifest::new(command, std::env::args().collect(), seeds), files: Vec::new() }
    }

    fn emit(&mut self, name: &str, text: String) {
        print!("{text}");
        self.file(name, text.into_bytes());
    }

    fn file(&mut self, name: &str, bytes: Vec<u8>) {
        self.manifest.record_output(name, &bytes);
        self.files.push((name.to_string(), bytes));
    }

    fn finish(self, dir: &Path) -> Result<(), Failure> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        self.manifest.write(dir)?;
        Ok(())
    }
}

fn load_measure(arg: &str) -> Result<SpectralMeasure, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path)?;
        Ok(SpectralMeasure::from_json(&text)?)
    } else {
        Ok(SpectralMeasure::named(arg)?)
    }
}

fn load_coefficients(args: &CoeffArgs) -> Result<CoefficientVector, Failure> {
    let spec = CoefficientSpec::parse(&args.coeffs)
        .ok_or_else(|| Failure::precondition(format!("bad coefficient spec '{}'", args.coeffs)))?;
    let spec = match spec {
        CoefficientSpec::Explicit(_) => {
            let path = args.coeffs.trim_start_matches("file:");
            CoefficientSpec::Explicit(eigen::parse_coefficient_csv(&fs::read_to_string(path)?)?)
        }
        other => other,
    };
    Ok(build_coefficients(&lattice_points(args.energy), &spec)?)
}

fn lattice_cmd(a: LatticeArgs, run: &mut Run) -> Result<(), Failure> {
    if let Some(limit) = a.limit {
        let mut s = String::from("E,N\n");
        for e in lattice::sum_two_squares_sieve(limit).into_iter().filter(|&e| e > 0) {
            s.push_str(&format!("{e},{}\n", lattice_points(e).len()));
        }
        run.emit("lattice_limit.csv", s);
        return Ok(());
    }
    let e = a.energy.ok_or_else(|| Failure::precondition("--energy or --limit is required"))?;
    let pts = lattice_points(e);
    pts.require_circle().map_err(Failure::from)?;
    if a.points {
        let mut s = String::from("xi1,xi2\n");
        for (p, q) in pts.points() {
            s.push_str(&format!("{p},{q}\n"));
        }
        run.emit(&format!("points_E{e}.csv"), s);
    }
    match a.correlations {
        Some(b) => {
            let rep = lattice::condition_i_report(e, a.gamma, b, SearchBudget::default())?;
            let mut s = String::from("E,N,l,count,bound,passes\n");
            for (&l, &c) in &rep.counts {
                let bound = rep.bound(l);
                s.push_str(&format!("{e},{},{l},{c},{bound:.6e},{}\n", rep.size, c as f64 <= bound));
            }
            run.file(&format!("cache/lattice_E{e}.csv"), s.clone().into_bytes());
            run.emit("lattice.csv", s);
        }
        None if !a.points => run.emit("lattice.csv", format!("E,N\n{e},{}\n", pts.len())),
        None => {}
    }
    Ok(())
}

fn measure_cmd(a: MeasureArgs, run: &mut Run) -> Result<(), Failure> {
    if let Some(pair) = a.prokhorov {
        let (m, n) = (load_measure(&pair[0])?, load_measure(&pair[1])?);
        let d = measure::prokhorov_distance(&m, &n, ProkhorovOptions::default())?;
        run.emit("prokhorov.csv", format!("a,b,distance\n{},{},{d:.12}\n", pair[0], pair[1]));
        return Ok(());
    }
    let mu = match (a.named, a.from_coeffs) {
        (Some(name), None) => SpectralMeasure::named(&name)?,
        (None, Some(path)) => {
            let e = a.energy.ok_or_else(|| Failure::precondition("--from-coeffs needs --energy"))?;
            let entries = eigen::parse_coefficient_csv(&fs::read_to_string(path)?)?;
            build_coefficients(&lattice_points(e), &CoefficientSpec::Explicit(entries))?.spectral_measure()
        }
        _ => return Err(Failure::precondition("exactly one of --named, --from-coeffs or --prokhorov is required")),
    };
    if let Some(n) = a.fourier {
        let c = mu.fourier_coefficient(n);
        run.emit("fourier.csv", format!("n,re,im\n{n},{:.12},{:.12}\n", c.re, c.im));
    } else if let Some(k) = a.arcs {
        let bin = measure::bin_measure(&mu, k, a.delta)?;
        let mut s = String::from("k,mass,midpoint,normalized_mass\n");
        for arc in bin.kept() {
            let nm = bin.normalized_mass(arc.index).unwrap_or(0.0);
            s.push_str(&format!("{},{:.12},{:.12},{:.12}\n", arc.index, arc.mass, arc.midpoint, nm));
        }
        if bin.is_degenerate() {
            eprintln!("warning: degenerate binning; no arc has mass at least {}", a.delta);
        }
        run.emit("binning.csv", s);
    } else {
        run.emit("measure.json", mu.to_json() + "\n");
    }
    Ok(())
}

fn eigen_cmd(a: EigenArgs, run: &mut Run) -> Result<(), Failure> {
    let coeffs = load_coefficients(&a.coeffs)?;
    if a.residuals {
        let seed = a.seed.ok_or_else(|| Failure::precondition("--residuals is stochastic and needs --seed"))?;
        run.manifest.seeds = vec![seed];
        let st = eigen::residual_statistics(&coeffs, a.r, a.arcs, a.delta, a.samples, seed)?;
        run.emit(
            "residuals.csv",
            format!(
                "samples,leftover_mean,leftover_stderr,leftover_bound,residual_mean,residual_stderr,residual_bound\n{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                st.samples, st.leftover_mean, st.leftover_stderr, st.leftover_bound, st.residual_mean, st.residual_stderr, st.residual_bound
            ),
        );
    } else {
        let x = a.eval.unwrap_or([0.0, 0.0]);
        let (v, g) = coeffs.evaluate(x);
        run.emit("eval.csv", format!("x1,x2,value,d1,d2\n{},{},{v:.12e},{:.12e},{:.12e}\n", x[0], x[1], g[0], g[1]));
    }
    Ok(())
}

fn nodal_cmd(a: NodalArgs, run: &mut Run) -> Result<(), Failure> {
    let coeffs = load_coefficients(&a.coeffs)?;
    let DomainArg::Torus = a.domain;
    let field = coeffs.torus_field();
    let resolution = a.resolution.unwrap_or_else(|| nodal::auto_resolution(&field, Domain::Torus));
    let opts = CensusOptions { max_resolution: a.max_resolution, ..CensusOptions::new(resolution) };
    if let Some((r, x_grid)) = a.boxes {
        let rep = nodal::localized_count_integral(&coeffs, r, x_grid, opts)?;
        run.emit(
            "sandwich.csv",
            format!(
                "E,R,x_grid,resolution,Nf,localized,error_scale,ratio\n{},{},{},{},{},{:.9e},{:.9e},{:.9e}\n",
                rep.energy, rep.r, rep.x_grid, rep.resolution, rep.lhs, rep.rhs, rep.error_scale, rep.ratio()
            ),
        );
        return Ok(());
    }
    let stable = nodal::count_nodal_domains(&field, Domain::Torus, opts)?;
    let mut hist = String::from("resolution,count\n");
    for (n, c) in &stable.history {
        hist.push_str(&format!("{n},{c}\n"));
    }
    eprint!("{hist}");
    run.file("history.csv", hist.into_bytes());
    run.emit("components.csv", stable.census.components_csv());
    if a.labels {
        run.file("labels.pgm", stable.census.labels_pgm());
        run.file("labels.csv", stable.census.labels_csv().into_bytes());
    }
    Ok(())
}

fn cns_cmd(a: CnsArgs, run: &mut Run) -> Result<(), Failure> {
    let mu = load_measure(&a.measure)?;
    let convention = match a.convention {
        ConventionArg::Square => Convention::Square,
        ConventionArg::Disc => Convention::Disc,
    };
    let mut trend = String::from("R,estimate,stderr,total_estimate,trials,discarded,resolution\n");
    for &r in &a.r {
        let est = gaussian::estimate_cns(&mu, &a.measure, r, a.trials, a.seed, convention)?;
        trend.push_str(&format!(
            "{r},{:.9e},{:.9e},{:.9e},{},{},{}\n",
            est.estimate,
            est.stderr,
            est.total_estimate(),
            est.trials,
            est.discarded.len(),
            est.resolution
        ));
        run.emit(&format!("cns_R{r}.csv"), est.to_csv());
    }
    if a.r.len() > 1 {
        let plot = experiment::emit_plot_data(&trend, PlotKind::Trend)?;
        run.file("trend_plot.csv", plot.into_bytes());
    }
    run.emit("trend.csv", trend);
    Ok(())
}

fn kacrice_cmd(a: KacRiceArgs, run: &mut Run) -> Result<(), Failure> {
    let mu = load_measure(&a.measure)?;
    let rate = gaussian::line_zero_rate(&mu, a.wavenumber, a.segments, a.points, a.direction, a.seed)?;
    let predicted = match a.direction {
        Some(v) => gaussian::kac_rice_line_intensity(&mu, v, a.wavenumber).to_string(),
        None => {
            // averaged over uniform directions
            let n = 720;
            let avg = (0..n)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n as f64;
                    gaussian::kac_rice_line_intensity(&mu, [t.cos(), t.sin()], a.wavenumber)
                })
                .sum::<f64>()
                / n as f64;
            avg.to_string()
        }
    };
    run.emit(
        "kacrice.csv",
        format!("segments,mean,stderr,predicted\n{},{:.9e},{:.9e},{predicted}\n", rate.segments, rate.mean, rate.stderr),
    );
    Ok(())
}

fn moments_cmd(a: MomentsArgs, run: &mut Run) -> Result<(), Failure> {
    let coeffs = load_coefficients(&a.coeffs)?;
    let bin = measure::bin_measure(&coeffs.spectral_measure(), a.arcs, a.delta)?;
    let sweep = derandom::moment_gap_sweep(&coeffs, &bin, a.b, a.quadrature)?;
    let mut s = String::from(MomentComparison::CSV_HEADER);
    s.push('\n');
    for c in &sweep.comparisons {
        s.push_str(&c.csv_row());
        s.push('\n');
    }
    eprintln!(
        "max gap {:.6e} at {}; order-2 gap {:.3e}; off-diagonal shape ratio {:.3e}",
        sweep.max_gap(),
        sweep.argmax().map_or("-".to_string(), |c| c.spec.to_string()),
        sweep.order_two_gap(),
        sweep.off_diagonal_shape_ratio()
    );
    run.emit("moments.csv", s);
    Ok(())
}

fn compare_cmd(a: CompareArgs, out: &Path, run: &mut Run) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.config)?;
    let cfg = ExperimentConfig::parse(&text)?;
    run.manifest.seeds = cfg.seeds.clone();
    run.manifest.config = Some(cfg.canonical());
    let cache = Cache::from_env(out.join("cache"));
    let rows = experiment::run_comparison_cached(&cfg, (!a.no_cache).then_some(&cache))?;
    let table = experiment::comparison_csv(&rows);
    if let Some(PlotArg::Scatter) = a.plot {
        let plot = experiment::emit_plot_data(&table, PlotKind::Scatter)?;
        run.file("scatter.csv", plot.into_bytes());
    }
    run.emit("comparison.csv", table);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let (name, seeds) = match &cli.command {
        Command::Lattice(_) => ("lattice", vec![]),
        Command::Measure(_) => ("measure", vec![]),
        Command::Eigen(_) => ("eigen", vec![]),
        Command::Nodal(_) => ("nodal", vec![]),
        Command::Cns(a) => ("cns", vec![a.seed]),
        Command::Kacrice(a) => ("kacrice", vec![a.seed]),
        Command::Moments(_) => ("moments", vec![]),
        Command::Compare(_) => ("compare", vec![]),
    };
    let mut run = Run::new(name, seeds);
    let result = match cli.command {
        Command::Lattice(a) => lattice_cmd(a, &mut run),
        Command::Measure(a) => measure_cmd(a, &mut run),
        Command::Eigen(a) => eigen_cmd(a, &mut run),
        Command::Nodal(a) => nodal_cmd(a, &mut run),
        Command::Cns(a) => cns_cmd(a, &mut run),
        Command::Kacrice(a) => kacrice_cmd(a, &mut run),
        Command::Moments(a) => moments_cmd(a, &mut run),
        Command::Compare(a) => compare_cmd(a, &out, &mut run),
    }
    .and_then(|()| run.finish(&out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
