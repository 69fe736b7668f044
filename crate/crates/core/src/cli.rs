//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on numerical
//! failures. Diagnostics are one line on standard error.

use crate::bands::{assemble_band, critical_value_max_t, covers, lp_length, monotonize_band, Band, BandRecipe, Monotonizer};
use crate::csvio::{self, Header};
use crate::error::{Error, Result};
use crate::estimators::{bootstrap, fit, fit_quantile_process, tau_net, Dataset, EstimatorSpec, Loss, Method};
use crate::grid::{Axis, GriddedFunction, LpIndex};
use crate::montecarlo::{run_tables, McConfig, Table};
use crate::rearrange::OrderingSet;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "monotone",
    version,
    about = "Monotonize gridded estimates and confidence bands by rearrangement or isotonization",
    after_help = "File formats (CSV, header row required):\n  function  x1,...,xd,value          one row per grid node, any order, full product grid\n  band      x1,...,xd,lower,upper\n  data      x,y                      two columns, any names\n  draws     draw,x1,...,xd,value     bootstrap draws numbered from 1"
)]
struct Cli {
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Increasing rearrangement of a gridded function, averaged over axis orderings.
    Rearrange(MonotonizeArgs),
    /// Fiber-wise isotonic regression (PAVA), averaged over axis orderings.
    Isotonize(MonotonizeArgs),
    /// Build and monotonize a confidence band; reports L1, L2 and Linf lengths.
    Band(BandArgs),
    /// Fit a nonparametric mean or quantile curve on an equidistant grid.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo experiment and write one report table.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct OrderingArgs {
    /// Axis orderings: `all`, or one-based lists such as `1,2;2,1`.
    #[arg(long, default_value = "all")]
    orderings: String,
}

impl OrderingArgs {
    fn resolve(&self, dim: usize) -> Result<OrderingSet> {
        if self.orderings.trim() == "all" {
            Ok(OrderingSet::all(dim))
        } else {
            let set: OrderingSet = self.orderings.parse()?;
            if set.dim() != dim {
                return Err(Error::InvalidOrdering(format!(
                    "orderings have {} axes but the function has {dim}",
                    set.dim()
                )));
            }
            Ok(set)
        }
    }
}

#[derive(Args, Debug)]
struct MonotonizeArgs {
    /// Input function CSV (x1,...,xd,value).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    orderings: OrderingArgs,
    /// Output lambda * rearranged + (1 - lambda) * isotonized instead.
    #[arg(long)]
    lambda: Option<f64>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BandArgs {
    /// Band CSV (x1,...,xd,lower,upper).
    #[arg(long, conflicts_with_all = ["lower", "upper", "center"])]
    input: Option<PathBuf>,
    /// Lower end-point function CSV.
    #[arg(long, requires = "upper")]
    lower: Option<PathBuf>,
    /// Upper end-point function CSV.
    #[arg(long, requires = "lower")]
    upper: Option<PathBuf>,
    /// Point estimate CSV; the band is center -/+ critical * stderr.
    #[arg(long, requires = "stderr", conflicts_with_all = ["lower", "upper"])]
    center: Option<PathBuf>,
    /// Standard error CSV on the same grid as --center.
    #[arg(long)]
    stderr: Option<PathBuf>,
    /// Critical value multiplying the standard errors.
    #[arg(long, conflicts_with = "draws")]
    critical: Option<f64>,
    /// Bootstrap draws CSV (draw,x1,...,xd,value) for a max-t critical value.
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Non-coverage level of the max-t critical value.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// rearrange, isotonize, blend or blend:LAMBDA.
    #[arg(long, default_value = "rearrange")]
    method: String,
    /// Blend weight on the rearranged band (implies --method blend).
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    orderings: OrderingArgs,
    /// Function CSV to check coverage against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output band CSV (default: none).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodKind {
    Kernel,
    Loclinear,
    Bspline,
    Fourier,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LossKind {
    Mean,
    Quantile,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Data CSV with two columns x,y.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "loclinear")]
    method: MethodKind,
    #[arg(long, value_enum, default_value = "mean")]
    loss: LossKind,
    /// Quantile index for --loss quantile.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Quantile process on the net lo:hi:step (output axes tau, x).
    #[arg(long, value_name = "LO:HI:STEP", conflicts_with_all = ["bootstrap"])]
    taus: Option<String>,
    /// Window half-width for kernel and loclinear, in units of x.
    #[arg(long, default_value_t = 1.0)]
    bandwidth: f64,
    /// Interior knots for bspline, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3,5,8,10,11.5,13,14.5,16,18")]
    knots: Vec<f64>,
    /// Sine/cosine pairs for fourier.
    #[arg(long, default_value_t = 4)]
    nterms: usize,
    /// Drop the linear term from the fourier basis.
    #[arg(long)]
    no_linear: bool,
    /// Number of equidistant evaluation nodes over the data range.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Pairs-bootstrap draws for standard errors and a max-t band.
    #[arg(long, value_name = "B")]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Non-coverage level of the band.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Estimate CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Band CSV (requires --bootstrap).
    #[arg(long, requires = "bootstrap")]
    band_out: Option<PathBuf>,
    /// Standard error CSV (requires --bootstrap).
    #[arg(long, requires = "bootstrap")]
    stderr_out: Option<PathBuf>,
    /// Bootstrap draws CSV (requires --bootstrap).
    #[arg(long, requires = "bootstrap")]
    draws_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report table: 1 mean errors, 2 quantile-process errors, 3 bands.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    table: u8,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// One-column CSV of regressor values replacing the default design.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Report CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(csvio::create(p)?)),
        None => Box::new(stdout),
    })
}

fn read_function(path: &Path) -> Result<(GriddedFunction<f64>, Header)> {
    csvio::read_function(csvio::open(path)?)
}

fn monotonize(args: &MonotonizeArgs, default: Monotonizer, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let (f, header) = read_function(&args.input)?;
    let orderings = args.orderings.resolve(f.dim())?;
    let method = args.lambda.map_or(default, Monotonizer::Blend);
    let g = method.apply(&f, &orderings)?;
    csvio::write_function(sink(args.out.as_deref(), stdout)?, &g, &header)
}

fn load_band(args: &BandArgs) -> Result<(Band<f64>, Vec<String>, Option<f64>)> {
    if let Some(p) = &args.input {
        let (b, h) = csvio::read_band(csvio::open(p)?)?;
        return Ok((b, h.axes, None));
    }
    if let (Some(l), Some(u)) = (&args.lower, &args.upper) {
        let (lower, h) = read_function(l)?;
        let (upper, _) = read_function(u)?;
        return Ok((Band::new(lower, upper)?, h.axes, None));
    }
    if let (Some(c), Some(s)) = (&args.center, &args.stderr) {
        let (center, h) = read_function(c)?;
        let (stderr, _) = read_function(s)?;
        let critical = match (args.critical, &args.draws) {
            (Some(c), _) => c,
            (None, Some(d)) => {
                let (draws, _) = csvio::read_draws(csvio::open(d)?)?;
                critical_value_max_t(&center, &draws, &stderr, args.alpha)?.value
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "--center needs --critical or --draws".into(),
                ))
            }
        };
        let band = assemble_band(&BandRecipe {
            center,
            stderr,
            critical,
            alpha: args.alpha,
        })?;
        return Ok((band, h.axes, Some(critical)));
    }
    Err(Error::InvalidConfig(
        "band needs --input, --lower/--upper, or --center/--stderr".into(),
    ))
}

fn band(args: &BandArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let (original, axes, critical) = load_band(args)?;
    let method = match args.lambda {
        Some(l) => Monotonizer::Blend(l),
        None => args.method.parse()?,
    };
    let orderings = args.orderings.resolve(original.lower().dim())?;
    let monotone = monotonize_band(&original, method, &orderings)?;
    if let Some(c) = critical {
        writeln!(stdout, "critical value: {c}")?;
    }
    writeln!(stdout, "p,original_length,{}_length", method.label())?;
    for p in LpIndex::standard() {
        writeln!(
            stdout,
            "{},{},{}",
            p.label(),
            lp_length(&original, p)?,
            lp_length(&monotone, p)?
        )?;
    }
    if let Some(t) = &args.truth {
        let (truth, _) = read_function(t)?;
        writeln!(
            stdout,
            "covers: original {}, {} {}",
            covers(&original, &truth)?,
            method.label(),
            covers(&monotone, &truth)?
        )?;
    }
    if let Some(out) = &args.out {
        csvio::write_band(sink(Some(out), stdout)?, &monotone, &axes)?;
    }
    Ok(())
}

fn estimator_method(args: &EstimateArgs) -> Method {
    match args.method {
        MethodKind::Kernel => Method::Kernel {
            bandwidth: args.bandwidth,
        },
        MethodKind::Loclinear => Method::LocalLinear {
            bandwidth: args.bandwidth,
        },
        MethodKind::Bspline => Method::BSpline {
            knots: args.knots.clone(),
        },
        MethodKind::Fourier => Method::Fourier {
            n_terms: args.nterms,
            linear_term: !args.no_linear,
        },
    }
}

fn parse_net(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("--taus expects lo:hi:step, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    tau_net(v[0], v[1], v[2])
}

fn estimate(args: &EstimateArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let data: Dataset = csvio::read_dataset(csvio::open(&args.data)?)?;
    let (lo, hi) = data.x_range();
    let eval = Axis::linspace(lo, hi, args.grid)?;
    let loss = match args.loss {
        LossKind::Mean => Loss::Mean,
        LossKind::Quantile => Loss::quantile(args.tau)?,
    };
    let spec = EstimatorSpec::new(estimator_method(args), loss, eval)?;

    if let Some(net) = &args.taus {
        let taus = parse_net(net)?;
        let process = fit_quantile_process(&data, &spec, &taus)?;
        return csvio::write_function(
            sink(args.out.as_deref(), stdout)?,
            &process,
            &Header::standard(2, &["value"]),
        );
    }

    let fitted = fit(&data, &spec)?.estimate;
    let header = Header::standard(1, &["value"]);
    if let Some(b) = args.bootstrap {
        let boot = bootstrap(&data, &spec, b, args.seed)?;
        if let Some(p) = &args.stderr_out {
            csvio::write_function(sink(Some(p), stdout)?, &boot.stderr, &header)?;
        }
        if let Some(p) = &args.draws_out {
            csvio::write_draws(sink(Some(p), stdout)?, &boot.draws, &header.axes)?;
        }
        if let Some(p) = &args.band_out {
            let cv = critical_value_max_t(&fitted, &boot.draws, &boot.stderr, args.alpha)?;
            let band = assemble_band(&BandRecipe {
                center: fitted.clone(),
                stderr: boot.stderr.clone(),
                critical: cv.value,
                alpha: args.alpha,
            })?;
            csvio::write_band(sink(Some(p), stdout)?, &band, &header.axes)?;
        }
    }
    csvio::write_function(sink(args.out.as_deref(), stdout)?, &fitted, &header)
}

fn read_design(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csvio::open(path)?);
    let mut x = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 1 {
            return Err(Error::Parse(format!(
                "{}: design CSV must have one column",
                path.display()
            )));
        }
        x.push(
            rec[0]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{}: bad value {:?}", path.display(), &rec[0])))?,
        );
    }
    Ok(x)
}

fn simulate(args: &SimulateArgs, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<bool> {
    let mut cfg = match &args.config {
        Some(p) => McConfig::from_json(&std::fs::read_to_string(p).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
        })?)?,
        None => McConfig::default(),
    };
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = &args.design {
        let x = read_design(d)?;
        cfg.n = x.len();
        cfg.x_design = Some(x);
    }
    cfg.validate()?;
    let table = Table::from_number(args.table)?;
    let report = run_tables(&cfg, &[table])?;
    report.write_csv(table, sink(args.out.as_deref(), stdout)?)?;
    writeln!(
        stderr,
        "{} replications, {} per-replication checks, {} violations",
        report.reps,
        report.checks,
        report.violations.len()
    )?;
    for v in &report.violations {
        writeln!(stderr, "violation: {v}")?;
    }
    Ok(report.violations.is_empty())
}

fn dispatch(cli: &Cli, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<i32> {
    match &cli.command {
        Command::Rearrange(a) => monotonize(a, Monotonizer::Rearrange, stdout)?,
        Command::Isotonize(a) => monotonize(a, Monotonizer::Isotonize, stdout)?,
        Command::Band(a) => band(a, stdout)?,
        Command::Estimate(a) => estimate(a, stdout)?,
        Command::Simulate(a) => {
            if !simulate(a, stdout, stderr)? {
                return Ok(2);
            }
        }
    }
    stdout.flush()?;
    Ok(0)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli, stdout, stderr)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.to_string().replace('\n', " "));
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
