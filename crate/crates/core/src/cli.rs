//! `pricedisc` command line: dataset ingestion, Monte Carlo curves and the
//! numeric checks of the hard-instance constructions.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a data error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adversarial::{
    divergence_report, gilbert_varshamov, kl_divergence, price_interval_check, packing_price_separation,
    word_to_bits,
};
use crate::dist::validate_density;
use crate::error::Error;
use crate::experiment::{fit_power_law, replication_seed, DeficiencyPoint, Engine, Strategy};
use crate::ingest::ingest;
use crate::oracle::QuadratureConfig;
use crate::pricing::k_markets_erm;
use crate::DistributionSpec;

pub const CURVE_HEADER: [&str; 6] = ["n", "strategy", "mean_deficiency", "std_error", "reps", "mean_revenue"];

#[derive(Debug, Parser)]
#[command(name = "pricedisc", version, about = "Sample-based third-degree price discrimination experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit K-markets ERM to a bid CSV and print the price levels
    Price(PriceArgs),
    /// Revenue-deficiency curve as CSV
    Simulate(CurveArgs),
    /// Pointwise revenue deficiency of K-markets ERM at one covariate value
    Pointwise(PointwiseArgs),
    /// Welfare-deficiency curve as CSV
    Welfare(CurveArgs),
    /// Log-log rate fit of a curve CSV
    Rates(RatesArgs),
    /// Mean revenue of uniform vs K-markets ERM on shared samples
    Crossing(CrossingArgs),
    /// Checks on the hard-instance constructions
    #[command(subcommand)]
    Adversarial(Adversarial),
}

#[derive(Debug, Subcommand)]
enum Adversarial {
    /// Greedy Gilbert-Varshamov codebook
    Gv(GvArgs),
    /// Squared Hellinger distance from the reference distribution
    Hellinger(DivergenceArgs),
    /// KL divergence from the reference distribution
    Kl(DivergenceArgs),
    /// RMS distance between the optimal price curves of two packing words
    Separation(SeparationArgs),
    /// Optimal uniform price of the covariate-free perturbation against its
    /// predicted interval
    #[command(visible_alias = "lemma-c3")]
    PriceInterval(PriceIntervalArgs),
    /// Normalization and positivity of a conditional density
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Uniform,
    Power,
    Perturbed,
    Packing,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "power")]
    family: Family,
    /// Perturbation amplitude
    #[arg(long)]
    a: Option<f64>,
    /// Perturbation width
    #[arg(long)]
    delta: Option<f64>,
    /// Covariate centre; turns `perturbed` into the conditional perturbation
    #[arg(long)]
    x0: Option<f64>,
    /// Number of packing bins
    #[arg(long)]
    m: Option<usize>,
    /// Packing sign word, e.g. 01101001
    #[arg(long)]
    alpha: Option<Bits>,
}

#[derive(Debug, Args)]
struct QuadArgs {
    #[arg(long, default_value_t = QuadratureConfig::default().y_panels)]
    quad_y: usize,
    #[arg(long, default_value_t = QuadratureConfig::default().x_panels)]
    quad_x: usize,
}

#[derive(Debug, Args)]
struct PriceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    /// Columns are auction_id,bid,bidder_id,bidder_rating without a header row
    #[arg(long)]
    no_header: bool,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// uniform, k=<K> or ksched=theory|ebay|sim
    #[arg(long, default_value = "uniform")]
    strategy: Strategy,
    /// Comma-separated, strictly increasing sample sizes
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Args)]
struct PointwiseArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    k: usize,
    /// Covariate value at which revenue is compared
    #[arg(long)]
    at: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[arg(long)]
    curve: PathBuf,
}

#[derive(Debug, Args)]
struct CrossingArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Args)]
struct GvArgs {
    #[arg(long)]
    m: usize,
    /// Print every codeword
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
struct DivergenceArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Packing word of the reference; the uniform density is used otherwise
    #[arg(long)]
    ref_alpha: Option<Bits>,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Args)]
struct SeparationArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// First word; defaults to the first two codewords of the GV codebook
    #[arg(long, requires = "alpha_prime")]
    alpha: Option<Bits>,
    #[arg(long, requires = "alpha")]
    alpha_prime: Option<Bits>,
    #[arg(long, default_value_t = 1025)]
    grid: usize,
}

#[derive(Debug, Args)]
struct PriceIntervalArgs {
    #[arg(long, allow_hyphen_values = true)]
    b: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 257)]
    grid: usize,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

pub fn run() -> i32 {
    run_with(std::env::args_os())
}

pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Price(args) => price(args),
        Command::Simulate(args) => curve(args, false),
        Command::Welfare(args) => curve(args, true),
        Command::Pointwise(args) => pointwise(args),
        Command::Rates(args) => rates(args),
        Command::Crossing(args) => crossing(args),
        Command::Adversarial(cmd) => match cmd {
            Adversarial::Gv(args) => gv(args),
            Adversarial::Hellinger(args) => divergence(args, false),
            Adversarial::Kl(args) => divergence(args, true),
            Adversarial::Separation(args) => separation(args),
            Adversarial::PriceInterval(args) => price_interval(args),
            Adversarial::Validate(args) => validate(args),
        },
    }
}

/// A 0/1 string such as `01101001`.
#[derive(Debug, Clone)]
struct Bits(Vec<bool>);

impl std::str::FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("expected a string of 0/1, found {other:?}")),
            })
            .collect::<std::result::Result<_, _>>()
            .map(Bits)
    }
}

fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn need<T>(value: Option<T>, flag: &str, family: &str) -> std::result::Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--family {family} requires --{flag}")))
}

impl FamilyArgs {
    fn spec(&self) -> std::result::Result<DistributionSpec, Failure> {
        let spec = match self.family {
            Family::Uniform => DistributionSpec::UniformJoint,
            Family::Power => DistributionSpec::PowerSimulated,
            Family::Perturbed => {
                let a = need(self.a, "a", "perturbed")?;
                let delta = need(self.delta, "delta", "perturbed")?;
                match self.x0 {
                    Some(x0) => DistributionSpec::perturbed_conditional(a, delta, x0)?,
                    None => DistributionSpec::perturbed_uniform(a, delta)?,
                }
            }
            Family::Packing => {
                let m = need(self.m, "m", "packing")?;
                let a = need(self.a, "a", "packing")?;
                let alpha = need(self.alpha.clone(), "alpha", "packing")?.0;
                DistributionSpec::packing(m, a, alpha)?
            }
        };
        Ok(spec)
    }
}

impl QuadArgs {
    fn config(&self) -> QuadratureConfig {
        QuadratureConfig {
            y_panels: self.quad_y,
            x_panels: self.quad_x,
            ..QuadratureConfig::default()
        }
    }
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_curve<W: Write>(sink: W, curve: &[DeficiencyPoint]) -> crate::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(CURVE_HEADER)?;
    for p in curve {
        w.write_record([
            p.n.to_string(),
            p.strategy_tag.clone(),
            fmt_float(p.mean_deficiency),
            fmt_float(p.std_error),
            p.reps.to_string(),
            fmt_float(p.mean_revenue),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(n, mean_deficiency)` pairs of a curve CSV.
pub fn read_curve(path: &std::path::Path) -> crate::Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("curve CSV has no column {name:?}")))
    };
    let (ni, di) = (column("n")?, column("mean_deficiency")?);
    let mut out = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let line = row as u64 + 2;
        let n = record[ni].trim().parse().map_err(|_| Error::Row {
            line,
            message: format!("bad sample size {:?}", &record[ni]),
        })?;
        let d = record[di].trim().parse().map_err(|_| Error::Row {
            line,
            message: format!("bad deficiency {:?}", &record[di]),
        })?;
        out.push((n, d));
    }
    Ok(out)
}

fn price(args: PriceArgs) -> Outcome {
    let (data, report) = ingest(&args.input, !args.no_header).map_err(|e| match e {
        Error::Io(io) => Failure::Data(Error::Format(format!("{}: {io}", args.input.display()))),
        other => Failure::Data(other),
    })?;
    let (pf, partition) = k_markets_erm(&data, args.k)?;
    println!("rows_read={} bidders_kept={}", report.rows_read, report.bidders_kept);
    println!("bid_range=[{}, {}] rating_range=[{}, {}]", report.y_min, report.y_max, report.x_min, report.x_max);
    println!("k_requested={} k_effective={}", partition.k_requested, partition.k_effective);
    let prices: Vec<String> = pf.prices().iter().map(|p| format!("{p:.6}")).collect();
    println!("prices={}", prices.join(","));
    Ok(())
}

fn curve(args: CurveArgs, welfare: bool) -> Outcome {
    let engine = Engine::new(args.family.spec()?, args.quad.config())?;
    let points = if welfare {
        engine.welfare_curve(args.strategy, &args.n, args.reps, args.seed)?
    } else {
        engine.deficiency_curve(args.strategy, &args.n, args.reps, args.seed)?
    };
    write_curve(output(args.out.as_ref())?, &points)?;
    Ok(())
}

fn pointwise(args: PointwiseArgs) -> Outcome {
    if args.n.is_empty() {
        return Err(Failure::Usage("--n needs at least one sample size".into()));
    }
    let engine = Engine::new(args.family.spec()?, args.quad.config())?;
    let points = args
        .n
        .iter()
        .enumerate()
        .map(|(i, &n)| engine.pointwise_deficiency(n, args.k, args.at, args.reps, replication_seed(args.seed, i, 0)))
        .collect::<crate::Result<Vec<_>>>()?;
    write_curve(output(args.out.as_ref())?, &points)?;
    Ok(())
}

fn rates(args: RatesArgs) -> Outcome {
    let fit = fit_power_law(&read_curve(&args.curve)?)?;
    println!("slope={}", fmt_float(fit.slope));
    println!("intercept={}", fmt_float(fit.intercept));
    println!("r_squared={}", fmt_float(fit.r_squared));
    Ok(())
}

fn crossing(args: CrossingArgs) -> Outcome {
    let engine = Engine::new(args.family.spec()?, args.quad.config())?;
    let report = engine.crossing_analysis(&args.n, args.k, args.reps, args.seed)?;
    println!("n,uniform_revenue,kmarkets_revenue,mean_gap,gap_std_error");
    for r in &report.rows {
        println!(
            "{},{},{},{},{}",
            r.n,
            fmt_float(r.uniform_revenue),
            fmt_float(r.kmarkets_revenue),
            fmt_float(r.mean_gap),
            fmt_float(r.gap_std_error)
        );
    }
    match report.crossing {
        Some(n) => println!("crossing={n}"),
        None => println!("crossing=none"),
    }
    Ok(())
}

fn gv(args: GvArgs) -> Outcome {
    let book = gilbert_varshamov(args.m)?;
    println!("m={} min_distance={} size={}", book.m, book.required_distance(), book.len());
    if args.list {
        for &w in &book.words {
            println!("{}", bits_string(&word_to_bits(w, book.m)));
        }
    }
    Ok(())
}

fn divergence(args: DivergenceArgs, kl: bool) -> Outcome {
    let spec = args.family.spec()?;
    let reference = match (&args.ref_alpha, &spec) {
        (None, _) => DistributionSpec::UniformJoint,
        (Some(bits), DistributionSpec::Packing { m, a, .. }) => DistributionSpec::packing(*m, *a, bits.0.clone())?,
        (Some(_), _) => return Err(Failure::Usage("--ref-alpha needs --family packing".into())),
    };
    let cfg = args.quad.config();
    if kl {
        println!("kl={}", fmt_float(kl_divergence(&reference, &spec, &cfg)?));
        return Ok(());
    }
    let report = divergence_report(&reference, &spec, &cfg)?;
    println!("hellinger_sq={}", fmt_float(report.hellinger_sq));
    if let (Some(bound), Some(ok)) = (report.analytic_bound, report.bound_satisfied()) {
        println!("bound={} within_bound={ok}", fmt_float(bound));
    }
    Ok(())
}

fn separation(args: SeparationArgs) -> Outcome {
    let (alpha, alpha_prime) = match (args.alpha, args.alpha_prime) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => {
            let book = gilbert_varshamov(args.m)?;
            if book.len() < 2 {
                return Err(Failure::Data(Error::ParameterDomain(format!(
                    "codebook for m = {} has fewer than two words",
                    args.m
                ))));
            }
            (book.bits(0), book.bits(1))
        }
    };
    let sep = packing_price_separation(args.m, args.a, &alpha, &alpha_prime, args.grid)?;
    println!("alpha={} alpha_prime={}", bits_string(&alpha), bits_string(&alpha_prime));
    println!("separation={} separation_times_m={}", fmt_float(sep), fmt_float(sep * args.m as f64));
    Ok(())
}

fn price_interval(args: PriceIntervalArgs) -> Outcome {
    let check = price_interval_check(args.b, args.delta)?;
    println!("p_star={:.12}", check.p_star);
    println!("interval=({:.12}, {:.12})", check.interval.0, check.interval.1);
    println!("inside={}", check.inside);
    Ok(())
}

fn validate(args: ValidateArgs) -> Outcome {
    let report = validate_density(&args.family.spec()?, args.grid)?;
    println!("max_norm_error={:.3e}", report.max_norm_error);
    println!("min_density={:.6}", report.min_density);
    Ok(())
}
