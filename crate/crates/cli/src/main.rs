mod format;
mod monitor;
mod selftest;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confseq::quantiles::{
    QuantileCache, Sided, CACHE_ENV, DEFAULT_CACHE_PATH, DEFAULT_GRID_N, DEFAULT_N_PATHS, DEFAULT_SEED,
};
use confseq::BoundaryShape;

use crate::format::Num;

#[derive(Parser, Debug)]
#[command(
    name = "confseq",
    version,
    about = "Time-uniform confidence sequences and sequential tests"
)]
struct Cli {
    /// Worker threads for Monte Carlo work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a table of critical values.
    Quantile(QuantileArgs),
    /// Stream observations and emit one interval record per line.
    Monitor(monitor::MonitorArgs),
    /// Run a named simulation experiment.
    Simulate(simulate::SimulateArgs),
    /// Quick end-to-end self check; exit code 1 on any failure.
    Selftest(selftest::SelftestArgs),
}

/// Monte Carlo and cache settings shared by every command that needs `c`.
#[derive(Args, Debug, Clone)]
pub struct McArgs {
    /// Monte Carlo paths per critical value.
    #[arg(long, default_value_t = DEFAULT_N_PATHS)]
    paths: usize,
    /// Uniform grid resolution of the simulated paths.
    #[arg(long = "grid-n", default_value_t = DEFAULT_GRID_N)]
    grid_n: usize,
    /// Monte Carlo seed.
    #[arg(long = "mc-seed", default_value_t = DEFAULT_SEED)]
    mc_seed: u64,
    /// Quantile cache file (default: $CS_CACHE or ./.cs-cache/quantiles.tsv).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Neither read nor write the cache.
    #[arg(long)]
    no_cache: bool,
}

impl McArgs {
    pub fn open_cache(&self) -> confseq::Result<QuantileCache> {
        if self.no_cache {
            return Ok(QuantileCache::in_memory());
        }
        let path = self
            .cache
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_PATH));
        QuantileCache::open(path)
    }
}

#[derive(Args, Debug)]
struct QuantileArgs {
    /// Boundary shape, e.g. `canonical:g1=0,g2=0.25`.
    #[arg(long, default_value = "canonical:g1=0,g2=0")]
    shape: BoundaryShape,
    /// Comma-separated significance levels.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    alpha: Vec<f64>,
    /// `two-sided`, `one-sided` or `both`.
    #[arg(long, default_value = "both")]
    sided: String,
    #[arg(long)]
    full_precision: bool,
    #[command(flatten)]
    mc: McArgs,
}

/// Failures mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input (exit 2).
    Usage(String),
    /// A check or the computation itself failed (exit 1).
    Failed(String),
}

impl From<confseq::Error> for CliError {
    fn from(e: confseq::Error) -> Self {
        use confseq::Error::*;
        match e {
            Input(_) | Usage(_) | Parse { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

fn cmd_quantile(args: QuantileArgs) -> CliResult {
    let sides: &[Sided] = match args.sided.as_str() {
        "both" => &[Sided::TwoSided, Sided::OneSided],
        "two-sided" | "two" => &[Sided::TwoSided],
        "one-sided" | "one" => &[Sided::OneSided],
        other => return Err(CliError::Usage(format!("--sided: unknown value `{other}`"))),
    };
    let mut cache = args.mc.open_cache()?;
    let (two, one) =
        cache.get_or_compute_many(&args.shape, &args.alpha, args.mc.paths, args.mc.grid_n, args.mc.mc_seed)?;
    cache.save()?;
    let num = |x| Num(x, args.full_precision);
    println!("shape\talpha\tsided\tc\tstd_error\tpaths\tgrid_n\tseed");
    for &sided in sides {
        let rows = if sided == Sided::TwoSided { &two } else { &one };
        for cv in rows {
            println!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                cv.shape_key,
                num(cv.alpha),
                cv.sided,
                num(cv.value),
                num(cv.std_error),
                cv.mc_paths,
                cv.grid_n,
                cv.seed
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Quantile(a) => cmd_quantile(a),
        Command::Monitor(a) => monitor::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Selftest(a) => selftest::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
