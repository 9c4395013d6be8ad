use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use confseq::quantiles::CriticalValue;
use confseq::sequence::{Direction, Monitor, Step};
use confseq::{BoundaryShape, BurnIn, Sided, StreamState, VarianceMethod};

use crate::format::Num;
use crate::{CliError, CliResult, McArgs};

#[derive(Args, Debug)]
pub struct MonitorArgs {
    /// Input file; standard input when absent or `-`.
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "canonical:g1=0,g2=0.25")]
    pub shape: BoundaryShape,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Burn-in scale.
    #[arg(long)]
    pub m: u64,
    /// Suppression horizon: `1`, `log`, `sqrt` or an integer.
    #[arg(long, default_value = "1")]
    pub lm: BurnIn,
    /// `iid`, `bartlett` or `bartlett:<H>`.
    #[arg(long, default_value = "iid")]
    pub variance: VarianceMethod,
    /// Comma-separated null values tested at every step.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu0: Vec<f64>,
    /// `two`, `right` or `left`.
    #[arg(long, default_value = "two")]
    pub side: String,
    /// Use this critical value instead of simulating one.
    #[arg(long)]
    pub c: Option<f64>,
    /// Abort on the first unparseable line instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub full_precision: bool,
    #[command(flatten)]
    pub mc: McArgs,
}

fn direction(side: &str) -> CliResult<Direction> {
    match side {
        "two" | "two-sided" => Ok(Direction::TwoSided),
        "right" => Ok(Direction::Right),
        "left" => Ok(Direction::Left),
        other => Err(CliError::Usage(format!(
            "--side: unknown value `{other}` (two, right, left)"
        ))),
    }
}

fn critical(args: &MonitorArgs, sided: Sided) -> CliResult<CriticalValue> {
    if let Some(c) = args.c {
        return Ok(CriticalValue::fixed(&args.shape, args.alpha, sided, c)?);
    }
    let mut cache = args.mc.open_cache()?;
    let cv = cache.get_or_compute(
        &args.shape,
        args.alpha,
        sided,
        args.mc.paths,
        args.mc.grid_n,
        args.mc.mc_seed,
    )?;
    cache.save()?;
    Ok(cv)
}

/// First field of a CSV line, or the whole line.
fn parse_value(line: &str) -> Option<f64> {
    let field = line.split(',').next()?.trim();
    field.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn render(step: &Step, full: bool) -> String {
    let r = &step.record;
    let n = |x| Num(x, full).json();
    let rejects: Vec<&str> = step
        .verdicts
        .iter()
        .map(|v| if v.reject { "true" } else { "false" })
        .collect();
    format!(
        "{{\"t\":{},\"mean\":{},\"sigma\":{},\"lower\":{},\"upper\":{},\"rejects\":[{}]}}",
        r.t,
        n(r.mean),
        n(r.sigma),
        n(r.lower),
        n(r.upper),
        rejects.join(",")
    )
}

pub fn run(args: MonitorArgs) -> CliResult {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {} must lie in (0, 1)", args.alpha)));
    }
    let dir = direction(&args.side)?;
    let state = StreamState::new(args.m)?
        .with_variance(args.variance)
        .with_burn_in(args.lm);
    let mut monitor = Monitor::new(state, args.shape.clone(), critical(&args, Sided::TwoSided)?)?;
    if dir != Direction::TwoSided && !args.mu0.is_empty() {
        monitor = monitor.with_one_sided(critical(&args, Sided::OneSided)?)?;
    }
    for &mu0 in &args.mu0 {
        monitor = monitor.with_hypothesis(mu0, dir)?;
    }

    let reader: Box<dyn BufRead> = match &args.input {
        Some(p) if p.as_os_str() != "-" => Box::new(BufReader::new(
            File::open(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
        )),
        _ => Box::new(BufReader::new(io::stdin().lock())),
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(x) = parse_value(&line) else {
            if args.strict {
                return Err(CliError::Usage(format!(
                    "line {}: cannot parse `{}`",
                    i + 1,
                    line.trim()
                )));
            }
            eprintln!("warning: line {}: skipping `{}`", i + 1, line.trim());
            continue;
        };
        let step = monitor.push(x)?;
        if let Err(e) = writeln!(out, "{}", render(&step, args.full_precision)) {
            // downstream closed the pipe
            if e.kind() == io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(e.into());
        }
    }
    match out.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_first_column() {
        assert_eq!(parse_value("1.5,foo,3"), Some(1.5));
        assert_eq!(parse_value(" -2 "), Some(-2.0));
        assert_eq!(parse_value("value,x"), None);
        assert_eq!(parse_value("nan"), None);
    }
}
