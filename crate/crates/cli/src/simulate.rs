use clap::{Args, Subcommand, ValueEnum};
use confseq::quantiles::{
    default_y_max, sample_bridge_sup, sample_wiener_sup, PathGrid, DEFAULT_GRID_N, DEFAULT_N_PATHS,
};
use confseq::sequence::BatteryMode;
use confseq::simulate::{
    check_hajek_renyi, check_sampler_equality, check_sup_statistic, simulate_coverage, simulate_fwer,
    simulate_rejection, Dgp, HajekRenyiConfig, HrSide, SimConfig, SupStatConfig,
};
use confseq::{BoundaryShape, BurnIn, Sided, VarianceMethod};
use serde_json::json;

use crate::{CliError, CliResult, McArgs};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(subcommand)]
    experiment: Experiment,
    /// Print a JSON document instead of key=value lines.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Uniform coverage of the true mean.
    Coverage(SeqArgs),
    /// Rejection rate and stopping times of the two-sided test.
    Rejection {
        #[command(flatten)]
        seq: SeqArgs,
        /// Null value; defaults to the data mean minus `--shift`.
        #[arg(long, allow_hyphen_values = true)]
        mu0: Option<f64>,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        shift: f64,
    },
    /// Family-wise error of a battery of true one-sided nulls.
    Fwer {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 0.05)]
        spacing: f64,
        #[arg(long, value_enum, default_value_t = Mode::Right)]
        mode: Mode,
    },
    /// Distance of the studentized supremum statistic to its limit law.
    Supstat {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "100,400,1600")]
        ms: Vec<u64>,
        #[arg(long, default_value = "canonical:g1=0,g2=0.25")]
        shape: BoundaryShape,
        #[arg(long, default_value_t = 100)]
        horizon_factor: u64,
        #[arg(long, default_value = "1")]
        lm: BurnIn,
        #[arg(long, default_value = "iid")]
        variance: VarianceMethod,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        /// Draws of the limit variable.
        #[arg(long, default_value_t = DEFAULT_N_PATHS)]
        ref_paths: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_N)]
        grid_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Maximal inequalities for early and late partial sums.
    Hajekrenyi {
        #[arg(long, value_enum, default_value_t = HrWindow::Pre)]
        side: HrWindow,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.4")]
        gammas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        ms: Vec<u64>,
        #[arg(long = "cs", value_delimiter = ',', default_value = "2,4,8")]
        cs: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Bridge sampler versus Wiener sampler on a canonical shape.
    #[command(alias = "samplers")]
    Prop43 {
        #[arg(long, default_value_t = 0.0)]
        g1: f64,
        #[arg(long, default_value_t = 0.0)]
        g2: f64,
        #[arg(long, default_value_t = DEFAULT_N_PATHS)]
        paths: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_N)]
        grid_n: usize,
        /// Wiener truncation point (default depends on the shape).
        #[arg(long)]
        y_max: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Right,
    Left,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HrWindow {
    Pre,
    Post,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DgpKind {
    Normal,
    Exp,
    Ar1,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    #[arg(long, value_enum, default_value_t = DgpKind::Normal)]
    dgp: DgpKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Noise (normal) or innovation (AR(1)) standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Exponential rate.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    phi: f64,
}

impl DataArgs {
    fn dgp(&self) -> CliResult<Dgp> {
        let d = match self.dgp {
            DgpKind::Normal => Dgp::IidNormal {
                mu: self.mu,
                sigma: self.sigma,
            },
            DgpKind::Exp => Dgp::IidCenteredExponential {
                rate: self.rate,
                mu: self.mu,
            },
            DgpKind::Ar1 => Dgp::Ar1 {
                phi: self.phi,
                sigma: self.sigma,
                mu: self.mu,
            },
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Args, Debug, Clone)]
struct SeqArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 200)]
    m: u64,
    /// Default: 100 m for coverage, 50 m otherwise.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value = "canonical:g1=0,g2=0.25")]
    shape: BoundaryShape,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "log")]
    lm: BurnIn,
    #[arg(long, default_value = "iid")]
    variance: VarianceMethod,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    mc: McArgs,
}

impl SeqArgs {
    fn config(&self, default_horizon_factor: u64) -> CliResult<SimConfig> {
        Ok(SimConfig {
            dgp: self.data.dgp()?,
            m: self.m,
            horizon: self.horizon.unwrap_or(default_horizon_factor * self.m),
            shape: self.shape.clone(),
            burn_in: self.lm,
            variance: self.variance,
            n_reps: self.reps,
            seed: self.seed,
        })
    }

    fn critical(&self, sided: Sided) -> CliResult<confseq::CriticalValue> {
        let mut cache = self.mc.open_cache()?;
        let cv = cache.get_or_compute(
            &self.shape,
            self.alpha,
            sided,
            self.mc.paths,
            self.mc.grid_n,
            self.mc.mc_seed,
        )?;
        cache.save()?;
        Ok(cv)
    }
}

fn emit(json: bool, kv: String, doc: serde_json::Value) {
    if json {
        println!("{doc}");
    } else {
        print!("{kv}");
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn run(args: SimulateArgs) -> CliResult {
    let json = args.json;
    match args.experiment {
        Experiment::Coverage(seq) => {
            let cfg = seq.config(100)?;
            let rep = simulate_coverage(&cfg, &seq.critical(Sided::TwoSided)?)?;
            emit(json, rep.render_kv(), to_json(&rep));
        }
        Experiment::Rejection { seq, mu0, shift } => {
            let cfg = seq.config(50)?;
            let mu0 = mu0.unwrap_or(cfg.dgp.mean() - shift);
            let rep = simulate_rejection(&cfg, mu0, &seq.critical(Sided::TwoSided)?)?;
            emit(json, rep.render_kv(), to_json(&rep));
        }
        Experiment::Fwer {
            seq,
            points,
            spacing,
            mode,
        } => {
            if spacing.is_nan() || spacing <= 0.0 {
                return Err(CliError::Usage("--spacing must be positive".into()));
            }
            let cfg = seq.config(50)?;
            let mu = cfg.dgp.mean();
            // every grid point is a true null for the tested side(s)
            let (mode, mus, sided): (BatteryMode, Vec<f64>, Sided) = match mode {
                Mode::Right => (
                    BatteryMode::RightOnly,
                    (0..points).map(|j| mu + j as f64 * spacing).collect(),
                    Sided::OneSided,
                ),
                Mode::Left => (
                    BatteryMode::LeftOnly,
                    (0..points).rev().map(|j| mu - j as f64 * spacing).collect(),
                    Sided::OneSided,
                ),
                Mode::Both => (
                    BatteryMode::Both,
                    (0..points)
                        .map(|j| mu + (j as f64 - (points as f64 - 1.0) / 2.0) * spacing)
                        .collect(),
                    Sided::TwoSided,
                ),
            };
            let rep = simulate_fwer(&cfg, &mus, mode, &seq.critical(sided)?)?;
            emit(json, rep.render_kv(), to_json(&rep));
        }
        Experiment::Supstat {
            data,
            ms,
            shape,
            horizon_factor,
            lm,
            variance,
            reps,
            ref_paths,
            grid_n,
            seed,
        } => {
            let reference_seed = seed ^ 0x5EED;
            let reference = if shape.is_canonical() {
                let grid = PathGrid::standard(grid_n)?;
                sample_bridge_sup(
                    shape.gamma1(),
                    shape.gamma2(),
                    &grid,
                    ref_paths,
                    reference_seed,
                    Sided::TwoSided,
                )?
            } else {
                sample_wiener_sup(
                    &shape,
                    default_y_max(&shape),
                    grid_n,
                    ref_paths,
                    reference_seed,
                    Sided::TwoSided,
                )?
            };
            let cfg = SupStatConfig {
                dgp: data.dgp()?,
                ms,
                shape,
                horizon_factor,
                burn_in: lm,
                variance,
                n_reps: reps,
                seed,
            };
            let rep = check_sup_statistic(&cfg, &reference)?;
            emit(json, rep.render_kv(), to_json(&rep));
        }
        Experiment::Hajekrenyi {
            side,
            gammas,
            ms,
            cs,
            v,
            reps,
            seed,
        } => {
            let cfg = HajekRenyiConfig {
                side: match side {
                    HrWindow::Pre => HrSide::PreM,
                    HrWindow::Post => HrSide::PostMV,
                },
                gammas,
                ms,
                cs,
                v,
                n_reps: reps,
                seed,
            };
            let rep = check_hajek_renyi(&cfg)?;
            emit(json, rep.render_kv(), to_json(&rep));
        }
        Experiment::Prop43 {
            g1,
            g2,
            paths,
            grid_n,
            y_max,
            seed,
        } => {
            let shape = BoundaryShape::canonical(g1, g2)?;
            let y_max = y_max.unwrap_or_else(|| default_y_max(&shape));
            let rep = check_sampler_equality(g1, g2, paths, grid_n, y_max, seed, seed.wrapping_add(1))?;
            let mut doc = to_json(&rep);
            doc["passed"] = json!(rep.passed());
            emit(json, rep.render_kv(), doc);
        }
    }
    Ok(())
}
