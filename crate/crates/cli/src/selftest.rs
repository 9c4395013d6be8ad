use clap::Args;
use confseq::quantiles::{critical_values, kolmogorov_series_quantile, sample_paths};
use confseq::simulate::{
    check_hajek_renyi, check_sampler_equality, simulate_coverage, HajekRenyiConfig, HrSide, SimConfig,
};
use confseq::{interval, test_two_sided, BoundaryShape, BurnIn, Sided, StreamState};

use crate::{CliError, CliResult};

/// Reduced versions of the library checks, sized to run in well under a
/// minute on one core.
#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn line(ok: bool, name: &str, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn run(args: SelftestArgs) -> CliResult {
    let mut ok = true;
    let alphas = [0.01, 0.05, 0.1];

    let flat = BoundaryShape::canonical(0.0, 0.0)?;
    let (two, one) = critical_values(&flat, &alphas, args.paths, 2048, args.seed)?;
    let worst = two
        .iter()
        .chain(&one)
        .map(|cv| (cv.value - kolmogorov_series_quantile(cv.alpha, cv.sided)).abs())
        .fold(0.0, f64::max);
    ok &= line(worst < 0.03, "kolmogorov", format!("max |c - oracle| = {worst:.4}"));

    let shape = BoundaryShape::canonical(0.0, 0.25)?;
    let sups = sample_paths(&shape, 1024, args.paths / 4, args.seed)?;
    let (s2, s1) = (sups.sample(Sided::TwoSided), sups.sample(Sided::OneSided));
    let mut sandwich = true;
    for &a in &alphas {
        let (c, co, co_half) = (s2.quantile(a)?.0, s1.quantile(a)?.0, s1.quantile(a / 2.0)?.0);
        sandwich &= co <= c && c <= co_half;
    }
    ok &= line(
        sandwich,
        "sandwich",
        "one-sided <= two-sided <= one-sided at alpha/2".into(),
    );

    let c = confseq::CriticalValue::fixed(&shape, 0.05, Sided::TwoSided, 2.0)?;
    let mut state = StreamState::new(5)?;
    let mut exceptions = 0;
    for i in 0..500 {
        let x = ((i * 7919) % 101) as f64 / 10.0 - 5.0;
        state.update(x)?;
        let rec = interval(&state, &shape, &c)?;
        for mu0 in [rec.lower, rec.upper, rec.mean, x] {
            exceptions += usize::from(test_two_sided(&state, &shape, &c, mu0)?.reject == rec.contains(mu0));
        }
    }
    ok &= line(exceptions == 0, "duality", format!("{exceptions} exceptions"));

    let rep = check_sampler_equality(0.0, 0.25, args.paths / 4, 1024, 1e6, args.seed, args.seed + 1)?;
    ok &= line(
        rep.passed(),
        "sampler-equality",
        format!("ks = {:.4} < {:.4}", rep.ks_distance, rep.threshold),
    );

    let hr = check_hajek_renyi(&HajekRenyiConfig {
        side: HrSide::PreM,
        gammas: vec![0.25],
        ms: vec![100],
        cs: vec![2.0, 4.0],
        v: 1.0,
        n_reps: 1000,
        seed: args.seed,
    })?;
    ok &= line(hr.all_within_bound(), "hajek-renyi", format!("{} rows", hr.rows.len()));

    let (c2, _) = critical_values(&shape, &[0.05], args.paths, 2048, args.seed)?;
    let mut cfg = SimConfig::new(100, shape);
    cfg.n_reps = 400;
    cfg.burn_in = BurnIn::Log;
    let cov = simulate_coverage(&cfg, &c2[0])?;
    let floor = 0.95 - 3.0 * cov.binomial_se - 0.03;
    ok &= line(
        cov.estimate >= floor,
        "coverage",
        format!("{:.4} >= {floor:.4}", cov.estimate),
    );

    if ok {
        Ok(())
    } else {
        Err(CliError::Failed("selftest failed".into()))
    }
}
