use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::dgp::Dgp;
use super::replicate;
use super::report::{HajekRenyiReport, HajekRenyiRow, SamplerEqualityReport, SimReport, SupStatReport, SupStatRow};
use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};
use crate::estimators::{Bandwidth, BurnIn, StreamState, VarianceMethod};
use crate::quantiles::{sample_bridge_sup, sample_wiener_sup, CriticalValue, PathGrid, Sided, SupSample};
use crate::rng::derive_seed;
use crate::sequence::BatteryMode;
use crate::stats::{binomial_se, ks_critical_value, ks_distance, order_index};

/// Levels at which stopping-time quantiles are reported.
pub const STOPPING_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Shared configuration of the sequence-level experiments.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dgp: Dgp,
    pub m: u64,
    pub horizon: u64,
    pub shape: BoundaryShape,
    pub burn_in: BurnIn,
    pub variance: VarianceMethod,
    pub n_reps: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Standard normal data, `l_m = 1`, sample variance, horizon `100 m`,
    /// 1000 replications.
    pub fn new(m: u64, shape: BoundaryShape) -> Self {
        Self {
            dgp: Dgp::standard_normal(),
            m,
            horizon: 100 * m,
            shape,
            burn_in: BurnIn::One,
            variance: VarianceMethod::IidSample,
            n_reps: 1000,
            seed: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.m == 0 || self.horizon == 0 {
            return Err(Error::Input("m and horizon must be >= 1".into()));
        }
        Ok(())
    }

    fn echo(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("dgp".into(), format!("{:?}", self.dgp)),
            ("m".into(), self.m.to_string()),
            ("l_m".into(), self.l_m().to_string()),
            ("shape".into(), self.shape.key()),
            ("variance".into(), self.variance.to_string()),
            ("seed".into(), self.seed.to_string()),
        ])
    }

    fn l_m(&self) -> u64 {
        self.burn_in.l_m(self.m)
    }

    fn state(&self) -> StreamState {
        StreamState::new(self.m)
            .expect("m validated")
            .with_variance(fit_variance(self.variance, self.horizon))
            .with_l_m(self.l_m())
    }

    /// `b_t(m)` for `t = 1..=horizon`, `+inf` while suppressed.
    fn widths(&self) -> Vec<f64> {
        let l_m = self.l_m();
        (1..=self.horizon)
            .map(|t| {
                if t <= l_m {
                    f64::INFINITY
                } else {
                    self.shape.width(self.m, t)
                }
            })
            .collect()
    }
}

/// Bartlett lag accumulators sized to the longest bandwidth reached by `horizon`.
fn fit_variance(method: VarianceMethod, horizon: u64) -> VarianceMethod {
    match method {
        VarianceMethod::BartlettLongRun {
            bandwidth: Bandwidth::CubeRoot,
            ..
        } => VarianceMethod::bartlett_for_horizon(horizon),
        other => other,
    }
}

/// Same arithmetic as the library interval.
#[inline]
fn half_width(sigma: f64, c: f64, b: f64) -> f64 {
    if sigma.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        sigma * c * b
    }
}

fn require(c: &CriticalValue, sided: Sided) -> Result<()> {
    if c.sided != sided {
        return Err(Error::Usage(format!("expected a {sided} critical value")));
    }
    Ok(())
}

/// First `t <= horizon` at which `mu` leaves the open interval.
fn first_exit(cfg: &SimConfig, widths: &[f64], c: f64, mu: f64, rng: rand_chacha::ChaCha8Rng) -> Option<u64> {
    let mut state = cfg.state();
    let mut data = cfg.dgp.stream(rng);
    for (i, &b) in widths.iter().enumerate() {
        state.update(data.next_value()).expect("finite draws");
        if b.is_infinite() {
            continue;
        }
        let hw = half_width(state.sigma_hat(), c, b);
        let mean = state.mean();
        if !(mean - hw < mu && mu < mean + hw) {
            return Some(i as u64 + 1);
        }
    }
    None
}

/// Share of replications in which the true mean stays inside every interval
/// up to the horizon.
pub fn simulate_coverage(cfg: &SimConfig, c: &CriticalValue) -> Result<SimReport> {
    cfg.validate()?;
    require(c, Sided::TwoSided)?;
    let widths = cfg.widths();
    let mu = cfg.dgp.mean();
    let exits = replicate(cfg.n_reps, derive_seed(cfg.seed, 0xC0), |_, rng| {
        first_exit(cfg, &widths, c.value, mu, rng)
    });
    let missed = exits.iter().filter(|e| e.is_some()).count();
    let covered = cfg.n_reps - missed;
    let mut config = cfg.echo();
    config.insert("c".into(), c.value.to_string());
    let mut rep = SimReport::from_count("coverage", covered, cfg.n_reps, cfg.horizon, config);
    rep.metrics.insert("covered".into(), covered as f64);
    rep.metrics.insert("missed".into(), missed as f64);
    Ok(rep)
}

fn stopping_quantiles(mut times: Vec<Option<u64>>) -> Vec<(f64, Option<u64>)> {
    // None (not stopped) sorts after every finite time
    times.sort_by_key(|t| t.unwrap_or(u64::MAX));
    STOPPING_LEVELS
        .iter()
        .map(|&q| {
            let t = if times.is_empty() {
                None
            } else {
                times[order_index(q, times.len()) - 1]
            };
            (q, t)
        })
        .collect()
}

/// Rejection rate of the two-sided test of `mu0` by the horizon, with
/// quantiles of the first rejection time.
pub fn simulate_rejection(cfg: &SimConfig, mu0: f64, c: &CriticalValue) -> Result<SimReport> {
    cfg.validate()?;
    require(c, Sided::TwoSided)?;
    let widths = cfg.widths();
    let times = replicate(cfg.n_reps, derive_seed(cfg.seed, 0x4E), |_, rng| {
        first_exit(cfg, &widths, c.value, mu0, rng)
    });
    let rejected = times.iter().filter(|t| t.is_some()).count();
    let mut config = cfg.echo();
    config.insert("mu0".into(), mu0.to_string());
    config.insert("c".into(), c.value.to_string());
    let mut rep = SimReport::from_count("rejection", rejected, cfg.n_reps, cfg.horizon, config);
    rep.stopping_time_quantiles = Some(stopping_quantiles(times));
    Ok(rep)
}

#[derive(Default, Clone, Copy)]
struct FwerOutcome {
    false_rejection: bool,
    prefix_violations: u64,
    event_mismatches: u64,
}

/// Family-wise error of a hierarchical battery over `mus` (strictly
/// increasing): the share of replications with any rejection of a true null
/// at any time up to the horizon.
///
/// Also records, at every step, whether the right rejections form a prefix
/// of the grid (left: a suffix) and whether "some true null rejected" equals
/// "the true null nearest the mean rejected"; both counts must be zero.
pub fn simulate_fwer(cfg: &SimConfig, mus: &[f64], mode: BatteryMode, c: &CriticalValue) -> Result<SimReport> {
    cfg.validate()?;
    if mus.iter().any(|m| !m.is_finite()) || mus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Input(
            "battery grid must be finite and strictly increasing".into(),
        ));
    }
    require(
        c,
        match mode {
            BatteryMode::Both => Sided::TwoSided,
            _ => Sided::OneSided,
        },
    )?;
    let mu_x = cfg.dgp.mean();
    let right = matches!(mode, BatteryMode::RightOnly | BatteryMode::Both);
    let left = matches!(mode, BatteryMode::LeftOnly | BatteryMode::Both);
    // nearest true nulls: smallest mu_j >= mu_x (right) and largest mu_j <= mu_x (left)
    let nearest_right = mus.iter().position(|&m| m >= mu_x);
    let nearest_left = mus.iter().rposition(|&m| m <= mu_x);
    let widths = cfg.widths();
    let outcomes = replicate(cfg.n_reps, derive_seed(cfg.seed, 0xF3), |_, rng| {
        let mut out = FwerOutcome::default();
        if mus.is_empty() {
            return out;
        }
        let mut state = cfg.state();
        let mut data = cfg.dgp.stream(rng);
        let mut verdicts = vec![false; mus.len()];
        for &b in &widths {
            state.update(data.next_value()).expect("finite draws");
            if b.is_infinite() {
                continue;
            }
            let hw = half_width(state.sigma_hat(), c.value, b);
            let mean = state.mean();
            let mut any_false = false;
            let mut nearest_false = false;
            if right {
                for (v, &mu) in verdicts.iter_mut().zip(mus) {
                    *v = mean - mu >= hw;
                }
                if verdicts.windows(2).any(|w| !w[0] && w[1]) {
                    out.prefix_violations += 1;
                }
                any_false |= verdicts.iter().zip(mus).any(|(&v, &mu)| v && mu >= mu_x);
                nearest_false |= nearest_right.is_some_and(|j| verdicts[j]);
            }
            if left {
                for (v, &mu) in verdicts.iter_mut().zip(mus) {
                    *v = mean - mu <= -hw;
                }
                if verdicts.windows(2).any(|w| w[0] && !w[1]) {
                    out.prefix_violations += 1;
                }
                any_false |= verdicts.iter().zip(mus).any(|(&v, &mu)| v && mu <= mu_x);
                nearest_false |= nearest_left.is_some_and(|j| verdicts[j]);
            }
            if any_false != nearest_false {
                out.event_mismatches += 1;
            }
            if any_false {
                out.false_rejection = true;
                break;
            }
        }
        out
    });
    let hits = outcomes.iter().filter(|o| o.false_rejection).count();
    let mut config = cfg.echo();
    config.insert("mode".into(), format!("{mode:?}"));
    config.insert("mus".into(), format!("{mus:?}"));
    config.insert("c".into(), c.value.to_string());
    let mut rep = SimReport::from_count("fwer", hits, cfg.n_reps, cfg.horizon, config);
    rep.metrics.insert(
        "prefix_violations".into(),
        outcomes.iter().map(|o| o.prefix_violations).sum::<u64>() as f64,
    );
    rep.metrics.insert(
        "event_mismatches".into(),
        outcomes.iter().map(|o| o.event_mismatches).sum::<u64>() as f64,
    );
    Ok(rep)
}

/// Configuration of the supremum-statistic convergence check.
#[derive(Clone, Debug)]
pub struct SupStatConfig {
    pub dgp: Dgp,
    pub ms: Vec<u64>,
    pub shape: BoundaryShape,
    /// Paths run to `horizon_factor * m`.
    pub horizon_factor: u64,
    pub burn_in: BurnIn,
    pub variance: VarianceMethod,
    pub n_reps: usize,
    pub seed: u64,
}

/// Empirical law of `sup_{l_m < t <= horizon} rho(t/m) |S_t - t mu| / (sqrt(m) sigma_hat_t)`
/// for each `m`, compared with draws of the limit `sup |rho W|` by the
/// two-sample KS distance. Times with `sigma_hat = inf` contribute 0.
pub fn check_sup_statistic(cfg: &SupStatConfig, reference: &SupSample) -> Result<SupStatReport> {
    cfg.dgp.validate()?;
    if cfg.ms.contains(&0) || cfg.horizon_factor == 0 {
        return Err(Error::Input("m values and horizon factor must be >= 1".into()));
    }
    if reference.is_empty() {
        return Err(Error::Input("empty reference sample".into()));
    }
    let mu = cfg.dgp.mean();
    let mut rows = Vec::with_capacity(cfg.ms.len());
    for &m in &cfg.ms {
        let horizon = cfg.horizon_factor * m;
        let l_m = cfg.burn_in.l_m(m);
        let variance = fit_variance(cfg.variance, horizon);
        let sqrt_m = (m as f64).sqrt();
        let weights: Vec<f64> = (1..=horizon)
            .map(|t| {
                if t <= l_m {
                    0.0
                } else {
                    cfg.shape.rho(t as f64 / m as f64) / sqrt_m
                }
            })
            .collect();
        let sups = replicate(cfg.n_reps, derive_seed(cfg.seed, m), |_, rng| {
            let mut state = StreamState::new(m).expect("m >= 1").with_variance(variance);
            let mut data = cfg.dgp.stream(rng);
            let mut partial = 0.0;
            let mut sup: f64 = 0.0;
            for &w in &weights {
                let x = data.next_value();
                partial += x - mu;
                state.update(x).expect("finite draws");
                if w > 0.0 {
                    let sigma = state.sigma_hat();
                    if sigma.is_finite() {
                        sup = sup.max(w * partial.abs() / sigma);
                    }
                }
            }
            sup
        });
        rows.push(SupStatRow {
            m,
            horizon,
            ks_distance: ks_distance(&sups, reference.values()),
            threshold: ks_critical_value(0.01, sups.len(), reference.len()),
        });
    }
    Ok(SupStatReport {
        n_reps: cfg.n_reps,
        n_reference: reference.len(),
        rows,
        config: BTreeMap::from([
            ("dgp".into(), format!("{:?}", cfg.dgp)),
            ("shape".into(), cfg.shape.key()),
            ("burn_in".into(), format!("{:?}", cfg.burn_in)),
            ("variance".into(), cfg.variance.to_string()),
            ("horizon_factor".into(), cfg.horizon_factor.to_string()),
            ("seed".into(), cfg.seed.to_string()),
        ]),
    })
}

/// Which maximal inequality to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HrSide {
    /// `sup_{1 <= t < m} |S_t| / (m^(1/2-g) t^g)`.
    PreM,
    /// `sup_{t > mV} (mV)^(1/2-g) |S_t - S_mV| / t^(1-g)`.
    PostMV,
}

impl fmt::Display for HrSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HrSide::PreM => "pre-m",
            HrSide::PostMV => "post-mv",
        })
    }
}

#[derive(Clone, Debug)]
pub struct HajekRenyiConfig {
    pub side: HrSide,
    pub gammas: Vec<f64>,
    pub ms: Vec<u64>,
    pub cs: Vec<f64>,
    /// Start of the post-`mV` window as a multiple of `m`.
    pub v: f64,
    pub n_reps: usize,
    pub seed: u64,
}

/// Steps simulated one by one after `mV`, as a multiple of `mV`.
const HR_EXACT_FACTOR: u64 = 20;
/// Post-`mV` paths are followed to `1e6 mV` on a geometric time grid.
const HR_FAR_FACTOR: f64 = 1e6;
const HR_BLOCK_RATIO: f64 = 1.01;

/// Empirical exceedance probabilities of the weighted partial-sum suprema
/// for standard normal data, against the analytic bounds
/// `1 / (C^2 (1 - 2g))` (pre-`m`) and `(1 + 1/(1 - 2g)) / C^2` (post-`mV`).
///
/// The post-`mV` supremum runs over every step up to `20 mV` and then over
/// a geometric grid (ratio 1.01) up to `1e6 mV`, with exact Gaussian block
/// sums between grid times; suprema inside blocks are not seen, so the
/// empirical exceedance is a lower bound.
pub fn check_hajek_renyi(cfg: &HajekRenyiConfig) -> Result<HajekRenyiReport> {
    if cfg.gammas.iter().any(|g| !(0.0..0.5).contains(g)) {
        return Err(Error::Input("gamma must lie in [0, 1/2)".into()));
    }
    if cfg.cs.iter().any(|c| !(*c > 0.0)) || cfg.ms.contains(&0) || !(cfg.v > 0.0) {
        return Err(Error::Input("C, m and V must be positive".into()));
    }
    let mut rows = Vec::new();
    for &m in &cfg.ms {
        let sups: Vec<Vec<f64>> = replicate(cfg.n_reps, derive_seed(cfg.seed, m), |_, mut rng| {
            let mut sup = vec![0.0f64; cfg.gammas.len()];
            match cfg.side {
                HrSide::PreM => {
                    let mut s = 0.0f64;
                    for t in 1..m {
                        let z: f64 = rng.sample(StandardNormal);
                        s += z;
                        for (g, out) in cfg.gammas.iter().zip(sup.iter_mut()) {
                            let scale = (m as f64).powf(0.5 - g) * (t as f64).powf(*g);
                            *out = out.max(s.abs() / scale);
                        }
                    }
                }
                HrSide::PostMV => {
                    let mv = m as f64 * cfg.v;
                    let start = mv.floor() as u64;
                    let pre: Vec<f64> = cfg.gammas.iter().map(|g| mv.powf(0.5 - g)).collect();
                    let visit = |t: u64, s: f64, sup: &mut [f64]| {
                        for ((g, p), out) in cfg.gammas.iter().zip(&pre).zip(sup.iter_mut()) {
                            *out = out.max(p * s.abs() / (t as f64).powf(1.0 - g));
                        }
                    };
                    let mut s = 0.0f64;
                    let exact_end = start.max(1) * HR_EXACT_FACTOR;
                    for t in start + 1..=exact_end {
                        let z: f64 = rng.sample(StandardNormal);
                        s += z;
                        visit(t, s, &mut sup);
                    }
                    let far = (start.max(1) as f64 * HR_FAR_FACTOR) as u64;
                    let mut t = exact_end;
                    while t < far {
                        let next = ((t as f64 * HR_BLOCK_RATIO).ceil() as u64).max(t + 1);
                        let z: f64 = rng.sample(StandardNormal);
                        s += z * ((next - t) as f64).sqrt();
                        t = next;
                        visit(t, s, &mut sup);
                    }
                }
            }
            sup
        });
        for (gi, &g) in cfg.gammas.iter().enumerate() {
            for &c in &cfg.cs {
                let hits = sups.iter().filter(|s| s[gi] > c).count();
                let p = hits as f64 / cfg.n_reps.max(1) as f64;
                let bound = match cfg.side {
                    HrSide::PreM => 1.0 / (c * c * (1.0 - 2.0 * g)),
                    HrSide::PostMV => (1.0 + 1.0 / (1.0 - 2.0 * g)) / (c * c),
                };
                rows.push(HajekRenyiRow {
                    side: cfg.side,
                    gamma: g,
                    m,
                    c,
                    exceedance: p,
                    binomial_se: binomial_se(p, cfg.n_reps),
                    bound,
                });
            }
        }
    }
    Ok(HajekRenyiReport {
        n_reps: cfg.n_reps,
        rows,
    })
}

/// Compares two-sided draws of the bridge sampler (seed `seed_bridge`) with
/// the Wiener sampler on the canonical shape (seed `seed_wiener`).
pub fn check_sampler_equality(
    gamma1: f64,
    gamma2: f64,
    n_paths: usize,
    grid_n: usize,
    y_max: f64,
    seed_bridge: u64,
    seed_wiener: u64,
) -> Result<SamplerEqualityReport> {
    let shape = BoundaryShape::canonical(gamma1, gamma2)?;
    let grid = PathGrid::standard(grid_n)?;
    let bridge = sample_bridge_sup(gamma1, gamma2, &grid, n_paths, seed_bridge, Sided::TwoSided)?;
    let wiener = sample_wiener_sup(&shape, y_max, grid_n, n_paths, seed_wiener, Sided::TwoSided)?;
    Ok(SamplerEqualityReport {
        gamma1,
        gamma2,
        n_paths,
        grid_n,
        y_max,
        ks_distance: ks_distance(bridge.values(), wiener.values()),
        threshold: ks_critical_value(0.01, bridge.len(), wiener.len()),
        bridge_q95: bridge.quantile(0.05)?.0,
        wiener_q95: wiener.quantile(0.05)?.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantiles::CriticalValue;

    fn shape() -> BoundaryShape {
        BoundaryShape::canonical(0.0, 0.25).unwrap()
    }

    fn two(value: f64) -> CriticalValue {
        CriticalValue::fixed(&shape(), 0.05, Sided::TwoSided, value).unwrap()
    }

    #[test]
    fn tiny_alpha_covers() {
        let mut cfg = SimConfig::new(50, shape());
        cfg.horizon = 500;
        cfg.n_reps = 200;
        cfg.burn_in = BurnIn::Log;
        // a huge critical value stands in for alpha = 1e-6
        let rep = simulate_coverage(&cfg, &two(6.0)).unwrap();
        assert_eq!(rep.estimate, 1.0);
        assert_eq!(rep.metrics["covered"] + rep.metrics["missed"], 200.0);
    }

    #[test]
    fn stopping_quantiles_handle_censoring() {
        let q = stopping_quantiles(vec![Some(5), None, Some(3), Some(9)]);
        assert_eq!(q[2], (0.5, Some(5)));
        assert_eq!(q[4], (0.9, None));
        assert_eq!(stopping_quantiles(vec![])[0], (0.1, None));
    }

    #[test]
    fn empty_grid_has_no_fwer() {
        let mut cfg = SimConfig::new(20, shape());
        cfg.horizon = 100;
        cfg.n_reps = 10;
        let c = CriticalValue::fixed(&shape(), 0.05, Sided::OneSided, 1.3).unwrap();
        let rep = simulate_fwer(&cfg, &[], BatteryMode::RightOnly, &c).unwrap();
        assert_eq!(rep.estimate, 0.0);
        assert!(simulate_fwer(&cfg, &[1.0, 0.0], BatteryMode::RightOnly, &c).is_err());
        assert!(simulate_fwer(&cfg, &[0.0], BatteryMode::Both, &c).is_err());
    }

    #[test]
    fn hajek_renyi_bounds_shrink_with_c() {
        let cfg = HajekRenyiConfig {
            side: HrSide::PreM,
            gammas: vec![0.25],
            ms: vec![50],
            cs: vec![1.0, 4.0, 1e6],
            v: 1.0,
            n_reps: 300,
            seed: 3,
        };
        let rep = check_hajek_renyi(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!((rep.rows[1].bound - 0.125).abs() < 1e-15);
        assert_eq!(rep.rows[2].exceedance, 0.0);
        assert!(rep.rows[0].exceedance >= rep.rows[1].exceedance);
        let post = HajekRenyiConfig {
            side: HrSide::PostMV,
            cs: vec![4.0],
            ..cfg
        };
        let rep = check_hajek_renyi(&post).unwrap();
        assert!((rep.rows[0].bound - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn reports_are_reproducible() {
        let mut cfg = SimConfig::new(30, shape());
        cfg.horizon = 300;
        cfg.n_reps = 50;
        let a = simulate_rejection(&cfg, 0.3, &two(1.5)).unwrap();
        let b = simulate_rejection(&cfg, 0.3, &two(1.5)).unwrap();
        assert_eq!(a.render_kv(), b.render_kv());
    }

    #[test]
    fn one_sided_value_rejected_for_coverage() {
        let cfg = SimConfig::new(10, shape());
        let c = CriticalValue::fixed(&shape(), 0.05, Sided::OneSided, 1.3).unwrap();
        assert!(matches!(simulate_coverage(&cfg, &c), Err(Error::Usage(_))));
    }
}
