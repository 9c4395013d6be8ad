//! Online estimation of the running mean and of the (long-run) standard
//! deviation used to studentize the confidence sequence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the Bartlett lag window.
pub const DEFAULT_MAX_LAG: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `H = floor(t^(1/3))`.
    CubeRoot,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceMethod {
    /// Sample variance with divisor `t - 1`.
    IidSample,
    /// Bartlett-kernel long-run variance
    /// `sum_{|h| <= H} (1 - |h|/(H+1)) gamma(h)` with lags up to `max_lag`.
    BartlettLongRun { bandwidth: Bandwidth, max_lag: usize },
}

impl VarianceMethod {
    pub fn bartlett() -> Self {
        VarianceMethod::BartlettLongRun {
            bandwidth: Bandwidth::CubeRoot,
            max_lag: DEFAULT_MAX_LAG,
        }
    }

    /// Bartlett with a lag cap large enough that the cube-root bandwidth is
    /// never clamped up to `horizon` observations.
    pub fn bartlett_for_horizon(horizon: u64) -> Self {
        VarianceMethod::BartlettLongRun {
            bandwidth: Bandwidth::CubeRoot,
            max_lag: icbrt(horizon) as usize,
        }
    }
}

impl fmt::Display for VarianceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarianceMethod::IidSample => f.write_str("iid"),
            VarianceMethod::BartlettLongRun {
                bandwidth: Bandwidth::CubeRoot,
                ..
            } => f.write_str("bartlett"),
            VarianceMethod::BartlettLongRun {
                bandwidth: Bandwidth::Fixed(h),
                ..
            } => write!(f, "bartlett:{h}"),
        }
    }
}

impl FromStr for VarianceMethod {
    type Err = Error;

    /// `iid`, `bartlett` (cube-root bandwidth) or `bartlett:<H>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(VarianceMethod::IidSample),
            "bartlett" => Ok(VarianceMethod::bartlett()),
            _ => {
                let h = s
                    .strip_prefix("bartlett:")
                    .and_then(|h| h.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse {
                        field: "variance".into(),
                        message: format!("`{s}` is not one of iid, bartlett, bartlett:<H>"),
                    })?;
                Ok(VarianceMethod::BartlettLongRun {
                    bandwidth: Bandwidth::Fixed(h),
                    max_lag: h.max(DEFAULT_MAX_LAG),
                })
            }
        }
    }
}

/// Early-time suppression horizon `l_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BurnIn {
    /// `l_m = 1`.
    One,
    /// `l_m = ceil(ln m)`.
    Log,
    /// `l_m = ceil(sqrt m)`.
    Sqrt,
    Fixed(u64),
}

impl BurnIn {
    pub fn l_m(self, m: u64) -> u64 {
        match self {
            BurnIn::One => 1,
            BurnIn::Log => ((m as f64).ln().ceil() as u64).max(1),
            BurnIn::Sqrt => ((m as f64).sqrt().ceil() as u64).max(1),
            BurnIn::Fixed(l) => l,
        }
    }
}

impl FromStr for BurnIn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "one" => Ok(BurnIn::One),
            "log" => Ok(BurnIn::Log),
            "sqrt" => Ok(BurnIn::Sqrt),
            _ => s.parse().map(BurnIn::Fixed).map_err(|_| Error::Parse {
                field: "lm".into(),
                message: format!("`{s}` is not one of log, sqrt or an integer"),
            }),
        }
    }
}

/// Integer cube root.
fn icbrt(t: u64) -> u64 {
    let mut h = (t as f64).cbrt().floor() as u64;
    while (h + 1).pow(3) <= t {
        h += 1;
    }
    while h > 0 && h.pow(3) > t {
        h -= 1;
    }
    h
}

/// Lag cross-products for the Bartlett estimator, kept for the whole stream
/// in `O(max_lag)` memory. Values are shifted by the first observation.
#[derive(Clone, Debug)]
struct LagState {
    max_lag: usize,
    bandwidth: Bandwidth,
    shift: f64,
    total: f64,
    /// `head[h] = sum of the first h shifted values`, `h <= max_lag`.
    head: Vec<f64>,
    /// Most recent shifted values; the last `max_lag` are always present.
    recent: Vec<f64>,
    /// `cross[h] = sum_{i > h} y_i y_{i-h}` for `1 <= h <= max_lag` (`cross[0]` unused).
    cross: Vec<f64>,
}

impl LagState {
    fn new(bandwidth: Bandwidth, max_lag: usize) -> Self {
        Self {
            max_lag,
            bandwidth,
            shift: 0.0,
            total: 0.0,
            head: vec![0.0],
            recent: Vec::with_capacity(2 * max_lag + 1),
            cross: vec![0.0; max_lag + 1],
        }
    }

    fn push(&mut self, t_before: u64, x: f64) {
        if t_before == 0 {
            self.shift = x;
        }
        let y = x - self.shift;
        let len = self.recent.len();
        let lags = self.max_lag.min(len);
        for h in 1..=lags {
            self.cross[h] += y * self.recent[len - h];
        }
        self.total += y;
        if self.head.len() <= self.max_lag {
            self.head.push(self.head[self.head.len() - 1] + y);
        }
        if self.max_lag > 0 {
            if self.recent.len() == 2 * self.max_lag {
                self.recent.drain(..self.max_lag);
            }
            self.recent.push(y);
        }
    }

    fn bandwidth_at(&self, t: u64) -> usize {
        let h = match self.bandwidth {
            Bandwidth::CubeRoot => icbrt(t) as usize,
            Bandwidth::Fixed(h) => h,
        };
        h.min(self.max_lag)
    }

    /// Long-run variance estimate; `gamma0` is the biased variance `m2 / t`.
    fn long_run_variance(&self, t: u64, mean: f64, gamma0: f64) -> Option<f64> {
        let bw = self.bandwidth_at(t);
        if t <= bw as u64 + 1 {
            return None;
        }
        let tf = t as f64;
        let ybar = mean - self.shift;
        let mut lrv = gamma0;
        let mut tail = 0.0;
        let len = self.recent.len();
        for h in 1..=bw {
            tail += self.recent[len - h];
            let a = self.total - self.head[h];
            let b = self.total - tail;
            let gamma = (self.cross[h] - ybar * (a + b) + (tf - h as f64) * ybar * ybar) / tf;
            lrv += 2.0 * (1.0 - h as f64 / (bw as f64 + 1.0)) * gamma;
        }
        Some(lrv)
    }
}

/// Online sufficient statistics of one observation stream.
#[derive(Clone, Debug)]
pub struct StreamState {
    t: u64,
    mean: f64,
    m2: f64,
    method: VarianceMethod,
    lags: Option<LagState>,
    m: u64,
    l_m: u64,
}

impl StreamState {
    /// A fresh stream with burn-in scale `m`, sample-variance studentization
    /// and `l_m = 1`.
    pub fn new(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input("burn-in scale m must be >= 1".into()));
        }
        Ok(Self {
            t: 0,
            mean: 0.0,
            m2: 0.0,
            method: VarianceMethod::IidSample,
            lags: None,
            m,
            l_m: 1,
        })
    }

    pub fn with_variance(mut self, method: VarianceMethod) -> Self {
        self.method = method;
        self.lags = match method {
            VarianceMethod::IidSample => None,
            VarianceMethod::BartlettLongRun { bandwidth, max_lag } => {
                let max_lag = match bandwidth {
                    Bandwidth::Fixed(h) => max_lag.max(h),
                    Bandwidth::CubeRoot => max_lag,
                };
                Some(LagState::new(bandwidth, max_lag))
            }
        };
        self
    }

    pub fn with_l_m(mut self, l_m: u64) -> Self {
        self.l_m = l_m;
        self
    }

    pub fn with_burn_in(self, burn_in: BurnIn) -> Self {
        let l = burn_in.l_m(self.m);
        self.with_l_m(l)
    }

    /// Adds one observation. Non-finite values are rejected and leave the
    /// state untouched.
    pub fn update(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Input(format!("observation {x} is not finite")));
        }
        if let Some(lags) = &mut self.lags {
            lags.push(self.t, x);
        }
        self.t += 1;
        let d = x - self.mean;
        self.mean += d / self.t as f64;
        self.m2 += d * (x - self.mean);
        Ok(())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Running centered sum of squares.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn l_m(&self) -> u64 {
        self.l_m
    }

    pub fn variance_method(&self) -> VarianceMethod {
        self.method
    }

    /// Unbiased sample variance, NaN before two observations.
    pub fn sample_variance(&self) -> f64 {
        if self.t < 2 {
            f64::NAN
        } else {
            self.m2 / (self.t - 1) as f64
        }
    }

    /// The studentizing scale. `+inf` until the underlying variance estimate
    /// is strictly positive (and, for Bartlett, until `t > H + 1`).
    pub fn sigma_hat(&self) -> f64 {
        match &self.lags {
            None => {
                if self.t >= 2 && self.m2 > 0.0 {
                    (self.m2 / (self.t - 1) as f64).sqrt()
                } else {
                    f64::INFINITY
                }
            }
            Some(lags) => {
                if self.t == 0 {
                    return f64::INFINITY;
                }
                let gamma0 = self.m2 / self.t as f64;
                match lags.long_run_variance(self.t, self.mean, gamma0) {
                    Some(v) if v > 0.0 => v.sqrt(),
                    _ => f64::INFINITY,
                }
            }
        }
    }

    /// Memory held for autocovariances, in stored values.
    pub fn buffer_len(&self) -> usize {
        self.lags
            .as_ref()
            .map_or(0, |l| l.recent.capacity() + l.head.capacity() + l.cross.capacity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn one_two_three() {
        let mut s = StreamState::new(10).unwrap();
        for x in [1.0, 2.0, 3.0] {
            s.update(x).unwrap();
        }
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.sample_variance(), 1.0);
        assert_eq!(s.sigma_hat(), 1.0);
    }

    #[test]
    fn constant_stream() {
        let mut s = StreamState::new(10).unwrap();
        for _ in 0..1_000_000 {
            s.update(5.0).unwrap();
        }
        assert_eq!(s.mean(), 5.0);
        assert_eq!(s.sample_variance(), 0.0);
        assert_eq!(s.sigma_hat(), f64::INFINITY);
    }

    #[test]
    fn positivity_guard() {
        let mut s = StreamState::new(10).unwrap();
        assert_eq!(s.sigma_hat(), f64::INFINITY);
        s.update(1.0).unwrap();
        assert_eq!(s.sigma_hat(), f64::INFINITY);
        s.update(1.0).unwrap();
        assert_eq!(s.sigma_hat(), f64::INFINITY);
        s.update(2.0).unwrap();
        assert!(s.sigma_hat().is_finite());
    }

    #[test]
    fn non_finite_rejected_without_change() {
        let mut s = StreamState::new(10).unwrap().with_variance(VarianceMethod::bartlett());
        s.update(1.0).unwrap();
        let before = format!("{s:?}");
        assert!(s.update(f64::NAN).is_err());
        assert!(s.update(f64::NEG_INFINITY).is_err());
        assert_eq!(before, format!("{s:?}"));
        assert!(StreamState::new(0).is_err());
    }

    #[test]
    fn normal_stream_variance() {
        let mut rng = substream(2024, 0);
        let mut s = StreamState::new(10).unwrap();
        for _ in 0..100_000 {
            s.update(rng.sample(StandardNormal)).unwrap();
        }
        assert!((s.sample_variance() - 1.0).abs() < 0.05);
    }

    /// Direct two-pass Bartlett estimate over the full history.
    fn bartlett_brute(xs: &[f64], bw: usize) -> f64 {
        let t = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / t;
        let gamma = |h: usize| -> f64 { (h..xs.len()).map(|i| (xs[i] - mean) * (xs[i - h] - mean)).sum::<f64>() / t };
        let mut v = gamma(0);
        for h in 1..=bw {
            v += 2.0 * (1.0 - h as f64 / (bw as f64 + 1.0)) * gamma(h);
        }
        v
    }

    #[test]
    fn bartlett_matches_two_pass() {
        let mut rng = substream(5, 1);
        let mut s = StreamState::new(10)
            .unwrap()
            .with_variance(VarianceMethod::BartlettLongRun {
                bandwidth: Bandwidth::CubeRoot,
                max_lag: 12,
            });
        let mut xs = Vec::new();
        let mut prev = 0.0;
        for t in 1..=1500u64 {
            let e: f64 = rng.sample(StandardNormal);
            prev = 0.5 * prev + e + 3.0;
            xs.push(prev);
            s.update(prev).unwrap();
            let bw = (icbrt(t) as usize).min(12);
            if t > bw as u64 + 1 && t % 37 == 0 {
                let want = bartlett_brute(&xs, bw).sqrt();
                let got = s.sigma_hat();
                assert!((got - want).abs() < 1e-9 * want, "t = {t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn bartlett_zero_bandwidth_is_biased_variance() {
        let mut rng = substream(8, 0);
        let mut s = StreamState::new(10)
            .unwrap()
            .with_variance(VarianceMethod::BartlettLongRun {
                bandwidth: Bandwidth::Fixed(0),
                max_lag: 0,
            });
        for _ in 0..1000 {
            s.update(rng.sample(StandardNormal)).unwrap();
        }
        assert_eq!(s.sigma_hat(), (s.m2() / s.t() as f64).sqrt());
    }

    #[test]
    fn bartlett_guard_until_past_bandwidth() {
        let mut s = StreamState::new(10)
            .unwrap()
            .with_variance(VarianceMethod::BartlettLongRun {
                bandwidth: Bandwidth::Fixed(3),
                max_lag: 3,
            });
        for (i, x) in [1.0, 4.0, 2.0, 8.0, 5.0].into_iter().enumerate() {
            s.update(x).unwrap();
            assert_eq!(s.sigma_hat().is_infinite(), i < 4, "t = {}", i + 1);
        }
    }

    #[test]
    fn bartlett_ar1_long_run_variance() {
        let mut rng = substream(77, 0);
        let mut s = StreamState::new(10)
            .unwrap()
            .with_variance(VarianceMethod::bartlett_for_horizon(100_000));
        let mut x = 0.0;
        for _ in 0..100_000 {
            let e: f64 = rng.sample(StandardNormal);
            x = 0.5 * x + e;
            s.update(x).unwrap();
        }
        let lrv = s.sigma_hat().powi(2);
        assert!((lrv - 4.0).abs() < 0.15 * 4.0, "{lrv}");
    }

    #[test]
    fn bounded_memory() {
        let mut s = StreamState::new(10).unwrap().with_variance(VarianceMethod::bartlett());
        for i in 0..10_000 {
            s.update(i as f64).unwrap();
        }
        let held = s.buffer_len();
        for i in 0..100_000 {
            s.update(i as f64).unwrap();
        }
        assert_eq!(held, s.buffer_len());
    }

    #[test]
    fn integer_cube_root() {
        for t in 0..5000u64 {
            let h = icbrt(t);
            assert!(h.pow(3) <= t && (h + 1).pow(3) > t);
        }
        assert_eq!(icbrt(1_000_000), 100);
    }

    #[test]
    fn burn_in_presets() {
        assert_eq!(BurnIn::One.l_m(1600), 1);
        assert_eq!(BurnIn::Log.l_m(1600), 8);
        assert_eq!(BurnIn::Sqrt.l_m(1600), 40);
        assert_eq!(BurnIn::Log.l_m(1), 1);
        assert_eq!("sqrt".parse::<BurnIn>().unwrap(), BurnIn::Sqrt);
        assert_eq!("12".parse::<BurnIn>().unwrap(), BurnIn::Fixed(12));
        assert!("never".parse::<BurnIn>().is_err());
    }

    #[test]
    fn variance_method_tokens() {
        for s in ["iid", "bartlett", "bartlett:4"] {
            assert_eq!(s.parse::<VarianceMethod>().unwrap().to_string(), s);
        }
        assert!("hac".parse::<VarianceMethod>().is_err());
    }
}
