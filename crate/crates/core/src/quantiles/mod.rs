//! Critical values `c_a(rho)` and `c^(o)_a(rho)`: upper quantiles of the
//! supremum of the weighted Wiener process, estimated by Monte Carlo.

mod cache;
mod grid;
mod oracle;
mod sampler;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};
use crate::stats::order_index;

pub use cache::{CacheKey, QuantileCache, CACHE_ENV, DEFAULT_CACHE_PATH};
pub use grid::{PathGrid, CLUSTER_INNERMOST, CLUSTER_POINTS, CLUSTER_RATIO, DEFAULT_GRID_N};
pub use oracle::{kolmogorov_cdf, kolmogorov_series_quantile};
pub use sampler::{
    default_y_max, sample_bridge_paths, sample_bridge_sup, sample_paths, sample_wiener_paths, sample_wiener_sup,
    PathSups, Y_MAX_CAP,
};

/// Default Monte Carlo path count for critical values.
pub const DEFAULT_N_PATHS: usize = 100_000;
/// Default Monte Carlo seed.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sided {
    /// Quantile of `sup |rho W|`.
    TwoSided,
    /// Quantile of `sup rho W`.
    OneSided,
}

impl fmt::Display for Sided {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sided::TwoSided => "two-sided",
            Sided::OneSided => "one-sided",
        })
    }
}

impl FromStr for Sided {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "two" | "both" => Ok(Sided::TwoSided),
            "one-sided" | "one" => Ok(Sided::OneSided),
            _ => Err(Error::Parse {
                field: "sided".into(),
                message: format!("`{s}` is neither `two-sided` nor `one-sided`"),
            }),
        }
    }
}

/// I.i.d. Monte Carlo draws of a supremum functional, in path order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SupSample {
    values: Vec<f64>,
}

impl SupSample {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Upper empirical `(1 - alpha)`-quantile and its standard error.
    pub fn quantile(&self, alpha: f64) -> Result<(f64, f64)> {
        Ok(self.quantiles(&[alpha])?[0])
    }

    /// Quantiles for several levels from one sort.
    ///
    /// The quantile is the order statistic at index `ceil((1 - alpha) n)`
    /// (ties kept). Its standard error is half the spread of the order
    /// statistics one binomial standard deviation `sqrt(n p (1-p))` below
    /// and above that index, which needs no density estimate.
    pub fn quantiles(&self, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
        if self.values.is_empty() {
            return Err(Error::Input("quantile of an empty sample".into()));
        }
        for &a in alphas {
            check_alpha(a)?;
        }
        let sorted = self.sorted();
        let n = sorted.len();
        Ok(alphas
            .iter()
            .map(|&alpha| {
                let p = 1.0 - alpha;
                let k = order_index(p, n);
                let d = (n as f64 * p * alpha).sqrt().ceil() as usize;
                let lo = k.saturating_sub(d).max(1);
                let hi = (k + d).min(n);
                (sorted[k - 1], (sorted[hi - 1] - sorted[lo - 1]) / 2.0)
            })
            .collect())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Input(format!("alpha = {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// A Monte Carlo critical value with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub alpha: f64,
    pub sided: Sided,
    pub shape_key: String,
    pub value: f64,
    pub mc_paths: usize,
    pub grid_n: usize,
    pub seed: u64,
    pub std_error: f64,
}

impl CriticalValue {
    /// A critical value supplied directly (e.g. from a table), with no
    /// Monte Carlo provenance.
    pub fn fixed(shape: &BoundaryShape, alpha: f64, sided: Sided, value: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Invariant(format!("critical value {value} must be positive")));
        }
        Ok(Self {
            alpha,
            sided,
            shape_key: shape.key(),
            value,
            mc_paths: 0,
            grid_n: 0,
            seed: 0,
            std_error: 0.0,
        })
    }

    pub fn key(&self) -> CacheKey {
        CacheKey {
            shape_key: self.shape_key.clone(),
            alpha: self.alpha,
            sided: self.sided,
            grid_n: self.grid_n,
            n_paths: self.mc_paths,
            seed: self.seed,
        }
    }
}

fn critical_from_sups(
    shape: &BoundaryShape,
    sups: &PathSups,
    alphas: &[f64],
    sided: Sided,
    grid_n: usize,
    seed: u64,
) -> Result<Vec<CriticalValue>> {
    let sample = sups.sample(sided);
    let qs = sample.quantiles(alphas)?;
    alphas
        .iter()
        .zip(qs)
        .map(|(&alpha, (value, std_error))| {
            if !(value > 0.0) {
                return Err(Error::Invariant(format!(
                    "estimated critical value {value} is not positive"
                )));
            }
            Ok(CriticalValue {
                alpha,
                sided,
                shape_key: shape.key(),
                value,
                mc_paths: sups.len(),
                grid_n,
                seed,
                std_error,
            })
        })
        .collect()
}

/// The `(1 - alpha)`-quantile of `sup |rho W|` (two-sided) or `sup rho W`
/// (one-sided). Canonical shapes use the exact bridge reduction, everything
/// else the truncated Wiener sampler.
pub fn critical_value(
    shape: &BoundaryShape,
    alpha: f64,
    sided: Sided,
    n_paths: usize,
    grid_n: usize,
    seed: u64,
) -> Result<CriticalValue> {
    check_alpha(alpha)?;
    let sups = sample_paths(shape, grid_n, n_paths, seed)?;
    Ok(critical_from_sups(shape, &sups, &[alpha], sided, grid_n, seed)?.remove(0))
}

/// Critical values for every `alpha` and both sides from one set of shared
/// paths. Returns `(two_sided, one_sided)`, each in the order of `alphas`.
pub fn critical_values(
    shape: &BoundaryShape,
    alphas: &[f64],
    n_paths: usize,
    grid_n: usize,
    seed: u64,
) -> Result<(Vec<CriticalValue>, Vec<CriticalValue>)> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let sups = sample_paths(shape, grid_n, n_paths, seed)?;
    Ok((
        critical_from_sups(shape, &sups, alphas, Sided::TwoSided, grid_n, seed)?,
        critical_from_sups(shape, &sups, alphas, Sided::OneSided, grid_n, seed)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_is_upper_order_statistic() {
        let s = SupSample::new((1..=100).map(f64::from).collect());
        assert_eq!(s.quantile(0.05).unwrap().0, 95.0);
        assert_eq!(s.quantile(0.5).unwrap().0, 50.0);
        let (_, se) = s.quantile(0.05).unwrap();
        // bracket 95 -/+ ceil(sqrt(100 * .95 * .05)) = 95 -/+ 3
        assert_eq!(se, 3.0);
        assert!(s.quantile(0.0).is_err());
        assert!(s.quantile(1.0).is_err());
    }

    #[test]
    fn quantiles_decrease_in_alpha() {
        let grid = PathGrid::standard(256).unwrap();
        let s = sample_bridge_sup(0.1, 0.2, &grid, 2000, 3, Sided::TwoSided).unwrap();
        let qs = s.quantiles(&[0.01, 0.05, 0.1, 0.5]).unwrap();
        assert!(qs.windows(2).all(|w| w[0].0 > w[1].0));
    }

    #[test]
    fn critical_value_validates_alpha() {
        let shape = BoundaryShape::canonical(0.0, 0.0).unwrap();
        assert!(matches!(
            critical_value(&shape, 0.0, Sided::TwoSided, 10, 64, 0),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            critical_value(&shape, 1.5, Sided::TwoSided, 10, 64, 0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn shared_paths_agree_with_single_calls() {
        let shape = BoundaryShape::canonical(0.2, 0.1).unwrap();
        let (two, one) = critical_values(&shape, &[0.05, 0.1], 500, 128, 11).unwrap();
        let single = critical_value(&shape, 0.1, Sided::OneSided, 500, 128, 11).unwrap();
        assert_eq!(one[1], single);
        assert_eq!(
            two[0],
            critical_value(&shape, 0.05, Sided::TwoSided, 500, 128, 11).unwrap()
        );
    }

    #[test]
    fn sided_tokens() {
        assert_eq!("two-sided".parse::<Sided>().unwrap(), Sided::TwoSided);
        assert_eq!(Sided::OneSided.to_string().parse::<Sided>().unwrap(), Sided::OneSided);
        assert!("left".parse::<Sided>().is_err());
    }
}
