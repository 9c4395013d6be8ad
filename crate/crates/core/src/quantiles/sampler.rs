//! Monte Carlo samplers for the supremum of the weighted limit process.
//!
//! Two independent constructions are provided:
//!
//! * the bridge sampler draws `sup_x |B(x)| / (x^g1 (1-x)^g2)` for a standard
//!   Brownian bridge `B`, built exactly on the grid as `B(x) = W(x) - x W(1)`;
//! * the Wiener sampler draws `sup_y |rho(y) W(y)|` directly, for any shape,
//!   truncating the time axis at `y_max`.
//!
//! For the canonical family both have the same law (time change
//! `x = y / (1 + y)`). The Wiener sampler evaluates `W` at the image of the
//! bridge grid, so on canonical shapes the two agree in distribution on the
//! grid itself and differ only through the truncation at `y_max`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::grid::PathGrid;
use super::{Sided, SupSample};
use crate::boundary::BoundaryShape;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};

const BRIDGE_STREAM: u64 = 0xB81D;
const WIENER_STREAM: u64 = 0x3E4E;

/// Upper limit for the truncation point of the Wiener sampler.
pub const Y_MAX_CAP: f64 = 1e6;

/// Per-path suprema of the weighted process `v`: `sup |v|`, `sup v` and
/// `sup (-v)`. The one-sided values include the limit point 0, so they are
/// nonnegative.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathSups {
    pub two_sided: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl PathSups {
    pub fn len(&self) -> usize {
        self.two_sided.len()
    }

    pub fn is_empty(&self) -> bool {
        self.two_sided.is_empty()
    }

    /// Two-sided: one draw per path. One-sided: each path contributes
    /// `sup v` and the supremum of its reflection `sup (-v)`, in that order;
    /// the reflected path is again a Wiener path, and keeping both makes the
    /// quantile sandwich `c_a <= c^(o)_(a/2)` hold exactly on the sample.
    pub fn sample(&self, sided: Sided) -> SupSample {
        match sided {
            Sided::TwoSided => SupSample::new(self.two_sided.clone()),
            Sided::OneSided => SupSample::new(self.upper.iter().zip(&self.lower).flat_map(|(&u, &l)| [u, l]).collect()),
        }
    }
}

#[derive(Clone, Copy)]
struct PathSup {
    abs: f64,
    upper: f64,
    lower: f64,
}

fn check_gammas(gamma1: f64, gamma2: f64) -> Result<()> {
    for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2)] {
        if !(0.0..0.5).contains(&g) {
            return Err(Error::Invariant(format!("{name} = {g} outside [0, 1/2)")));
        }
    }
    Ok(())
}

fn collect<F>(n_paths: usize, seed: u64, buf_len: usize, path: F) -> PathSups
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> PathSup + Sync,
{
    #[cfg(feature = "parallel")]
    let sups: Vec<PathSup> = {
        use rayon::prelude::*;
        (0..n_paths)
            .into_par_iter()
            .map_init(
                || vec![0.0; buf_len],
                |buf, i| path(&mut substream(seed, i as u64), buf),
            )
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let sups: Vec<PathSup> = {
        let mut buf = vec![0.0; buf_len];
        (0..n_paths)
            .map(|i| path(&mut substream(seed, i as u64), &mut buf))
            .collect()
    };
    PathSups {
        two_sided: sups.iter().map(|p| p.abs).collect(),
        upper: sups.iter().map(|p| p.upper).collect(),
        lower: sups.iter().map(|p| p.lower).collect(),
    }
}

#[inline]
fn fold_sup(values: impl Iterator<Item = f64>) -> PathSup {
    let (mut upper, mut lower) = (0.0f64, 0.0f64);
    for v in values {
        upper = upper.max(v);
        lower = lower.max(-v);
    }
    PathSup {
        abs: upper.max(lower),
        upper,
        lower,
    }
}

/// Standard deviations of the Wiener increments between consecutive abscissae,
/// starting from 0.
fn increment_sds(times: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let sd = (t - prev).sqrt();
            prev = t;
            sd
        })
        .collect()
}

/// Per-path suprema of `B(x) / (x^g1 (1-x)^g2)` on `grid`.
pub fn sample_bridge_paths(gamma1: f64, gamma2: f64, grid: &PathGrid, n_paths: usize, seed: u64) -> Result<PathSups> {
    check_gammas(gamma1, gamma2)?;
    let xs = grid.points();
    let sds = increment_sds(xs);
    let last_sd = (1.0 - xs[xs.len() - 1]).sqrt();
    let weights: Vec<f64> = xs.iter().map(|&x| x.powf(-gamma1) * (1.0 - x).powf(-gamma2)).collect();
    let seed = derive_seed(seed, BRIDGE_STREAM);
    Ok(collect(n_paths, seed, xs.len(), |rng, buf| {
        let mut w = 0.0;
        for (slot, &sd) in buf.iter_mut().zip(&sds) {
            let z: f64 = rng.sample(StandardNormal);
            w += sd * z;
            *slot = w;
        }
        let z: f64 = rng.sample(StandardNormal);
        let w1 = w + last_sd * z;
        fold_sup(
            buf.iter()
                .zip(xs)
                .zip(&weights)
                .map(|((&wx, &x), &wt)| wt * (wx - x * w1)),
        )
    }))
}

/// Monte Carlo draws of the weighted bridge supremum (absolute value for
/// [`Sided::TwoSided`], signed for [`Sided::OneSided`]). Deterministic in
/// `(seed, grid, n_paths)`.
pub fn sample_bridge_sup(
    gamma1: f64,
    gamma2: f64,
    grid: &PathGrid,
    n_paths: usize,
    seed: u64,
    sided: Sided,
) -> Result<SupSample> {
    Ok(sample_bridge_paths(gamma1, gamma2, grid, n_paths, seed)?.sample(sided))
}

/// Truncation point for the Wiener sampler: the smallest `V` with
/// `tail_bound * V^(g2 - 1/2) * 3 < 1e-3`, capped at `1e6`.
pub fn default_y_max(shape: &BoundaryShape) -> f64 {
    let exponent = 1.0 / (0.5 - shape.gamma2());
    let v = (3e3 * shape.tail_bound()).powf(exponent);
    if v.is_finite() {
        v.min(Y_MAX_CAP)
    } else {
        Y_MAX_CAP
    }
}

/// Per-path suprema of `rho(y) W(y)` over `0 < y <= min(y_max, e_rho)`.
pub fn sample_wiener_paths(
    shape: &BoundaryShape,
    y_max: f64,
    grid_n: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathSups> {
    if !(y_max > 0.0) || y_max.is_nan() {
        return Err(Error::Input(format!("y_max = {y_max} must be positive")));
    }
    let grid = PathGrid::standard(grid_n)?;
    let y_top = y_max.min(shape.e_rho());
    let ys = grid.wiener_abscissae(y_top);
    let sds = increment_sds(&ys);
    let rhos: Vec<f64> = ys.iter().map(|&y| shape.rho(y)).collect();
    if let Some(bad) = rhos.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::Invariant(format!("rho evaluated to {bad} on the sampling grid")));
    }
    let seed = derive_seed(seed, WIENER_STREAM);
    Ok(collect(n_paths, seed, 0, |rng, _| {
        let mut w = 0.0;
        fold_sup(sds.iter().zip(&rhos).map(|(&sd, &r)| {
            let z: f64 = rng.sample(StandardNormal);
            w += sd * z;
            r * w
        }))
    }))
}

/// Monte Carlo draws of the truncated supremum `sup_{y <= y_max} |rho(y) W(y)|`
/// (or its signed version).
pub fn sample_wiener_sup(
    shape: &BoundaryShape,
    y_max: f64,
    grid_n: usize,
    n_paths: usize,
    seed: u64,
    sided: Sided,
) -> Result<SupSample> {
    Ok(sample_wiener_paths(shape, y_max, grid_n, n_paths, seed)?.sample(sided))
}

/// Dispatches to the bridge sampler for canonical shapes and to the Wiener
/// sampler (with [`default_y_max`]) otherwise.
pub fn sample_paths(shape: &BoundaryShape, grid_n: usize, n_paths: usize, seed: u64) -> Result<PathSups> {
    if shape.is_canonical() {
        let grid = PathGrid::standard(grid_n)?;
        sample_bridge_paths(shape.gamma1(), shape.gamma2(), &grid, n_paths, seed)
    } else {
        sample_wiener_paths(shape, default_y_max(shape), grid_n, n_paths, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path_is_deterministic() {
        let grid = PathGrid::standard(256).unwrap();
        for (g1, g2) in [(0.0, 0.0), (0.3, 0.1)] {
            let a = sample_bridge_sup(g1, g2, &grid, 1, 42, Sided::TwoSided).unwrap();
            let b = sample_bridge_sup(g1, g2, &grid, 1, 42, Sided::TwoSided).unwrap();
            assert_eq!(a.values()[0].to_bits(), b.values()[0].to_bits());
        }
    }

    #[test]
    fn samples_are_nonnegative_and_ordered() {
        let grid = PathGrid::standard(512).unwrap();
        let p = sample_bridge_paths(0.2, 0.2, &grid, 200, 1).unwrap();
        for i in 0..p.len() {
            assert!(p.upper[i] >= 0.0 && p.lower[i] >= 0.0);
            assert_eq!(p.two_sided[i], p.upper[i].max(p.lower[i]));
        }
        assert_eq!(p.sample(Sided::OneSided).len(), 400);
    }

    #[test]
    fn bad_exponents_rejected() {
        let grid = PathGrid::standard(16).unwrap();
        assert!(matches!(
            sample_bridge_sup(0.5, 0.0, &grid, 1, 0, Sided::TwoSided),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn wiener_rejects_nonpositive_horizon() {
        let shape = BoundaryShape::canonical(0.0, 0.0).unwrap();
        assert!(matches!(
            sample_wiener_sup(&shape, 0.0, 64, 1, 0, Sided::TwoSided),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            sample_wiener_sup(&shape, -1.0, 64, 1, 0, Sided::TwoSided),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn zero_paths_give_empty_sample() {
        let shape = BoundaryShape::canonical(0.0, 0.0).unwrap();
        let s = sample_wiener_sup(&shape, 10.0, 64, 0, 0, Sided::TwoSided).unwrap();
        assert!(s.is_empty());
        assert!(s.quantile(0.05).is_err());
    }

    #[test]
    fn vanishing_weight_beyond_endpoint() {
        let cut = BoundaryShape::truncated(0.1, 0.2, 1.0).unwrap();
        let a = sample_wiener_sup(&cut, 1.0, 512, 300, 9, Sided::TwoSided).unwrap();
        let b = sample_wiener_sup(&cut, 2.0, 512, 300, 9, Sided::TwoSided).unwrap();
        assert_eq!(a, b);
        let a = sample_wiener_sup(&cut, 1.0, 512, 300, 9, Sided::OneSided).unwrap();
        let b = sample_wiener_sup(&cut, 2.0, 512, 300, 9, Sided::OneSided).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn y_max_default_is_capped() {
        let shape = BoundaryShape::canonical(0.0, 0.0).unwrap();
        assert_eq!(default_y_max(&shape), Y_MAX_CAP);
        let tiny = BoundaryShape::custom("tiny", 0.0, 0.0, f64::INFINITY, |s| 1e-4 / (1.0 + s))
            .unwrap()
            .with_tail_bound(1e-4)
            .unwrap();
        // (3e3 * 1e-4)^2 = 0.09
        assert!((default_y_max(&tiny) - 0.09).abs() < 1e-12);
    }
}
