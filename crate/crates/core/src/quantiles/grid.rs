use crate::error::{Error, Result};

/// Geometric cluster parameters at each end of the unit interval.
pub const CLUSTER_RATIO: f64 = 0.8;
pub const CLUSTER_POINTS: usize = 64;
pub const CLUSTER_INNERMOST: f64 = 1e-10;

/// Default uniform resolution of the bridge grid.
pub const DEFAULT_GRID_N: usize = 8192;

/// Evaluation abscissae in `(0, 1)` for the Brownian bridge.
#[derive(Clone, Debug, PartialEq)]
pub struct PathGrid {
    points: Vec<f64>,
    resolution: usize,
}

impl PathGrid {
    /// The standard composition: the uniform grid `i / grid_n`, `0 < i < grid_n`,
    /// merged with geometric clusters `1e-10 * 0.8^-k` (k < 64) next to 0 and
    /// mirrored next to 1. The weight `x^-g1 (1-x)^-g2` puts the supremum
    /// near the endpoints once either exponent is positive, which a plain
    /// uniform grid would miss.
    pub fn standard(grid_n: usize) -> Result<Self> {
        if grid_n < 2 {
            return Err(Error::Input(format!("grid_n = {grid_n} must be >= 2")));
        }
        let mut points: Vec<f64> = (1..grid_n).map(|i| i as f64 / grid_n as f64).collect();
        let mut d = CLUSTER_INNERMOST;
        for _ in 0..CLUSTER_POINTS {
            points.push(d);
            points.push(1.0 - d);
            d /= CLUSTER_RATIO;
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self {
            points,
            resolution: grid_n,
        })
    }

    /// A grid from explicit points, which must be strictly increasing in `(0, 1)`.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invariant("empty path grid".into()));
        }
        if !(points[0] > 0.0) || !(points[points.len() - 1] < 1.0) {
            return Err(Error::Invariant("grid points must lie in (0, 1)".into()));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invariant("grid points must be strictly increasing".into()));
        }
        let resolution = points.len() + 1;
        Ok(Self { points, resolution })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// The uniform resolution the grid was built from (`grid_n`).
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Image of the grid under `x -> x / (1 - x)`, kept up to `y_top`, with
    /// `y_top` appended as the last abscissa.
    pub fn wiener_abscissae(&self, y_top: f64) -> Vec<f64> {
        let mut ys: Vec<f64> = self
            .points
            .iter()
            .map(|&x| x / (1.0 - x))
            .take_while(|&y| y < y_top)
            .collect();
        ys.push(y_top);
        ys
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grid_invariants() {
        let g = PathGrid::standard(DEFAULT_GRID_N).unwrap();
        let p = g.points();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p[0], CLUSTER_INNERMOST);
        assert!(p[p.len() - 1] < 1.0);
        assert!((1.0 - p[p.len() - 1] - CLUSTER_INNERMOST).abs() < 1e-15);
        // clusters reach roughly one uniform spacing into the interval
        let outer = CLUSTER_INNERMOST / CLUSTER_RATIO.powi(CLUSTER_POINTS as i32 - 1);
        assert!(outer > 1e-4 && outer < 2e-4);
        assert_eq!(g.n_points(), DEFAULT_GRID_N - 1 + 2 * CLUSTER_POINTS);
    }

    #[test]
    fn explicit_points_are_checked() {
        assert!(PathGrid::from_points(vec![0.1, 0.5, 0.9]).is_ok());
        assert!(PathGrid::from_points(vec![0.0, 0.5]).is_err());
        assert!(PathGrid::from_points(vec![0.5, 1.0]).is_err());
        assert!(PathGrid::from_points(vec![0.5, 0.5]).is_err());
        assert!(PathGrid::from_points(vec![]).is_err());
        assert!(PathGrid::standard(1).is_err());
    }

    #[test]
    fn wiener_abscissae_truncate() {
        let g = PathGrid::from_points(vec![0.25, 0.5, 0.75]).unwrap();
        assert_eq!(g.wiener_abscissae(2.0), vec![1.0 / 3.0, 1.0, 2.0]);
        assert_eq!(g.wiener_abscissae(1.0), vec![1.0 / 3.0, 1.0]);
        assert_eq!(g.wiener_abscissae(100.0), vec![1.0 / 3.0, 1.0, 3.0, 100.0]);
    }
}
