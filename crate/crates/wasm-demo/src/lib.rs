//! wasm-bindgen bindings behind `www/index.html`. Every export returns a
//! flat `Float64Array`; the page slices it into points.

use confseq::quantiles::{critical_values, Sided};
use confseq::rng::substream;
use confseq::sequence::{interval, Monitor};
use confseq::simulate::Dgp;
use confseq::{BoundaryShape, BurnIn, CriticalValue, StreamState};
use wasm_bindgen::prelude::*;

/// Path grid used in the browser; coarser than the library default to keep
/// the page responsive.
const DEMO_GRID_N: usize = 1024;
const MAX_PATHS: usize = 50_000;
const MAX_STEPS: u64 = 200_000;

fn js(e: confseq::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `[t_0, b_0, t_1, b_1, ...]` at `points` log-spaced times in `[1, t_max]`.
pub fn width_curve_points(g1: f64, g2: f64, m: u64, t_max: u64, points: usize) -> confseq::Result<Vec<f64>> {
    let shape = BoundaryShape::canonical(g1, g2)?;
    if m == 0 || t_max == 0 || points < 2 {
        return Err(confseq::Error::Input("m, t_max >= 1 and points >= 2 required".into()));
    }
    let top = (t_max as f64).ln();
    let mut out = Vec::with_capacity(2 * points);
    let mut last = 0;
    for i in 0..points {
        let t = (top * i as f64 / (points - 1) as f64).exp().round() as u64;
        if t == last {
            continue;
        }
        last = t;
        out.push(t as f64);
        out.push(confseq::boundary_width(&shape, m, t)?);
    }
    Ok(out)
}

/// `[c_two_sided, c_one_sided, se_two_sided, se_one_sided]`.
pub fn critical_pair(g1: f64, g2: f64, alpha: f64, paths: usize, seed: u64) -> confseq::Result<Vec<f64>> {
    let shape = BoundaryShape::canonical(g1, g2)?;
    let (two, one) = critical_values(&shape, &[alpha], paths.clamp(100, MAX_PATHS), DEMO_GRID_N, seed)?;
    Ok(vec![two[0].value, one[0].value, two[0].std_error, one[0].std_error])
}

/// Simulated normal stream with mean `mu` and unit variance, monitored with
/// critical value `c`. Returns `[x_t, mean_t, lower_t, upper_t]` per step;
/// suppressed steps carry infinite bounds.
pub fn band_points(g1: f64, g2: f64, m: u64, c: f64, mu: f64, steps: u64, seed: u64) -> confseq::Result<Vec<f64>> {
    let shape = BoundaryShape::canonical(g1, g2)?;
    let cv = CriticalValue::fixed(&shape, 0.05, Sided::TwoSided, c)?;
    let state = StreamState::new(m)?.with_burn_in(BurnIn::Log);
    let mut monitor = Monitor::new(state, shape, cv)?;
    let mut data = Dgp::IidNormal { mu, sigma: 1.0 }.stream(substream(seed, 0));
    let steps = steps.min(MAX_STEPS);
    let mut out = Vec::with_capacity(4 * steps as usize);
    for _ in 0..steps {
        let x = data.next_value();
        let r = monitor.push(x)?.record;
        out.extend([x, r.mean, r.lower, r.upper]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn width_curve(g1: f64, g2: f64, m: u32, t_max: u32, points: u32) -> Result<Vec<f64>, JsError> {
    width_curve_points(g1, g2, m.into(), t_max.into(), points as usize).map_err(js)
}

#[wasm_bindgen]
pub fn critical(g1: f64, g2: f64, alpha: f64, paths: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    critical_pair(g1, g2, alpha, paths as usize, seed.into()).map_err(js)
}

#[wasm_bindgen]
pub fn band(g1: f64, g2: f64, m: u32, c: f64, mu: f64, steps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    band_points(g1, g2, m.into(), c, mu, steps.into(), seed.into()).map_err(js)
}

/// Latest interval for a hand-typed series, used by the page's text box.
#[wasm_bindgen]
pub fn interval_for(values: &[f64], g1: f64, g2: f64, m: u32, c: f64) -> Result<Vec<f64>, JsError> {
    let shape = BoundaryShape::canonical(g1, g2).map_err(js)?;
    let cv = CriticalValue::fixed(&shape, 0.05, Sided::TwoSided, c).map_err(js)?;
    let mut state = StreamState::new(m.into()).map_err(js)?;
    for &x in values {
        state.update(x).map_err(js)?;
    }
    let r = interval(&state, &shape, &cv).map_err(js)?;
    Ok(vec![r.t as f64, r.mean, r.lower, r.upper])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_curve_is_decreasing_for_flat_shape() {
        let pts = width_curve_points(0.0, 0.0, 100, 10_000, 50).unwrap();
        assert_eq!(pts[0], 1.0);
        let widths: Vec<f64> = pts.chunks(2).map(|p| p[1]).collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]));
        assert!(width_curve_points(0.6, 0.0, 100, 10, 5).is_err());
    }

    #[test]
    fn critical_pair_is_ordered() {
        let v = critical_pair(0.0, 0.0, 0.05, 2000, 1).unwrap();
        assert!(v[1] < v[0]);
        assert!((v[0] - 1.358).abs() < 0.1);
    }

    #[test]
    fn band_starts_suppressed_and_narrows() {
        let pts = band_points(0.0, 0.25, 100, 1.7, 0.0, 2000, 3).unwrap();
        assert_eq!(pts.len(), 4 * 2000);
        assert_eq!(pts[2], f64::NEG_INFINITY);
        let width = |i: usize| pts[4 * i + 3] - pts[4 * i + 2];
        assert!(width(1999) < width(100));
    }
}
