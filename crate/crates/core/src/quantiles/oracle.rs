//! Closed-form distribution of the unweighted bridge supremum, used as an
//! independent check of the Monte Carlo samplers at `g1 = g2 = 0`.

use std::f64::consts::PI;

use super::Sided;

/// `P(sup |B| <= x)` (two-sided, the Kolmogorov distribution) or
/// `P(sup B <= x) = 1 - exp(-2 x^2)` (one-sided) for a standard Brownian bridge.
pub fn kolmogorov_cdf(x: f64, sided: Sided) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    match sided {
        Sided::OneSided => 1.0 - (-2.0 * x * x).exp(),
        Sided::TwoSided if x < 1.0 => {
            // theta-function form, converges fast for small x
            let s: f64 = (1..=20)
                .map(|k| {
                    let j = (2 * k - 1) as f64;
                    (-j * j * PI * PI / (8.0 * x * x)).exp()
                })
                .sum();
            (2.0 * PI).sqrt() / x * s
        }
        Sided::TwoSided => {
            let s: f64 = (1..=40)
                .map(|k| {
                    let k = k as f64;
                    let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                    sign * (-2.0 * k * k * x * x).exp()
                })
                .sum();
            1.0 - 2.0 * s
        }
    }
}

/// The `(1 - alpha)`-point of [`kolmogorov_cdf`], by bisection to an absolute
/// tolerance of `1e-8`. Returns NaN for `alpha` outside `(0, 1)`.
pub fn kolmogorov_series_quantile(alpha: f64, sided: Sided) -> f64 {
    if !(alpha > 0.0 && alpha < 1.0) {
        return f64::NAN;
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid, sided) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sided_points() {
        // reference values of the inverse Kolmogorov survival function
        for (alpha, x) in [
            (0.01, 1.627_623_611_5),
            (0.05, 1.358_098_639_3),
            (0.10, 1.223_847_870_2),
            (0.50, 0.827_573_555_2),
        ] {
            let q = kolmogorov_series_quantile(alpha, Sided::TwoSided);
            assert!((q - x).abs() < 1e-8, "alpha {alpha}: {q} vs {x}");
        }
    }

    #[test]
    fn one_sided_matches_closed_form() {
        for alpha in [0.01, 0.05, 0.1, 0.5] {
            let q = kolmogorov_series_quantile(alpha, Sided::OneSided);
            assert!((q - (-alpha.ln() / 2.0).sqrt()).abs() < 1e-8);
        }
        assert!((kolmogorov_series_quantile(0.05, Sided::OneSided) - 1.22387).abs() < 1e-5);
        assert!((kolmogorov_series_quantile(0.5, Sided::OneSided) - 0.58871).abs() < 1e-5);
    }

    #[test]
    fn series_forms_agree_at_switch_point() {
        let x = 1.0;
        let theta: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * PI * PI / (8.0 * x * x)).exp()
            })
            .sum::<f64>()
            * (2.0 * PI).sqrt()
            / x;
        assert!((theta - kolmogorov_cdf(x, Sided::TwoSided)).abs() < 1e-12);
    }

    #[test]
    fn invalid_alpha_is_nan() {
        assert!(kolmogorov_series_quantile(0.0, Sided::TwoSided).is_nan());
        assert!(kolmogorov_series_quantile(1.0, Sided::OneSided).is_nan());
    }
}
