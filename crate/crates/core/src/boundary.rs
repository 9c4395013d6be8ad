//! Boundary weight functions and the boundary widths they induce.
//!
//! A boundary shape is a nonnegative weight `rho` on `(0, inf)` that decides
//! how the error budget is spent over monitoring time. The width multiplying
//! `sigma_hat * c` at time `t` with burn-in scale `m` is
//! `b_t(m) = sqrt(m) / (t * rho(t / m))`.
//!
//! The canonical family is `rho(s) = (1 + s)^(g1 + g2 - 1) / s^g1` with
//! `0 <= g1, g2 < 1/2`. Custom shapes carry an evaluator together with their
//! declared exponents; the exponents are never inferred, only probed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default cap for the probe-grid suprema in [`validate_shape`].
pub const DEFAULT_VALIDATION_CAP: f64 = 1e6;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ShapeKind {
    Canonical,
    /// Canonical weight on `(0, e_rho]`, zero beyond.
    Truncated,
    Custom {
        name: String,
        evaluator: Evaluator,
        /// Declared bound on `s^(1 - g2) * rho(s)` for large `s`.
        tail_bound: f64,
    },
}

impl fmt::Debug for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeKind::Canonical => f.write_str("Canonical"),
            ShapeKind::Truncated => f.write_str("Truncated"),
            ShapeKind::Custom { name, tail_bound, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("tail_bound", tail_bound)
                .finish_non_exhaustive(),
        }
    }
}

/// A boundary weight function together with its tail exponents and endpoint.
#[derive(Clone, Debug)]
pub struct BoundaryShape {
    kind: ShapeKind,
    gamma1: f64,
    gamma2: f64,
    e_rho: f64,
}

fn check_exponent(name: &str, g: f64) -> Result<()> {
    if !(0.0..0.5).contains(&g) {
        return Err(Error::Invariant(format!("{name} = {g} outside [0, 1/2)")));
    }
    Ok(())
}

impl BoundaryShape {
    pub fn canonical(gamma1: f64, gamma2: f64) -> Result<Self> {
        check_exponent("gamma1", gamma1)?;
        check_exponent("gamma2", gamma2)?;
        Ok(Self {
            kind: ShapeKind::Canonical,
            gamma1,
            gamma2,
            e_rho: f64::INFINITY,
        })
    }

    /// The canonical weight cut off after `e_rho`: at most `floor(m * e_rho)`
    /// observations are monitored.
    pub fn truncated(gamma1: f64, gamma2: f64, e_rho: f64) -> Result<Self> {
        check_exponent("gamma1", gamma1)?;
        check_exponent("gamma2", gamma2)?;
        if !(e_rho > 0.0) || e_rho.is_nan() {
            return Err(Error::Invariant(format!("e_rho = {e_rho} must be positive")));
        }
        Ok(Self {
            kind: ShapeKind::Truncated,
            gamma1,
            gamma2,
            e_rho,
        })
    }

    /// A user-supplied weight. `rho` is only evaluated on `(0, e_rho]`; the
    /// shape is zero beyond `e_rho`. The exponents are declarations that
    /// [`validate_shape`] probes for consistency.
    pub fn custom<F>(name: impl Into<String>, gamma1: f64, gamma2: f64, e_rho: f64, rho: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_exponent("gamma1", gamma1)?;
        check_exponent("gamma2", gamma2)?;
        if !(e_rho > 0.0) || e_rho.is_nan() {
            return Err(Error::Invariant(format!("e_rho = {e_rho} must be positive")));
        }
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Input("custom shape name must be a non-empty token".into()));
        }
        Ok(Self {
            kind: ShapeKind::Custom {
                name,
                evaluator: Arc::new(rho),
                tail_bound: 1.0,
            },
            gamma1,
            gamma2,
            e_rho,
        })
    }

    /// Sets the declared tail constant of a custom shape (`limsup s^(1-g2) rho(s)`),
    /// used to pick the truncation point of the Wiener sampler.
    pub fn with_tail_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::Input(format!("tail bound {bound} must be positive and finite")));
        }
        if let ShapeKind::Custom { tail_bound, .. } = &mut self.kind {
            *tail_bound = bound;
        }
        Ok(self)
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn e_rho(&self) -> f64 {
        self.e_rho
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.kind, ShapeKind::Canonical)
    }

    /// Bound on `s^(1 - g2) * rho(s)` over large `s`. The canonical family
    /// satisfies `s^(1-g2) rho(s) = (s/(1+s))^(1-g1-g2) <= 1`.
    pub fn tail_bound(&self) -> f64 {
        match &self.kind {
            ShapeKind::Canonical | ShapeKind::Truncated => 1.0,
            ShapeKind::Custom { tail_bound, .. } => *tail_bound,
        }
    }

    /// Textual key used for cache records and CLI flags.
    pub fn key(&self) -> String {
        self.to_string()
    }

    /// Evaluates `rho(s)` without input checks. Returns 0 beyond `e_rho`.
    #[inline]
    pub fn rho(&self, s: f64) -> f64 {
        if s > self.e_rho {
            return 0.0;
        }
        match &self.kind {
            ShapeKind::Canonical | ShapeKind::Truncated => canonical_rho(self.gamma1, self.gamma2, s),
            ShapeKind::Custom { evaluator, .. } => evaluator(s),
        }
    }

    /// Boundary width without input checks; `+inf` where `rho(t/m) = 0`.
    #[inline]
    pub fn width(&self, m: u64, t: u64) -> f64 {
        let rho = self.rho(t as f64 / m as f64);
        if rho > 0.0 {
            (m as f64).sqrt() / (t as f64 * rho)
        } else {
            f64::INFINITY
        }
    }
}

#[inline]
fn canonical_rho(g1: f64, g2: f64, s: f64) -> f64 {
    let num = (1.0 + s).powf(g1 + g2 - 1.0);
    if g1 == 0.0 {
        num
    } else {
        num / s.powf(g1)
    }
}

impl fmt::Display for BoundaryShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ShapeKind::Canonical => write!(f, "canonical:g1={},g2={}", self.gamma1, self.gamma2),
            ShapeKind::Truncated => write!(f, "truncated:g1={},g2={},e={}", self.gamma1, self.gamma2, self.e_rho),
            ShapeKind::Custom { name, .. } => write!(
                f,
                "custom:{name}:g1={},g2={},e={}",
                self.gamma1, self.gamma2, self.e_rho
            ),
        }
    }
}

fn parse_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        field: field.to_string(),
        message: message.into(),
    }
}

impl FromStr for BoundaryShape {
    type Err = Error;

    /// Parses `canonical:g1=<f>,g2=<f>` or `truncated:g1=<f>,g2=<f>,e=<f>`.
    /// Custom shapes carry code and cannot be parsed.
    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s
            .split_once(':')
            .ok_or_else(|| parse_err("family", format!("expected `<family>:<params>`, got `{s}`")))?;
        let wanted: &[&str] = match family {
            "canonical" => &["g1", "g2"],
            "truncated" => &["g1", "g2", "e"],
            other => return Err(parse_err("family", format!("unknown shape family `{other}`"))),
        };
        let mut values = vec![None; wanted.len()];
        for part in params.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| parse_err(part, "expected `<name>=<value>`"))?;
            let slot = wanted
                .iter()
                .position(|w| *w == k.trim())
                .ok_or_else(|| parse_err(k, format!("unexpected parameter for `{family}`")))?;
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| parse_err(k, format!("`{v}` is not a number")))?;
            if values[slot].replace(x).is_some() {
                return Err(parse_err(k, "given twice"));
            }
        }
        let get = |i: usize| values[i].ok_or_else(|| parse_err(wanted[i], "missing"));
        let shape = match family {
            "canonical" => BoundaryShape::canonical(get(0)?, get(1)?),
            _ => BoundaryShape::truncated(get(0)?, get(1)?, get(2)?),
        };
        shape.map_err(|e| match e {
            Error::Invariant(msg) => {
                let field = if msg.starts_with("gamma1") {
                    "g1"
                } else if msg.starts_with("gamma2") {
                    "g2"
                } else {
                    "e"
                };
                parse_err(field, msg)
            }
            other => other,
        })
    }
}

/// Checked evaluation of `rho(s)`.
pub fn rho_eval(shape: &BoundaryShape, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::Input(format!("rho argument {s} is not finite")));
    }
    if s <= 0.0 {
        return Err(Error::Input(format!("rho argument {s} must be positive")));
    }
    let v = shape.rho(s);
    if v.is_nan() || v < 0.0 {
        return Err(Error::Invariant(format!("rho({s}) = {v} is not a nonnegative number")));
    }
    Ok(v)
}

/// Boundary width `b_t(m) = sqrt(m) / (t rho(t/m))`; `+inf` when the weight
/// vanishes at `t/m`, meaning the interval is the whole line.
pub fn boundary_width(shape: &BoundaryShape, m: u64, t: u64) -> Result<f64> {
    if m == 0 || t == 0 {
        return Err(Error::Input(format!("m = {m} and t = {t} must both be >= 1")));
    }
    let rho = rho_eval(shape, t as f64 / m as f64)?;
    Ok(if rho > 0.0 {
        (m as f64).sqrt() / (t as f64 * rho)
    } else {
        f64::INFINITY
    })
}

/// Outcome of probing a shape against its declared exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// `max s^g1 rho(s)` over the probes with `s <= 1`.
    pub sup_small: f64,
    /// `max s^(1-g2) rho(s)` over the probes with `s >= 1`.
    pub sup_large: f64,
    /// Log-log slope of `s^g1 rho(s)` over the smallest decade probed; a
    /// clearly negative slope means the product still grows toward 0.
    pub slope_small: f64,
    /// Log-log slope of `s^(1-g2) rho(s)` over the largest decade probed.
    pub slope_large: f64,
    pub min_rho: f64,
    pub n_probes: usize,
}

/// Geometric probe grid over `[1e-9, 1e9]`, 20 points per decade.
pub fn default_probe_grid() -> Vec<f64> {
    (-180..=180).map(|k| 10f64.powf(k as f64 / 20.0)).collect()
}

/// Growth rate above which a probed product is treated as diverging.
const DIVERGENCE_SLOPE: f64 = 0.05;

/// Probes the (A1)/(A2)-type conditions `limsup_{s->0} s^g1 rho(s) < inf`
/// and `limsup_{s->inf} s^(1-g2) rho(s) < inf` on a grid.
///
/// A product fails if it exceeds `cap` anywhere or if it is still growing
/// like a power (`|slope| > 0.05` in log-log coordinates, toward the
/// boundary) over the outermost decade of probes.
pub fn validate_shape(shape: &BoundaryShape, probe_grid: &[f64], cap: f64) -> Result<ValidationReport> {
    check_exponent("gamma1", shape.gamma1)?;
    check_exponent("gamma2", shape.gamma2)?;
    if probe_grid.is_empty() {
        return Err(Error::Input("empty probe grid".into()));
    }
    let lo = probe_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = probe_grid.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || lo > 1e-6 || hi < 1e6f64.min(shape.e_rho) {
        return Err(Error::Input(format!(
            "probe grid [{lo}, {hi}] must cover [1e-6, 1e6] within (0, e_rho)"
        )));
    }

    let mut probes: Vec<f64> = probe_grid
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s < shape.e_rho)
        .collect();
    probes.sort_by(f64::total_cmp);
    probes.dedup();

    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut min_rho = f64::INFINITY;
    for &s in &probes {
        let r = rho_eval(shape, s)?;
        if !r.is_finite() {
            return Err(Error::Validation(format!("rho({s}) is not finite")));
        }
        min_rho = min_rho.min(r);
        if s <= 1.0 {
            small.push((s, s.powf(shape.gamma1) * r));
        }
        if s >= 1.0 {
            large.push((s, s.powf(1.0 - shape.gamma2) * r));
        }
    }
    let sup = |v: &[(f64, f64)]| v.iter().map(|p| p.1).fold(0.0, f64::max);
    let sup_small = sup(&small);
    let sup_large = sup(&large);

    // slope of log(product) against log(s) across the outermost decade
    let slope = |v: &[(f64, f64)], from_left: bool| -> f64 {
        if v.len() < 2 {
            return 0.0;
        }
        let (edge, inner_limit) = if from_left {
            (v[0], v[0].0 * 10.0)
        } else {
            (v[v.len() - 1], v[v.len() - 1].0 / 10.0)
        };
        let inner = if from_left {
            v.iter().rev().find(|p| p.0 <= inner_limit).copied()
        } else {
            v.iter().find(|p| p.0 >= inner_limit).copied()
        };
        match inner {
            Some(inner) if inner.0 != edge.0 && edge.1 > 0.0 && inner.1 > 0.0 => {
                (edge.1.ln() - inner.1.ln()) / (edge.0.ln() - inner.0.ln())
            }
            _ => 0.0,
        }
    };
    let slope_small = slope(&small, true);
    // only meaningful for an open-ended shape
    let slope_large = if shape.e_rho.is_infinite() {
        slope(&large, false)
    } else {
        0.0
    };

    if sup_small > cap || slope_small < -DIVERGENCE_SLOPE {
        return Err(Error::Validation(format!(
            "s^{g1} rho(s) unbounded as s -> 0 (sup {sup_small:.4e}, slope {slope_small:.3})",
            g1 = shape.gamma1
        )));
    }
    if sup_large > cap || slope_large > DIVERGENCE_SLOPE {
        return Err(Error::Validation(format!(
            "s^(1-{g2}) rho(s) unbounded as s -> inf (sup {sup_large:.4e}, slope {slope_large:.3})",
            g2 = shape.gamma2
        )));
    }
    Ok(ValidationReport {
        sup_small,
        sup_large,
        slope_small,
        slope_large,
        min_rho,
        n_probes: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rho_examples() {
        let flat = BoundaryShape::canonical(0.0, 0.0).unwrap();
        assert_eq!(rho_eval(&flat, 1.0).unwrap(), 0.5);
        let sym = BoundaryShape::canonical(0.25, 0.25).unwrap();
        assert!(close(rho_eval(&sym, 1.0).unwrap(), 0.5f64.sqrt(), 1e-15));
        let open = BoundaryShape::canonical(0.0, 0.4).unwrap();
        for (s, tol) in [(1e2, 1e-2), (1e4, 1e-4), (1e6, 1e-6)] {
            let v = rho_eval(&open, s).unwrap() * s.powf(0.6);
            assert!(close(v, 1.0, tol), "s = {s}: {v}");
        }
    }

    #[test]
    fn rho_rejects_bad_arguments() {
        let shape = BoundaryShape::canonical(0.1, 0.1).unwrap();
        assert!(matches!(rho_eval(&shape, f64::NAN), Err(Error::Input(_))));
        assert!(matches!(rho_eval(&shape, f64::INFINITY), Err(Error::Input(_))));
        assert!(matches!(rho_eval(&shape, 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn exponents_out_of_range() {
        assert!(matches!(BoundaryShape::canonical(0.5, 0.0), Err(Error::Invariant(_))));
        assert!(matches!(BoundaryShape::canonical(0.0, -0.1), Err(Error::Invariant(_))));
        assert!(BoundaryShape::canonical(0.0, 0.4999).is_ok());
    }

    #[test]
    fn width_examples() {
        let flat = BoundaryShape::canonical(0.0, 0.0).unwrap();
        assert!(close(boundary_width(&flat, 100, 100).unwrap(), 0.2, 1e-15));
        assert!(close(boundary_width(&flat, 100, 1).unwrap(), 10.1, 1e-13));
        let open = BoundaryShape::canonical(0.0, 0.4).unwrap();
        let b2 = boundary_width(&open, 100, 100).unwrap();
        let b4 = boundary_width(&open, 100, 10_000).unwrap();
        let b6 = boundary_width(&open, 100, 1_000_000).unwrap();
        assert!(b6 < b4 && b4 < b2);
        assert!(boundary_width(&open, 0, 1).is_err());
        assert!(boundary_width(&open, 1, 0).is_err());
    }

    #[test]
    fn width_infinite_beyond_endpoint() {
        let cut = BoundaryShape::truncated(0.0, 0.0, 2.0).unwrap();
        assert!(boundary_width(&cut, 10, 20).unwrap().is_finite());
        assert_eq!(boundary_width(&cut, 10, 21).unwrap(), f64::INFINITY);
    }

    #[test]
    fn width_decreases_for_positive_gamma2() {
        let shape = BoundaryShape::canonical(0.2, 0.3).unwrap();
        let m = 50;
        let mut prev = f64::INFINITY;
        for t in 10 * m..=1000 * m {
            let b = boundary_width(&shape, m, t).unwrap();
            assert!(b < prev, "t = {t}");
            prev = b;
        }
    }

    #[test]
    fn validation_examples() {
        let grid = default_probe_grid();
        let sym = BoundaryShape::canonical(0.25, 0.25).unwrap();
        let rep = validate_shape(&sym, &grid, DEFAULT_VALIDATION_CAP).unwrap();
        assert!(close(rep.sup_small, 1.0, 1e-6));
        assert!(validate_shape(
            &BoundaryShape::canonical(0.0, 0.0).unwrap(),
            &grid,
            DEFAULT_VALIDATION_CAP
        )
        .is_ok());

        let inv = BoundaryShape::custom("inv", 0.4, 0.0, f64::INFINITY, |s| 1.0 / s).unwrap();
        let err = validate_shape(&inv, &grid, DEFAULT_VALIDATION_CAP).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("s -> 0")), "{err}");

        // the narrow [1e-6, 1e6] grid still catches the divergence via its slope
        let narrow: Vec<f64> = (-60..=60).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
        assert!(validate_shape(&inv, &narrow, DEFAULT_VALIDATION_CAP).is_err());
    }

    #[test]
    fn validation_rejects_negative_weight_and_large_tail() {
        let grid = default_probe_grid();
        let neg = BoundaryShape::custom("neg", 0.0, 0.0, f64::INFINITY, |s| if s > 3.0 { -1.0 } else { 1.0 }).unwrap();
        assert!(matches!(validate_shape(&neg, &grid, 1e6), Err(Error::Invariant(_))));
        // rho = 1 / sqrt(s) for large s violates the tail condition for any g2 < 1/2
        let slow = BoundaryShape::custom("slow", 0.0, 0.2, f64::INFINITY, |s| (1.0 + s).powf(-0.5)).unwrap();
        assert!(matches!(validate_shape(&slow, &grid, 1e6), Err(Error::Validation(_))));
        assert!(validate_shape(&slow, &[1e-3, 1.0, 1e3], 1e6).is_err());
    }

    #[test]
    fn truncated_shape_validates_on_its_support() {
        let cut = BoundaryShape::truncated(0.1, 0.1, 5.0).unwrap();
        let rep = validate_shape(&cut, &default_probe_grid(), DEFAULT_VALIDATION_CAP).unwrap();
        assert!(rep.min_rho > 0.0);
    }

    #[test]
    fn textual_form_round_trips() {
        for text in [
            "canonical:g1=0,g2=0",
            "canonical:g1=0.25,g2=0.4",
            "truncated:g1=0.1,g2=0,e=3.5",
        ] {
            let shape: BoundaryShape = text.parse().unwrap();
            assert_eq!(shape.key(), text);
        }
        let err = "canonical:g1=0.7,g2=0".parse::<BoundaryShape>().unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "g1"));
        let err = "canonical:g1=0,g3=0".parse::<BoundaryShape>().unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "g3"));
        let err = "canonical:g1=x,g2=0".parse::<BoundaryShape>().unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "g1"));
        assert!("weird:g1=0".parse::<BoundaryShape>().is_err());
        assert!("canonical:g1=0".parse::<BoundaryShape>().is_err());
    }
}
