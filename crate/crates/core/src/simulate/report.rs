use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::experiments::HrSide;
use crate::stats::binomial_se;

fn kv_line(pairs: &[(&str, String)]) -> String {
    let mut line = String::new();
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        let _ = write!(line, "{k}={v}");
    }
    line
}

/// Aggregate of a rate-type experiment (coverage, rejection, FWER).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub experiment: String,
    pub n_reps: usize,
    pub horizon: u64,
    /// Coverage, rejection or FWER rate.
    pub estimate: f64,
    pub binomial_se: f64,
    /// `(level, first rejection time)`; `None` when fewer than that share of
    /// replications rejected before the horizon.
    pub stopping_time_quantiles: Option<Vec<(f64, Option<u64>)>>,
    pub metrics: BTreeMap<String, f64>,
    pub config: BTreeMap<String, String>,
}

impl SimReport {
    pub(crate) fn from_count(
        experiment: &str,
        hits: usize,
        n_reps: usize,
        horizon: u64,
        config: BTreeMap<String, String>,
    ) -> Self {
        let estimate = if n_reps == 0 { 0.0 } else { hits as f64 / n_reps as f64 };
        Self {
            experiment: experiment.to_string(),
            n_reps,
            horizon,
            estimate,
            binomial_se: binomial_se(estimate, n_reps),
            stopping_time_quantiles: None,
            metrics: BTreeMap::new(),
            config,
        }
    }

    pub fn render_kv(&self) -> String {
        let mut out = kv_line(&[
            ("experiment", self.experiment.clone()),
            ("n_reps", self.n_reps.to_string()),
            ("horizon", self.horizon.to_string()),
            ("estimate", self.estimate.to_string()),
            ("binomial_se", self.binomial_se.to_string()),
        ]);
        out.push('\n');
        if let Some(qs) = &self.stopping_time_quantiles {
            let pairs: Vec<(String, String)> = qs
                .iter()
                .map(|(q, t)| {
                    (
                        format!("stop_q{q}"),
                        t.map_or("censored".to_string(), |t| t.to_string()),
                    )
                })
                .collect();
            let refs: Vec<(&str, String)> = pairs.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            out.push_str(&kv_line(&refs));
            out.push('\n');
        }
        for (k, v) in &self.metrics {
            out.push_str(&kv_line(&[(k.as_str(), v.to_string())]));
            out.push('\n');
        }
        for (k, v) in &self.config {
            out.push_str(&kv_line(&[(&format!("config.{k}"), v.clone())]));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupStatRow {
    pub m: u64,
    pub horizon: u64,
    pub ks_distance: f64,
    /// Two-sample KS critical value at the 1% level.
    pub threshold: f64,
}

/// Distance between the finite-`m` supremum statistic and the limit law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupStatReport {
    pub n_reps: usize,
    pub n_reference: usize,
    pub rows: Vec<SupStatRow>,
    pub config: BTreeMap<String, String>,
}

impl SupStatReport {
    /// KS distance strictly decreasing along the listed `m` values.
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ks_distance < w[0].ks_distance)
    }

    pub fn render_kv(&self) -> String {
        let mut out = kv_line(&[
            ("experiment", "supstat".into()),
            ("n_reps", self.n_reps.to_string()),
            ("n_reference", self.n_reference.to_string()),
            ("decreasing", self.decreasing().to_string()),
        ]);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&kv_line(&[
                ("m", r.m.to_string()),
                ("horizon", r.horizon.to_string()),
                ("ks_distance", r.ks_distance.to_string()),
                ("threshold", r.threshold.to_string()),
            ]));
            out.push('\n');
        }
        for (k, v) in &self.config {
            out.push_str(&kv_line(&[(&format!("config.{k}"), v.clone())]));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HajekRenyiRow {
    pub side: HrSide,
    pub gamma: f64,
    pub m: u64,
    pub c: f64,
    pub exceedance: f64,
    pub binomial_se: f64,
    pub bound: f64,
}

impl HajekRenyiRow {
    /// Empirical exceedance within three binomial standard errors of the bound.
    pub fn within_bound(&self) -> bool {
        self.exceedance <= self.bound + 3.0 * self.binomial_se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HajekRenyiReport {
    pub n_reps: usize,
    pub rows: Vec<HajekRenyiRow>,
}

impl HajekRenyiReport {
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(HajekRenyiRow::within_bound)
    }

    pub fn render_kv(&self) -> String {
        let mut out = kv_line(&[
            ("experiment", "hajekrenyi".into()),
            ("n_reps", self.n_reps.to_string()),
            ("all_within_bound", self.all_within_bound().to_string()),
        ]);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&kv_line(&[
                ("side", r.side.to_string()),
                ("gamma", r.gamma.to_string()),
                ("m", r.m.to_string()),
                ("c", r.c.to_string()),
                ("exceedance", r.exceedance.to_string()),
                ("binomial_se", r.binomial_se.to_string()),
                ("bound", r.bound.to_string()),
                ("within_bound", r.within_bound().to_string()),
            ]));
            out.push('\n');
        }
        out
    }
}

/// Two-sample comparison of the bridge and Wiener samplers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerEqualityReport {
    pub gamma1: f64,
    pub gamma2: f64,
    pub n_paths: usize,
    pub grid_n: usize,
    pub y_max: f64,
    pub ks_distance: f64,
    /// Two-sample KS critical value at the 1% level.
    pub threshold: f64,
    pub bridge_q95: f64,
    pub wiener_q95: f64,
}

impl SamplerEqualityReport {
    pub fn passed(&self) -> bool {
        self.ks_distance < self.threshold
    }

    pub fn render_kv(&self) -> String {
        let mut out = kv_line(&[
            ("experiment", "sampler-equality".into()),
            ("g1", self.gamma1.to_string()),
            ("g2", self.gamma2.to_string()),
            ("n_paths", self.n_paths.to_string()),
            ("grid_n", self.grid_n.to_string()),
            ("y_max", self.y_max.to_string()),
        ]);
        out.push('\n');
        out.push_str(&kv_line(&[
            ("ks_distance", self.ks_distance.to_string()),
            ("threshold", self.threshold.to_string()),
            ("bridge_q95", self.bridge_q95.to_string()),
            ("wiener_q95", self.wiener_q95.to_string()),
            ("result", if self.passed() { "pass" } else { "fail" }.into()),
        ]));
        out.push('\n');
        out
    }
}
