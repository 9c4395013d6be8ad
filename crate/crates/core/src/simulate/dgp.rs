use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Data-generating processes for the simulation harness. Every variant has
/// mean `mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dgp {
    IidNormal {
        mu: f64,
        sigma: f64,
    },
    /// `mu + E - 1/rate` with `E ~ Exp(rate)`: skewed, variance `1/rate^2`.
    IidCenteredExponential {
        rate: f64,
        mu: f64,
    },
    /// Stationary `X_t = mu + e_t`, `e_t = phi e_{t-1} + sigma eps_t`.
    Ar1 {
        phi: f64,
        sigma: f64,
        mu: f64,
    },
}

impl Dgp {
    pub fn standard_normal() -> Self {
        Dgp::IidNormal { mu: 0.0, sigma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Dgp::IidNormal { mu, sigma } if finite(&[mu, sigma]) && sigma > 0.0 => Ok(()),
            Dgp::IidCenteredExponential { rate, mu } if finite(&[rate, mu]) && rate > 0.0 => Ok(()),
            Dgp::Ar1 { phi, sigma, mu } if finite(&[phi, sigma, mu]) && sigma > 0.0 && phi.abs() < 1.0 => Ok(()),
            _ => Err(Error::Invariant(format!("invalid data-generating process {self:?}"))),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Dgp::IidNormal { mu, .. } | Dgp::IidCenteredExponential { mu, .. } | Dgp::Ar1 { mu, .. } => mu,
        }
    }

    /// Marginal variance of one observation.
    pub fn variance(&self) -> f64 {
        match *self {
            Dgp::IidNormal { sigma, .. } => sigma * sigma,
            Dgp::IidCenteredExponential { rate, .. } => 1.0 / (rate * rate),
            Dgp::Ar1 { phi, sigma, .. } => sigma * sigma / (1.0 - phi * phi),
        }
    }

    /// Sum of all autocovariances; equals the variance for i.i.d. processes.
    pub fn long_run_variance(&self) -> f64 {
        match *self {
            Dgp::Ar1 { phi, sigma, .. } => sigma * sigma / ((1.0 - phi) * (1.0 - phi)),
            _ => self.variance(),
        }
    }

    /// Same process with its mean moved to `mu`.
    pub fn with_mean(self, mu: f64) -> Self {
        match self {
            Dgp::IidNormal { sigma, .. } => Dgp::IidNormal { mu, sigma },
            Dgp::IidCenteredExponential { rate, .. } => Dgp::IidCenteredExponential { rate, mu },
            Dgp::Ar1 { phi, sigma, .. } => Dgp::Ar1 { phi, sigma, mu },
        }
    }

    /// A sample path driven by `rng`. AR(1) paths start in the stationary law.
    pub fn stream(self, mut rng: ChaCha8Rng) -> DgpStream {
        let state = match self {
            Dgp::Ar1 { phi, sigma, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                z * sigma / (1.0 - phi * phi).sqrt()
            }
            _ => 0.0,
        };
        DgpStream { dgp: self, rng, state }
    }
}

pub struct DgpStream {
    dgp: Dgp,
    rng: ChaCha8Rng,
    state: f64,
}

impl DgpStream {
    #[inline]
    pub fn next_value(&mut self) -> f64 {
        match self.dgp {
            Dgp::IidNormal { mu, sigma } => {
                let z: f64 = self.rng.sample(StandardNormal);
                mu + sigma * z
            }
            Dgp::IidCenteredExponential { rate, mu } => {
                let e: f64 = self.rng.sample(Exp1);
                mu + (e - 1.0) / rate
            }
            Dgp::Ar1 { phi, sigma, mu } => {
                let z: f64 = self.rng.sample(StandardNormal);
                self.state = phi * self.state + sigma * z;
                mu + self.state
            }
        }
    }
}

impl Iterator for DgpStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_value())
    }
}
