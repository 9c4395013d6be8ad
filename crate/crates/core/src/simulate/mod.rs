//! Monte Carlo harness checking the guarantees of the confidence sequence:
//! uniform coverage, size and power of the sequential tests, family-wise
//! error of hierarchical batteries, convergence of the studentized supremum
//! statistic, equality of the two critical-value samplers, and the maximal
//! inequalities bounding early and late partial sums.
//!
//! Every replication draws from its own substream of the experiment seed,
//! so reports are bit-reproducible and independent of the worker count.
//! Paths are truncated at a finite horizon: reported non-coverage and
//! rejection rates are lower bounds on their infinite-horizon values.

mod dgp;
mod experiments;
mod report;

pub use dgp::{Dgp, DgpStream};
pub use experiments::{
    check_hajek_renyi, check_sampler_equality, check_sup_statistic, simulate_coverage, simulate_fwer,
    simulate_rejection, HajekRenyiConfig, HrSide, SimConfig, SupStatConfig,
};
pub use report::{HajekRenyiReport, HajekRenyiRow, SamplerEqualityReport, SimReport, SupStatReport, SupStatRow};

use rand_chacha::ChaCha8Rng;

use crate::rng::substream;

/// Runs `n` replications, replication `i` driven by substream `i` of `seed`.
/// Results come back in replication order whatever the worker count.
pub(crate) fn replicate<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, ChaCha8Rng) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64)
            .into_par_iter()
            .map(|i| f(i, substream(seed, i)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(|i| f(i, substream(seed, i))).collect()
    }
}
