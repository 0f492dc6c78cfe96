//! Market-impact measurement pipeline.
//!
//! The same estimators run on simulator output and on recorded exchange
//! trades: resample into fixed windows, normalize by trailing volatility and
//! volume, fit the concave impact exponent, regress the impact decay kernel,
//! and measure order-sign autocorrelation.

pub mod acf;
pub mod buckets;
pub mod decay;
pub mod delta;
pub mod normalize;
pub mod power_law;
pub mod resample;
pub mod tune;

use thiserror::Error;

pub use acf::{order_sign_acf, signs_from_trades};
pub use buckets::{bucket_means, split_by_previous_sign, Bucket, BucketStats, SplitBuckets};
pub use decay::{cumulative_impact, decay_regression, DecayKernel};
pub use delta::{fit_delta, DeltaFit, DeltaSearch};
pub use normalize::{adjust, rolling_volatility, weighted_volume, AdjustedSample, Adjusted};
pub use power_law::{fit_power_law, PowerLawFit};
pub use resample::{resample, Window};
pub use tune::{darp_acf_fit, darp_sign_stream, tune_darp, TuneConfig, TuneResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("all samples have zero order imbalance")]
    DegenerateSamples,
    #[error("sign series has zero variance")]
    ZeroVariance,
    #[error("only {0} strictly positive values; a power law needs at least 5")]
    NotPowerLaw(usize),
    #[error("regression design is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("{0} group is empty")]
    EmptyGroup(&'static str),
    #[error("no tuning candidate produced a fittable autocorrelation")]
    NoFittableCandidate,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `sgn(x)|x|^delta`.
#[inline]
pub fn signed_power(x: f64, delta: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(delta)
    }
}
