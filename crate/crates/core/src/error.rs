//! Error type shared by every operation in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A conditional was requested given a prefix of mass zero.
    #[error("cannot condition on a prefix of mass zero")]
    ConditioningOnNull,

    /// An exact enumeration or program search would exceed its configured budget.
    #[error("budget exceeded: {task} needs {needed} units but the cap is {cap}")]
    BudgetExceeded {
        task: &'static str,
        needed: u64,
        cap: u64,
    },

    /// A sampling or normalization step found predictive mass summing to less
    /// than one beyond the measure tolerance.
    #[error("model is not a measure: predictive mass sums to {sum} after prefix of length {at}")]
    NotAMeasure { sum: f64, at: usize },

    /// A convergence report was requested for a sequence no class member
    /// reproduces with certainty.
    #[error("no class member generates the given sequence deterministically")]
    MissingTrueEnv,

    /// Sample size exceeds population size.
    #[error("invalid population: sample {sample} exceeds population {population}")]
    InvalidPopulation { sample: u64, population: u64 },

    /// The all-zero concentration limit has no predictive distribution before
    /// the first observation.
    #[error("predictive undefined under the all-zero concentration limit with no observations")]
    HaldaneUndefined,

    /// A parameter transport was requested along a non-monotone map.
    #[error("reparametrization map is not monotone on [0, 1]")]
    NonMonotone,

    /// A decision was requested with no actions available.
    #[error("action set is empty")]
    EmptyActionSet,

    /// An argument fell outside the domain of the requested quantity.
    #[error("domain error: {what}")]
    Domain { what: String },

    /// The on-disk program cache failed its integrity check.
    #[error("program cache corrupt: {reason}")]
    CacheCorrupt { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
