//! Empirical distribution functions over snapshot ensembles.

mod grid;
mod pair;
mod phase;

pub use grid::{GridSpec, DEFAULT_SPATIAL_BINS, DEFAULT_VELOCITY_BINS};
pub use pair::{
    estimate_pair_correlation, AfcMetric, PairCorrelation, PairHistogram, RadialSpec,
    VelocityPairSpec, AFC_FLOOR, MIN_BIN_COUNT,
};
pub use phase::{
    estimate_f1_masked, estimate_fhat, estimate_i2, masked_deposits, merge_estimates,
    neighbor_counts, DepositPolicy, MaskedDeposit, Normalization, PhaseHistogram,
    OVERFLOW_WARN_FRACTION,
};
