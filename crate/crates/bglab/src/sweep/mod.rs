//! Boltzmann-Grad sweep orchestration and convergence diagnostics.

mod fit;
mod norms;
mod run;

pub use fit::{fit_decay_exponent, ExponentFit};
pub use norms::{convergence_norms, NormPair};
pub use run::{
    measure_ensemble, run_bg_sweep, BalanceSummary, EnsembleMeasurement, ExponentFits,
    InternalScaling, MeasureSpec, PointRecord, PointStatus, SuccessiveDiff, SweepReport, SweepSpec,
};
