//! Identification analyses: frequency-response extraction, dead-time
//! transfer-function fitting, latency regression and inertia estimation.

mod bode;
mod fit;
mod regression;
mod simplex;

pub use bode::{extract_response, unwrap_near, unwrap_phases, wrap_deg, BodePoint, TransferFit};
pub use fit::{bode_residual, fit_transfer, initial_guess, FitOptions, FitReport};
pub use regression::{delay_from_rmse, inertia_from_bode, DelayEstimate, NaturalFrequency};
pub use simplex::{nelder_mead, nelder_mead_from_simplex, SimplexConfig, SimplexResult};

/// `count` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
            .collect(),
    }
}
