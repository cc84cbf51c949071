use serde::{Deserialize, Serialize};

use super::bode::{BodePoint, TransferFit};
use super::simplex::{nelder_mead, SimplexConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Weight of phase residuals (per degree) against gain residuals (per dB).
    pub phase_weight: f64,
    pub simplex: SimplexConfig,
    /// Maximum simplex restarts from the incumbent per start.
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            phase_weight: 1.0,
            simplex: SimplexConfig {
                tol_x: 1e-9,
                tol_f: 1e-12,
                max_iter: 20_000,
                ..SimplexConfig::default()
            },
            restarts: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fit: TransferFit,
    /// Sum of absolute gain and weighted phase differences.
    pub residual: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Sum of absolute differences between the model and the measured Bode points.
pub fn bode_residual(fit: &TransferFit, points: &[BodePoint], phase_weight: f64) -> f64 {
    points
        .iter()
        .map(|p| (fit.gain_db(p.omega) - p.gain_db).abs() + phase_weight * (fit.phase_deg(p.omega) - p.phase_deg).abs())
        .sum()
}

/// Starting point read off the data: DC gain from the lowest frequency, dead
/// time from the phase slope at the top of the band, and a damped second-order
/// pair placed where the delay-corrected phase crosses -90 deg.
pub fn initial_guess(points: &[BodePoint]) -> TransferFit {
    let n = points.len();
    let k = 10f64.powf(points[0].gain_db / 20.0);
    let delay = if n >= 2 {
        let (a, b) = (&points[n - 2], &points[n - 1]);
        let slope = (b.phase_deg - a.phase_deg).to_radians() / (b.omega - a.omega);
        (-slope).clamp(0.0, 0.05) * 0.5
    } else {
        0.0
    };
    let corrected: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.omega, p.phase_deg + (p.omega * delay).to_degrees()))
        .collect();
    let omega_n = corrected
        .windows(2)
        .find(|w| w[0].1 > -90.0 && w[1].1 <= -90.0)
        .map(|w| {
            let f = (w[0].1 + 90.0) / (w[0].1 - w[1].1);
            (w[0].0.ln() + f * (w[1].0.ln() - w[0].0.ln())).exp()
        })
        .unwrap_or_else(|| (points[0].omega * points[n - 1].omega).sqrt());
    let omega_top = points[n - 1].omega;
    TransferFit::from_factors(k, omega_n, 0.7, 1.0 / omega_top, delay)
}

// Perturbations of (a1, a2, a3, delay) around the centre guess.
const STARTS: [[f64; 4]; 5] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.3, 1.3, 0.5, 0.5],
    [0.7, 0.8, 2.0, 1.5],
    [1.0, 1.0, 0.1, 2.0],
    [1.2, 0.9, 1.0, 0.1],
];

const MIN_DELAY_SCALE: f64 = 1e-3;

/// Fits a third-order-plus-dead-time model to Bode data by Nelder-Mead on
/// the sum of absolute differences, from several perturbed starts.
pub fn fit_transfer(points: &[BodePoint], init: Option<TransferFit>, options: &FitOptions) -> Result<FitReport> {
    if points.len() < 6 {
        return Err(Error::Analysis(format!(
            "need at least 6 Bode points, got {}",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    if sorted[0].omega <= 0.0 || sorted[sorted.len() - 1].omega < 10.0 * sorted[0].omega {
        return Err(Error::Analysis("Bode points must span at least one decade".into()));
    }
    if sorted
        .iter()
        .any(|p| !(p.gain_db.is_finite() && p.phase_deg.is_finite()))
    {
        return Err(Error::Analysis("non-finite Bode point".into()));
    }

    let centre = init.unwrap_or_else(|| initial_guess(&sorted));
    let mut best: Option<FitReport> = None;
    let mut evaluations = 0usize;

    for factors in STARTS {
        let start = TransferFit {
            k: centre.k,
            a1: centre.a1 * factors[0],
            a2: centre.a2 * factors[1],
            a3: centre.a3 * factors[2],
            delay: centre.delay * factors[3],
        };
        // every parameter is |x_i| times a per-start scale, so the simplex works on O(1) numbers
        let scale = [
            start.k.abs().max(1e-6),
            start.a1.abs().max(1e-6),
            start.a2.abs().max(1e-6),
            start.a3.abs().max(1e-9),
            start.delay.abs().max(MIN_DELAY_SCALE),
        ];
        let decode = |x: &[f64]| TransferFit {
            k: x[0].abs() * scale[0],
            a1: x[1].abs() * scale[1],
            a2: x[2].abs() * scale[2],
            a3: x[3].abs() * scale[3],
            delay: x[4].abs() * scale[4],
        };
        let objective = |x: &[f64]| bode_residual(&decode(x), &sorted, options.phase_weight);

        let mut x = vec![
            start.k / scale[0],
            start.a1 / scale[1],
            start.a2 / scale[2],
            start.a3 / scale[3],
            start.delay / scale[4],
        ];
        if x[4] == 0.0 {
            x[4] = 0.1;
        }
        let mut value = f64::INFINITY;
        let mut converged = false;
        for _ in 0..=options.restarts {
            let r = nelder_mead(objective, &x, &options.simplex);
            evaluations += r.evaluations;
            let improved = value - r.f;
            x = r.x;
            converged = r.converged;
            let done = improved.is_finite() && improved <= 1e-12 * (1.0 + r.f.abs());
            value = value.min(r.f);
            if done {
                break;
            }
        }
        let candidate = FitReport {
            fit: decode(&x),
            residual: value,
            converged,
            evaluations: 0,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                candidate.residual < b.residual
                    || (candidate.residual == b.residual && candidate.fit.delay < b.fit.delay)
            }
        };
        if better {
            best = Some(candidate);
        }
    }

    let mut report = best.expect("at least one start");
    report.evaluations = evaluations;
    Ok(report)
}
