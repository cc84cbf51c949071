use serde::{Deserialize, Serialize};

use super::bode::TransferFit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    /// Regression slope converted to milliseconds.
    pub slope_ms: f64,
    pub stderr_ms: f64,
    pub intercept_deg: f64,
    /// Which input samples lay above the baseline and entered the fit.
    pub used: Vec<bool>,
}

/// Latency from the growth of tracking error with speed.
///
/// A constant lag `d` makes the angle error grow as `speed * d`, so the OLS
/// slope of RMSE (deg) against speed (deg/s), over samples above the
/// delay-free `baseline_deg`, is the lag in seconds.
pub fn delay_from_rmse(samples: &[(f64, f64)], baseline_deg: f64) -> Result<DelayEstimate> {
    let used: Vec<bool> = samples.iter().map(|&(_, rmse)| rmse > baseline_deg).collect();
    let pts: Vec<(f64, f64)> = samples.iter().zip(&used).filter(|(_, &u)| u).map(|(&p, _)| p).collect();
    if pts.len() < 3 {
        return Err(Error::Analysis(format!(
            "need at least 3 samples above the {baseline_deg} deg baseline, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Analysis("all qualifying samples share one speed".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(DelayEstimate {
        slope_ms: slope * 1e3,
        stderr_ms: stderr * 1e3,
        intercept_deg: intercept,
        used,
    })
}

/// Where the natural frequency comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NaturalFrequency {
    Measured(f64),
    Fitted(TransferFit),
}

/// Inertia implied by a closed loop with proportional gain `k_p` (N m/rad)
/// ringing at `omega_n`: `tau = 1 / omega_n`, `J = k_p tau^2`.
pub fn inertia_from_bode(source: NaturalFrequency, k_p: f64) -> Result<f64> {
    let omega_n = match source {
        NaturalFrequency::Measured(w) => w,
        NaturalFrequency::Fitted(fit) => fit
            .natural_frequency()
            .ok_or_else(|| Error::Analysis(format!("fit has no complex pole pair: {fit:?}")))?,
    };
    if !(omega_n > 0.0 && k_p > 0.0) {
        return Err(Error::Analysis(format!(
            "need omega_n > 0 and k_p > 0, got {omega_n}, {k_p}"
        )));
    }
    let tau = 1.0 / omega_n;
    Ok(k_p * tau * tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_gives_exact_slope() {
        let samples: Vec<(f64, f64)> = [300.0, 450.0, 600.0, 750.0, 900.0]
            .iter()
            .map(|&v| (v, 0.012 * v))
            .collect();
        let d = delay_from_rmse(&samples, 2.0).unwrap();
        assert!((d.slope_ms - 12.0).abs() < 1e-9);
        assert!(d.stderr_ms < 1e-9);
        assert!(d.intercept_deg.abs() < 1e-9);
    }

    #[test]
    fn baseline_gate() {
        let samples = [(100.0, 1.0), (200.0, 1.5), (300.0, 1.9)];
        assert!(matches!(delay_from_rmse(&samples, 2.0), Err(Error::Analysis(_))));
        let mixed = [(50.0, 1.8), (300.0, 3.0), (500.0, 5.0), (700.0, 7.0)];
        let d = delay_from_rmse(&mixed, 2.0).unwrap();
        assert_eq!(d.used, vec![false, true, true, true]);
        assert!((d.slope_ms - 10.0).abs() < 1e-9);
    }

    #[test]
    fn constant_offset_moves_intercept_only() {
        let base = [(300.0, 3.1), (500.0, 5.4), (800.0, 9.2), (1000.0, 11.0)];
        let shifted: Vec<(f64, f64)> = base.iter().map(|&(v, r)| (v, r + 0.7)).collect();
        let a = delay_from_rmse(&base, 2.0).unwrap();
        let b = delay_from_rmse(&shifted, 2.0).unwrap();
        assert!((a.slope_ms - b.slope_ms).abs() < 1e-9);
        assert!((b.intercept_deg - a.intercept_deg - 0.7).abs() < 1e-9);
    }

    #[test]
    fn inertia_examples() {
        let j = inertia_from_bode(NaturalFrequency::Measured(6.69), 0.353).unwrap();
        assert!((j / 0.00788 - 1.0).abs() < 0.01, "{j}");
        assert_eq!(inertia_from_bode(NaturalFrequency::Measured(1.0), 1.0).unwrap(), 1.0);
        let a = inertia_from_bode(NaturalFrequency::Measured(3.0), 0.5).unwrap();
        let b = inertia_from_bode(NaturalFrequency::Measured(6.0), 0.5).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        let fit = TransferFit::from_factors(1.0, 6.69, 0.7, 0.02, 0.0);
        let j = inertia_from_bode(NaturalFrequency::Fitted(fit), 0.353).unwrap();
        assert!((j - 0.353 / 6.69f64.powi(2)).abs() < 1e-12);
        assert!(inertia_from_bode(NaturalFrequency::Measured(0.0), 1.0).is_err());
    }
}
