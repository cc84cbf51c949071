//! Summary metrics, computed only from the logs and the run config so they
//! can be recomputed offline from the files on disk.

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Feedback, Routing, Scenario};
use crate::logs::{RunLogs, TrajectoryRow};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub ticks: u64,
    pub events: u64,
    /// Estimate against the true relative roll, over initialized ticks after settling.
    pub rmse_deg: Option<f64>,
    pub max_abs_error_deg: Option<f64>,
    /// Share of post-settle ticks the estimator was initialized (%).
    pub initialized_pct: Option<f64>,
    /// Share of post-settle ticks with an accepted Hough measurement (%).
    pub availability_pct: Option<f64>,
    pub mean_tick_compute_us: Option<f64>,
    pub rise_time_s: Option<f64>,
    pub overshoot_pct: Option<f64>,
    pub settling_time_s: Option<f64>,
    /// Largest |alpha - disk| after settling, for disk-driven scenarios.
    pub max_tracking_error_deg: Option<f64>,
}

/// Maps an angle in degrees into (-180, 180].
pub fn wrap180(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

fn relative_deg(row: &TrajectoryRow) -> f64 {
    row.alpha_true_deg - row.disk_angle_deg
}

/// True relative roll at `t_us`, linearly interpolated between trajectory rows.
pub fn relative_truth_at(trajectory: &[TrajectoryRow], t_us: u64) -> Option<f64> {
    let i = trajectory.partition_point(|r| r.t_us <= t_us);
    if i == 0 {
        return None;
    }
    let a = &trajectory[i - 1];
    if a.t_us == t_us {
        return Some(relative_deg(a));
    }
    let b = trajectory.get(i)?;
    let frac = (t_us - a.t_us) as f64 / (b.t_us - a.t_us) as f64;
    let (ra, rb) = (relative_deg(a), relative_deg(b));
    Some(ra + (rb - ra) * frac)
}

/// Per-tick estimation error (deg), wrapped, for initialized ticks at or after `from_us`.
pub fn estimate_errors(cfg: &ExperimentConfig, logs: &RunLogs, from_us: u64) -> Vec<(u64, f64)> {
    let latency = cfg.estimate_latency_us();
    logs.estimate
        .iter()
        .filter(|r| r.t_us >= from_us && r.is_initialized())
        .filter_map(|r| {
            relative_truth_at(&logs.trajectory, r.t_us + latency)
                .map(|truth| (r.t_us, wrap180(r.alpha_est_deg - truth)))
        })
        .collect()
}

struct StepMetrics {
    rise_time_s: Option<f64>,
    overshoot_pct: f64,
    settling_time_s: f64,
}

fn step_metrics(trajectory: &[TrajectoryRow], amplitude_deg: f64, at_s: f64) -> Option<StepMetrics> {
    let at_us = (at_s * 1e6).round() as u64;
    let after: Vec<(f64, f64)> = trajectory
        .iter()
        .filter(|r| r.t_us >= at_us)
        .map(|r| ((r.t_us - at_us) as f64 * 1e-6, relative_deg(r) / amplitude_deg))
        .collect();
    if after.is_empty() || amplitude_deg == 0.0 {
        return None;
    }
    let t10 = after.iter().find(|(_, y)| *y >= 0.1).map(|p| p.0);
    let t90 = after.iter().find(|(_, y)| *y >= 0.9).map(|p| p.0);
    let peak = after.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let settling = after
        .iter()
        .rev()
        .find(|(_, y)| (y - 1.0).abs() > 0.02)
        .map_or(0.0, |p| p.0);
    Some(StepMetrics {
        rise_time_s: t10.zip(t90).map(|(a, b)| b - a),
        overshoot_pct: (peak - 1.0).max(0.0) * 100.0,
        settling_time_s: settling,
    })
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v * v));
    (n > 0).then(|| (sum / n as f64).sqrt())
}

fn percent(part: usize, whole: usize) -> Option<f64> {
    (whole > 0).then(|| 100.0 * part as f64 / whole as f64)
}

pub fn summarize(cfg: &ExperimentConfig, logs: &RunLogs) -> RunSummary {
    let settle_us = (cfg.metrics.settle_s * 1e6).round() as u64;
    let errors = estimate_errors(cfg, logs, settle_us);
    let window: Vec<_> = logs.estimate.iter().filter(|r| r.t_us >= settle_us).collect();
    let vision = cfg.feedback == Feedback::Vision;

    let mut summary = RunSummary {
        ticks: logs.trajectory.len() as u64,
        events: logs.events.len() as u64,
        rmse_deg: rms(errors.iter().map(|e| e.1)),
        max_abs_error_deg: errors.iter().map(|e| e.1.abs()).reduce(f64::max),
        initialized_pct: percent(window.iter().filter(|r| r.is_initialized()).count(), window.len()),
        ..RunSummary::default()
    };
    if vision {
        summary.availability_pct = percent(window.iter().filter(|r| r.has_measurement()).count(), window.len());
        if !logs.estimate.is_empty() {
            let total: f64 = logs.estimate.iter().map(|r| r.tick_compute_us).sum();
            summary.mean_tick_compute_us = Some(total / logs.estimate.len() as f64);
        }
    }
    if let Scenario::Step { amplitude_deg, at_s } = cfg.scenario {
        if let Some(m) = step_metrics(&logs.trajectory, amplitude_deg, at_s) {
            summary.rise_time_s = m.rise_time_s;
            summary.overshoot_pct = Some(m.overshoot_pct);
            summary.settling_time_s = Some(m.settling_time_s);
        }
    }
    if cfg.scenario.routing() == Routing::Disk && cfg.control.enabled {
        summary.max_tracking_error_deg = logs
            .trajectory
            .iter()
            .filter(|r| r.t_us >= settle_us)
            .map(|r| wrap180(relative_deg(r)).abs())
            .reduce(f64::max);
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logs::EstimateRow;

    fn traj(t_us: u64, alpha: f64, disk: f64) -> TrajectoryRow {
        TrajectoryRow {
            t_us,
            alpha_true_deg: alpha,
            alpha_dot_true_deg_s: 0.0,
            disk_angle_deg: disk,
            f1_n: 2.0,
            f2_n: 2.0,
        }
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap180(180.0), 180.0);
        assert_eq!(wrap180(-180.0), 180.0);
        assert_eq!(wrap180(190.0), -170.0);
        assert_eq!(wrap180(-725.0), -5.0);
    }

    #[test]
    fn interpolates_relative_truth() {
        let t = [traj(0, 0.0, 10.0), traj(1000, 0.0, 20.0)];
        assert_eq!(relative_truth_at(&t, 0), Some(-10.0));
        assert_eq!(relative_truth_at(&t, 700), Some(-17.0));
        assert_eq!(relative_truth_at(&t, 1000), Some(-20.0));
        assert_eq!(relative_truth_at(&t, 1001), None);
    }

    #[test]
    fn step_metrics_of_ideal_second_order() {
        let (zeta, wn) = (0.7f64, 1.0 / 0.149);
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let rows: Vec<_> = (0..3000u64)
            .map(|k| {
                let t = k as f64 * 1e-3;
                let y = 1.0
                    - (-zeta * wn * t).exp() * ((wd * t).cos() + zeta / (1.0 - zeta * zeta).sqrt() * (wd * t).sin());
                traj(k * 1000, 90.0 * y, 0.0)
            })
            .collect();
        let m = step_metrics(&rows, 90.0, 0.0).unwrap();
        let expected = 100.0 * (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert!((m.overshoot_pct - expected).abs() < 0.01, "{}", m.overshoot_pct);
        assert!(m.rise_time_s.unwrap() > 0.0);
    }

    #[test]
    fn error_uses_estimate_latency_and_wraps() {
        let mut cfg = ExperimentConfig::new(Scenario::ConstantRateSweep { rate_deg_s: 1000.0 }, 0.002, 1);
        cfg.metrics.settle_s = 0.0;
        cfg.delays.compute_us = 500;
        let logs = RunLogs {
            trajectory: vec![traj(0, 0.0, 179.0), traj(1000, 0.0, 180.0), traj(2000, 0.0, 181.0)],
            estimate: vec![EstimateRow {
                t_us: 1000,
                alpha_est_deg: 179.5,
                alpha_dot_est_deg_s: 0.0,
                meas_deg_or_nan: f64::NAN,
                peak_count: 0,
                tick_compute_us: 1.0,
            }],
            ..RunLogs::default()
        };
        // truth at 1500 us is -180.5, i.e. 179.5 wrapped
        assert_eq!(estimate_errors(&cfg, &logs, 0), vec![(1000, 0.0)]);
        let s = summarize(&cfg, &logs);
        assert_eq!(s.availability_pct, Some(0.0));
        assert_eq!(s.mean_tick_compute_us, Some(1.0));
    }
}
