//! Offline estimation from a recorded event log.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use horizon_core::camera::{read_event_log, CameraModel, Event};
use horizon_core::dynamics::TICK_US;
use horizon_core::estimator::{EstimatorConfig, HorizonEstimator};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::logs::EstimateRow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayOptions {
    /// Transport delay between an event and its delivery (µs).
    pub event_us: u64,
    /// Seeds the filter at zero attitude and rate on the first tick.
    pub prior: bool,
    /// Frames to run; by default enough to deliver every event.
    pub ticks: Option<u64>,
    pub record_compute: bool,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self {
            event_us: 0,
            prior: false,
            ticks: None,
            record_compute: true,
        }
    }
}

/// Feeds `events` to a fresh estimator at 1 kHz, releasing each event on the
/// first frame after it was generated and at least `event_us` old. No
/// control input is known offline, so the prediction runs with `u = 0`.
pub fn replay_events(
    events: &[Event],
    estimator: EstimatorConfig,
    options: &ReplayOptions,
) -> Result<Vec<EstimateRow>> {
    if events.windows(2).any(|w| w[1].t_us < w[0].t_us) {
        return Err(HarnessError::Log("event log is not sorted by time".into()));
    }
    let ticks = options
        .ticks
        .unwrap_or_else(|| events.last().map_or(0, |e| (e.t_us + options.event_us) / TICK_US + 2));
    let mut est = HorizonEstimator::new(estimator);
    if options.prior {
        est = est.with_prior(0.0, 0);
    }
    let mut next = 0;
    let mut rows = Vec::with_capacity(ticks as usize);
    for k in 0..ticks {
        let t_us = k * TICK_US;
        let start = next;
        while next < events.len() && events[next].t_us < t_us && events[next].t_us + options.event_us <= t_us {
            next += 1;
        }
        let out = est.tick(&events[start..next], 0.0, t_us.saturating_sub(options.event_us))?;
        let (alpha, rate) = out.state.map_or((f64::NAN, f64::NAN), |s| (s.alpha, s.alpha_dot));
        rows.push(EstimateRow {
            t_us,
            alpha_est_deg: alpha,
            alpha_dot_est_deg_s: rate,
            meas_deg_or_nan: out.measurement.map_or(f64::NAN, |m| m.z),
            peak_count: out.peak_count,
            tick_compute_us: if options.record_compute { out.compute_us } else { 0.0 },
        });
    }
    Ok(rows)
}

pub fn replay_file(
    path: &Path,
    camera: &CameraModel,
    estimator: EstimatorConfig,
    options: &ReplayOptions,
) -> Result<Vec<EstimateRow>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let events = read_event_log(BufReader::new(file), camera)?;
    replay_events(&events, estimator, options)
}

pub fn write_estimates(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
