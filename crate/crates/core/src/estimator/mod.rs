//! Horizon estimation: a sliding-window Hough line detector feeding a
//! two-state Kalman filter, ticked at 1 kHz.

mod hough;
mod kalman;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::camera::Event;
use crate::error::Result;

pub use hough::{
    rho_center, roll_from_theta, theta_center, AngleMeasurement, HoughParams, HoughWindow, RHO_BINS, RHO_LIMIT_PX,
    RHO_STEP_PX, THETA_BINS, THETA_STEP_DEG,
};
pub use kalman::{kf_predict, kf_update, EstimatorState, KalmanParams};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub hough: HoughParams,
    pub kalman: KalmanParams,
}

/// Result of one estimator tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutput {
    /// `None` until the first accepted measurement (or a prior) initializes the filter.
    pub state: Option<EstimatorState>,
    pub measurement: Option<AngleMeasurement>,
    /// Highest accumulator count this tick, whether or not it passed the gate.
    pub peak_count: u32,
    pub events_in_window: usize,
    /// Wall-clock time spent in the tick (us).
    pub compute_us: f64,
}

#[derive(Debug, Clone)]
pub struct HorizonEstimator {
    window: HoughWindow,
    kalman: KalmanParams,
    state: Option<EstimatorState>,
    last_tick_us: Option<u64>,
}

impl HorizonEstimator {
    pub fn new(config: EstimatorConfig) -> Self {
        Self {
            window: HoughWindow::new(config.hough),
            kalman: config.kalman,
            state: None,
            last_tick_us: None,
        }
    }

    /// Starts from a known relative roll (deg) at rest instead of waiting for a measurement.
    pub fn with_prior(mut self, alpha_deg: f64, t_us: u64) -> Self {
        self.state = Some(EstimatorState::new(
            alpha_deg,
            0.0,
            self.kalman.init_var_angle,
            self.kalman.init_var_rate,
            t_us,
        ));
        self.last_tick_us = Some(t_us);
        self
    }

    pub fn state(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }

    pub fn window(&self) -> &HoughWindow {
        &self.window
    }

    /// One estimation cycle at time `now_us`.
    ///
    /// Inserts the newly released events, maintains the window, predicts
    /// with the commanded rate increment `u` (deg/s), and corrects when the
    /// Hough peak passes the vote gate. A repeated tick at the same `now_us`
    /// only buffers events.
    pub fn tick(&mut self, new_events: &[Event], u: f64, now_us: u64) -> Result<TickOutput> {
        let started = Instant::now();
        for e in new_events {
            self.window.insert(*e)?;
        }
        if self.last_tick_us == Some(now_us) {
            return Ok(TickOutput {
                state: self.state,
                measurement: None,
                peak_count: self.window.max_count(),
                events_in_window: self.window.len(),
                compute_us: started.elapsed().as_secs_f64() * 1e6,
            });
        }
        self.window.maintain(now_us);

        if let (Some(s), Some(last)) = (self.state, self.last_tick_us) {
            if now_us > last {
                let dt = (now_us - last) as f64 * 1e-6;
                let mut predicted = kf_predict(&s, u, dt, &self.kalman);
                predicted.t_us = now_us;
                self.state = Some(predicted);
            }
        }
        self.last_tick_us = Some(now_us);

        let predicted_alpha = self.state.map_or(0.0, |s| s.alpha);
        let measurement = self.window.peak(predicted_alpha);
        if let Some(m) = measurement {
            self.state = Some(match self.state {
                Some(s) => kf_update(&s, m.z, &self.kalman),
                None => EstimatorState::new(m.z, 0.0, self.kalman.init_var_angle, self.kalman.init_var_rate, now_us),
            });
        }
        Ok(TickOutput {
            state: self.state,
            measurement,
            peak_count: self.window.max_count(),
            events_in_window: self.window.len(),
            compute_us: started.elapsed().as_secs_f64() * 1e6,
        })
    }
}
