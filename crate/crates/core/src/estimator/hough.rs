use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::camera::Event;
use crate::error::{Error, Result};

pub const THETA_BINS: usize = 36;
pub const THETA_STEP_DEG: f64 = 5.0;
pub const RHO_STEP_PX: f64 = 5.0;
pub const RHO_LIMIT_PX: f64 = 150.0;
/// Bins centered on every multiple of 5 px in [-150, 150].
pub const RHO_BINS: usize = 61;
const RHO_ZERO_INDEX: i64 = 30;

/// Sliding-window sizing and the principal point the lines are expressed about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoughParams {
    pub max_events: usize,
    pub window_us: u64,
    pub min_line_count: u32,
    pub cx: f64,
    pub cy: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            max_events: 80,
            window_us: 3000,
            min_line_count: 40,
            cx: 120.0,
            cy: 90.0,
        }
    }
}

/// Best line in the window, expressed as a relative roll measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleMeasurement {
    pub theta_bin_center: f64,
    pub rho_bin_center: f64,
    pub count: u32,
    /// Roll in degrees, unwrapped to the multiple of 180 closest to the prediction.
    pub z: f64,
}

pub fn theta_center(theta_idx: usize) -> f64 {
    theta_idx as f64 * THETA_STEP_DEG
}

pub fn rho_center(rho_idx: usize) -> f64 {
    (rho_idx as i64 - RHO_ZERO_INDEX) as f64 * RHO_STEP_PX
}

/// Roll implied by a line normal at `theta_deg`, moved by a multiple of 180 deg
/// to land closest to `predicted`.
pub fn roll_from_theta(theta_deg: f64, predicted: f64) -> f64 {
    let mut z = 90.0 - theta_deg;
    if z <= -90.0 {
        z += 180.0;
    } else if z > 90.0 {
        z -= 180.0;
    }
    let turns = (predicted - z) / 180.0;
    // exact half-way ties keep the candidate closer to the principal range
    let k = if (turns - turns.trunc()).abs() == 0.5 {
        turns.trunc()
    } else {
        turns.round()
    };
    z + 180.0 * k
}

/// Bounded event buffer with an incrementally maintained rho-theta accumulator.
#[derive(Debug, Clone)]
pub struct HoughWindow {
    params: HoughParams,
    buffer: VecDeque<Event>,
    acc: Vec<u32>,
    trig: [(f64, f64); THETA_BINS],
}

impl HoughWindow {
    pub fn new(params: HoughParams) -> Self {
        let mut trig = [(0.0, 0.0); THETA_BINS];
        for (i, t) in trig.iter_mut().enumerate() {
            let (s, c) = theta_center(i).to_radians().sin_cos();
            *t = (c, s);
        }
        Self {
            params,
            buffer: VecDeque::with_capacity(params.max_events + 1),
            acc: vec![0; THETA_BINS * RHO_BINS],
            trig,
        }
    }

    pub fn params(&self) -> &HoughParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.buffer.iter()
    }

    /// Counts in theta-major order: index `theta_idx * RHO_BINS + rho_idx`.
    pub fn accumulator(&self) -> &[u32] {
        &self.acc
    }

    pub fn count(&self, theta_idx: usize, rho_idx: usize) -> u32 {
        self.acc[theta_idx * RHO_BINS + rho_idx]
    }

    pub fn total_votes(&self) -> u64 {
        self.acc.iter().map(|&c| u64::from(c)).sum()
    }

    fn rho_bins(&self, e: &Event) -> Result<[usize; THETA_BINS]> {
        let u = f64::from(e.x) - self.params.cx;
        let v = f64::from(e.y) - self.params.cy;
        let mut bins = [0usize; THETA_BINS];
        for (bin, &(c, s)) in bins.iter_mut().zip(self.trig.iter()) {
            let rho = u * c + v * s;
            let idx = (rho / RHO_STEP_PX).round() as i64 + RHO_ZERO_INDEX;
            if !(0..RHO_BINS as i64).contains(&idx) {
                return Err(Error::RhoOutOfRange { x: e.x, y: e.y, rho });
            }
            *bin = idx as usize;
        }
        Ok(bins)
    }

    fn vote(&mut self, e: &Event, up: bool) {
        let bins = self.rho_bins(e).expect("buffered events were range-checked on insert");
        for (theta_idx, rho_idx) in bins.into_iter().enumerate() {
            let slot = &mut self.acc[theta_idx * RHO_BINS + rho_idx];
            if up {
                *slot += 1;
            } else {
                *slot -= 1;
            }
        }
    }

    /// Appends an event and adds its votes. Events must arrive in time order.
    pub fn insert(&mut self, e: Event) -> Result<()> {
        if let Some(newest) = self.buffer.back() {
            if e.t_us < newest.t_us {
                return Err(Error::Contract(format!(
                    "event at {} us older than buffered {} us",
                    e.t_us, newest.t_us
                )));
            }
        }
        let bins = self.rho_bins(&e)?;
        for (theta_idx, rho_idx) in bins.into_iter().enumerate() {
            self.acc[theta_idx * RHO_BINS + rho_idx] += 1;
        }
        self.buffer.push_back(e);
        Ok(())
    }

    fn evict_oldest(&mut self) -> Option<Event> {
        let e = self.buffer.pop_front()?;
        self.vote(&e, false);
        Some(e)
    }

    /// Drops events older than the time window, then the oldest ones beyond the size cap.
    pub fn maintain(&mut self, now_us: u64) -> Vec<Event> {
        let mut evicted = Vec::new();
        let horizon = now_us.saturating_sub(self.params.window_us);
        while self.buffer.front().is_some_and(|e| e.t_us < horizon) {
            evicted.extend(self.evict_oldest());
        }
        while self.buffer.len() > self.params.max_events {
            evicted.extend(self.evict_oldest());
        }
        evicted
    }

    /// Highest bin count in the accumulator, gated or not.
    pub fn max_count(&self) -> u32 {
        self.acc.iter().copied().max().unwrap_or(0)
    }

    /// Strongest line, if it collects at least `min_line_count` votes.
    ///
    /// Equal-count bins are resolved by closeness of the implied roll to
    /// `predicted_alpha`, then by lowest theta index.
    pub fn peak(&self, predicted_alpha: f64) -> Option<AngleMeasurement> {
        let max = self.max_count();
        if max < self.params.min_line_count || max == 0 {
            return None;
        }
        let mut best: Option<(f64, AngleMeasurement)> = None;
        for theta_idx in 0..THETA_BINS {
            let row = &self.acc[theta_idx * RHO_BINS..(theta_idx + 1) * RHO_BINS];
            let Some(rho_idx) = row.iter().position(|&c| c == max) else {
                continue;
            };
            let theta = theta_center(theta_idx);
            let z = roll_from_theta(theta, predicted_alpha);
            let distance = (z - predicted_alpha).abs();
            if best.as_ref().is_none_or(|(d, _)| distance < *d) {
                best = Some((
                    distance,
                    AngleMeasurement {
                        theta_bin_center: theta,
                        rho_bin_center: rho_center(rho_idx),
                        count: max,
                        z,
                    },
                ));
            }
        }
        best.map(|(_, m)| m)
    }
}
