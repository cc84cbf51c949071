//! Event camera looking at a two-tone disk.
//!
//! The scene is binary, so a pixel emits an event exactly when the horizon
//! line sweeps across its center. Timestamps interpolate the crossing
//! instant linearly within the sweep interval.

mod io;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_event_log, write_event_log, EVENT_LOG_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Self::On => 1,
            Self::Off => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Option<Self> {
        match sign {
            1 => Some(Self::On),
            -1 => Some(Self::Off),
            _ => None,
        }
    }
}

/// A single brightness-change detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
    pub t_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub width: u16,
    pub height: u16,
    /// Principal point, pixel column.
    pub cx: f64,
    /// Principal point, pixel row.
    pub cy: f64,
    pub disk_radius: f64,
    /// Background events per second over the whole sensor.
    pub noise_rate: f64,
    /// Per-pixel dead time after an event (us).
    pub refractory_us: u64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 240,
            height: 180,
            cx: 120.0,
            cy: 90.0,
            disk_radius: 90.0,
            noise_rate: 5000.0,
            refractory_us: 100,
        }
    }
}

impl CameraModel {
    pub fn noiseless(self) -> Self {
        Self {
            noise_rate: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("sensor dimensions must be non-zero".into()));
        }
        let limit = f64::from(self.width.min(self.height)) / 2.0;
        if !(self.disk_radius > 0.0 && self.disk_radius <= limit) {
            return Err(Error::Config(format!(
                "disk_radius must lie in (0, {limit}], got {}",
                self.disk_radius
            )));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::Config(format!(
                "noise_rate must be >= 0, got {}",
                self.noise_rate
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::Config("principal point must be finite".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        (0..i64::from(self.width)).contains(&x) && (0..i64::from(self.height)).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intensity {
    Black,
    White,
    Outside,
}

/// Class of pixel `(x, y)` when the horizon is rotated by `rel_angle` radians.
///
/// At `rel_angle = 0` the horizon is the sensor row through the principal
/// point and everything above it (smaller row index) is white.
pub fn pixel_intensity(model: &CameraModel, rel_angle: f64, x: u16, y: u16) -> Intensity {
    let u = f64::from(x) - model.cx;
    let v = f64::from(y) - model.cy;
    if u * u + v * v > model.disk_radius * model.disk_radius {
        return Intensity::Outside;
    }
    let (s, c) = rel_angle.sin_cos();
    if -u * s - v * c > 0.0 {
        Intensity::White
    } else {
        Intensity::Black
    }
}

#[derive(Debug, Clone, Copy)]
struct DiskPixel {
    x: u16,
    y: u16,
    /// Horizon angle (mod pi) at which the line passes through this pixel.
    key: f64,
}

const KEY_MARGIN: f64 = 1e-9;

/// Stateful camera: holds the per-pixel refractory clock across calls.
#[derive(Debug, Clone)]
pub struct EventCamera {
    model: CameraModel,
    pixels: Vec<DiskPixel>,
    last_event: Vec<Option<u64>>,
}

impl EventCamera {
    pub fn new(model: CameraModel) -> Result<Self> {
        model.validate()?;
        let mut pixels = Vec::new();
        for y in 0..model.height {
            for x in 0..model.width {
                let u = f64::from(x) - model.cx;
                let v = f64::from(y) - model.cy;
                if u == 0.0 && v == 0.0 {
                    continue;
                }
                if u * u + v * v > model.disk_radius * model.disk_radius {
                    continue;
                }
                // -u sin(r) - v cos(r) = -|p| sin(psi + r) vanishes at r = -psi (mod pi)
                let key = (-v.atan2(u)).rem_euclid(PI);
                pixels.push(DiskPixel { x, y, key });
            }
        }
        pixels.sort_by(|a, b| a.key.total_cmp(&b.key));
        let n = usize::from(model.width) * usize::from(model.height);
        Ok(Self {
            model,
            pixels,
            last_event: vec![None; n],
        })
    }

    pub fn model(&self) -> &CameraModel {
        &self.model
    }

    /// Number of pixels inside the disk.
    pub fn disk_pixel_count(&self) -> usize {
        self.pixels.len()
    }

    /// Forget refractory history.
    pub fn reset(&mut self) {
        self.last_event.iter_mut().for_each(|t| *t = None);
    }

    fn candidates(&self, lo: f64, hi: f64) -> impl Iterator<Item = &DiskPixel> {
        let start = (lo - KEY_MARGIN).rem_euclid(PI);
        let end = start + (hi - lo) + 2.0 * KEY_MARGIN;
        let first = self.pixels.partition_point(|p| p.key < start);
        let (a, b) = if end < PI {
            let last = self.pixels.partition_point(|p| p.key <= end);
            (&self.pixels[first..last], &self.pixels[..0])
        } else {
            let last = self.pixels.partition_point(|p| p.key <= end - PI);
            (&self.pixels[first..], &self.pixels[..last])
        };
        a.iter().chain(b.iter())
    }

    /// Events produced while the relative angle moves from `from` to `to` during `[t0, t1)`.
    ///
    /// The sweep must stay below pi/2 so that no pixel can cross twice.
    pub fn generate_events<R: Rng + ?Sized>(
        &mut self,
        from: f64,
        to: f64,
        t0_us: u64,
        t1_us: u64,
        rng: &mut R,
    ) -> Result<Vec<Event>> {
        if t1_us <= t0_us {
            return Err(Error::Contract(format!("empty interval [{t0_us}, {t1_us})")));
        }
        let sweep = to - from;
        if !sweep.is_finite() || sweep.abs() >= PI / 2.0 {
            return Err(Error::Contract(format!(
                "sweep of {:.3} deg per call exceeds 90 deg",
                sweep.to_degrees()
            )));
        }
        let span = (t1_us - t0_us) as f64;
        let mut events = Vec::new();

        if sweep != 0.0 {
            let (lo, hi) = if sweep > 0.0 { (from, to) } else { (to, from) };
            let lo_mod = lo.rem_euclid(PI);
            for p in self.candidates(lo, hi) {
                let before = pixel_intensity(&self.model, from, p.x, p.y);
                let after = pixel_intensity(&self.model, to, p.x, p.y);
                if before == after {
                    continue;
                }
                let mut offset = (p.key - lo_mod).rem_euclid(PI);
                if offset > PI / 2.0 {
                    // key sits just below lo inside the search margin
                    offset -= PI;
                }
                let crossing = (lo + offset).clamp(lo, hi);
                let frac = ((crossing - from) / sweep).clamp(0.0, 1.0);
                let t = (t0_us + (frac * span).floor() as u64).min(t1_us - 1);
                let polarity = if after == Intensity::White {
                    Polarity::On
                } else {
                    Polarity::Off
                };
                events.push(Event {
                    x: p.x,
                    y: p.y,
                    polarity,
                    t_us: t,
                });
            }
        }

        let expected_noise = self.model.noise_rate * span * 1e-6;
        if expected_noise > 0.0 {
            let count = Poisson::new(expected_noise)
                .map_err(|e| Error::Config(format!("noise rate: {e}")))?
                .sample(rng) as usize;
            for _ in 0..count {
                let polarity = if rng.random_bool(0.5) {
                    Polarity::On
                } else {
                    Polarity::Off
                };
                events.push(Event {
                    x: rng.random_range(0..self.model.width),
                    y: rng.random_range(0..self.model.height),
                    polarity,
                    t_us: rng.random_range(t0_us..t1_us),
                });
            }
        }

        events.sort_by_key(|e| (e.t_us, e.y, e.x));
        let width = usize::from(self.model.width);
        let refractory = self.model.refractory_us;
        let last_event = &mut self.last_event;
        events.retain(|e| {
            let slot = &mut last_event[usize::from(e.y) * width + usize::from(e.x)];
            match *slot {
                Some(prev) if e.t_us < prev + refractory => false,
                _ => {
                    *slot = Some(e.t_us);
                    true
                }
            }
        });
        Ok(events)
    }

    /// Like [`generate_events`](Self::generate_events) but splits sweeps of any size into
    /// sub-intervals below the per-call limit.
    pub fn sweep<R: Rng + ?Sized>(
        &mut self,
        from: f64,
        to: f64,
        t0_us: u64,
        t1_us: u64,
        rng: &mut R,
    ) -> Result<Vec<Event>> {
        let pieces = ((to - from).abs() / (PI / 4.0)).ceil().max(1.0) as u64;
        let pieces = pieces.min(t1_us.saturating_sub(t0_us)).max(1);
        if pieces == 1 {
            return self.generate_events(from, to, t0_us, t1_us, rng);
        }
        let mut out = Vec::new();
        for k in 0..pieces {
            let a = t0_us + (t1_us - t0_us) * k / pieces;
            let b = t0_us + (t1_us - t0_us) * (k + 1) / pieces;
            let ra = from + (to - from) * k as f64 / pieces as f64;
            let rb = from + (to - from) * (k + 1) as f64 / pieces as f64;
            out.extend(self.generate_events(ra, rb, a, b, rng)?);
        }
        Ok(out)
    }
}

/// One-shot event generation with a fresh refractory state.
pub fn generate_events<R: Rng + ?Sized>(
    model: &CameraModel,
    from: f64,
    to: f64,
    t0_us: u64,
    t1_us: u64,
    rng: &mut R,
) -> Result<Vec<Event>> {
    EventCamera::new(*model)?.generate_events(from, to, t0_us, t1_us, rng)
}
