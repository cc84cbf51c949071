use rand::Rng;

use super::plant::WorldState;

pub const ENCODER_RESOLUTION_DEG: f64 = 0.1;
pub const ENCODER_MAX_BIAS_DEG: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Dualcopter,
    Disk,
}

/// Absolute rotary encoder: 0.1 deg quantization plus a calibration offset
/// frozen for the whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoder {
    bias_deg: f64,
}

impl Encoder {
    pub fn with_bias(bias_deg: f64) -> Self {
        Self { bias_deg }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::with_bias(rng.random_range(-ENCODER_MAX_BIAS_DEG..=ENCODER_MAX_BIAS_DEG))
    }

    pub fn bias_deg(&self) -> f64 {
        self.bias_deg
    }

    /// Reading in degrees for a true angle in radians.
    pub fn read(&self, angle_rad: f64) -> f64 {
        let steps = ((angle_rad.to_degrees() + self.bias_deg) / ENCODER_RESOLUTION_DEG).round();
        steps / 10.0
    }
}

/// The two encoders on the rig.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderPair {
    pub dualcopter: Encoder,
    pub disk: Encoder,
}

impl EncoderPair {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            dualcopter: Encoder::random(rng),
            disk: Encoder::random(rng),
        }
    }

    pub fn ideal() -> Self {
        Self {
            dualcopter: Encoder::with_bias(0.0),
            disk: Encoder::with_bias(0.0),
        }
    }

    pub fn read(&self, state: &WorldState, which: Axis) -> f64 {
        match which {
            Axis::Dualcopter => self.dualcopter.read(state.alpha),
            Axis::Disk => self.disk.read(state.disk_angle),
        }
    }
}
