use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, Sender};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scripted angle trajectories. Angles in degrees, frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Step {
        amplitude_deg: f64,
        #[serde(default)]
        at_s: f64,
    },
    Sine {
        amplitude_deg: f64,
        omega_rad_s: f64,
    },
    ConstantRate {
        rate_deg_s: f64,
    },
    /// Linear frequency sweep from `omega_start` to `omega_end` over `duration_s`, then held at `omega_end`.
    Chirp {
        amplitude_deg: f64,
        omega_start: f64,
        omega_end: f64,
        duration_s: f64,
    },
    /// Latest angle pushed through the steering channel.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Step,
    Sine,
    ConstantRate,
    Chirp,
    Manual,
}

impl FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Self::Step),
            "sine" => Ok(Self::Sine),
            "constant_rate" => Ok(Self::ConstantRate),
            "chirp" => Ok(Self::Chirp),
            "manual" => Ok(Self::Manual),
            other => Err(Error::Config(format!("unknown reference kind '{other}'"))),
        }
    }
}

impl Reference {
    pub fn kind(&self) -> ReferenceKind {
        match self {
            Self::Step { .. } => ReferenceKind::Step,
            Self::Sine { .. } => ReferenceKind::Sine,
            Self::ConstantRate { .. } => ReferenceKind::ConstantRate,
            Self::Chirp { .. } => ReferenceKind::Chirp,
            Self::Manual => ReferenceKind::Manual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Step { amplitude_deg, at_s } => amplitude_deg.is_finite() && at_s >= 0.0,
            Self::Sine {
                amplitude_deg,
                omega_rad_s,
            } => amplitude_deg.is_finite() && omega_rad_s.is_finite() && omega_rad_s >= 0.0,
            Self::ConstantRate { rate_deg_s } => rate_deg_s.is_finite(),
            Self::Chirp {
                amplitude_deg,
                omega_start,
                omega_end,
                duration_s,
            } => amplitude_deg.is_finite() && omega_start >= 0.0 && omega_end >= 0.0 && duration_s > 0.0,
            Self::Manual => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid reference parameters: {self:?}")))
        }
    }

    /// Scripted angle in radians at `t_us`; `None` for the manual channel.
    pub fn scripted_angle(&self, t_us: u64) -> Option<f64> {
        let t = t_us as f64 * 1e-6;
        let deg = match *self {
            Self::Step { amplitude_deg, at_s } => {
                if t > at_s {
                    amplitude_deg
                } else {
                    0.0
                }
            }
            Self::Sine {
                amplitude_deg,
                omega_rad_s,
            } => amplitude_deg * (omega_rad_s * t).sin(),
            Self::ConstantRate { rate_deg_s } => rate_deg_s * t,
            Self::Chirp {
                amplitude_deg,
                omega_start,
                omega_end,
                duration_s,
            } => {
                let sweep = (omega_end - omega_start) / duration_s;
                let phase = if t <= duration_s {
                    omega_start * t + 0.5 * sweep * t * t
                } else {
                    omega_start * duration_s + 0.5 * sweep * duration_s * duration_s + omega_end * (t - duration_s)
                };
                amplitude_deg * phase.sin()
            }
            Self::Manual => return None,
        };
        Some(deg.to_radians())
    }

    /// Time derivative of the scripted angle in rad/s (zero for steps and the manual channel).
    pub fn scripted_rate(&self, t_us: u64) -> f64 {
        let t = t_us as f64 * 1e-6;
        let deg_s = match *self {
            Self::Sine {
                amplitude_deg,
                omega_rad_s,
            } => amplitude_deg * omega_rad_s * (omega_rad_s * t).cos(),
            Self::ConstantRate { rate_deg_s } => rate_deg_s,
            Self::Chirp {
                amplitude_deg,
                omega_start,
                omega_end,
                duration_s,
            } => {
                let sweep = (omega_end - omega_start) / duration_s;
                let (phase, omega) = if t <= duration_s {
                    (omega_start * t + 0.5 * sweep * t * t, omega_start + sweep * t)
                } else {
                    (
                        omega_start * duration_s + 0.5 * sweep * duration_s * duration_s + omega_end * (t - duration_s),
                        omega_end,
                    )
                };
                amplitude_deg * omega * phase.cos()
            }
            Self::Step { .. } | Self::Manual => 0.0,
        };
        deg_s.to_radians()
    }
}

/// Producer half of the manual steering channel. Angles in radians.
#[derive(Debug, Clone)]
pub struct Steering(Sender<f64>);

impl Steering {
    /// Returns false once the consumer is gone.
    pub fn send(&self, angle_rad: f64) -> bool {
        self.0.send(angle_rad).is_ok()
    }
}

/// Consumer half of the manual steering channel; holds the last value.
#[derive(Debug)]
pub struct ManualInput {
    rx: Receiver<f64>,
    last: f64,
}

impl ManualInput {
    pub fn latest(&mut self) -> f64 {
        while let Ok(angle) = self.rx.try_recv() {
            if angle.is_finite() {
                self.last = angle;
            }
        }
        self.last
    }
}

pub fn steering_channel() -> (Steering, ManualInput) {
    let (tx, rx) = mpsc::channel();
    (Steering(tx), ManualInput { rx, last: 0.0 })
}

/// A reference trajectory bound to its live input, if it needs one.
#[derive(Debug)]
pub struct ReferenceSignal {
    reference: Reference,
    manual: Option<ManualInput>,
}

impl ReferenceSignal {
    pub fn scripted(reference: Reference) -> Result<Self> {
        reference.validate()?;
        if reference.kind() == ReferenceKind::Manual {
            return Err(Error::Config("manual reference needs a steering channel".into()));
        }
        Ok(Self {
            reference,
            manual: None,
        })
    }

    pub fn manual(input: ManualInput) -> Self {
        Self {
            reference: Reference::Manual,
            manual: Some(input),
        }
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    /// Angle in radians at `t_us`.
    pub fn angle_at(&mut self, t_us: u64) -> f64 {
        match &mut self.manual {
            Some(input) => input.latest(),
            None => self.reference.scripted_angle(t_us).unwrap_or(0.0),
        }
    }

    pub fn rate_at(&self, t_us: u64) -> f64 {
        self.reference.scripted_rate(t_us)
    }
}
