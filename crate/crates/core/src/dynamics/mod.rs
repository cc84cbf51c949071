//! Fixed-step physics of the rig: roll axis, rotors, encoders, the disk
//! reference, and transport delays.

mod delay;
mod encoder;
mod plant;
mod reference;

pub use delay::DelayLine;
pub use encoder::{Axis, Encoder, EncoderPair, ENCODER_MAX_BIAS_DEG, ENCODER_RESOLUTION_DEG};
pub use plant::{step_physics, PlantParams, WorldState};
pub use reference::{steering_channel, ManualInput, Reference, ReferenceKind, ReferenceSignal, Steering};

/// Physics integration step (us).
pub const PHYSICS_STEP_US: u64 = 100;
/// Estimation and control period (us).
pub const TICK_US: u64 = 1000;
