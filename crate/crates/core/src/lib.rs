//! Closed-loop simulation of event-camera horizon tracking on a
//! single-axis dualcopter.
//!
//! The crate is organised by subsystem:
//! - [`dynamics`]: rig physics, encoders, reference trajectories, transport delays
//! - [`camera`]: event generation from the rotating two-tone disk
//! - [`estimator`]: sliding-window Hough measurement and Kalman filter
//! - [`controller`]: PD law, gain synthesis, thrust allocation and duty mapping
//! - [`sysid`]: Bode extraction, dead-time model fitting, latency and inertia analyses

pub mod camera;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod sysid;

pub use error::{Error, Result};
