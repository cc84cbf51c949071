use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the single-axis dualcopter.
///
/// Arm length, thrust range and motor lag are not known for the real
/// platform; the defaults are engineering values and are recovered by the
/// identification experiments rather than assumed by them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Moment of inertia about the roll axis (kg m^2).
    pub inertia: f64,
    /// Half the rotor separation (m).
    pub arm: f64,
    /// First-order motor time constant (s). Zero means thrust follows the command instantly.
    pub motor_tau: f64,
    /// Maximum thrust of a single rotor (N).
    pub f_max: f64,
    /// Bias thrust operating point (N).
    pub f0: f64,
    /// Constant imbalance torque (N m).
    pub disturbance: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia: 0.00788,
            arm: 0.15,
            motor_tau: 0.020,
            f_max: 4.0,
            f0: 2.0,
            disturbance: 0.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.inertia,
            self.arm,
            self.motor_tau,
            self.f_max,
            self.f0,
            self.disturbance,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("plant parameters must be finite".into()));
        }
        if self.inertia <= 0.0 {
            return Err(Error::Config(format!("inertia must be > 0, got {}", self.inertia)));
        }
        if self.arm <= 0.0 {
            return Err(Error::Config(format!("arm must be > 0, got {}", self.arm)));
        }
        if self.motor_tau < 0.0 {
            return Err(Error::Config(format!("motor_tau must be >= 0, got {}", self.motor_tau)));
        }
        if !(0.0..=self.f_max).contains(&self.f0) {
            return Err(Error::Config(format!(
                "f0 must lie in [0, f_max={}], got {}",
                self.f_max, self.f0
            )));
        }
        Ok(())
    }

    /// Largest differential torque available around the bias point before a rotor saturates.
    pub fn torque_authority(&self) -> f64 {
        2.0 * self.arm * self.f0.min(self.f_max - self.f0)
    }
}

/// Ground-truth state of the rig. Angles in radians, thrusts in newtons.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldState {
    pub t_us: u64,
    pub alpha: f64,
    pub alpha_dot: f64,
    pub disk_angle: f64,
    pub f1: f64,
    pub f2: f64,
    pub f1_cmd: f64,
    pub f2_cmd: f64,
}

impl WorldState {
    /// Rig at rest with both rotors settled at the bias thrust.
    pub fn at_rest(params: &PlantParams) -> Self {
        Self {
            f1: params.f0,
            f2: params.f0,
            f1_cmd: params.f0,
            f2_cmd: params.f0,
            ..Self::default()
        }
    }

    /// Roll of the dualcopter relative to the horizon (rad).
    pub fn relative_angle(&self) -> f64 {
        self.alpha - self.disk_angle
    }

    pub fn torque(&self, params: &PlantParams) -> f64 {
        (self.f1 - self.f2) * params.arm + params.disturbance
    }
}

/// Advances the rig by `dt_us` microseconds.
///
/// Motor thrusts follow their commands through a first-order lag (exact
/// exponential discretization), are clamped to `[0, f_max]`, and the roll
/// axis integrates `J * alpha_ddot = T` with semi-implicit Euler.
pub fn step_physics(state: &WorldState, dt_us: u64, params: &PlantParams) -> Result<WorldState> {
    if dt_us == 0 {
        return Err(Error::Contract("physics step must be > 0 us".into()));
    }
    let dt = dt_us as f64 * 1e-6;
    let blend = if params.motor_tau > 0.0 {
        -(-dt / params.motor_tau).exp_m1()
    } else {
        1.0
    };

    let mut next = *state;
    next.f1 = (state.f1 + (state.f1_cmd - state.f1) * blend).clamp(0.0, params.f_max);
    next.f2 = (state.f2 + (state.f2_cmd - state.f2) * blend).clamp(0.0, params.f_max);

    let alpha_ddot = next.torque(params) / params.inertia;
    next.alpha_dot = state.alpha_dot + alpha_ddot * dt;
    next.alpha = state.alpha + next.alpha_dot * dt;
    next.t_us = state.t_us + dt_us;

    let values = [next.alpha, next.alpha_dot, next.disk_angle, next.f1, next.f2];
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Integrator {
            t_us: next.t_us,
            what: format!("non-finite state value {bad}"),
        });
    }
    Ok(next)
}
