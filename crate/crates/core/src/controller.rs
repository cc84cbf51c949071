//! PD attitude law, gain synthesis, torque allocation and the thrust/duty map.

use serde::{Deserialize, Serialize};

use crate::dynamics::PlantParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// N m / rad
    pub k_p: f64,
    /// N m s / rad
    pub k_d: f64,
}

/// Gains placing the closed loop at time constant `tau` (s) and damping `zeta`
/// for inertia `inertia`: `k_p = J / tau^2`, `k_d = 2 zeta J / tau`.
pub fn gains_from(tau: f64, zeta: f64, inertia: f64) -> Result<ControllerGains> {
    for (name, v) in [("tau", tau), ("zeta", zeta), ("inertia", inertia)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(ControllerGains {
        k_p: inertia / (tau * tau),
        k_d: 2.0 * zeta * inertia / tau,
    })
}

/// Required torque `k_p (alpha_des - alpha) + k_d (alpha_dot_des - alpha_dot)`, unclamped.
pub fn pd_torque(alpha: f64, alpha_dot: f64, alpha_des: f64, alpha_dot_des: f64, gains: &ControllerGains) -> f64 {
    gains.k_p * (alpha_des - alpha) + gains.k_d * (alpha_dot_des - alpha_dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrustCommand {
    pub f1: f64,
    pub f2: f64,
    pub saturated: bool,
}

impl ThrustCommand {
    pub fn torque(&self, params: &PlantParams) -> f64 {
        (self.f1 - self.f2) * params.arm
    }
}

/// Splits a torque into rotor thrusts around the bias point, clamping each rotor.
pub fn allocate(torque: f64, params: &PlantParams) -> ThrustCommand {
    let half = torque / params.arm / 2.0;
    let raw1 = params.f0 + half;
    let raw2 = params.f0 - half;
    let f1 = raw1.clamp(0.0, params.f_max);
    let f2 = raw2.clamp(0.0, params.f_max);
    ThrustCommand {
        f1,
        f2,
        saturated: f1 != raw1 || f2 != raw2,
    }
}

/// `thrust(duty) = c2 duty^2 + c1 duty` over duty in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThrustMap {
    pub c2: f64,
    pub c1: f64,
}

impl Default for ThrustMap {
    fn default() -> Self {
        Self { c2: 3.0, c1: 1.0 }
    }
}

impl ThrustMap {
    pub fn validate(&self) -> Result<()> {
        if self.c2 > 0.0 && self.c1 >= 0.0 && self.c2.is_finite() && self.c1.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "thrust map needs c2 > 0 and c1 >= 0, got c2={} c1={}",
                self.c2, self.c1
            )))
        }
    }

    pub fn thrust(&self, duty: f64) -> f64 {
        self.c2 * duty * duty + self.c1 * duty
    }

    pub fn max_thrust(&self) -> f64 {
        self.thrust(1.0)
    }

    /// Duty cycle producing thrust `f`; out-of-range thrusts clamp and flag saturation.
    pub fn thrust_to_duty(&self, f: f64) -> (f64, bool) {
        if f <= 0.0 {
            return (0.0, f < 0.0);
        }
        if f >= self.max_thrust() {
            return (1.0, f > self.max_thrust());
        }
        // positive root of c2 d^2 + c1 d - f = 0, written to avoid cancellation
        let disc = self.c1 * self.c1 + 4.0 * self.c2 * f;
        let duty = 2.0 * f / (self.c1 + disc.sqrt());
        (duty.clamp(0.0, 1.0), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_gains() {
        let g = gains_from(0.149, 0.7, 0.00788).unwrap();
        assert!((g.k_p / 0.353 - 1.0).abs() < 0.02, "{}", g.k_p);
        assert!((g.k_d / 0.071 - 1.0).abs() < 0.05, "{}", g.k_d);
        assert!((g.k_p - 0.00788 / (0.149 * 0.149)).abs() < 1e-12);
        assert!((g.k_d - 2.0 * 0.7 * 0.00788 / 0.149).abs() < 1e-12);
    }

    #[test]
    fn unit_gains_and_linearity_in_inertia() {
        let g = gains_from(1.0, 0.5, 1.0).unwrap();
        assert_eq!((g.k_p, g.k_d), (1.0, 1.0));
        let a = gains_from(0.2, 0.8, 0.01).unwrap();
        let b = gains_from(0.2, 0.8, 0.02).unwrap();
        assert_eq!(b.k_p, 2.0 * a.k_p);
        assert_eq!(b.k_d, 2.0 * a.k_d);
    }

    #[test]
    fn non_positive_synthesis_inputs_rejected() {
        assert!(gains_from(0.0, 0.7, 0.01).is_err());
        assert!(gains_from(0.1, -0.7, 0.01).is_err());
        assert!(gains_from(0.1, 0.7, 0.0).is_err());
    }

    #[test]
    fn pd_examples() {
        let g = ControllerGains { k_p: 0.353, k_d: 0.071 };
        assert_eq!(pd_torque(0.3, 0.2, 0.3, 0.2, &g), 0.0);
        assert!((pd_torque(0.0, 0.5, 1.0, 0.5, &g) - 0.353).abs() < 1e-15);
        assert!((pd_torque(0.0, 0.0, 0.0, 1.0, &g) - 0.071).abs() < 1e-15);
    }

    #[test]
    fn allocation_examples() {
        let p = PlantParams::default();
        let c = allocate(0.0, &p);
        assert_eq!((c.f1, c.f2, c.saturated), (p.f0, p.f0, false));
        let c = allocate(p.arm * p.f_max, &p);
        assert_eq!((c.f1, c.f2), (p.f_max, 0.0));
        assert!(!c.saturated, "exactly at the rails is not beyond them");
        let c = allocate(1.5 * p.arm * p.f_max, &p);
        assert_eq!((c.f1, c.f2, c.saturated), (p.f_max, 0.0, true));
        let a = allocate(0.13, &p);
        let b = allocate(-0.13, &p);
        assert_eq!((a.f1, a.f2), (b.f2, b.f1));
    }

    #[test]
    fn duty_examples() {
        let m = ThrustMap::default();
        assert_eq!(m.thrust_to_duty(0.0), (0.0, false));
        let quad = ThrustMap { c2: 4.0, c1: 0.0 };
        assert!((quad.thrust_to_duty(1.0).0 - 0.5).abs() < 1e-15);
        assert_eq!(m.thrust_to_duty(5.0), (1.0, true));
        assert_eq!(m.thrust_to_duty(-1.0), (0.0, true));
        assert!(ThrustMap { c2: 0.0, c1: 1.0 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn duty_round_trip(d in 0.0f64..=1.0, c2 in 0.1f64..10.0, c1 in 0.0f64..5.0) {
            let m = ThrustMap { c2, c1 };
            let (back, sat) = m.thrust_to_duty(m.thrust(d));
            prop_assert!((back - d).abs() < 1e-9);
            prop_assert!(!sat);
        }

        #[test]
        fn pd_is_linear_in_error(e in -3.0f64..3.0, de in -10.0f64..10.0, lambda in -4.0f64..4.0) {
            let g = ControllerGains { k_p: 0.353, k_d: 0.071 };
            let base = pd_torque(0.0, 0.0, e, de, &g);
            let scaled = pd_torque(0.0, 0.0, lambda * e, lambda * de, &g);
            prop_assert!((scaled - lambda * base).abs() <= 1e-12 * (1.0 + scaled.abs()));
        }

        #[test]
        fn unsaturated_allocation_reproduces_torque(t in -0.59f64..0.59) {
            let p = PlantParams::default();
            let c = allocate(t, &p);
            prop_assert!(!c.saturated);
            prop_assert!((c.torque(&p) - t).abs() < 1e-12);
        }
    }
}
