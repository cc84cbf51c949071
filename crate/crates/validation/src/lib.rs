//! Reference implementations written straight from the textbook formulas,
//! kept apart from the production code they check.

use horizon_core::estimator::{HoughWindow, RHO_BINS, THETA_BINS};
use nalgebra::{Matrix1, Matrix2, RowVector2, Vector2};

/// Accumulator of every event in `window`, voted from scratch.
pub fn rebuilt_accumulator(window: &HoughWindow) -> Vec<u32> {
    let p = window.params();
    let mut acc = vec![0u32; THETA_BINS * RHO_BINS];
    for e in window.events() {
        for t in 0..THETA_BINS {
            let theta = (5.0 * t as f64).to_radians();
            let rho = (f64::from(e.x) - p.cx) * theta.cos() + (f64::from(e.y) - p.cy) * theta.sin();
            // half-bin ties round away from the center bin
            acc[t * RHO_BINS + ((rho / 5.0).round() + 30.0) as usize] += 1;
        }
    }
    acc
}

/// Constant-velocity Kalman filter on dense 2x2 matrices, with the short
/// covariance update `P = (I - K H) P`.
#[derive(Debug, Clone, Copy)]
pub struct DenseKalman {
    pub x: Vector2<f64>,
    pub p: Matrix2<f64>,
}

impl DenseKalman {
    pub fn new(alpha: f64, alpha_dot: f64, var_angle: f64, var_rate: f64) -> Self {
        Self {
            x: Vector2::new(alpha, alpha_dot),
            p: Matrix2::new(var_angle, 0.0, 0.0, var_rate),
        }
    }

    pub fn predict(&mut self, u: f64, dt: f64, q_angle: f64, q_rate: f64) {
        let a = Matrix2::new(1.0, dt, 0.0, 1.0);
        self.x = a * self.x + Vector2::new(0.0, u);
        self.p = a * self.p * a.transpose() + Matrix2::new(q_angle, 0.0, 0.0, q_rate);
    }

    pub fn update(&mut self, z: f64, r: f64) {
        let h = RowVector2::new(1.0, 0.0);
        let s = h * self.p * h.transpose() + Matrix1::new(r);
        let k = self.p * h.transpose() * s.try_inverse().expect("innovation variance is positive");
        self.x += k * (Matrix1::new(z) - h * self.x);
        self.p = (Matrix2::identity() - k * h) * self.p;
    }

    /// Covariance entry, symmetrized since the short update is only symmetric up to rounding.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.p[(i, j)] + self.p[(j, i)])
    }
}

/// Unit step response of `wn^2 / (s^2 + 2 zeta wn s + wn^2)` for `0 < zeta < 1`.
pub fn second_order_step(t: f64, wn: f64, zeta: f64) -> f64 {
    let root = (1.0 - zeta * zeta).sqrt();
    let wd = wn * root;
    1.0 - (-zeta * wn * t).exp() * ((wd * t).cos() + zeta / root * (wd * t).sin())
}

/// Peak overshoot (fraction) of the same response.
pub fn second_order_overshoot(zeta: f64) -> f64 {
    (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp()
}
