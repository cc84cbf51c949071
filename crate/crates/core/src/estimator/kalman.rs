use serde::{Deserialize, Serialize};

/// Noise model of the constant-velocity roll filter, in degree units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanParams {
    /// Process variance added to the angle each step (deg^2).
    pub q_angle: f64,
    /// Process variance added to the rate each step ((deg/s)^2).
    pub q_rate: f64,
    /// Angle measurement variance (deg^2).
    pub r: f64,
    /// Covariance assigned at initialization from the first measurement.
    pub init_var_angle: f64,
    pub init_var_rate: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self {
            q_angle: 1.0,
            q_rate: 10_000.0,
            r: 10.0,
            init_var_angle: 25.0,
            init_var_rate: 1e6,
        }
    }
}

/// Relative roll (deg), roll rate (deg/s) and their covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    pub alpha: f64,
    pub alpha_dot: f64,
    pub p: [[f64; 2]; 2],
    pub t_us: u64,
}

impl EstimatorState {
    pub fn new(alpha: f64, alpha_dot: f64, var_angle: f64, var_rate: f64, t_us: u64) -> Self {
        Self {
            alpha,
            alpha_dot,
            p: [[var_angle, 0.0], [0.0, var_rate]],
            t_us,
        }
    }

    pub fn is_valid(&self) -> bool {
        let p = &self.p;
        p[0][1] == p[1][0] && p[0][0] > 0.0 && p[1][1] > 0.0 && p[0][0] * p[1][1] - p[0][1] * p[1][0] > 0.0
    }
}

/// Propagates the state one step: `alpha += alpha_dot * dt`, `alpha_dot += u`,
/// `P = A P A^T + Q` with `A = [[1, dt], [0, 1]]`.
pub fn kf_predict(s: &EstimatorState, u: f64, dt: f64, params: &KalmanParams) -> EstimatorState {
    let [[p00, p01], [_, p11]] = s.p;
    let cross = p01 + dt * p11;
    EstimatorState {
        alpha: s.alpha + s.alpha_dot * dt,
        alpha_dot: s.alpha_dot + u,
        p: [
            [p00 + dt * (2.0 * p01 + dt * p11) + params.q_angle, cross],
            [cross, p11 + params.q_rate],
        ],
        t_us: s.t_us + (dt * 1e6).round() as u64,
    }
}

/// Corrects the state with an angle measurement `z` (deg).
///
/// The posterior covariance uses the Joseph form
/// `(I - K H) P (I - K H)^T + K R K^T` with `H = [1, 0]`.
pub fn kf_update(s: &EstimatorState, z: f64, params: &KalmanParams) -> EstimatorState {
    let [[p00, p01], [_, p11]] = s.p;
    let innovation_var = p00 + params.r;
    let k0 = p00 / innovation_var;
    let k1 = p01 / innovation_var;
    let innovation = z - s.alpha;

    // I - K H = [[1 - k0, 0], [-k1, 1]]
    let a = 1.0 - k0;
    let r = params.r;
    let n00 = a * a * p00 + k0 * k0 * r;
    let n01 = a * (p01 - k1 * p00) + k0 * k1 * r;
    let n11 = k1 * k1 * p00 - 2.0 * k1 * p01 + p11 + k1 * k1 * r;

    EstimatorState {
        alpha: s.alpha + k0 * innovation,
        alpha_dot: s.alpha_dot + k1 * innovation,
        p: [[n00, n01], [n01, n11]],
        t_us: s.t_us,
    }
}
