use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One frequency-response measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodePoint {
    pub omega: f64,
    pub gain_db: f64,
    pub phase_deg: f64,
}

/// `K e^{-s T_d} / (1 + a1 s + a2 s^2 + a3 s^3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferFit {
    pub k: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Dead time (s).
    pub delay: f64,
}

impl TransferFit {
    /// Second-order lag with natural frequency `omega_n`, damping `zeta`, and a first-order
    /// pole with time constant `tau_pole` in series.
    pub fn from_factors(k: f64, omega_n: f64, zeta: f64, tau_pole: f64, delay: f64) -> Self {
        let a2_base = 1.0 / (omega_n * omega_n);
        let a1_base = 2.0 * zeta / omega_n;
        Self {
            k,
            a1: a1_base + tau_pole,
            a2: a2_base + tau_pole * a1_base,
            a3: tau_pole * a2_base,
            delay,
        }
    }

    fn denominator(&self, omega: f64) -> (f64, f64) {
        let w2 = omega * omega;
        (1.0 - self.a2 * w2, self.a1 * omega - self.a3 * w2 * omega)
    }

    pub fn gain_db(&self, omega: f64) -> f64 {
        let (re, im) = self.denominator(omega);
        20.0 * self.k.abs().log10() - 10.0 * (re * re + im * im).log10()
    }

    /// Phase in degrees; the rational part is taken in `(-360, 0]`.
    pub fn phase_deg(&self, omega: f64) -> f64 {
        let (re, im) = self.denominator(omega);
        let mut lag = im.atan2(re);
        if lag < 0.0 {
            lag += std::f64::consts::TAU;
        }
        -(lag + omega * self.delay).to_degrees()
    }

    pub fn bode(&self, omegas: &[f64]) -> Vec<BodePoint> {
        omegas
            .iter()
            .map(|&omega| BodePoint {
                omega,
                gain_db: self.gain_db(omega),
                phase_deg: self.phase_deg(omega),
            })
            .collect()
    }

    /// Undamped natural frequency of the dominant complex pole pair (rad/s).
    ///
    /// With `a3 > 0` the real pole of the cubic is factored out first.
    pub fn natural_frequency(&self) -> Option<f64> {
        if self.a2.is_nan() || self.a2 <= 0.0 {
            return None;
        }
        if self.a3 <= 1e-12 * self.a2 {
            return Some(1.0 / self.a2.sqrt());
        }
        // a3 s^3 + a2 s^2 + a1 s + 1: bisect for the real root on the negative axis
        let p = |s: f64| ((self.a3 * s + self.a2) * s + self.a1) * s + 1.0;
        let mut lo = -1.0;
        while p(lo) > 0.0 {
            lo *= 2.0;
            if lo < -1e12 {
                return None;
            }
        }
        let mut hi = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        // deflate: a3 s^3 + a2 s^2 + a1 s + 1 = (s - r)(a3 s^2 + b s + c), with c = -1 / r
        let c = -1.0 / r;
        let omega_sq = c / self.a3;
        (omega_sq > 0.0).then(|| omega_sq.sqrt())
    }
}

/// Picks `phase + 360 k` closest to `reference`.
pub fn unwrap_near(phase_deg: f64, reference: f64) -> f64 {
    phase_deg + 360.0 * ((reference - phase_deg) / 360.0).round()
}

/// Wraps into `(-180, 180]`.
pub fn wrap_deg(phase_deg: f64) -> f64 {
    let w = phase_deg.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Unwraps a phase sequence ordered by frequency, anchoring the first point in `(-180, 180]`.
pub fn unwrap_phases(points: &mut [BodePoint]) {
    let mut prev: Option<f64> = None;
    for p in points.iter_mut() {
        p.phase_deg = match prev {
            None => wrap_deg(p.phase_deg),
            Some(r) => unwrap_near(p.phase_deg, r),
        };
        prev = Some(p.phase_deg);
    }
}

/// Gain and phase of `output` relative to the input `amplitude * sin(omega t)`.
///
/// Fits `a sin(omega t) + b cos(omega t) + c` by least squares to the samples
/// after `transient_s`; the record after the cut must cover at least five
/// periods. The phase is unwrapped against `previous_phase_deg` when given.
pub fn extract_response(
    times_s: &[f64],
    output: &[f64],
    omega: f64,
    amplitude: f64,
    transient_s: f64,
    previous_phase_deg: Option<f64>,
) -> Result<BodePoint> {
    if times_s.len() != output.len() {
        return Err(Error::Analysis("time and output series differ in length".into()));
    }
    if omega.is_nan() || omega <= 0.0 || amplitude == 0.0 {
        return Err(Error::Analysis(format!(
            "need omega > 0 and non-zero amplitude, got {omega}, {amplitude}"
        )));
    }
    let (Some(&first), Some(&last)) = (times_s.first(), times_s.last()) else {
        return Err(Error::Analysis("empty record".into()));
    };
    let start = first + transient_s;
    let period = std::f64::consts::TAU / omega;
    if last - start < 5.0 * period {
        return Err(Error::Analysis(format!(
            "record of {:.3} s after a {transient_s:.3} s transient holds fewer than 5 periods of {period:.3} s",
            last - first
        )));
    }

    // normal equations for [sin, cos, 1]
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&t, &y) in times_s.iter().zip(output) {
        if t < start {
            continue;
        }
        let (s, c) = (omega * t).sin_cos();
        let basis = [s, c, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * y;
        }
    }
    let [a, b, _] = solve3(m, rhs).ok_or_else(|| Error::Analysis("singular regression".into()))?;

    let ratio = (a * a + b * b).sqrt() / amplitude.abs();
    let mut phase = b.atan2(a).to_degrees();
    if amplitude < 0.0 {
        phase += 180.0;
    }
    let phase_deg = match previous_phase_deg {
        Some(prev) => unwrap_near(phase, prev),
        None => wrap_deg(phase),
    };
    Ok(BodePoint {
        omega,
        gain_db: 20.0 * ratio.log10(),
        phase_deg,
    })
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(f: impl Fn(f64) -> f64, seconds: f64) -> (Vec<f64>, Vec<f64>) {
        let n = (seconds * 1000.0) as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * 1e-3).collect();
        let y = t.iter().map(|&t| f(t)).collect();
        (t, y)
    }

    #[test]
    fn identity_plant() {
        let w = 3.0;
        let (t, y) = record(|t| 2.0 * (w * t).sin(), 20.0);
        let p = extract_response(&t, &y, w, 2.0, 1.0, None).unwrap();
        assert!(p.gain_db.abs() < 1e-9);
        assert!(p.phase_deg.abs() < 1e-9);
    }

    #[test]
    fn pure_delay() {
        let (w, d) = (5.0, 0.012);
        let (t, y) = record(|t| 1.5 * (w * (t - d)).sin(), 20.0);
        let p = extract_response(&t, &y, w, 1.5, 0.5, None).unwrap();
        assert!(p.gain_db.abs() < 1e-9);
        assert!((p.phase_deg + w * d * 180.0 / std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn second_order_plant_at_natural_frequency() {
        // simulate y'' + 2 zeta wn y' + wn^2 y = wn^2 u with RK4 at 10 us
        let (tau, zeta) = (0.149, 0.7);
        let wn = 1.0 / tau;
        let amp = 0.5;
        let h = 1e-5;
        let (mut y, mut v) = (0.0f64, 0.0f64);
        let deriv = |t: f64, y: f64, v: f64| (v, wn * wn * (amp * (wn * t).sin() - y) - 2.0 * zeta * wn * v);
        let mut times = Vec::new();
        let mut out = Vec::new();
        let steps = (12.0 / h) as usize;
        for k in 0..steps {
            let t = k as f64 * h;
            if k % 100 == 0 {
                times.push(t);
                out.push(y);
            }
            let k1 = deriv(t, y, v);
            let k2 = deriv(t + h / 2.0, y + h / 2.0 * k1.0, v + h / 2.0 * k1.1);
            let k3 = deriv(t + h / 2.0, y + h / 2.0 * k2.0, v + h / 2.0 * k2.1);
            let k4 = deriv(t + h, y + h * k3.0, v + h * k3.1);
            y += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        let p = extract_response(&times, &out, wn, amp, 3.0 * tau * 4.0, None).unwrap();
        assert!((p.gain_db + 20.0 * (2.0 * zeta).log10()).abs() < 0.01, "{p:?}");
        assert!((p.gain_db + 2.92).abs() < 0.01);
        assert!((p.phase_deg + 90.0).abs() < 0.05, "{p:?}");
    }

    #[test]
    fn amplitude_invariance() {
        let w = 2.0;
        let (t, y) = record(|t| 0.7 * (w * t - 0.4).sin() + 0.1, 30.0);
        let base = extract_response(&t, &y, w, 1.3, 0.0, None).unwrap();
        let scaled: Vec<f64> = y.iter().map(|v| v * 4.0).collect();
        let p = extract_response(&t, &scaled, w, 1.3 * 4.0, 0.0, None).unwrap();
        assert!((p.gain_db - base.gain_db).abs() < 1e-9);
        assert!((p.phase_deg - base.phase_deg).abs() < 1e-9);
    }

    #[test]
    fn short_record_is_an_error() {
        let w = 1.0;
        let (t, y) = record(|t| (w * t).sin(), 20.0);
        assert!(matches!(
            extract_response(&t, &y, w, 1.0, 0.0, None),
            Err(Error::Analysis(_))
        ));
        assert!(extract_response(&t, &y, w, 1.0, 1.0, None).is_err());
    }

    #[test]
    fn phase_unwrapped_against_previous() {
        let w = 4.0;
        let (t, y) = record(|t| (w * t - 200f64.to_radians()).sin(), 20.0);
        let p = extract_response(&t, &y, w, 1.0, 0.0, None).unwrap();
        assert!((p.phase_deg - 160.0).abs() < 1e-6);
        let p = extract_response(&t, &y, w, 1.0, 0.0, Some(-170.0)).unwrap();
        assert!((p.phase_deg + 200.0).abs() < 1e-6);
    }

    #[test]
    fn factored_model_natural_frequency() {
        let f = TransferFit::from_factors(1.0, 6.69, 0.7, 0.02, 0.0);
        assert!((f.natural_frequency().unwrap() - 6.69).abs() < 1e-9);
        let g = TransferFit::from_factors(1.0, 6.69, 0.7, 0.0, 0.0);
        assert!((g.natural_frequency().unwrap() - 6.69).abs() < 1e-9);
    }

    #[test]
    fn model_phase_has_third_order_asymptote() {
        let f = TransferFit::from_factors(1.0, 6.69, 0.7, 0.02, 0.0);
        assert!(f.phase_deg(1e-3).abs() < 0.1);
        assert!((f.phase_deg(1e4) + 270.0).abs() < 1.0);
        let slope = f.gain_db(1000.0) - f.gain_db(100.0);
        assert!((slope + 60.0).abs() < 1.0, "{slope}");
    }
}
