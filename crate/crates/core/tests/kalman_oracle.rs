use horizon_core::estimator::{kf_predict, kf_update, EstimatorState, KalmanParams};
use nalgebra::{Matrix1, Matrix2, RowVector2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Dense {
    x: Vector2<f64>,
    p: Matrix2<f64>,
}

impl Dense {
    fn predict(&mut self, u: f64, dt: f64, q: &Matrix2<f64>) {
        let a = Matrix2::new(1.0, dt, 0.0, 1.0);
        let b = Vector2::new(0.0, 1.0);
        self.x = a * self.x + b * u;
        self.p = a * self.p * a.transpose() + q;
    }

    fn update(&mut self, z: f64, r: f64) {
        let h = RowVector2::new(1.0, 0.0);
        let s = h * self.p * h.transpose() + Matrix1::new(r);
        let k = self.p * h.transpose() * s.try_inverse().unwrap();
        self.x += k * (Matrix1::new(z) - h * self.x);
        self.p = (Matrix2::identity() - k * h) * self.p;
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn filter_matches_dense_oracle_over_1e4_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b66);
    let mut steps = 0usize;
    for _ in 0..10_000 {
        let params = KalmanParams {
            q_angle: rng.random_range(0.01..10.0),
            q_rate: rng.random_range(1.0..1e5),
            r: rng.random_range(0.1..100.0),
            ..KalmanParams::default()
        };
        let q = Matrix2::new(params.q_angle, 0.0, 0.0, params.q_rate);
        let (va, vr) = (rng.random_range(0.1..1e3), rng.random_range(1.0..1e6));
        let (a0, r0) = (rng.random_range(-180.0..180.0), rng.random_range(-2000.0..2000.0));
        let mut s = EstimatorState::new(a0, r0, va, vr, 0);
        let mut d = Dense {
            x: Vector2::new(a0, r0),
            p: Matrix2::new(va, 0.0, 0.0, vr),
        };
        for _ in 0..rng.random_range(1..60) {
            if rng.random_bool(0.5) {
                let u = rng.random_range(-50.0..50.0);
                let dt = rng.random_range(1..5) as f64 * 1e-3;
                s = kf_predict(&s, u, dt, &params);
                d.predict(u, dt, &q);
            } else {
                let z = s.alpha + rng.random_range(-20.0..20.0);
                s = kf_update(&s, z, &params);
                d.update(z, params.r);
            }
            steps += 1;
            assert!(
                close(s.alpha, d.x[0]) && close(s.alpha_dot, d.x[1]),
                "{s:?} vs {:?}",
                d.x
            );
            for i in 0..2 {
                for j in 0..2 {
                    // the dense short-form update is only symmetric up to rounding
                    let oracle = 0.5 * (d.p[(i, j)] + d.p[(j, i)]);
                    assert!(close(s.p[i][j], oracle), "P[{i}][{j}] {} vs {oracle}", s.p[i][j]);
                }
            }
            assert!(s.is_valid());
        }
    }
    assert!(steps > 200_000);
}
