use horizon_core::camera::{Event, Polarity};
use horizon_core::estimator::{HoughParams, HoughWindow, RHO_BINS, THETA_BINS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Votes of every buffered event, recomputed from scratch.
fn rebuilt(events: &[Event], cx: f64, cy: f64) -> Vec<u32> {
    let mut acc = vec![0u32; THETA_BINS * RHO_BINS];
    for e in events {
        for t in 0..THETA_BINS {
            let theta = (5.0 * t as f64).to_radians();
            let rho = (f64::from(e.x) - cx) * theta.cos() + (f64::from(e.y) - cy) * theta.sin();
            // half-bin ties round away from the center bin
            let r = ((rho / 5.0).round() + 30.0) as usize;
            acc[t * RHO_BINS + r] += 1;
        }
    }
    acc
}

fn check(w: &HoughWindow) {
    let events: Vec<Event> = w.events().copied().collect();
    let p = w.params();
    assert_eq!(w.accumulator(), rebuilt(&events, p.cx, p.cy).as_slice());
}

#[test]
fn incremental_accumulator_matches_rebuild_over_1e5_operations() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4f75);
    let mut w = HoughWindow::new(HoughParams::default());
    let mut t = 0u64;
    let mut evictions = 0usize;
    for _ in 0..100_000 {
        if rng.random_bool(0.7) {
            t += rng.random_range(0..60);
            let e = Event {
                x: rng.random_range(0..240),
                y: rng.random_range(0..180),
                polarity: if rng.random_bool(0.5) {
                    Polarity::On
                } else {
                    Polarity::Off
                },
                t_us: t,
            };
            w.insert(e).unwrap();
        } else {
            evictions += w.maintain(t + rng.random_range(0..4000)).len();
        }
        check(&w);
    }
    assert!(evictions > 10_000, "{evictions}");
}

proptest! {
    #[test]
    fn maintain_leaves_a_young_bounded_window(
        gaps in prop::collection::vec(0u64..200, 1..300),
        now_offset in 0u64..5000,
    ) {
        let mut w = HoughWindow::new(HoughParams::default());
        let mut t = 0;
        for (i, g) in gaps.iter().enumerate() {
            t += g;
            w.insert(Event { x: (i * 7 % 240) as u16, y: (i * 13 % 180) as u16, polarity: Polarity::On, t_us: t }).unwrap();
        }
        let now = t + now_offset;
        w.maintain(now);
        prop_assert!(w.len() <= 80);
        prop_assert!(w.events().all(|e| e.t_us + 3000 >= now));
        check(&w);
    }
}
