use horizon_harness::config::{Delays, Timing};
use horizon_harness::experiment::{command_for, recompute_report, FeedbackState};
use horizon_harness::logs::EstimateRow;
use horizon_harness::replay::{replay_events, ReplayOptions};
use horizon_harness::{run_experiment, ExperimentConfig, Feedback, RunStatus, Scenario};

fn step_cfg(feedback: Feedback) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        Scenario::Step {
            amplitude_deg: 90.0,
            at_s: 0.1,
        },
        0.6,
        11,
    );
    cfg.feedback = feedback;
    cfg
}

#[test]
fn identical_config_and_seed_give_byte_identical_logs() {
    let mut cfg = step_cfg(Feedback::Vision);
    cfg.timing = Timing::Off;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg).unwrap().write(a.path()).unwrap();
    run_experiment(&cfg).unwrap().write(b.path()).unwrap();
    for name in [
        "trajectory.csv",
        "events.csv",
        "estimate.csv",
        "command.csv",
        "run.json",
    ] {
        let (x, y) = (
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
        );
        assert!(x == y, "{name} differs between identical runs");
    }
    let mut other = cfg.clone();
    other.seed = 12;
    let c = tempfile::tempdir().unwrap();
    run_experiment(&other).unwrap().write(c.path()).unwrap();
    assert_ne!(
        std::fs::read(a.path().join("events.csv")).unwrap(),
        std::fs::read(c.path().join("events.csv")).unwrap()
    );
}

#[test]
fn coast_holds_rate_constant() {
    let mut cfg = ExperimentConfig::new(
        Scenario::Coast {
            initial_rate_deg_s: 123.0,
        },
        1.0,
        2,
    );
    cfg.plant.disturbance = 0.0;
    let out = run_experiment(&cfg).unwrap();
    assert!(out.is_completed());
    for row in &out.logs.trajectory {
        assert!(
            (row.alpha_dot_true_deg_s - 123.0).abs() < 1e-9,
            "{}",
            row.alpha_dot_true_deg_s
        );
        assert_eq!((row.f1_n, row.f2_n), (cfg.plant.f0, cfg.plant.f0));
    }
    assert!(out.logs.command.iter().all(|c| c.torque_nm == 0.0));
    let last = out.logs.trajectory.last().unwrap();
    assert!((last.alpha_true_deg - 123.0 * 0.999).abs() < 1e-6);
}

#[test]
fn summary_recomputed_from_files_equals_in_run_values() {
    for feedback in [Feedback::Vision, Feedback::Encoder] {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&step_cfg(feedback)).unwrap();
        out.write(dir.path()).unwrap();
        let (report, recomputed) = recompute_report(dir.path()).unwrap();
        assert_eq!(report.summary, out.summary);
        assert_eq!(recomputed, out.summary);
        assert!(out.summary.overshoot_pct.is_some() && out.summary.rmse_deg.is_some());
    }
}

fn feedback_of(row: &EstimateRow) -> Option<FeedbackState> {
    row.is_initialized().then_some(FeedbackState {
        alpha_deg: row.alpha_est_deg,
        alpha_dot_deg_s: row.alpha_dot_est_deg_s,
    })
}

#[test]
fn both_feedback_modes_drive_the_same_control_law() {
    for feedback in [Feedback::Vision, Feedback::Encoder] {
        let cfg = step_cfg(feedback);
        let gains = cfg.gains.gains().unwrap();
        let reference = cfg.scenario.reference().unwrap();
        let out = run_experiment(&cfg).unwrap();
        for (est, cmd) in out.logs.estimate.iter().zip(&out.logs.command) {
            let des = reference.scripted_angle(est.t_us).unwrap();
            let (torque, thrust) = command_for(feedback_of(est), des, 0.0, &gains, &cfg);
            assert_eq!(torque, cmd.torque_nm, "{feedback:?} at {} us", est.t_us);
            assert_eq!((thrust.f1, thrust.f2), (cmd.f1_cmd_n, cmd.f2_cmd_n));
        }
    }
}

#[test]
fn run_fault_keeps_partial_logs() {
    let mut cfg = ExperimentConfig::new(
        Scenario::Coast {
            initial_rate_deg_s: 0.0,
        },
        2.0,
        3,
    );
    // spins the image past what one camera sweep may cover within a few ticks
    cfg.plant.disturbance = 2.5e6;
    let out = run_experiment(&cfg).unwrap();
    let RunStatus::Faulted { at_us, ref message } = out.status else {
        panic!("expected a fault, got {:?}", out.status);
    };
    assert!(at_us > 0 && at_us < 50_000, "{at_us}: {message}");
    assert_eq!(out.logs.trajectory.len() as u64, at_us / 1000);
    let dir = tempfile::tempdir().unwrap();
    let report = out.write(dir.path()).unwrap();
    assert!(matches!(report.status, RunStatus::Faulted { .. }));
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = step_cfg(Feedback::Vision);
    cfg.plant.inertia = -1.0;
    let err = run_experiment(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn replay_reproduces_open_loop_estimates() {
    let mut cfg = ExperimentConfig::new(Scenario::ConstantRateSweep { rate_deg_s: 360.0 }, 0.5, 5);
    cfg.control.enabled = false;
    cfg.delays = Delays::ZERO;
    let out = run_experiment(&cfg).unwrap();
    let options = ReplayOptions {
        ticks: Some(cfg.ticks()),
        record_compute: false,
        ..ReplayOptions::default()
    };
    let replayed = replay_events(&out.logs.events, cfg.estimator, &options).unwrap();
    assert_eq!(replayed.len(), out.logs.estimate.len());
    let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
    for (r, e) in replayed.iter().zip(&out.logs.estimate) {
        assert!(
            same(r.alpha_est_deg, e.alpha_est_deg) && same(r.alpha_dot_est_deg_s, e.alpha_dot_est_deg_s),
            "{r:?} vs {e:?}"
        );
        assert!(same(r.meas_deg_or_nan, e.meas_deg_or_nan));
        assert_eq!(r.peak_count, e.peak_count);
    }
    assert!(out.logs.estimate.iter().filter(|e| e.has_measurement()).count() > 100);
}

#[test]
fn replay_with_transport_delay_matches_delayed_run() {
    let mut cfg = ExperimentConfig::new(Scenario::ConstantRateSweep { rate_deg_s: 200.0 }, 0.4, 6);
    cfg.control.enabled = false;
    cfg.delays = Delays {
        event_us: 3000,
        ..Delays::ZERO
    };
    let out = run_experiment(&cfg).unwrap();
    let options = ReplayOptions {
        event_us: 3000,
        ticks: Some(cfg.ticks()),
        ..ReplayOptions::default()
    };
    let replayed = replay_events(&out.logs.events, cfg.estimator, &options).unwrap();
    for (r, e) in replayed.iter().zip(&out.logs.estimate) {
        assert!(
            r.alpha_est_deg.to_bits() == e.alpha_est_deg.to_bits()
                || (r.alpha_est_deg.is_nan() && e.alpha_est_deg.is_nan())
        );
    }
}
