//! The closed loop at 1 kHz: camera and encoders through their delay lines
//! into the feedback source, the PD law, the command delay line and ten
//! physics sub-steps per tick.

use std::path::{Path, PathBuf};

use horizon_core::camera::{Event, EventCamera};
use horizon_core::controller::{allocate, pd_torque, ControllerGains, ThrustCommand};
use horizon_core::dynamics::{
    steering_channel, step_physics, Axis, DelayLine, EncoderPair, ManualInput, ReferenceSignal, Steering, WorldState,
    PHYSICS_STEP_US, TICK_US,
};
use horizon_core::estimator::HorizonEstimator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EncoderBias, ExperimentConfig, Feedback, Routing, Scenario, Timing};
use crate::error::{HarnessError, Result};
use crate::logs::{CommandRow, EstimateRow, RunLogs, TrajectoryRow};
use crate::metrics::{summarize, RunSummary};

/// Relative roll and rate the controller acts on (deg, deg/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackState {
    pub alpha_deg: f64,
    pub alpha_dot_deg_s: f64,
}

/// The single control path shared by every feedback source: degrees in,
/// radians at the PD law, thrusts out. No state, disabled control or the
/// coast scenario mean no differential thrust.
pub fn command_for(
    state: Option<FeedbackState>,
    alpha_des: f64,
    alpha_dot_des: f64,
    gains: &ControllerGains,
    cfg: &ExperimentConfig,
) -> (f64, ThrustCommand) {
    let torque = match state {
        Some(s) if cfg.control.enabled && cfg.scenario.routing() != Routing::Idle => pd_torque(
            s.alpha_deg.to_radians(),
            s.alpha_dot_deg_s.to_radians(),
            alpha_des,
            alpha_dot_des,
            gains,
        ),
        _ => 0.0,
    };
    (torque, allocate(torque, &cfg.plant))
}

/// Everything logged for one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub trajectory: TrajectoryRow,
    pub estimate: EstimateRow,
    pub command: CommandRow,
    /// Events generated during the frame's physics sub-steps (true timestamps).
    pub events: Vec<Event>,
}

/// Scripted stand-in for a hand turning the disk at a constant rate.
#[derive(Debug)]
struct Hand {
    steering: Steering,
    rate_deg_s: f64,
}

#[derive(Debug)]
pub struct Experiment {
    cfg: ExperimentConfig,
    gains: ControllerGains,
    model_inertia: f64,
    routing: Routing,
    world: WorldState,
    camera: EventCamera,
    rng: ChaCha8Rng,
    encoders: EncoderPair,
    reference: Option<ReferenceSignal>,
    hand: Option<Hand>,
    estimator: HorizonEstimator,
    event_line: DelayLine<Event>,
    encoder_line: DelayLine<f64>,
    command_line: DelayLine<ThrustCommand>,
    released: Vec<Event>,
    last_encoder: Option<f64>,
    last_command_torque: f64,
    next_tick: u64,
}

impl Experiment {
    /// Batch experiment; `manual` scenarios get a scripted hand.
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let (steering, input) = steering_channel();
        let mut exp = Self::build(cfg, input)?;
        if let Scenario::Manual { ramp_deg_s } = exp.cfg.scenario {
            exp.hand = Some(Hand {
                steering,
                rate_deg_s: ramp_deg_s,
            });
        }
        Ok(exp)
    }

    /// Experiment whose manual disk angle comes from an external steering channel.
    pub fn with_manual_input(cfg: ExperimentConfig, input: ManualInput) -> Result<Self> {
        if !matches!(cfg.scenario, Scenario::Manual { .. }) {
            return Err(HarnessError::Config(
                "an external steering channel needs the manual scenario".into(),
            ));
        }
        Self::build(cfg, input)
    }

    fn build(cfg: ExperimentConfig, input: ManualInput) -> Result<Self> {
        cfg.validate()?;
        let gains = cfg.gains.gains()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let encoders = match cfg.encoder_bias {
            EncoderBias::Random => EncoderPair::random(&mut rng),
            EncoderBias::Zero => EncoderPair::ideal(),
        };
        let reference = match cfg.scenario.reference() {
            Some(horizon_core::dynamics::Reference::Manual) => Some(ReferenceSignal::manual(input)),
            Some(r) => Some(ReferenceSignal::scripted(r)?),
            None => None,
        };
        let routing = cfg.scenario.routing();

        let mut world = WorldState::at_rest(&cfg.plant);
        if let Scenario::Coast { initial_rate_deg_s } = cfg.scenario {
            world.alpha_dot = initial_rate_deg_s.to_radians();
        }
        let mut estimator = HorizonEstimator::new(cfg.estimator);
        if routing == Routing::Attitude && cfg.control.prior_at_start {
            estimator = estimator.with_prior(0.0, 0);
        }
        let command_delay = cfg.delays.command_us
            + if cfg.feedback == Feedback::Vision {
                cfg.delays.compute_us
            } else {
                0
            };

        let mut exp = Self {
            gains,
            model_inertia: cfg.gains.model_inertia().unwrap_or(cfg.plant.inertia),
            routing,
            world,
            camera: EventCamera::new(cfg.camera)?,
            rng,
            encoders,
            reference,
            hand: None,
            estimator,
            event_line: DelayLine::new(cfg.delays.event_us),
            encoder_line: DelayLine::new(cfg.delays.encoder_us),
            command_line: DelayLine::new(command_delay),
            released: Vec::new(),
            last_encoder: None,
            last_command_torque: 0.0,
            next_tick: 0,
            cfg,
        };
        exp.world.disk_angle = exp.disk_angle_at(0);
        Ok(exp)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn gains(&self) -> &ControllerGains {
        &self.gains
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    /// Time of the next frame (us).
    pub fn now_us(&self) -> u64 {
        self.next_tick * TICK_US
    }

    fn disk_angle_at(&mut self, t_us: u64) -> f64 {
        if self.routing != Routing::Disk {
            return 0.0;
        }
        if let Some(hand) = &self.hand {
            hand.steering.send((hand.rate_deg_s * t_us as f64 * 1e-6).to_radians());
        }
        self.reference.as_mut().map_or(0.0, |r| r.angle_at(t_us))
    }

    /// Desired relative attitude and rate (rad, rad/s) at `t_us`.
    pub fn desired_at(&mut self, t_us: u64) -> (f64, f64) {
        match (self.routing, self.reference.as_mut()) {
            (Routing::Attitude, Some(r)) => {
                let rate = if self.cfg.control.rate_feedforward {
                    r.rate_at(t_us)
                } else {
                    0.0
                };
                (r.angle_at(t_us), rate)
            }
            _ => (0.0, 0.0),
        }
    }

    fn feedback(&mut self, t_us: u64) -> Result<(Option<FeedbackState>, EstimateRow)> {
        let mut row = EstimateRow {
            t_us,
            alpha_est_deg: f64::NAN,
            alpha_dot_est_deg_s: f64::NAN,
            meas_deg_or_nan: f64::NAN,
            peak_count: 0,
            tick_compute_us: 0.0,
        };
        let state = match self.cfg.feedback {
            Feedback::Vision => {
                self.released.clear();
                self.event_line.pop_into(t_us, &mut self.released)?;
                let u = (self.last_command_torque / self.model_inertia * TICK_US as f64 * 1e-6).to_degrees();
                // the window ages events on the sensor clock, which the delivered
                // stream is complete up to one transport delay ago
                let sensor_now = t_us.saturating_sub(self.cfg.delays.event_us);
                let out = self.estimator.tick(&self.released, u, sensor_now)?;
                row.peak_count = out.peak_count;
                if let Some(m) = out.measurement {
                    row.meas_deg_or_nan = m.z;
                }
                if self.cfg.timing == Timing::Measured {
                    row.tick_compute_us = out.compute_us;
                }
                out.state.map(|s| FeedbackState {
                    alpha_deg: s.alpha,
                    alpha_dot_deg_s: s.alpha_dot,
                })
            }
            Feedback::Encoder => {
                let reading =
                    self.encoders.read(&self.world, Axis::Dualcopter) - self.encoders.read(&self.world, Axis::Disk);
                self.encoder_line.push(t_us, reading)?;
                let held = self.encoder_line.hold(t_us)?;
                let rate = match (held, self.last_encoder) {
                    (Some(now), Some(prev)) => (now - prev) / (TICK_US as f64 * 1e-6),
                    _ => 0.0,
                };
                self.last_encoder = held;
                held.map(|alpha_deg| FeedbackState {
                    alpha_deg,
                    alpha_dot_deg_s: rate,
                })
            }
            Feedback::Truth => Some(FeedbackState {
                alpha_deg: self.world.relative_angle().to_degrees(),
                alpha_dot_deg_s: self.world.alpha_dot.to_degrees(),
            }),
        };
        if let Some(s) = state {
            row.alpha_est_deg = s.alpha_deg;
            row.alpha_dot_est_deg_s = s.alpha_dot_deg_s;
        }
        Ok((state, row))
    }

    /// Runs one 1 ms frame in the fixed order: release events, estimate,
    /// control, queue the command, then ten physics sub-steps.
    pub fn step_frame(&mut self) -> Result<Frame> {
        let t_us = self.now_us();
        let w = self.world;
        let trajectory = TrajectoryRow {
            t_us,
            alpha_true_deg: w.alpha.to_degrees(),
            alpha_dot_true_deg_s: w.alpha_dot.to_degrees(),
            disk_angle_deg: w.disk_angle.to_degrees(),
            f1_n: w.f1,
            f2_n: w.f2,
        };

        let (state, estimate) = self.feedback(t_us)?;
        let (alpha_des, alpha_dot_des) = self.desired_at(t_us);
        let (torque, cmd) = command_for(state, alpha_des, alpha_dot_des, &self.gains, &self.cfg);
        let (duty1, sat1) = self.cfg.thrust_map.thrust_to_duty(cmd.f1);
        let (duty2, sat2) = self.cfg.thrust_map.thrust_to_duty(cmd.f2);
        let command = CommandRow {
            t_us,
            torque_nm: torque,
            f1_cmd_n: cmd.f1,
            f2_cmd_n: cmd.f2,
            duty1,
            duty2,
            saturated: cmd.saturated || sat1 || sat2,
        };
        self.last_command_torque = cmd.torque(&self.cfg.plant);
        self.command_line.push(t_us, cmd)?;

        let mut events = Vec::new();
        for k in 0..TICK_US / PHYSICS_STEP_US {
            let t0 = t_us + k * PHYSICS_STEP_US;
            let t1 = t0 + PHYSICS_STEP_US;
            if let Some(c) = self.command_line.hold(t0)? {
                self.world.f1_cmd = c.f1;
                self.world.f2_cmd = c.f2;
            }
            let before = self.world.relative_angle();
            let mut next = step_physics(&self.world, PHYSICS_STEP_US, &self.cfg.plant)?;
            next.disk_angle = self.disk_angle_at(t1);
            self.world = next;
            let generated = self
                .camera
                .sweep(before, next.relative_angle(), t0, t1, &mut self.rng)?;
            for e in &generated {
                self.event_line.push(e.t_us, *e)?;
            }
            events.extend(generated);
        }
        self.next_tick += 1;
        Ok(Frame {
            trajectory,
            estimate,
            command,
            events,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The run stopped early; logs hold every frame before the fault.
    Faulted {
        at_us: u64,
        message: String,
    },
}

/// Result of a batch run held in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub logs: RunLogs,
    pub summary: RunSummary,
    pub status: RunStatus,
}

impl RunOutput {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// `run.json`: what ran, where its logs are, and what they summarize to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub status: RunStatus,
    pub logs: LogPaths,
    pub summary: RunSummary,
}

/// Log locations; relative paths are resolved against the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPaths {
    pub trajectory: PathBuf,
    pub events: PathBuf,
    pub estimate: PathBuf,
    pub command: PathBuf,
}

impl LogPaths {
    pub fn in_dir(dir: &Path) -> Self {
        use crate::logs::{COMMAND_FILE, ESTIMATE_FILE, EVENTS_FILE, TRAJECTORY_FILE};
        Self {
            trajectory: dir.join(TRAJECTORY_FILE),
            events: dir.join(EVENTS_FILE),
            estimate: dir.join(ESTIMATE_FILE),
            command: dir.join(COMMAND_FILE),
        }
    }
}

pub const REPORT_FILE: &str = "run.json";

/// Runs a batch experiment to completion or to its first fault.
///
/// Configuration errors are returned; faults during the run are reported
/// in the output status alongside the partial logs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut exp = Experiment::new(cfg.clone())?;
    let ticks = cfg.ticks();
    let mut logs = RunLogs {
        trajectory: Vec::with_capacity(ticks as usize),
        estimate: Vec::with_capacity(ticks as usize),
        command: Vec::with_capacity(ticks as usize),
        events: Vec::new(),
    };
    let mut status = RunStatus::Completed;
    for _ in 0..ticks {
        let at_us = exp.now_us();
        match exp.step_frame() {
            Ok(frame) => {
                logs.trajectory.push(frame.trajectory);
                logs.estimate.push(frame.estimate);
                logs.command.push(frame.command);
                logs.events.extend(frame.events);
            }
            Err(e) => {
                status = RunStatus::Faulted {
                    at_us,
                    message: e.to_string(),
                };
                break;
            }
        }
    }
    let summary = summarize(cfg, &logs);
    Ok(RunOutput {
        config: cfg.clone(),
        logs,
        summary,
        status,
    })
}

impl RunOutput {
    /// Writes the four logs and `run.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<RunReport> {
        self.logs.write(dir)?;
        let report = RunReport {
            config: self.config.clone(),
            status: self.status.clone(),
            // relative, so a run directory can be moved and still reproduce byte-identically
            logs: LogPaths::in_dir(Path::new("")),
            summary: self.summary,
        };
        let path = dir.join(REPORT_FILE);
        let text = serde_json::to_string_pretty(&report)?;
        std::fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
        Ok(report)
    }
}

/// Reads a run directory back and recomputes its summary from the logs alone.
pub fn recompute_report(dir: &Path) -> Result<(RunReport, RunSummary)> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    let report: RunReport = serde_json::from_str(&text)?;
    let logs = RunLogs::read(dir, &report.config.camera)?;
    let summary = summarize(&report.config, &logs);
    Ok((report, summary))
}
