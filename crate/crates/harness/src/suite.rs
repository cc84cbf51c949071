//! Experiment grids and their identification: sine sweeps with transfer
//! fits, constant-rate sweeps with latency regression, and the step
//! comparison between feedback sources.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use horizon_core::sysid::{
    delay_from_rmse, extract_response, fit_transfer, log_grid, unwrap_phases, BodePoint, DelayEstimate, FitOptions,
    FitReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{apply_override, Delays, ExperimentConfig, Feedback, Scenario};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, RunOutput, RunStatus};
use crate::metrics::RunSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    BodeVision,
    BodeEncoder,
    RmseSweep,
    StepCompare,
}

impl SuiteName {
    pub const ALL: [Self; 4] = [Self::BodeVision, Self::BodeEncoder, Self::RmseSweep, Self::StepCompare];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BodeVision => "bode_vision",
            Self::BodeEncoder => "bode_encoder",
            Self::RmseSweep => "rmse_sweep",
            Self::StepCompare => "step_compare",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite `{s}`")))
    }
}

/// One pass/fail line of a suite report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn run_status_error(out: &RunOutput) -> Option<String> {
    match &out.status {
        RunStatus::Completed => None,
        RunStatus::Faulted { at_us, message } => Some(format!("faulted at {at_us} us: {message}")),
    }
}

// ---------------------------------------------------------------- bode

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodeSweepOptions {
    pub omegas: Vec<f64>,
    /// Cap on the reference's peak rate (deg/s); sets the amplitude at low frequency.
    pub peak_rate_deg_s: f64,
    /// Share of the torque authority the nominal loop's error may demand.
    pub error_fraction: f64,
    pub min_amplitude_deg: f64,
    pub transient_s: f64,
    pub periods: f64,
    pub min_record_s: f64,
    pub fit: FitOptions,
}

impl Default for BodeSweepOptions {
    fn default() -> Self {
        Self {
            omegas: log_grid(0.5, 50.0, 12),
            peak_rate_deg_s: 600.0,
            error_fraction: 0.8,
            min_amplitude_deg: 20.0,
            transient_s: 1.0,
            periods: 5.0,
            min_record_s: 3.0,
            fit: FitOptions::default(),
        }
    }
}

/// Largest sine amplitude (deg) at `omega` that keeps the nominal
/// second-order loop's error inside the torque authority, capped at the
/// peak reference rate and floored at the minimum amplitude.
pub fn sweep_amplitude(base: &ExperimentConfig, options: &BodeSweepOptions, omega: f64) -> Result<f64> {
    let gains = base.gains.gains()?;
    let inertia = base.gains.model_inertia().unwrap_or(base.plant.inertia);
    let wn2 = gains.k_p / inertia;
    let damping = gains.k_d / inertia;
    // |S(jw)| = |(jw)^2 + c jw| / |(jw)^2 + c jw + wn^2|
    let num = (omega.powi(4) + (damping * omega).powi(2)).sqrt();
    let den = ((wn2 - omega * omega).powi(2) + (damping * omega).powi(2)).sqrt();
    let sensitivity = num / den;
    let max_error = options.error_fraction * base.plant.torque_authority() / gains.k_p.max(f64::MIN_POSITIVE);
    let by_saturation = max_error.to_degrees() / sensitivity;
    let by_rate = options.peak_rate_deg_s / omega;
    Ok(by_rate.min(by_saturation).max(options.min_amplitude_deg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodeRow {
    pub omega: f64,
    pub amplitude_deg: f64,
    /// Response of the true dualcopter attitude.
    pub point: Option<BodePoint>,
    /// Response of the signal the controller acted on (estimate or delayed encoder).
    pub feedback_point: Option<BodePoint>,
    pub availability_pct: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodeSweepReport {
    pub feedback: Feedback,
    pub rows: Vec<BodeRow>,
    pub fit: Option<FitReport>,
    pub fit_error: Option<String>,
}

impl BodeSweepReport {
    pub fn points(&self) -> Vec<BodePoint> {
        self.rows.iter().filter_map(|r| r.point).collect()
    }
}

fn bode_row(base: &ExperimentConfig, feedback: Feedback, options: &BodeSweepOptions, omega: f64) -> BodeRow {
    let mut row = BodeRow {
        omega,
        amplitude_deg: f64::NAN,
        point: None,
        feedback_point: None,
        availability_pct: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let amplitude = sweep_amplitude(base, options, omega)?;
        row.amplitude_deg = amplitude;
        let record = (options.periods * TAU / omega).max(options.min_record_s);
        let mut cfg = base.clone();
        cfg.feedback = feedback;
        cfg.scenario = Scenario::SineSweep {
            amplitude_deg: amplitude,
            omega_rad_s: omega,
        };
        // one spare tick so the last logged sample still closes the record
        cfg.duration_s = options.transient_s + record + 0.002;
        let out = run_experiment(&cfg)?;
        if let Some(e) = run_status_error(&out) {
            return Err(HarnessError::Log(e));
        }
        row.availability_pct = out.summary.availability_pct;
        let times: Vec<f64> = out.logs.trajectory.iter().map(|r| r.t_us as f64 * 1e-6).collect();
        let truth: Vec<f64> = out
            .logs
            .trajectory
            .iter()
            .map(|r| r.alpha_true_deg - r.disk_angle_deg)
            .collect();
        row.point = Some(extract_response(
            &times,
            &truth,
            omega,
            amplitude,
            options.transient_s,
            None,
        )?);
        // uninitialized feedback reads as zero attitude
        let fed: Vec<f64> = out
            .logs
            .estimate
            .iter()
            .map(|r| if r.is_initialized() { r.alpha_est_deg } else { 0.0 })
            .collect();
        row.feedback_point = Some(extract_response(
            &times,
            &fed,
            omega,
            amplitude,
            options.transient_s,
            None,
        )?);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Sine sweep over `options.omegas` with the given feedback source, then a
/// third-order-plus-dead-time fit to the true-attitude response.
pub fn bode_sweep(base: &ExperimentConfig, feedback: Feedback, options: &BodeSweepOptions) -> BodeSweepReport {
    let mut rows: Vec<BodeRow> = options
        .omegas
        .par_iter()
        .map(|&omega| bode_row(base, feedback, options, omega))
        .collect();
    rows.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    fn truth(r: &mut BodeRow) -> &mut Option<BodePoint> {
        &mut r.point
    }
    fn fed(r: &mut BodeRow) -> &mut Option<BodePoint> {
        &mut r.feedback_point
    }
    for pick in [truth as fn(&mut BodeRow) -> &mut Option<BodePoint>, fed] {
        let mut pts: Vec<BodePoint> = rows.iter_mut().filter_map(|r| *pick(r)).collect();
        unwrap_phases(&mut pts);
        let mut it = pts.into_iter();
        for r in rows.iter_mut() {
            if let Some(p) = pick(r) {
                *p = it.next().expect("same count");
            }
        }
    }
    let mut report = BodeSweepReport {
        feedback,
        rows,
        fit: None,
        fit_error: None,
    };
    match fit_transfer(&report.points(), None, &options.fit) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    report
}

// ---------------------------------------------------------------- rmse

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmseSweepOptions {
    pub speeds_deg_s: Vec<f64>,
    pub duration_s: f64,
    /// Delay-free error floor; only samples above it enter the regression.
    pub baseline_deg: f64,
}

impl Default for RmseSweepOptions {
    fn default() -> Self {
        Self {
            speeds_deg_s: vec![100.0, 200.0, 360.0, 500.0, 800.0, 1000.0, 1200.0, 1600.0],
            duration_s: 3.0,
            baseline_deg: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSample {
    pub speed_deg_s: f64,
    pub rmse_deg: Option<f64>,
    pub availability_pct: Option<f64>,
    pub used_in_fit: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseSweepReport {
    pub event_us: u64,
    pub compute_us: u64,
    /// Event transport plus estimator compute (ms).
    pub injected_delay_ms: f64,
    pub samples: Vec<RmseSample>,
    pub estimate: Option<DelayEstimate>,
    pub fit_error: Option<String>,
}

/// Open-loop constant-rate runs: the disk turns, the rotors idle, and the
/// estimate is scored against the true relative attitude.
pub fn rmse_sweep(
    base: &ExperimentConfig,
    event_us: u64,
    compute_us: u64,
    options: &RmseSweepOptions,
) -> RmseSweepReport {
    let mut samples: Vec<RmseSample> = options
        .speeds_deg_s
        .par_iter()
        .map(|&speed| {
            let mut cfg = base.clone();
            cfg.scenario = Scenario::ConstantRateSweep { rate_deg_s: speed };
            cfg.feedback = Feedback::Vision;
            cfg.control.enabled = false;
            cfg.delays.event_us = event_us;
            cfg.delays.compute_us = compute_us;
            cfg.duration_s = options.duration_s;
            let mut sample = RmseSample {
                speed_deg_s: speed,
                rmse_deg: None,
                availability_pct: None,
                used_in_fit: false,
                error: None,
            };
            match run_experiment(&cfg) {
                Ok(out) => {
                    sample.error = run_status_error(&out);
                    sample.rmse_deg = out.summary.rmse_deg;
                    sample.availability_pct = out.summary.availability_pct;
                }
                Err(e) => sample.error = Some(e.to_string()),
            }
            sample
        })
        .collect();
    samples.sort_by(|a, b| a.speed_deg_s.total_cmp(&b.speed_deg_s));

    let pairs: Vec<(usize, (f64, f64))> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.error.is_none())
        .filter_map(|(i, s)| s.rmse_deg.map(|r| (i, (s.speed_deg_s, r))))
        .collect();
    let xy: Vec<(f64, f64)> = pairs.iter().map(|p| p.1).collect();
    let mut report = RmseSweepReport {
        event_us,
        compute_us,
        injected_delay_ms: (event_us + compute_us) as f64 * 1e-3,
        samples,
        estimate: None,
        fit_error: None,
    };
    match delay_from_rmse(&xy, options.baseline_deg) {
        Ok(est) => {
            for ((i, _), used) in pairs.iter().zip(&est.used) {
                report.samples[*i].used_in_fit = *used;
            }
            report.estimate = Some(est);
        }
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    report
}

// ---------------------------------------------------------------- step

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSample {
    /// Time since the step command (s).
    pub t_s: f64,
    pub reference_deg: f64,
    pub vision_deg: f64,
    pub encoder_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCompareReport {
    pub amplitude_deg: f64,
    pub vision: RunSummary,
    pub encoder: RunSummary,
    pub samples: Vec<StepSample>,
    pub errors: Vec<String>,
}

/// The same step under vision and encoder feedback, aligned on the command time.
pub fn step_compare(
    base: &ExperimentConfig,
    amplitude_deg: f64,
    at_s: f64,
    duration_s: f64,
) -> Result<StepCompareReport> {
    let runs: Vec<Result<RunOutput>> = [Feedback::Vision, Feedback::Encoder]
        .par_iter()
        .map(|&feedback| {
            let mut cfg = base.clone();
            cfg.feedback = feedback;
            cfg.scenario = Scenario::Step { amplitude_deg, at_s };
            cfg.duration_s = duration_s;
            run_experiment(&cfg)
        })
        .collect();
    let mut runs = runs.into_iter();
    let vision = runs.next().expect("two runs")?;
    let encoder = runs.next().expect("two runs")?;
    let errors = [&vision, &encoder].into_iter().filter_map(run_status_error).collect();
    let at_us = (at_s * 1e6).round() as u64;
    let samples = vision
        .logs
        .trajectory
        .iter()
        .zip(&encoder.logs.trajectory)
        .filter(|(v, _)| v.t_us >= at_us)
        .map(|(v, e)| StepSample {
            t_s: (v.t_us - at_us) as f64 * 1e-6,
            reference_deg: amplitude_deg,
            vision_deg: v.alpha_true_deg - v.disk_angle_deg,
            encoder_deg: e.alpha_true_deg - e.disk_angle_deg,
        })
        .collect();
    Ok(StepCompareReport {
        amplitude_deg,
        vision: vision.summary,
        encoder: encoder.summary,
        samples,
        errors,
    })
}

// ---------------------------------------------------------------- suites

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub bode: BodeSweepOptions,
    pub rmse: RmseSweepOptions,
    /// Delay-free accuracy bound at low speed (deg).
    pub rmse_bound_deg: f64,
    /// Speeds at or below this are held to the accuracy bound (deg/s).
    pub slow_speed_deg_s: f64,
    pub delay_tolerance_ms: f64,
    pub bode_tolerance_ms: f64,
    pub step_amplitude_deg: f64,
    pub step_at_s: f64,
    pub step_duration_s: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            bode: BodeSweepOptions::default(),
            rmse: RmseSweepOptions::default(),
            rmse_bound_deg: 2.5,
            slow_speed_deg_s: 200.0,
            delay_tolerance_ms: 1.0,
            bode_tolerance_ms: 1.5,
            step_amplitude_deg: 90.0,
            step_at_s: 0.1,
            step_duration_s: 3.0,
        }
    }
}

impl SuiteOptions {
    /// Defaults with `key=value` overrides applied, as for run configs.
    pub fn with_overrides(overrides: &[String]) -> Result<Self> {
        let mut doc = toml::Table::try_from(Self::default()).map_err(|e| HarnessError::Config(e.to_string()))?;
        for assignment in overrides {
            apply_override(&mut doc, assignment)?;
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub bode_vision: Option<BodeSweepReport>,
    pub bode_encoder: Option<BodeSweepReport>,
    /// Delay-free sweep first, then the sweep at the configured delays.
    pub rmse: Vec<RmseSweepReport>,
    pub step_compare: Option<StepCompareReport>,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn fit_check(name: &str, report: &BodeSweepReport) -> Check {
    let failed_rows: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("{:.2} rad/s: {e}", r.omega)))
        .collect();
    match (&report.fit, &report.fit_error) {
        (Some(f), _) => Check::new(
            format!("{name} fit"),
            f.converged && failed_rows.is_empty(),
            format!(
                "K={:.4} a1={:.4} a2={:.5} a3={:.3e} T_d={:.2} ms residual={:.2} converged={}{}",
                f.fit.k,
                f.fit.a1,
                f.fit.a2,
                f.fit.a3,
                f.fit.delay * 1e3,
                f.residual,
                f.converged,
                if failed_rows.is_empty() {
                    String::new()
                } else {
                    format!("; failed points: {}", failed_rows.join("; "))
                }
            ),
        ),
        (None, e) => Check::new(format!("{name} fit"), false, e.clone().unwrap_or_default()),
    }
}

/// Checks for a delay-free rmse sweep.
pub fn accuracy_check(report: &RmseSweepReport, slow_speed: f64, bound: f64) -> Check {
    let slow: Vec<&RmseSample> = report.samples.iter().filter(|s| s.speed_deg_s <= slow_speed).collect();
    let ok = !slow.is_empty()
        && slow
            .iter()
            .all(|s| s.error.is_none() && s.rmse_deg.is_some_and(|r| r < bound));
    let detail = slow
        .iter()
        .map(|s| match s.rmse_deg {
            Some(r) => format!("{} deg/s: {r:.3} deg", s.speed_deg_s),
            None => format!("{} deg/s: no estimate", s.speed_deg_s),
        })
        .collect::<Vec<_>>()
        .join(", ");
    Check::new(
        format!("delay-free rmse < {bound} deg at <= {slow_speed} deg/s"),
        ok,
        detail,
    )
}

pub fn delay_check(report: &RmseSweepReport, tolerance_ms: f64) -> Check {
    let name = format!(
        "delay regression recovers {:.1} ms +/- {tolerance_ms} ms",
        report.injected_delay_ms
    );
    match (&report.estimate, &report.fit_error) {
        (Some(e), _) => Check::new(
            name,
            (e.slope_ms - report.injected_delay_ms).abs() <= tolerance_ms,
            format!(
                "slope {:.2} +/- {:.2} ms over {} points",
                e.slope_ms,
                e.stderr_ms,
                e.used.iter().filter(|u| **u).count()
            ),
        ),
        (None, e) => Check::new(name, false, e.clone().unwrap_or_default()),
    }
}

/// Injected latency difference (ms) between the vision and encoder feedback paths.
pub fn path_difference_ms(delays: &Delays) -> f64 {
    (delays.event_us + delays.compute_us) as f64 * 1e-3 - delays.encoder_us as f64 * 1e-3
}

pub fn ordering_check(
    vision: &BodeSweepReport,
    encoder: &BodeSweepReport,
    delays: &Delays,
    tolerance_ms: f64,
) -> Check {
    let injected = path_difference_ms(delays);
    let name = format!("T_d(vision) - T_d(encoder) = {injected:.2} ms +/- {tolerance_ms} ms");
    match (&vision.fit, &encoder.fit) {
        (Some(v), Some(e)) => {
            let diff = (v.fit.delay - e.fit.delay) * 1e3;
            Check::new(
                name,
                (diff - injected).abs() <= tolerance_ms,
                format!(
                    "vision {:.2} ms, encoder {:.2} ms, difference {diff:.2} ms",
                    v.fit.delay * 1e3,
                    e.fit.delay * 1e3
                ),
            )
        }
        _ => Check::new(name, false, "a sweep has no fit"),
    }
}

/// Runs the named suites against `base` and collects the pass/fail table.
pub fn run_suites(base: &ExperimentConfig, names: &[SuiteName], options: &SuiteOptions) -> Result<SuiteReport> {
    base.validate()?;
    let mut report = SuiteReport::default();
    for &name in names {
        match name {
            SuiteName::BodeVision | SuiteName::BodeEncoder => {
                let feedback = if name == SuiteName::BodeVision {
                    Feedback::Vision
                } else {
                    Feedback::Encoder
                };
                let sweep = bode_sweep(base, feedback, &options.bode);
                report.checks.push(fit_check(name.as_str(), &sweep));
                if name == SuiteName::BodeVision {
                    report.bode_vision = Some(sweep);
                } else {
                    report.bode_encoder = Some(sweep);
                }
            }
            SuiteName::RmseSweep => {
                let free = rmse_sweep(base, 0, 0, &options.rmse);
                report
                    .checks
                    .push(accuracy_check(&free, options.slow_speed_deg_s, options.rmse_bound_deg));
                let delayed = rmse_sweep(base, base.delays.event_us, base.delays.compute_us, &options.rmse);
                report.checks.push(delay_check(&delayed, options.delay_tolerance_ms));
                report.rmse = vec![free, delayed];
            }
            SuiteName::StepCompare => {
                let step = step_compare(
                    base,
                    options.step_amplitude_deg,
                    options.step_at_s,
                    options.step_duration_s,
                )?;
                report.checks.push(Check::new(
                    "step_compare runs complete",
                    step.errors.is_empty(),
                    format!(
                        "overshoot vision {:.2}% encoder {:.2}%, rise vision {:.3} s encoder {:.3} s",
                        step.vision.overshoot_pct.unwrap_or(f64::NAN),
                        step.encoder.overshoot_pct.unwrap_or(f64::NAN),
                        step.vision.rise_time_s.unwrap_or(f64::NAN),
                        step.encoder.rise_time_s.unwrap_or(f64::NAN),
                    ),
                ));
                report.step_compare = Some(step);
            }
        }
    }
    if let (Some(v), Some(e)) = (&report.bode_vision, &report.bode_encoder) {
        report
            .checks
            .push(ordering_check(v, e, &base.delays, options.bode_tolerance_ms));
    }
    Ok(report)
}

// ---------------------------------------------------------------- output

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

#[derive(Serialize)]
struct BodeCsvRow {
    omega_rad_s: f64,
    gain_db: f64,
    phase_deg: f64,
}

#[derive(Serialize)]
struct RmseCsvRow {
    speed_deg_s: f64,
    rmse_deg: f64,
    used_in_fit: bool,
}

/// Writes figure data (Bode and RMSE CSVs, step traces), fit reports and `suite.json`.
pub fn write_suite(dir: &Path, report: &SuiteReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for (name, sweep) in [
        ("bode_vision", &report.bode_vision),
        ("bode_encoder", &report.bode_encoder),
    ] {
        let Some(sweep) = sweep else { continue };
        write_csv(
            &dir.join(format!("{name}.csv")),
            sweep.points().iter().map(|p| BodeCsvRow {
                omega_rad_s: p.omega,
                gain_db: p.gain_db,
                phase_deg: p.phase_deg,
            }),
        )?;
        write_json(&dir.join(format!("{name}_fit.json")), &sweep.fit)?;
    }
    for (name, sweep) in ["rmse_delay_free", "rmse_delayed"].iter().zip(&report.rmse) {
        write_csv(
            &dir.join(format!("{name}.csv")),
            sweep.samples.iter().map(|s| RmseCsvRow {
                speed_deg_s: s.speed_deg_s,
                rmse_deg: s.rmse_deg.unwrap_or(f64::NAN),
                used_in_fit: s.used_in_fit,
            }),
        )?;
        write_json(&dir.join(format!("{name}_fit.json")), &sweep.estimate)?;
    }
    if let Some(step) = &report.step_compare {
        write_csv(&dir.join("step_compare.csv"), step.samples.iter().copied())?;
    }
    write_json(&dir.join("suite.json"), report)
}
