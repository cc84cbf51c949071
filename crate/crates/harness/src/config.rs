//! Experiment configuration: a TOML document with every field defaulted
//! except the scenario, plus dotted-path overrides from the command line.

use std::path::Path;

use horizon_core::camera::CameraModel;
use horizon_core::controller::{gains_from, ControllerGains, ThrustMap};
use horizon_core::dynamics::{PlantParams, Reference};
use horizon_core::estimator::EstimatorConfig;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// What drives the run. Exactly one per experiment.
///
/// `step` and `sine_sweep` command the dualcopter attitude in front of a
/// stationary disk; `constant_rate_sweep` and `manual` move the disk and
/// hold the relative attitude at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Step {
        amplitude_deg: f64,
        #[serde(default)]
        at_s: f64,
    },
    /// One frequency of a sine sweep.
    #[serde(alias = "sine")]
    SineSweep { amplitude_deg: f64, omega_rad_s: f64 },
    /// One speed of a constant-rate sweep.
    #[serde(alias = "constant_rate")]
    ConstantRateSweep { rate_deg_s: f64 },
    /// Rotors held at the bias thrust, no control.
    Coast {
        #[serde(default)]
        initial_rate_deg_s: f64,
    },
    /// Disk angle from the steering channel. In batch runs a scripted hand
    /// turns the disk at `ramp_deg_s`; the live server feeds it from clients.
    Manual {
        #[serde(default)]
        ramp_deg_s: f64,
    },
}

/// Where the reference enters the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routing {
    /// Reference is the desired relative attitude; disk stays at zero.
    Attitude,
    /// Reference is the disk angle; desired relative attitude is zero.
    Disk,
    /// Nothing moves the disk and nothing is commanded.
    Idle,
}

impl Scenario {
    pub fn reference(&self) -> Option<Reference> {
        match *self {
            Self::Step { amplitude_deg, at_s } => Some(Reference::Step { amplitude_deg, at_s }),
            Self::SineSweep {
                amplitude_deg,
                omega_rad_s,
            } => Some(Reference::Sine {
                amplitude_deg,
                omega_rad_s,
            }),
            Self::ConstantRateSweep { rate_deg_s } => Some(Reference::ConstantRate { rate_deg_s }),
            Self::Manual { .. } => Some(Reference::Manual),
            Self::Coast { .. } => None,
        }
    }

    pub fn routing(&self) -> Routing {
        match self {
            Self::Step { .. } | Self::SineSweep { .. } => Routing::Attitude,
            Self::ConstantRateSweep { .. } | Self::Manual { .. } => Routing::Disk,
            Self::Coast { .. } => Routing::Idle,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Step { .. } => "step",
            Self::SineSweep { .. } => "sine_sweep",
            Self::ConstantRateSweep { .. } => "constant_rate_sweep",
            Self::Coast { .. } => "coast",
            Self::Manual { .. } => "manual",
        }
    }
}

/// State source for the PD law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Event camera, Hough measurement and Kalman filter.
    #[default]
    Vision,
    /// Quantized encoder difference with a finite-difference rate.
    Encoder,
    /// Exact simulator state; for checking the control law in isolation.
    Truth,
}

/// Transport and processing latencies (us).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Delays {
    /// Camera to estimator.
    pub event_us: u64,
    /// Controller to motors.
    pub command_us: u64,
    /// Estimator processing time, added to the command path in vision mode.
    pub compute_us: u64,
    /// Encoder to controller.
    pub encoder_us: u64,
}

impl Default for Delays {
    fn default() -> Self {
        Self {
            event_us: 5000,
            command_us: 500,
            compute_us: 700,
            encoder_us: 1000,
        }
    }
}

impl Delays {
    pub const ZERO: Self = Self {
        event_us: 0,
        command_us: 0,
        compute_us: 0,
        encoder_us: 0,
    };
}

/// Either a design point `(tau, zeta, inertia)` or explicit gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GainSource {
    Design { tau: f64, zeta: f64, inertia: f64 },
    Explicit { k_p: f64, k_d: f64 },
}

impl Default for GainSource {
    fn default() -> Self {
        Self::Design {
            tau: 0.149,
            zeta: 0.7,
            inertia: 0.00788,
        }
    }
}

impl GainSource {
    pub fn gains(&self) -> Result<ControllerGains> {
        match *self {
            Self::Design { tau, zeta, inertia } => Ok(gains_from(tau, zeta, inertia)?),
            Self::Explicit { k_p, k_d } => {
                if !(k_p.is_finite() && k_d.is_finite() && k_p >= 0.0 && k_d >= 0.0) {
                    return Err(HarnessError::Config(format!(
                        "gains must be finite and >= 0, got k_p={k_p} k_d={k_d}"
                    )));
                }
                Ok(ControllerGains { k_p, k_d })
            }
        }
    }

    /// Inertia the controller believes in, if the gains were designed for one.
    pub fn model_inertia(&self) -> Option<f64> {
        match *self {
            Self::Design { inertia, .. } => Some(inertia),
            Self::Explicit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlOptions {
    /// Off runs the loop open: rotors stay at the bias thrust.
    pub enabled: bool,
    /// Feed the reference rate forward as the desired rate in attitude scenarios.
    pub rate_feedforward: bool,
    /// Seed the estimator with the known starting relative attitude (zero)
    /// in attitude scenarios, where the scene is static until the loop moves.
    pub prior_at_start: bool,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            enabled: true,
            rate_feedforward: false,
            prior_at_start: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderBias {
    /// Drawn once per run from the seed.
    #[default]
    Random,
    Zero,
}

/// Whether the estimate log records measured wall-clock tick time.
/// `off` writes zeros so logs are byte-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    #[default]
    Measured,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// Leading interval excluded from error and availability metrics (s).
    pub settle_s: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self { settle_s: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub scenario: Scenario,
    #[serde(default)]
    pub feedback: Feedback,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub delays: Delays,
    #[serde(default)]
    pub gains: GainSource,
    #[serde(default)]
    pub thrust_map: ThrustMap,
    #[serde(default)]
    pub control: ControlOptions,
    #[serde(default)]
    pub encoder_bias: EncoderBias,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub metrics: MetricOptions,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, duration_s: f64, seed: u64) -> Self {
        Self {
            seed,
            duration_s,
            scenario,
            feedback: Feedback::default(),
            plant: PlantParams::default(),
            camera: CameraModel::default(),
            estimator: EstimatorConfig::default(),
            delays: Delays::default(),
            gains: GainSource::default(),
            thrust_map: ThrustMap::default(),
            control: ControlOptions::default(),
            encoder_bias: EncoderBias::default(),
            timing: Timing::default(),
            metrics: MetricOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(HarnessError::Config(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.metrics.settle_s >= 0.0 && self.metrics.settle_s.is_finite()) {
            return Err(HarnessError::Config("metrics.settle_s must be >= 0".into()));
        }
        self.plant.validate()?;
        self.camera.validate()?;
        self.thrust_map.validate()?;
        self.gains.gains()?;
        if let Some(reference) = self.scenario.reference() {
            reference.validate()?;
        }
        match self.scenario {
            Scenario::Coast { initial_rate_deg_s } if !initial_rate_deg_s.is_finite() => {
                return Err(HarnessError::Config("coast initial rate must be finite".into()));
            }
            Scenario::Manual { ramp_deg_s } if !ramp_deg_s.is_finite() => {
                return Err(HarnessError::Config("manual ramp must be finite".into()));
            }
            _ => {}
        }
        let h = &self.estimator.hough;
        if h.max_events == 0 || h.window_us == 0 {
            return Err(HarnessError::Config(
                "estimator window must hold at least one event and span > 0 us".into(),
            ));
        }
        Ok(())
    }

    pub fn ticks(&self) -> u64 {
        (self.duration_s * 1000.0).round() as u64
    }

    /// Latency between a vision tick and the moment its estimate can act.
    pub fn estimate_latency_us(&self) -> u64 {
        match self.feedback {
            Feedback::Vision => self.delays.compute_us,
            Feedback::Encoder | Feedback::Truth => 0,
        }
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        for assignment in overrides {
            apply_override(&mut doc, assignment)?;
        }
        let cfg: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        Self::load_with_defaults(path, &[], overrides)
    }

    /// Like [`Self::load`], but top-level keys missing from the file are
    /// first filled from `defaults` (TOML literals), before the overrides.
    pub fn load_with_defaults(path: Option<&Path>, defaults: &[(&str, &str)], overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        for (key, literal) in defaults {
            if !doc.contains_key(*key) {
                doc.insert(key.to_string(), parse_literal(literal));
            }
        }
        let text = toml::to_string(&doc).map_err(|e| HarnessError::Config(e.to_string()))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

/// Applies `a.b.c=value` to a TOML table. The value is parsed as a TOML
/// literal and falls back to a bare string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(HarnessError::Config(format!("bad override key `{path}`")));
    }
    let value = parse_literal(raw.trim());
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("`{key}` in `{path}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEP: &str = r#"
        seed = 3
        duration_s = 2.0
        [scenario]
        kind = "step"
        amplitude_deg = 90.0
    "#;

    #[test]
    fn minimal_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(STEP, &[]).unwrap();
        assert_eq!(
            cfg.scenario,
            Scenario::Step {
                amplitude_deg: 90.0,
                at_s: 0.0
            }
        );
        assert_eq!(cfg.feedback, Feedback::Vision);
        assert_eq!(cfg.delays, Delays::default());
        assert_eq!(cfg.ticks(), 2000);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = ExperimentConfig::from_toml_str(
            STEP,
            &[
                "plant.motor_tau=0".into(),
                "feedback=encoder".into(),
                "delays.event_us=12000".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.plant.motor_tau, 0.0);
        assert_eq!(cfg.feedback, Feedback::Encoder);
        assert_eq!(cfg.delays.event_us, 12000);
    }

    #[test]
    fn explicit_gains_parse() {
        let cfg = ExperimentConfig::from_toml_str(STEP, &["gains={ k_p = 0.353, k_d = 0.071 }".into()]).unwrap();
        assert_eq!(cfg.gains, GainSource::Explicit { k_p: 0.353, k_d: 0.071 });
    }

    #[test]
    fn scenario_aliases() {
        let text = "seed = 1\nduration_s = 1\n[scenario]\nkind = \"constant_rate\"\nrate_deg_s = 360\n";
        let cfg = ExperimentConfig::from_toml_str(text, &[]).unwrap();
        assert_eq!(cfg.scenario, Scenario::ConstantRateSweep { rate_deg_s: 360.0 });
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            vec!["plant.inertia=-1".to_string()],
            vec!["duration_s=0".into()],
            vec!["plant.wingspan=2".into()],
            vec!["scenario.kind=\"spin\"".into()],
            vec!["gains={ tau = 0.0, zeta = 0.7, inertia = 0.00788 }".into()],
            vec!["noequals".into()],
        ] {
            let err = ExperimentConfig::from_toml_str(STEP, &bad).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::exit::CONFIG, "{bad:?}: {err}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::new(Scenario::Manual { ramp_deg_s: 1600.0 }, 3.0, 9);
        cfg.gains = GainSource::Explicit { k_p: 0.3, k_d: 0.05 };
        cfg.timing = Timing::Off;
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text, &[]).unwrap(), cfg);
    }
}
