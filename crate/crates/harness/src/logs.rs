//! The four per-run log streams and their CSV forms.
//!
//! Floats are written in shortest round-trip form, so rows read back from
//! disk are bit-identical to the rows produced during the run.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use horizon_core::camera::{read_event_log, write_event_log, CameraModel, Event};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const ESTIMATE_FILE: &str = "estimate.csv";
pub const COMMAND_FILE: &str = "command.csv";

/// Ground truth at the start of a tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t_us: u64,
    pub alpha_true_deg: f64,
    pub alpha_dot_true_deg_s: f64,
    pub disk_angle_deg: f64,
    #[serde(rename = "f1_N")]
    pub f1_n: f64,
    #[serde(rename = "f2_N")]
    pub f2_n: f64,
}

/// The state the controller acted on. In encoder and truth modes the
/// angle columns hold that feedback and there is no measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub t_us: u64,
    pub alpha_est_deg: f64,
    pub alpha_dot_est_deg_s: f64,
    pub meas_deg_or_nan: f64,
    pub peak_count: u32,
    pub tick_compute_us: f64,
}

impl EstimateRow {
    pub fn is_initialized(&self) -> bool {
        self.alpha_est_deg.is_finite()
    }

    pub fn has_measurement(&self) -> bool {
        self.meas_deg_or_nan.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandRow {
    pub t_us: u64,
    #[serde(rename = "torque_Nm")]
    pub torque_nm: f64,
    #[serde(rename = "f1_cmd_N")]
    pub f1_cmd_n: f64,
    #[serde(rename = "f2_cmd_N")]
    pub f2_cmd_n: f64,
    pub duty1: f64,
    pub duty2: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLogs {
    pub trajectory: Vec<TrajectoryRow>,
    pub events: Vec<Event>,
    pub estimate: Vec<EstimateRow>,
    pub command: Vec<CommandRow>,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Header-only file for empty streams, so every run directory has all four logs.
fn write_header_if_empty<T>(path: &Path, rows: &[T], header: &str) -> Result<()> {
    if rows.is_empty() {
        std::fs::write(path, format!("{header}\n")).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize().map(|row| row.map_err(HarnessError::from)).collect()
}

impl RunLogs {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join(TRAJECTORY_FILE);
        write_rows(&path, &self.trajectory)?;
        write_header_if_empty(
            &path,
            &self.trajectory,
            "t_us,alpha_true_deg,alpha_dot_true_deg_s,disk_angle_deg,f1_N,f2_N",
        )?;
        let path = dir.join(ESTIMATE_FILE);
        write_rows(&path, &self.estimate)?;
        write_header_if_empty(
            &path,
            &self.estimate,
            "t_us,alpha_est_deg,alpha_dot_est_deg_s,meas_deg_or_nan,peak_count,tick_compute_us",
        )?;
        let path = dir.join(COMMAND_FILE);
        write_rows(&path, &self.command)?;
        write_header_if_empty(
            &path,
            &self.command,
            "t_us,torque_Nm,f1_cmd_N,f2_cmd_N,duty1,duty2,saturated",
        )?;

        let path = dir.join(EVENTS_FILE);
        let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write_event_log(&mut w, &self.events).map_err(|e| HarnessError::io(&path, e))?;
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
        Ok(())
    }

    pub fn read(dir: &Path, camera: &CameraModel) -> Result<Self> {
        let path = dir.join(EVENTS_FILE);
        let file = File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
        let events = read_event_log(BufReader::new(file), camera)?;
        Ok(Self {
            trajectory: read_rows(&dir.join(TRAJECTORY_FILE))?,
            events,
            estimate: read_rows(&dir.join(ESTIMATE_FILE))?,
            command: read_rows(&dir.join(COMMAND_FILE))?,
        })
    }
}
