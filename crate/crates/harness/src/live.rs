//! Real-time session for the manual scenario, served over a websocket.
//!
//! Every websocket text frame carries one or more newline-terminated JSON
//! objects, each tagged by `kind`:
//!
//! * `config` (server to client, once on connect): the run configuration and
//!   the loop and telemetry rates.
//! * `telemetry` (server to client, at the telemetry rate): see [`Telemetry`].
//! * `steer` (client to server): `{"kind":"steer","disk_deg":12.5}` sets the
//!   target disk angle. Anything else a client sends is ignored and counted.
//!
//! The loop runs on its own thread, paced by the wall clock. It hands frames
//! to the transport through a broadcast channel that never blocks, and reads
//! steering from a queue that holds the last value when no client is steering.

use std::collections::VecDeque;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use horizon_core::camera::{Event, Polarity};
use horizon_core::dynamics::{steering_channel, Steering};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{HarnessError, Result};
use crate::experiment::{Experiment, Frame};

pub const WS_PATH: &str = "/ws";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveOptions {
    pub telemetry_hz: f64,
    /// Trailing span of events shipped with each frame (µs).
    pub event_window_us: u64,
    pub max_events_per_frame: usize,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self {
            telemetry_hz: 60.0,
            event_window_us: 30_000,
            max_events_per_frame: 2000,
        }
    }
}

impl LiveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.telemetry_hz > 0.0 && self.telemetry_hz <= 1000.0) {
            return Err(HarnessError::Config(format!(
                "telemetry_hz must be in (0, 1000], got {}",
                self.telemetry_hz
            )));
        }
        Ok(())
    }
}

/// One display frame. Angles in degrees, rates in deg/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub t: u64,
    pub disk_angle: f64,
    pub alpha_true: f64,
    /// Absent until the estimator has a state.
    pub alpha_est: Option<f64>,
    pub alpha_dot_est: Option<f64>,
    pub peak_count: u32,
    /// Latest accepted Hough measurement, if this tick had one.
    pub measurement: Option<f64>,
    /// `(x, y, polarity)` with polarity +1 for on and -1 for off.
    pub events: Vec<(u16, u16, i8)>,
    pub duty1: f64,
    pub duty2: f64,
    pub malformed_messages: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WireMessage {
    Config {
        tick_hz: f64,
        telemetry_hz: f64,
        experiment: Box<ExperimentConfig>,
    },
    Telemetry(Telemetry),
    Steer {
        disk_deg: f64,
    },
}

impl WireMessage {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("wire messages serialize");
        s.push('\n');
        s
    }
}

/// Parses every line of a client frame; returns the steering targets (deg)
/// and the number of lines that were not valid steer messages.
pub fn parse_client_frame(text: &str) -> (Vec<f64>, u64) {
    let mut targets = Vec::new();
    let mut bad = 0;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match serde_json::from_str::<WireMessage>(line) {
            Ok(WireMessage::Steer { disk_deg }) if disk_deg.is_finite() => targets.push(disk_deg),
            _ => bad += 1,
        }
    }
    (targets, bad)
}

/// Counters shared by the loop and the transport.
#[derive(Debug, Default)]
pub struct LiveStats {
    pub ticks: AtomicU64,
    pub frames_published: AtomicU64,
    pub malformed_messages: AtomicU64,
    pub steer_messages: AtomicU64,
    pub clients: AtomicU64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveSummary {
    pub ticks: u64,
    pub frames_published: u64,
    pub malformed_messages: u64,
    pub steer_messages: u64,
    pub fault: Option<String>,
}

struct Shared {
    telemetry: broadcast::Sender<Arc<str>>,
    steering: Mutex<Steering>,
    config_line: String,
    stats: Arc<LiveStats>,
}

/// A bound but not yet running session.
pub struct LiveServer {
    listener: tokio::net::TcpListener,
    cfg: ExperimentConfig,
    options: LiveOptions,
}

impl LiveServer {
    pub async fn bind(cfg: ExperimentConfig, addr: SocketAddr, options: LiveOptions) -> Result<Self> {
        if !matches!(cfg.scenario, Scenario::Manual { .. }) {
            return Err(HarnessError::Config("serve needs the manual scenario".into()));
        }
        cfg.validate()?;
        options.validate()?;
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                HarnessError::Server(format!("port {} is busy", addr.port()))
            } else {
                HarnessError::Server(format!("cannot bind {addr}: {e}"))
            }
        })?;
        Ok(Self { listener, cfg, options })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.listener
            .local_addr()
            .map_err(|e| HarnessError::Server(e.to_string()))
    }

    /// Runs the loop and the transport until `shutdown` resolves.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<LiveSummary> {
        let (steering, input) = steering_channel();
        // frames are dropped for lagging clients rather than held
        let (telemetry, _) = broadcast::channel(16);
        let stats = Arc::new(LiveStats::default());
        let stop = Arc::new(AtomicBool::new(false));
        let config_line = WireMessage::Config {
            tick_hz: 1000.0,
            telemetry_hz: self.options.telemetry_hz,
            experiment: Box::new(self.cfg.clone()),
        }
        .to_line();

        let exp = Experiment::with_manual_input(self.cfg, input)?;
        let loop_thread = {
            let (tx, stats, stop) = (telemetry.clone(), stats.clone(), stop.clone());
            let options = self.options;
            thread::Builder::new()
                .name("live-loop".into())
                .spawn(move || run_loop(exp, options, tx, stats, stop))
                .map_err(|e| HarnessError::Server(format!("cannot start loop thread: {e}")))?
        };

        let shared = Arc::new(Shared {
            telemetry,
            steering: Mutex::new(steering),
            config_line,
            stats: stats.clone(),
        });
        let app = Router::new().route(WS_PATH, get(upgrade)).with_state(shared);
        let served = axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await;

        stop.store(true, Ordering::Relaxed);
        let fault = loop_thread
            .join()
            .map_err(|_| HarnessError::Server("loop thread panicked".into()))?;
        served.map_err(|e| HarnessError::Server(e.to_string()))?;
        Ok(LiveSummary {
            ticks: stats.ticks.load(Ordering::Relaxed),
            frames_published: stats.frames_published.load(Ordering::Relaxed),
            malformed_messages: stats.malformed_messages.load(Ordering::Relaxed),
            steer_messages: stats.steer_messages.load(Ordering::Relaxed),
            fault,
        })
    }
}

fn polarity_sign(p: Polarity) -> i8 {
    match p {
        Polarity::On => 1,
        Polarity::Off => -1,
    }
}

fn telemetry_from(frame: &Frame, recent: &VecDeque<Event>, options: &LiveOptions, malformed: u64) -> Telemetry {
    let stride = recent.len().div_ceil(options.max_events_per_frame.max(1)).max(1);
    let est = frame.estimate;
    Telemetry {
        t: frame.trajectory.t_us,
        disk_angle: frame.trajectory.disk_angle_deg,
        alpha_true: frame.trajectory.alpha_true_deg,
        alpha_est: est.is_initialized().then_some(est.alpha_est_deg),
        alpha_dot_est: est.is_initialized().then_some(est.alpha_dot_est_deg_s),
        peak_count: est.peak_count,
        measurement: est.has_measurement().then_some(est.meas_deg_or_nan),
        events: recent
            .iter()
            .step_by(stride)
            .map(|e| (e.x, e.y, polarity_sign(e.polarity)))
            .collect(),
        duty1: frame.command.duty1,
        duty2: frame.command.duty2,
        malformed_messages: malformed,
    }
}

/// Wall-clock paced loop; returns the fault message if the run aborted.
fn run_loop(
    mut exp: Experiment,
    options: LiveOptions,
    tx: broadcast::Sender<Arc<str>>,
    stats: Arc<LiveStats>,
    stop: Arc<AtomicBool>,
) -> Option<String> {
    let start = Instant::now();
    let publish_every_us = (1e6 / options.telemetry_hz).round() as u64;
    let mut next_publish = 0u64;
    let mut recent: VecDeque<Event> = VecDeque::new();
    let mut tick = 0u64;
    while !stop.load(Ordering::Relaxed) {
        let frame = match exp.step_frame() {
            Ok(f) => f,
            Err(e) => return Some(e.to_string()),
        };
        stats.ticks.fetch_add(1, Ordering::Relaxed);
        let t_us = frame.trajectory.t_us;
        recent.extend(frame.events.iter().copied());
        let horizon = t_us.saturating_sub(options.event_window_us);
        while recent.front().is_some_and(|e| e.t_us < horizon) {
            recent.pop_front();
        }
        if t_us >= next_publish {
            next_publish += publish_every_us;
            let msg = WireMessage::Telemetry(telemetry_from(
                &frame,
                &recent,
                &options,
                stats.malformed_messages.load(Ordering::Relaxed),
            ));
            // no receivers is fine: the loop runs whether or not anyone watches
            let _ = tx.send(Arc::from(msg.to_line()));
            stats.frames_published.fetch_add(1, Ordering::Relaxed);
        }
        tick += 1;
        let due = start + Duration::from_millis(tick);
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
    }
    None
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| session(socket, shared))
}

async fn session(socket: WebSocket, shared: Arc<Shared>) {
    shared.stats.clients.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let mut frames = shared.telemetry.subscribe();
    if sink
        .send(Message::Text(shared.config_line.clone().into()))
        .await
        .is_err()
    {
        return;
    }
    loop {
        tokio::select! {
            frame = frames.recv() => match frame {
                Ok(line) => {
                    if sink.send(Message::Text(line.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = stream.next() => match incoming {
                Some(Ok(Message::Text(text))) => handle_client_text(&shared, text.as_str()),
                Some(Ok(Message::Binary(_))) => {
                    shared.stats.malformed_messages.fetch_add(1, Ordering::Relaxed);
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
    shared.stats.clients.fetch_sub(1, Ordering::Relaxed);
}

fn handle_client_text(shared: &Shared, text: &str) {
    let (targets, bad) = parse_client_frame(text);
    shared.stats.malformed_messages.fetch_add(bad, Ordering::Relaxed);
    shared
        .stats
        .steer_messages
        .fetch_add(targets.len() as u64, Ordering::Relaxed);
    let steering = shared.steering.lock().expect("steering lock");
    for deg in targets {
        steering.send(deg.to_radians());
    }
}
