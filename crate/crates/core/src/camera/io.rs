use std::io::{BufRead, Write};

use super::{CameraModel, Event, Polarity};
use crate::error::{Error, Result};

pub const EVENT_LOG_HEADER: &str = "t_us,x,y,polarity";

pub fn write_event_log<W: Write>(mut w: W, events: &[Event]) -> std::io::Result<()> {
    writeln!(w, "{EVENT_LOG_HEADER}")?;
    for e in events {
        writeln!(w, "{},{},{},{}", e.t_us, e.x, e.y, e.polarity.sign())?;
    }
    Ok(())
}

/// Parses an event log, checking sensor bounds and time ordering.
pub fn read_event_log<R: BufRead>(r: R, model: &CameraModel) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    let mut last_t = 0u64;
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Config(format!("event log line {}: {e}", n + 1)))?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("t_us")) {
            continue;
        }
        let bad = |what: &str| Error::Config(format!("event log line {}: {what}: '{line}'", n + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let t_us: u64 = fields[0].parse().map_err(|_| bad("bad timestamp"))?;
        let x: i64 = fields[1].parse().map_err(|_| bad("bad x"))?;
        let y: i64 = fields[2].parse().map_err(|_| bad("bad y"))?;
        let sign: i64 = fields[3].parse().map_err(|_| bad("bad polarity"))?;
        let polarity = Polarity::from_sign(sign).ok_or_else(|| bad("polarity must be +1 or -1"))?;
        if !model.contains(x, y) {
            return Err(bad("pixel outside sensor"));
        }
        if t_us < last_t {
            return Err(bad("timestamps not sorted"));
        }
        last_t = t_us;
        events.push(Event {
            x: x as u16,
            y: y as u16,
            polarity,
            t_us,
        });
    }
    Ok(events)
}
