//! Ingest sessions: a CSV that maps one power-meter trace file to the
//! sequence and playback settings it was captured under. Reducing a
//! session yields one net mean-power measurement per trace.

use std::fs;
use std::path::{Path, PathBuf};

use vrpower::dataset::{
    parse_sequence_config, Measurement, PlaybackConfig, SequenceMeta, MEASUREMENT_CSV_HEADER,
};
use vrpower::trace::{net_power, PowerTrace, WindowSpec};
use vrpower::{Error, Result};

/// Header of the session CSV: a trace path plus the shared sequence and
/// playback-setting columns (no power — that is what ingest computes).
pub fn session_header() -> String {
    let shared = MEASUREMENT_CSV_HEADER
        .strip_suffix(",power_w")
        .expect("measurement header ends with the power column");
    format!("trace_file,{shared}")
}

/// One parsed session row; `trace_path` is already resolved against the
/// session file's directory.
#[derive(Debug, Clone)]
pub struct SessionRow {
    pub trace_path: PathBuf,
    pub sequence: SequenceMeta,
    pub config: PlaybackConfig,
}

/// Where the idle (baseline) power comes from.
#[derive(Debug, Clone)]
pub enum IdleSource {
    /// A known idle power in watts.
    Scalar(f64),
    /// A trace of the idle device, reduced over the same window.
    Trace(PathBuf),
}

/// Parses a session file. Relative trace paths are taken relative to the
/// session file's parent directory.
pub fn load_session(path: &Path) -> Result<Vec<SessionRow>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading session {}", path.display()), e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let expected = session_header();

    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty session file: missing header row"))?
        .1
        .trim_end_matches('\r');
    if header != expected {
        return Err(Error::parse_at(
            1,
            format!("unrecognized session header {header:?}; expected {expected:?}"),
        ));
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::parse_at(
                lineno,
                format!("expected 16 fields, got {}", fields.len()),
            ));
        }
        if fields[0].trim().is_empty() {
            return Err(Error::parse_at(lineno, "empty trace_file field"));
        }
        let (sequence, config) = parse_sequence_config(&fields[1..16], lineno)?;
        let given = Path::new(fields[0].trim());
        let trace_path = if given.is_absolute() {
            given.to_path_buf()
        } else {
            base.join(given)
        };
        rows.push(SessionRow {
            trace_path,
            sequence,
            config,
        });
    }
    if rows.is_empty() {
        return Err(Error::Validation(
            "session file contains no trace rows".into(),
        ));
    }
    Ok(rows)
}

fn windowed_mean(path: &Path, window: &WindowSpec) -> Result<f64> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading trace {}", path.display()), e))?;
    let trace = PowerTrace::from_csv(&text)
        .and_then(|t| t.mean_power(window))
        .map_err(|e| e.with_context(format!("trace {}", path.display())))?;
    Ok(trace)
}

/// Reduces every session row to a net mean-power measurement: the windowed
/// mean of its trace minus the idle power. A scalar idle is used as given;
/// an idle trace is reduced over the same window first.
pub fn reduce_session(
    rows: &[SessionRow],
    window: &WindowSpec,
    idle: &IdleSource,
) -> Result<(Vec<Measurement>, f64)> {
    let idle_w = match idle {
        IdleSource::Scalar(w) => {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Validation(format!(
                    "idle power must be finite and >= 0, got {w}"
                )));
            }
            *w
        }
        IdleSource::Trace(path) => windowed_mean(path, window)?,
    };

    let mut measurements = Vec::with_capacity(rows.len());
    for row in rows {
        let gross = windowed_mean(&row.trace_path, window)?;
        let net = net_power(gross, idle_w)
            .map_err(|e| e.with_context(format!("trace {}", row.trace_path.display())))?;
        measurements.push(Measurement {
            sequence: row.sequence.clone(),
            config: row.config.clone(),
            power: net,
        });
    }
    Ok((measurements, idle_w))
}
