//! Power-meter trace parsing and reduction to one steady-state power value.
//!
//! A trace is an ordered series of `(time, power)` samples exported by a
//! bench power meter. A playback run contains app startup and teardown, so
//! only a steady-state window (by default starting 2 s in and lasting 7 s)
//! is averaged. The mean is time-weighted — trapezoidal integration of the
//! piecewise-linear signal divided by the window duration — so it is
//! insensitive to sample-rate changes and jitter. Subtracting the device's
//! idle baseline then yields the net mean power of one measurement.

use crate::error::{Error, Result};

/// Default steady-state window offset from the start of a trace, seconds.
pub const DEFAULT_WINDOW_START_S: f64 = 2.0;
/// Default steady-state window duration, seconds.
pub const DEFAULT_WINDOW_DURATION_S: f64 = 7.0;

/// Averaging window, expressed relative to the first sample of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    start: f64,
    duration: f64,
}

impl WindowSpec {
    /// Creates a window `duration` seconds long beginning `start` seconds
    /// after the first sample. `start` must be >= 0 and `duration` > 0.
    pub fn new(start: f64, duration: f64) -> Result<Self> {
        if !start.is_finite() || start < 0.0 {
            return Err(Error::Validation(format!(
                "window start must be finite and >= 0, got {start}"
            )));
        }
        if !duration.is_finite() || duration <= 0.0 {
            return Err(Error::Validation(format!(
                "window duration must be finite and > 0, got {duration}"
            )));
        }
        Ok(WindowSpec { start, duration })
    }

    /// Offset from the first trace sample, seconds.
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Window length, seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            start: DEFAULT_WINDOW_START_S,
            duration: DEFAULT_WINDOW_DURATION_S,
        }
    }
}

/// Trace CSV layouts, detected from the header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    /// `time_s,power_w` — one power column.
    Power,
    /// `time_s,current_a,voltage_v` — power computed as current × voltage.
    CurrentVoltage,
}

const HEADER_POWER: &str = "time_s,power_w";
const HEADER_CURRENT_VOLTAGE: &str = "time_s,current_a,voltage_v";

/// An ordered power-over-time series with strictly increasing timestamps and
/// finite, nonnegative power values.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    samples: Vec<(f64, f64)>,
    nominal_rate: f64,
}

impl PowerTrace {
    /// Builds a trace from `(time_s, power_w)` samples, enforcing the trace
    /// invariants: at least two samples, strictly increasing finite times,
    /// finite nonnegative powers.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Validation(format!(
                "a trace needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, &(t, p)) in samples.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Validation(format!(
                    "sample {i}: time must be finite, got {t}"
                )));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!(
                    "sample {i}: power must be finite and >= 0, got {p}"
                )));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::Validation(format!(
                    "sample {i}: time {t} does not increase over previous {}",
                    samples[i - 1].0
                )));
            }
        }
        let span = samples[samples.len() - 1].0 - samples[0].0;
        let nominal_rate = (samples.len() - 1) as f64 / span;
        Ok(PowerTrace {
            samples,
            nominal_rate,
        })
    }

    /// Parses a trace from CSV text. The layout is selected by inspecting
    /// the header row; an unrecognized header is a parse error.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("empty trace file: missing header row"))?;
        let format = match header.trim_end_matches('\r').trim() {
            HEADER_POWER => TraceFormat::Power,
            HEADER_CURRENT_VOLTAGE => TraceFormat::CurrentVoltage,
            other => {
                return Err(Error::parse_at(
                    1,
                    format!(
                        "unrecognized trace header \"{other}\" \
                         (expected \"{HEADER_POWER}\" or \"{HEADER_CURRENT_VOLTAGE}\")"
                    ),
                ))
            }
        };
        let mut samples = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1; // enumerate is 0-based, humans count from 1
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expected = match format {
                TraceFormat::Power => 2,
                TraceFormat::CurrentVoltage => 3,
            };
            if fields.len() != expected {
                return Err(Error::parse_at(
                    line_no,
                    format!("expected {expected} fields, got {}", fields.len()),
                ));
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::parse_at(line_no, format!("malformed {what} value \"{s}\""))
                })
            };
            let t = num(fields[0], "time")?;
            let p = match format {
                TraceFormat::Power => num(fields[1], "power")?,
                TraceFormat::CurrentVoltage => {
                    num(fields[1], "current")? * num(fields[2], "voltage")?
                }
            };
            samples.push((t, p));
        }
        PowerTrace::new(samples)
    }

    /// Parses a trace from any reader; see [`PowerTrace::from_csv`].
    pub fn from_reader(mut reader: impl std::io::Read) -> Result<Self> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::io("reading trace", e))?;
        PowerTrace::from_csv(&text)
    }

    /// Serializes to the canonical `time_s,power_w` layout. Values use the
    /// shortest decimal form that parses back to the identical float, so
    /// parse → serialize → parse is bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,power_w\n");
        for &(t, p) in &self.samples {
            out.push_str(&format!("{t},{p}\n"));
        }
        out
    }

    /// The `(time_s, power_w)` samples in time order.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Average sampling rate over the whole trace, samples per second.
    /// Informative only; the time-weighted mean does not depend on it.
    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    /// Time of the first sample, seconds.
    pub fn start_time(&self) -> f64 {
        self.samples[0].0
    }

    /// Time of the last sample, seconds.
    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Time-weighted mean power over `window`, which must lie entirely
    /// within the trace's time span. Power between samples is linearly
    /// interpolated, including at the window boundaries, and integrated by
    /// the trapezoidal rule.
    pub fn mean_power(&self, window: &WindowSpec) -> Result<f64> {
        let w_start = self.start_time() + window.start();
        let w_end = w_start + window.duration();
        if w_end > self.end_time() {
            return Err(Error::OutOfRange(format!(
                "window [{w_start}, {w_end}] s exceeds trace span [{}, {}] s",
                self.start_time(),
                self.end_time()
            )));
        }
        let mut area = 0.0;
        for pair in self.samples.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            let a = t0.max(w_start);
            let b = t1.min(w_end);
            if b <= a {
                continue;
            }
            let lerp = |t: f64| p0 + (p1 - p0) * (t - t0) / (t1 - t0);
            area += (b - a) * (lerp(a) + lerp(b)) / 2.0;
        }
        Ok(area / window.duration())
    }
}

/// Net mean power: gross playback power minus the idle baseline. Both inputs
/// must be finite and nonnegative; a gross value below idle is rejected as a
/// negative-net error because it indicates mismatched traces.
pub fn net_power(gross: f64, idle: f64) -> Result<f64> {
    if !gross.is_finite() || gross < 0.0 {
        return Err(Error::Validation(format!(
            "gross power must be finite and >= 0, got {gross}"
        )));
    }
    if !idle.is_finite() || idle < 0.0 {
        return Err(Error::Validation(format!(
            "idle power must be finite and >= 0, got {idle}"
        )));
    }
    if gross < idle {
        return Err(Error::NegativeNet { gross, idle });
    }
    Ok(gross - idle)
}
