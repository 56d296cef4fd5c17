//! Measurement records, model variable sets, and design matrices.
//!
//! A [`Measurement`] pairs one net mean power value with the stream it was
//! taken from ([`SequenceMeta`]) and the playback settings active at the
//! time ([`PlaybackConfig`]). A [`ModelSpec`] selects which variables enter
//! the linear model; [`DesignMatrix::build`] turns a measurement list into
//! the matrix/vector pair the solver consumes.
//!
//! Features are scaled for numerical conditioning: resolution in megapixels
//! and bitrate in Mbit/s, so all columns live within a few orders of
//! magnitude of each other. Fitted parameters are reported in both scaled
//! and raw units; the per-column scale factors travel with the design matrix
//! and the model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model variables beyond the always-present intercept.
///
/// The order of [`Variable::ALL`] is the canonical "advanced" order: bitrate,
/// frame rate, resolution, then the playback flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    /// Stream bitrate `b`; raw unit bit/s, scaled unit Mbit/s.
    Bitrate,
    /// Stream frame rate `f` in frames per second (unscaled).
    FrameRate,
    /// Frame resolution `S` = width × height; raw unit pixels, scaled unit
    /// megapixels.
    Resolution,
    /// Stereoscopic split-view rendering flag `F_st`.
    StereoView,
    /// Head-tracking (dynamic view) flag `F_dyn`.
    HeadTracking,
    /// 360-degree projection rendering flag `F_360`.
    Video360,
    /// 3D (depth) content rendering flag `F_3D`.
    Video3d,
    /// Gyroscope sampling flag `F_gyro`.
    Gyroscope,
    /// Accelerometer sampling flag `F_accel`.
    Accelerometer,
    /// Magnetometer sampling flag `F_magn`.
    Magnetometer,
}

impl Variable {
    /// Every variable, in canonical (advanced-model) order.
    pub const ALL: [Variable; 10] = [
        Variable::Bitrate,
        Variable::FrameRate,
        Variable::Resolution,
        Variable::StereoView,
        Variable::HeadTracking,
        Variable::Video360,
        Variable::Video3d,
        Variable::Gyroscope,
        Variable::Accelerometer,
        Variable::Magnetometer,
    ];

    /// Short tag used in spec files, model files and CLI arguments.
    pub fn tag(self) -> &'static str {
        match self {
            Variable::Bitrate => "b",
            Variable::FrameRate => "f",
            Variable::Resolution => "S",
            Variable::StereoView => "F_st",
            Variable::HeadTracking => "F_dyn",
            Variable::Video360 => "F_360",
            Variable::Video3d => "F_3D",
            Variable::Gyroscope => "F_gyro",
            Variable::Accelerometer => "F_accel",
            Variable::Magnetometer => "F_magn",
        }
    }

    /// Parses a tag; an unknown tag is a parse error naming the tag.
    pub fn from_tag(tag: &str) -> Result<Self> {
        Variable::ALL
            .iter()
            .copied()
            .find(|v| v.tag() == tag)
            .ok_or_else(|| Error::parse(format!("unknown variable tag \"{tag}\"")))
    }

    /// Multiplier taking the raw feature value to its scaled form
    /// (1e-6 for pixels → megapixels and bit/s → Mbit/s, 1 otherwise).
    pub fn scale(self) -> f64 {
        match self {
            Variable::Bitrate | Variable::Resolution => 1e-6,
            _ => 1.0,
        }
    }

    /// Feature value in raw units for one measurement.
    pub fn raw_value(self, m: &Measurement) -> f64 {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Variable::Bitrate => m.sequence.bitrate,
            Variable::FrameRate => m.sequence.frame_rate,
            Variable::Resolution => m.sequence.resolution(),
            Variable::StereoView => flag(m.config.stereo),
            Variable::HeadTracking => flag(m.config.head_tracking),
            Variable::Video360 => flag(m.config.video_360),
            Variable::Video3d => flag(m.config.video_3d),
            Variable::Gyroscope => flag(m.config.gyroscope),
            Variable::Accelerometer => flag(m.config.accelerometer),
            Variable::Magnetometer => flag(m.config.magnetometer),
        }
    }

    /// Unit label of the fitted parameter in scaled form.
    pub fn scaled_unit(self) -> &'static str {
        match self {
            Variable::Bitrate => "W/(Mbit/s)",
            Variable::FrameRate => "W/(frame/s)",
            Variable::Resolution => "W/Mpx",
            _ => "W",
        }
    }

    /// Unit label of the fitted parameter in raw form.
    pub fn raw_unit(self) -> &'static str {
        match self {
            Variable::Bitrate => "W/(bit/s)",
            Variable::FrameRate => "W/(frame/s)",
            Variable::Resolution => "W/px",
            _ => "W",
        }
    }
}

impl std::fmt::Display for Variable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variable::from_tag(s)
    }
}

/// Ordered, duplicate-free set of model variables. The intercept is always
/// present and is not listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    variables: Vec<Variable>,
}

/// Schema version of spec and model JSON files written by this crate.
pub const FILE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SpecFile {
    schema_version: u32,
    variables: Vec<String>,
}

impl ModelSpec {
    /// Builds a spec from an explicit variable list; duplicates are rejected.
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].contains(v) {
                return Err(Error::Validation(format!(
                    "variable \"{v}\" listed more than once"
                )));
            }
        }
        Ok(ModelSpec { variables })
    }

    /// The full ten-variable model.
    pub fn advanced() -> Self {
        ModelSpec {
            variables: Variable::ALL.to_vec(),
        }
    }

    /// The reduced model kept after pruning: bitrate, resolution and the
    /// 360-degree rendering flag.
    pub fn simplified() -> Self {
        ModelSpec {
            variables: vec![Variable::Bitrate, Variable::Resolution, Variable::Video360],
        }
    }

    /// A constant-only model (intercept, no variables).
    pub fn intercept_only() -> Self {
        ModelSpec {
            variables: Vec::new(),
        }
    }

    /// Parses a comma-separated tag list such as `"b,S,F_360"`, or the
    /// preset names `advanced` and `simplified`.
    pub fn parse_tags(text: &str) -> Result<Self> {
        match text.trim() {
            "advanced" => Ok(ModelSpec::advanced()),
            "simplified" => Ok(ModelSpec::simplified()),
            other => {
                let vars = other
                    .split(',')
                    .map(|t| Variable::from_tag(t.trim()))
                    .collect::<Result<Vec<_>>>()?;
                ModelSpec::new(vars)
            }
        }
    }

    /// Comma-separated tag list, the inverse of [`ModelSpec::parse_tags`]
    /// for explicit lists (presets also render as their tag lists).
    pub fn to_tag_list(&self) -> String {
        self.variables
            .iter()
            .map(|v| v.tag())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Variables in model order (intercept excluded).
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    /// Number of fitted parameters K, intercept included.
    pub fn param_count(&self) -> usize {
        self.variables.len() + 1
    }

    /// Whether `v` is part of this spec.
    pub fn contains(&self, v: Variable) -> bool {
        self.variables.contains(&v)
    }

    /// A copy of this spec with `v` removed (order otherwise preserved).
    pub fn without(&self, v: Variable) -> Self {
        ModelSpec {
            variables: self.variables.iter().copied().filter(|&x| x != v).collect(),
        }
    }

    /// Human-readable label for a parameter index: `p_0` for the intercept,
    /// else the variable tag.
    pub fn param_label(&self, index: usize) -> String {
        if index == 0 {
            "p_0".to_string()
        } else {
            self.variables[index - 1].tag().to_string()
        }
    }

    /// Scaled feature vector `[1, x_1, ..., x_V]` for one measurement.
    pub fn feature_vector(&self, m: &Measurement) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.param_count());
        x.push(1.0);
        for v in &self.variables {
            x.push(v.raw_value(m) * v.scale());
        }
        x
    }

    /// Raw-unit feature vector `[1, x_1, ..., x_V]` for one measurement.
    pub fn feature_vector_raw(&self, m: &Measurement) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.param_count());
        x.push(1.0);
        for v in &self.variables {
            x.push(v.raw_value(m));
        }
        x
    }

    /// Per-column scale factors `[1, s_1, ..., s_V]` taking raw features to
    /// scaled features (and scaled parameters to raw-unit parameters).
    pub fn scaling(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.param_count());
        s.push(1.0);
        for v in &self.variables {
            s.push(v.scale());
        }
        s
    }

    /// Serializes to the versioned spec JSON file format.
    pub fn to_json(&self) -> String {
        let file = SpecFile {
            schema_version: FILE_SCHEMA_VERSION,
            variables: self.variables.iter().map(|v| v.tag().to_string()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("spec serialization");
        text.push('\n');
        text
    }

    /// Parses the spec JSON file format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("malformed spec file: {e}")))?;
        if file.schema_version != FILE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: file.schema_version,
                supported: FILE_SCHEMA_VERSION,
            });
        }
        let vars = file
            .variables
            .iter()
            .map(|t| Variable::from_tag(t))
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(vars)
    }
}

/// Video codec a stream was encoded with. Carried as metadata for filtering;
/// codec identity is not a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    H264,
    Hevc,
}

impl Codec {
    /// Canonical name as written to CSV.
    pub fn name(self) -> &'static str {
        match self {
            Codec::H264 => "H264",
            Codec::Hevc => "HEVC",
        }
    }

    /// Parses common spellings; anything else is rejected.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "H264" | "h264" | "H.264" | "AVC" => Ok(Codec::H264),
            "HEVC" | "hevc" | "H265" | "h265" | "H.265" => Ok(Codec::Hevc),
            other => Err(Error::Validation(format!("unknown codec \"{other}\""))),
        }
    }
}

/// Projection format of the source material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Conventional flat video.
    Rectilinear,
    /// 360-degree equirectangular video.
    Equirectangular,
}

/// Identity and coding parameters of one test stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMeta {
    /// Source sequence name; all coded variants of one source share it, and
    /// cross-validation folds group by it.
    pub name: String,
    /// Frame width, pixels.
    pub width: u32,
    /// Frame height, pixels.
    pub height: u32,
    /// Frame rate, frames per second.
    pub frame_rate: f64,
    /// Bitrate, bits per second.
    pub bitrate: f64,
    /// Codec metadata (not a model variable).
    pub codec: Codec,
    /// Encoder constant-rate-factor used to produce this variant.
    pub crf: i32,
    /// Source projection (informative; the rendering mode in effect is the
    /// `video_360` playback flag).
    pub projection: Projection,
    /// Whether the source carries 3D (depth) content (informative).
    pub is_3d: bool,
}

impl SequenceMeta {
    /// Frame resolution S = width × height, pixels.
    pub fn resolution(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("sequence name must not be empty".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Validation(format!(
                "nonpositive dimension {}x{}",
                self.width, self.height
            )));
        }
        if !self.frame_rate.is_finite() || self.frame_rate <= 0.0 {
            return Err(Error::Validation(format!(
                "nonpositive frame rate {}",
                self.frame_rate
            )));
        }
        if !self.bitrate.is_finite() || self.bitrate <= 0.0 {
            return Err(Error::Validation(format!(
                "nonpositive bitrate {}",
                self.bitrate
            )));
        }
        Ok(())
    }
}

/// Playback settings active during one measurement. At most one motion
/// sensor (gyroscope, accelerometer, magnetometer) may be polled at a time,
/// mirroring how the playback application exercises them.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaybackConfig {
    /// Playback application identifier (metadata only).
    pub app: String,
    /// Stereoscopic split-view rendering.
    pub stereo: bool,
    /// Head-tracking / dynamic view.
    pub head_tracking: bool,
    /// 360-degree projection rendering.
    pub video_360: bool,
    /// 3D (depth) rendering.
    pub video_3d: bool,
    /// Gyroscope polled.
    pub gyroscope: bool,
    /// Accelerometer polled.
    pub accelerometer: bool,
    /// Magnetometer polled.
    pub magnetometer: bool,
}

impl PlaybackConfig {
    /// Checks internal consistency (sensor exclusivity, non-empty app id).
    pub fn validate(&self) -> Result<()> {
        if self.app.trim().is_empty() {
            return Err(Error::Validation("app identifier must not be empty".into()));
        }
        let sensors =
            self.gyroscope as u8 + self.accelerometer as u8 + self.magnetometer as u8;
        if sensors > 1 {
            return Err(Error::Validation(
                "at most one motion sensor may be active per measurement".into(),
            ));
        }
        Ok(())
    }
}

/// One net mean power observation with its full context.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub sequence: SequenceMeta,
    pub config: PlaybackConfig,
    /// Net mean steady-state power, watts.
    pub power: f64,
}

impl Measurement {
    /// Checks all per-row invariants.
    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        self.config.validate()?;
        if !self.power.is_finite() || self.power < 0.0 {
            return Err(Error::Validation(format!(
                "power must be finite and >= 0, got {}",
                self.power
            )));
        }
        Ok(())
    }
}

/// Header of the measurement CSV format.
pub const MEASUREMENT_CSV_HEADER: &str = "sequence,width,height,fps,bitrate_bps,codec,crf,app,\
                                          f_st,f_dyn,f_360,f_3d,f_gyro,f_accel,f_magn,power_w";

/// Parses the 15 sequence/config fields shared by the measurement CSV and
/// session CSV layouts (everything except the trailing power column).
/// `row` is the 1-based data-row number used in error messages.
pub fn parse_sequence_config(fields: &[&str], row: usize) -> Result<(SequenceMeta, PlaybackConfig)> {
    debug_assert_eq!(fields.len(), 15);
    let ctx = |e: Error| -> Error {
        match e {
            Error::Parse { msg, .. } => Error::parse_at(row, format!("row {row}: {msg}")),
            Error::Validation(msg) => Error::Validation(format!("row {row}: {msg}")),
            other => other,
        }
    };
    let int = |s: &str, what: &str| -> Result<i64> {
        s.trim()
            .parse::<i64>()
            .map_err(|_| Error::parse(format!("malformed {what} value \"{s}\"")))
    };
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::parse(format!("malformed {what} value \"{s}\"")))
    };
    let flag = |s: &str, what: &str| -> Result<bool> {
        match s.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(Error::Validation(format!(
                "{what} flag must be 0 or 1, got \"{other}\""
            ))),
        }
    };

    let width = int(fields[1], "width").map_err(ctx)?;
    let height = int(fields[2], "height").map_err(ctx)?;
    if width <= 0 || height <= 0 {
        return Err(Error::Validation(format!(
            "row {row}: nonpositive dimension {width}x{height}"
        )));
    }
    let sequence = SequenceMeta {
        name: fields[0].trim().to_string(),
        width: width as u32,
        height: height as u32,
        frame_rate: num(fields[3], "fps").map_err(ctx)?,
        bitrate: num(fields[4], "bitrate_bps").map_err(ctx)?,
        codec: Codec::parse(fields[5]).map_err(ctx)?,
        crf: int(fields[6], "crf").map_err(ctx)? as i32,
        // The CSV layout does not carry projection or 3D-content columns;
        // they are informative metadata and default to flat 2D on load.
        projection: Projection::Rectilinear,
        is_3d: false,
    };
    let config = PlaybackConfig {
        app: fields[7].trim().to_string(),
        stereo: flag(fields[8], "f_st").map_err(ctx)?,
        head_tracking: flag(fields[9], "f_dyn").map_err(ctx)?,
        video_360: flag(fields[10], "f_360").map_err(ctx)?,
        video_3d: flag(fields[11], "f_3d").map_err(ctx)?,
        gyroscope: flag(fields[12], "f_gyro").map_err(ctx)?,
        accelerometer: flag(fields[13], "f_accel").map_err(ctx)?,
        magnetometer: flag(fields[14], "f_magn").map_err(ctx)?,
    };
    Ok((sequence, config))
}

/// Loads measurements from CSV text. The header must match
/// [`MEASUREMENT_CSV_HEADER`]; a header-only file yields an empty list, and
/// any bad row is rejected with its 1-based data-row number.
pub fn load_measurements(text: &str) -> Result<Vec<Measurement>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty measurement file: missing header row"))?
        .trim_end_matches('\r');
    if header != MEASUREMENT_CSV_HEADER {
        return Err(Error::parse_at(
            1,
            format!("unrecognized measurement header \"{header}\""),
        ));
    }
    let mut measurements = Vec::new();
    let mut row = 0usize;
    for raw in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        row += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::parse_at(
                row,
                format!("row {row}: expected 16 fields, got {}", fields.len()),
            ));
        }
        let (sequence, config) = parse_sequence_config(&fields[..15], row)?;
        let power = fields[15].trim().parse::<f64>().map_err(|_| {
            Error::parse_at(row, format!("row {row}: malformed power value \"{}\"", fields[15]))
        })?;
        let m = Measurement {
            sequence,
            config,
            power,
        };
        m.validate()
            .map_err(|e| Error::Validation(format!("row {row}: {e}")))?;
        measurements.push(m);
    }
    Ok(measurements)
}

/// Serializes measurements to the canonical CSV layout. Numbers use the
/// shortest form that parses back to the identical float.
pub fn write_measurements(measurements: &[Measurement]) -> String {
    let mut out = String::from(MEASUREMENT_CSV_HEADER);
    out.push('\n');
    let flag = |b: bool| if b { '1' } else { '0' };
    for m in measurements {
        let s = &m.sequence;
        let c = &m.config;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.name,
            s.width,
            s.height,
            s.frame_rate,
            s.bitrate,
            s.codec.name(),
            s.crf,
            c.app,
            flag(c.stereo),
            flag(c.head_tracking),
            flag(c.video_360),
            flag(c.video_3d),
            flag(c.gyroscope),
            flag(c.accelerometer),
            flag(c.magnetometer),
            m.power
        ));
    }
    out
}

/// The least-squares problem for one measurement list and model spec:
/// scaled feature matrix, observed power vector, and the scale factors that
/// take fitted parameters back to raw units.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    a: DMatrix<f64>,
    p: DVector<f64>,
    scaling: Vec<f64>,
    row_sequences: Vec<String>,
    spec: ModelSpec,
}

impl DesignMatrix {
    /// Builds the scaled design for `measurements` under `spec`. The list
    /// must be non-empty and every row must pass validation; duplicate rows
    /// are legal and act as weights.
    pub fn build(measurements: &[Measurement], spec: &ModelSpec) -> Result<Self> {
        Self::build_inner(measurements, spec, true)
    }

    /// Builds the design on raw-unit features (scale factors all 1). Fitting
    /// on it yields raw-unit parameters directly; used to verify that
    /// scaling is a pure column transformation.
    pub fn build_unscaled(measurements: &[Measurement], spec: &ModelSpec) -> Result<Self> {
        Self::build_inner(measurements, spec, false)
    }

    fn build_inner(measurements: &[Measurement], spec: &ModelSpec, scaled: bool) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::Validation(
                "cannot build a design matrix from an empty measurement list".into(),
            ));
        }
        for (i, m) in measurements.iter().enumerate() {
            m.validate()
                .map_err(|e| Error::Validation(format!("measurement {i}: {e}")))?;
        }
        let n = measurements.len();
        let k = spec.param_count();
        let mut a = DMatrix::zeros(n, k);
        let mut p = DVector::zeros(n);
        for (i, m) in measurements.iter().enumerate() {
            let x = if scaled {
                spec.feature_vector(m)
            } else {
                spec.feature_vector_raw(m)
            };
            for (j, v) in x.into_iter().enumerate() {
                a[(i, j)] = v;
            }
            p[i] = m.power;
        }
        let scaling = if scaled {
            spec.scaling()
        } else {
            vec![1.0; k]
        };
        Ok(DesignMatrix {
            a,
            p,
            scaling,
            row_sequences: measurements
                .iter()
                .map(|m| m.sequence.name.clone())
                .collect(),
            spec: spec.clone(),
        })
    }

    /// The N×K feature matrix (first column all ones).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The N observed power values, watts.
    pub fn observations(&self) -> &DVector<f64> {
        &self.p
    }

    /// Per-column scale factors (1 for the intercept).
    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// Source-sequence name of each row, for fold bookkeeping.
    pub fn row_sequences(&self) -> &[String] {
        &self.row_sequences
    }

    /// The spec this design was built for.
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Number of rows N.
    pub fn n_rows(&self) -> usize {
        self.a.nrows()
    }

    /// Number of parameters K (intercept included).
    pub fn n_params(&self) -> usize {
        self.a.ncols()
    }

    /// Name of a parameter column for error messages: `intercept` or the
    /// variable tag.
    pub fn column_label(&self, index: usize) -> String {
        if index == 0 {
            "intercept".to_string()
        } else {
            self.spec.variables()[index - 1].tag().to_string()
        }
    }
}
