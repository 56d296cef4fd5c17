//! Linear power models for VR video playback.
//!
//! This crate turns power-meter traces of a playback device into a small
//! linear model of its power draw, and then interrogates that model:
//!
//! - [`trace`] reduces raw meter logs to one net mean power per run,
//! - [`dataset`] defines variables, measurements and the design matrix,
//! - [`solver`] fits parameters by least squares, optionally under
//!   per-parameter bounds, and (de)serializes fitted models,
//! - [`evaluation`] cross-validates, prunes variables, and answers
//!   contribution and what-if questions,
//! - [`synth`] generates seeded datasets from a known ground truth so
//!   every stage can be checked end to end.
//!
//! The modelled quantity is net power (device under playback minus idle),
//! expressed as an intercept plus one term per active variable: bitrate,
//! frame rate, resolution, and up to seven binary rendering/sensor flags.
//!
//! ```
//! use vrpower::dataset::{DesignMatrix, ModelSpec};
//! use vrpower::solver::fit;
//! use vrpower::synth::{generate, SynthConfig};
//!
//! let data = generate(&SynthConfig::builtin(7))?;
//! let model = fit(&DesignMatrix::build(&data, &ModelSpec::simplified())?, None)?;
//! let json = model.to_json()?;
//! assert!(json.contains("\"schema_version\": 1"));
//! # Ok::<(), vrpower::Error>(())
//! ```

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod solver;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
