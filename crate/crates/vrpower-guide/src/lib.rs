//! The `vrpower` guide, mounted as rustdoc so `cargo test` runs every
//! code block in `book/src/` as a doctest. A book chapter that drifts
//! from the library fails the build instead of going quietly stale.
//!
//! Render the same content as a website with `mdbook build book/`.
#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/measurements.md")]
pub mod measurements {}

#[doc = include_str!("../../../book/src/traces.md")]
pub mod traces {}

#[doc = include_str!("../../../book/src/model-specs.md")]
pub mod model_specs {}

#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}

#[doc = include_str!("../../../book/src/bounded-fits.md")]
pub mod bounded_fits {}

#[doc = include_str!("../../../book/src/model-files.md")]
pub mod model_files {}

#[doc = include_str!("../../../book/src/cross-validation.md")]
pub mod cross_validation {}

#[doc = include_str!("../../../book/src/pruning.md")]
pub mod pruning {}

#[doc = include_str!("../../../book/src/contributions.md")]
pub mod contributions {}

#[doc = include_str!("../../../book/src/savings.md")]
pub mod savings {}

#[doc = include_str!("../../../book/src/synthetic-data.md")]
pub mod synthetic_data {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/errors.md")]
pub mod errors {}
