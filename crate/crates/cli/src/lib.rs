//! Command-line pipeline around `sizecover-core`: corpus and file I/O, cover
//! runs with design-model output, held-out evaluation, extrapolation and
//! synthetic corpora.

pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod svg;
pub mod synth;

pub use error::{PipelineError, Result};
