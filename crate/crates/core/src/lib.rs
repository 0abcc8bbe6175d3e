//! Design models from corresponded shape corpora.
//!
//! * [`cover`]: covering a measurement space with translated tolerance boxes;
//! * [`shape`]: corresponded meshes, landmark measurements, rigid alignment and
//!   the Procrustes mean that turns a box back into a representative shape;
//! * [`stats`]: PCA shape space, measurement-to-shape feature map and Gaussian
//!   models used to extrapolate new subjects.

mod bitset;
pub mod cover;
pub mod error;
mod linalg;
pub mod shape;
pub mod stats;

pub use error::{Error, Result};
