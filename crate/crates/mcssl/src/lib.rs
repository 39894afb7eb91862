//! File formats, the estimation and classification pipeline, and the
//! experiment batch behind the `mcssl` command line.

pub mod artifacts;
pub mod error;
pub mod format;
pub mod io;
pub mod pipeline;

pub use error::{AppError, AppResult};
