pub mod data;
pub mod error;
pub mod features;
pub mod io_util;
pub mod models;
pub mod pipeline;
pub mod signal;
pub mod stats;
pub mod train;

pub use error::{Error, Result};
pub use features::{TfKind, TfMatrix};
pub use signal::{FramePlan, Waveform, WindowKind};
pub use data::Task;
pub use models::{ModelConfig, ModelKind};
pub use pipeline::{Representation, RunConfig};
