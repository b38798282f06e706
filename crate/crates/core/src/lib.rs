pub mod acoustics;
pub mod audio;
pub mod azimuth;
pub mod caption;
pub mod dsp;
pub mod error;
pub mod llm;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod rng;
pub mod scene;
pub mod signals;

pub use error::{Error, Result};
