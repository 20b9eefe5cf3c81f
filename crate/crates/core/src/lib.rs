pub mod augment;
pub mod checkpoint;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gan;
pub mod nn;
pub mod raster;
pub mod render;
pub mod report;
pub mod seed;

pub use error::{Error, Result};
