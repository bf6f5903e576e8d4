pub mod barycenter;
pub mod error;
pub mod generators;
pub mod graph;
pub mod gw;
pub mod interpolate;
pub mod io;
pub mod landscape;
pub mod matching;
pub mod measures;
pub mod metrics;
pub mod partition;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
