//! Concentration-of-measure constants on finite metric probability spaces.

pub mod constants;
pub mod continuum;
pub mod error;
pub mod lipschitz;
pub mod numeric;
pub mod orlicz;
pub mod report;
pub mod scenario;
pub mod space;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
