//! Reconstruction of dense 2-D scalar fields from sparse sensor readings.
//!
//! The pipeline: tessellate sparse readings into dense input channels
//! (nearest-sensor fill, distance transforms, location/land masks), normalize
//! per channel kind, regress the full field with a small convolutional
//! network under a masked MSE loss, and score reconstructions with relative
//! L2 / RMSE metrics. Deterministic end to end: a pinned PRNG drives sensor
//! placement, data splits, and weight initialization.

pub mod dataset;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod normalize;
pub mod tessellation;

pub use error::{Error, Result};
pub use field::{ChannelKind, SampleStack, ScalarField, SensorSet};
pub use geometry::{GridGeometry, Metric, SphericalParams, EARTH_RADIUS_KM};
