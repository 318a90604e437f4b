//! Scenario space: tree descriptors, the weighted pseudo-metric and bundle distances.

pub mod distance;
pub mod encoding;
pub mod sweep;

pub use distance::*;
pub use encoding::*;
pub use sweep::*;
