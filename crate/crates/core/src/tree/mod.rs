//! Scenario trees, their solution concepts and their generation.

pub mod bundle;
pub mod dot;
pub mod generate;
pub mod mlp;
pub mod model;
pub mod mrp;
pub mod refinements;

pub use bundle::*;
pub use dot::*;
pub use generate::*;
pub use mlp::*;
pub use model::*;
pub use mrp::*;
pub use refinements::*;
