//! Stage-to-stage dynamics: updates, learning, regeneration and path dependence.

pub mod compare;
pub mod history;
pub mod learning;
pub mod update;

pub use compare::*;
pub use history::*;
pub use learning::*;
pub use update::*;
