//! Evaluation of terminal scenarios: utilities, matrices, dominance and stability.

pub mod pareto;
pub mod stability;
pub mod utility;

pub use pareto::*;
pub use stability::*;
pub use utility::*;
