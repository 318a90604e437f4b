//! The stage-indexed assessment state and the operations that read it.

pub mod attitudes;
pub mod attributes;
pub mod crisis;
pub mod events;
pub mod options;
pub mod relations;
pub mod state;
pub mod validate;

pub use attitudes::*;
pub use attributes::*;
pub use crisis::*;
pub use events::*;
pub use options::*;
pub use relations::*;
pub use state::*;
pub use validate::*;
