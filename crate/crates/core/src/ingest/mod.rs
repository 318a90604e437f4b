//! Extraction records, acceptance gates and changeset assembly.

pub mod gate;
pub mod record;

pub use gate::*;
pub use record::*;
