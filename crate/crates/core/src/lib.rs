//! Scenario analysis engine: assessment states, scenario trees and their
//! solution, distances between trees and bundles, provenance-tracked updates,
//! and evaluation of terminal scenarios.

pub mod domain;
pub mod dynamics;
pub mod evaluation;
pub mod id;
pub mod ingest;
pub mod space;
pub mod tree;

pub use id::{id, Id, IdError};

#[cfg(feature = "testkit")]
pub mod testkit;
