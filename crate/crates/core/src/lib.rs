//! Configuration integrals for sphere-distance patterns.
//!
//! The crate builds the bipartite shattering graphs and related small graphs
//! ([`graph`]), discretized self-similar measures ([`measure`]), the
//! normalized annulus kernel with a fixed-radius neighbor index ([`kernel`]),
//! and evaluates configuration integrals over them ([`integrals`]). It also
//! searches point sets for 4-cycles and shattering witnesses ([`search`]),
//! evaluates the dimensional thresholds in closed form ([`thresholds`]) and
//! simulates ERM learning of sphere classifiers ([`pac`]).

pub mod affine;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod integrals;
pub mod kernel;
pub mod measure;
pub mod pac;
pub mod points;
pub mod search;
pub mod sum;
pub mod thresholds;

pub use error::{Error, Result};
pub use graph::ConfigGraph;
pub use kernel::{KernelSpec, SpatialGrid};
pub use measure::{DiscreteMeasure, IfsSpec};
pub use points::PointSet;
