//! Expected-distance estimators and exact solvers for random bipartite
//! matching on segments and regular networks.

pub mod assignment;
pub mod combinatorics;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod montecarlo;
pub mod network;
pub mod presets;
pub mod types;

pub use error::{Error, Result};
pub use estimators::{Estimate, Method};
pub use types::{EdgeParams, Instance1D, MatchResult, PointSide, SupplyCurve};
