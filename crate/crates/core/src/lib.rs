//! Time-series reduction toolkit for capacity-expansion planning.
//!
//! The crate covers the full pipeline used to judge whether a reduced
//! time-series is good enough to plan a renewable energy system with:
//!
//! * [`timeseries`] — hourly profiles, CSV ingestion, duration curves and a
//!   deterministic synthetic-year generator,
//! * [`reduction`] — five derivation methods (k-means, hierarchical,
//!   duration-curve matching, stride selection, re-sampling) producing
//!   weighted reduced series,
//! * [`model`] — linear capacity-expansion programs in chronological mode
//!   (with α/β step scaling) and grouped-period mode (with inter-period
//!   storage linking), plus the fixed-capacity dispatch program,
//! * [`solver`] — an embedded bounded-variable revised simplex and CPLEX-LP
//!   file export/import,
//! * [`evaluation`] — the two-stage adequacy protocol: solve reduced, fix
//!   capacities, re-dispatch at full resolution, report loss of load and
//!   cost deviation over method × length × scaling sweeps.

pub mod error;
pub mod evaluation;
pub mod model;
pub mod reduction;
pub mod solver;
pub mod timeseries;

pub use error::{Error, Result};
