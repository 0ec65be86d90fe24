//! Engine for profiling Pregel-style (BSP) graph computations.
//!
//! - [`trace`]: the job data model, trace file format and validation.
//! - [`sim`]: a deterministic BSP simulator that produces traces.
//! - [`aggregate`]: temporal and hierarchy aggregation, filtering, trend series.
//! - [`layout`]: circular ordering and chord-diagram geometry.

pub mod aggregate;
pub mod layout;
pub mod sim;
pub mod trace;
