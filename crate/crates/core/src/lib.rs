//! Parallel execution of sequential randomized incremental algorithms.
//!
//! Each algorithm has a sequential variant that inserts elements in a seeded
//! random order and a parallel variant that produces the same output.
//! [`exec`] holds the shared round drivers, [`dagmeter`] the dependence-depth
//! instrumentation.

pub mod bstsort;
pub mod closestpair2d;
pub mod dagmeter;
pub mod delaunay2d;
pub mod exec;
pub mod geomkit;
pub mod graphcore;
pub mod lelists;
pub mod lp2d;
pub mod order;
pub mod scc;
pub mod seb2d;
