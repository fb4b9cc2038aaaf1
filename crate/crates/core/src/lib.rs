//! Finite-chaos Skorohod integral processes on a discretized Wiener space.
//!
//! Everything lives on a uniform grid of `N` cells over `[0, 1]`. Random
//! variables are finite Wiener chaos expansions with step kernels, so
//! conditional expectations, Malliavin derivatives, Skorohod integrals and
//! second moments are exact kernel operations, and pathwise values come from
//! per-cell Hermite factors.

pub mod bf;
pub mod chaos;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernel;
pub mod multiset;
pub mod paths;
pub mod process;
pub mod reversal;
pub mod skorohod;
pub mod stopping;

pub use chaos::{eval_multiple_integral, hermite, ChaosFunctional, HermiteTable, Moments};
pub use error::{Error, Result};
pub use grid::{Grid, IndexVector, Partition, PartitionReport, TimeSet};
pub use kernel::{RawTensor, SymKernel};
pub use paths::{isonormal_eval, reverse_path, sample_paths, sample_uniform_points, PathBatch, StepFunction};
pub use process::{ChaosProcess, Provenance, SkorohodProcess};
