//! Frontier efficiency analysis.
//!
//! * [`ccr`]: constant-returns-to-scale DEA scores through the Charnes–Cooper
//!   linear program.
//! * [`madea`]: two-activity DEA with shared-input and split-output
//!   allocation and activity priorities.
//! * [`seqex`]: DEA by sequential exclusion, which moves efficient units
//!   toward the sample barycenter and re-scores the rest.
//! * [`rank`]: rankings from score tables and the normalized Kendall distance.
//!
//! [`lp`] is the simplex engine underneath, [`data`] and [`stats`] handle
//! ingestion and descriptive summaries.

pub mod ccr;
pub mod data;
pub mod lp;
pub mod madea;
pub mod rank;
pub mod seqex;
pub mod stats;

pub use data::{validate_dataset, Dataset, DmuRecord, RawTable, Roles};
pub use lp::{solve_lp, ColumnScaling, LinearProgram, LpSolution, LpStatus, SolverConfig};

/// Scores at or above `1 - EFFICIENCY_TOL` count as efficient.
pub const EFFICIENCY_TOL: f64 = 1e-9;
