//! Cascades across abstraction levels and multi-period optimization.

mod cascade;
mod multiperiod;
mod schedule;

pub use cascade::{
    solve_cascade, warm_start, CascadeReport, StageReport, RIGOROUS_MAX_PASSES, RIGOROUS_TOL,
};
pub use multiperiod::{compare_optima, optimize_multiperiod, ComparisonRow, ComparisonTable};
pub use schedule::{CascadeSchedule, Refresh, Stage, StageSolver};
