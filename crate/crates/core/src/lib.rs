pub mod error;
pub mod exec;
pub mod grid;
pub mod mittag_leffler;
pub mod spline;
pub mod caputo;
pub mod trajectory;
pub mod metrics;
pub mod solver;
pub mod classical;
pub mod equivalence;
pub mod stability;
