//! Numerical verification of the large-deviation principle: Monte Carlo
//! event probabilities versus variational minimization of the rate
//! function over closed, linearly constrained events.

mod event;
mod mc;
mod minimize;
mod report;

pub use event::{Constraint, EventSpec, Sense, Target};
pub use mc::{mc_event_probability, McEstimate};
pub use minimize::{minimize_rate, minimize_rate_with, MinimizeOptions, MinimizerResult};
pub use report::{convergence_report, write_report_csv, ReportRow};
