//! Scheduling precedence-constrained jobs on related machines under a fixed
//! communication delay, with and without job duplication.
//!
//! The crate is organised as a pipeline:
//!
//! * [`instance`] holds the data model, generators and JSON codecs.
//! * [`preprocess`] drops machines that are too slow to matter and rehosts
//!   schedules that used them.
//! * [`lp`] builds and solves the phase relaxation.
//! * [`grouping`] rounds a fractional solution onto factor-2 speed groups.
//! * [`scheduler`] runs the event-driven group scheduler with duplication.
//! * [`schedmodel`] validates and analyses finished schedules.
//! * [`dedup`] turns a duplicated schedule into one that runs each job once.
//! * [`oracle`] computes exact optima on tiny inputs and a combinatorial
//!   baseline.
//! * [`gaplab`] reproduces the integrality-gap family and alternative
//!   relaxations.
//! * [`pipeline`] wires everything together for the command-line tool.
//!
//! ```
//! use delaysched::instance::{Instance, Job, Machine};
//! use delaysched::pipeline::{run_pipeline, PipelineConfig};
//!
//! let inst = Instance::new(
//!     1.0,
//!     vec![Job::new("a", 1.0), Job::new("b", 1.0)],
//!     vec![Machine::new("m0", 1.0), Machine::new("m1", 1.0)],
//!     vec![("a".into(), "b".into())],
//! );
//! let out = run_pipeline(&inst, &PipelineConfig::default()).unwrap();
//! assert!(out.report.validation.valid);
//! assert!((out.report.makespan - 2.0).abs() < 1e-9);
//! ```

pub mod dedup;
pub mod error;
pub mod gaplab;
pub mod grouping;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod schedmodel;
pub mod scheduler;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use instance::{Instance, Job, Machine, PredMap};
pub use schedmodel::{Placement, Schedule};

/// Additive tolerance for every time and size comparison.
pub const EPS: f64 = 1e-9;
