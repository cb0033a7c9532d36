//! Exact-arithmetic simulation and verification of preemptive single-machine
//! flow-time scheduling when a job's processing time is revealed after an
//! `alpha`-fraction of it has been processed.
//!
//! All schedule quantities are rationals; see [`Scalar`]. The crate-root
//! aliases fix the scalar to [`Rational`] for everyday use.

pub mod adversary;
pub mod analysis;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use model::{AdversaryScript, Alpha, CommitRule, Instance, Job, JobId, ProcTime, Trigger};
pub use policy::{BuiltinPolicy, Policy, PolicyKind};
pub use scalar::Scalar;
pub use sim::{simulate, EventKind, EventLog};
pub use trace::{Partition, ScheduleTrace, Segment};

/// Arbitrary-precision rational, the default scalar.
pub type Rational = num_rational::BigRational;

/// Fixed-width rational for small instances where overflow is ruled out.
pub type SmallRational = num_rational::Ratio<i128>;

pub type RationalInstance = model::Instance<Rational>;
pub type RationalTrace = trace::ScheduleTrace<Rational>;
pub type RationalPolicy = policy::BuiltinPolicy<Rational>;
