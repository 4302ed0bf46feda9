//! Composite-optimization toolkit built around normal-map proximal random
//! reshuffling (norm-PRR) for finite-sum problems psi = f + phi, with the
//! baselines (e-PRR, proximal SGD, proximal gradient descent), an exact
//! proximal-operator library, stationarity measures, benchmark problems,
//! and trajectory diagnostics that verify the method's descent and error
//! estimates along recorded runs.

pub mod benchmarks;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod schedule;
pub mod shuffle;
pub mod solvers;
pub mod stationarity;

pub use error::{CoreError, Result};
pub use problem::{BoundReport, CompositeObjective, KnownSolution, ProblemInstance};
pub use prox::Regularizer;
pub use schedule::{Schedule, ScheduleKind};
pub use shuffle::{PermutationStream, ShuffleMode};
pub use solvers::{Algorithm, DiagnosticsFlags, DomainGuard, EpochRecord, RunConfig, RunStatus, Trace};
pub use stationarity::TheoryConstants;
