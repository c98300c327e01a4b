//! Simulation and statistical verification of branching Brownian motion with
//! mean-field self-interaction, plus a branching-particle approximation of
//! supercritical super-Brownian motion.
//!
//! The crate is organised by concern:
//!
//! * [`model`] and [`simulate`]: the interacting BBM and its two samplers.
//! * [`decomposition`]: the centring projector and subsystem functionals.
//! * [`com`]: centre-of-mass statistics and quadratic-variation clocks.
//! * [`stats`]: the hypothesis tests everything else is checked with.
//! * [`conjecture`] and [`quadrature`]: exploratory local-mass experiments.
//! * [`sbm`]: the super-Brownian particle scheme and its checks.
//! * [`validation`]: named verification criteria shared by the CLI and the
//!   acceptance tests.

pub mod com;
pub mod conjecture;
pub mod decomposition;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sbm;
pub mod simulate;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};
pub use model::{
    assemble_drift_flat, branch, euler_step, exact_epoch_step, n_of_t, net_drift, ou_variance, GaussianIncrement,
    ModelParams, ParticleCloud, ResourceLimits, Sampler,
};
pub use simulate::{simulate, NullSink, Snapshot, SnapshotKind, SnapshotSink};
pub use stats::TestReport;
pub use conjecture::{ConjectureReport, TestFunction};
pub use sbm::{MartingaleSeries, SbmCloud, SbmParams};
pub use validation::{CriterionReport, Sizes, Suite};
