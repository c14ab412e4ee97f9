//! State estimation for linear-Gaussian systems with overlapping
//! domain-decomposed filtering, plus a 1-D shallow-water testbed and the
//! experiment harness driving it.
//!
//! The central object is a Kalman filter whose model, observation operator,
//! and error covariances are partitioned across overlapping spatial
//! subdomains and time windows. Cross-covariance corrections between
//! subdomains make the decomposed filter numerically equivalent — to
//! round-off, not merely approximately — to the filter run on the full
//! domain. The `kf` module provides the undecomposed reference, `decomp`
//! the index bookkeeping and operator partitioning, and `ddkf` the
//! decomposed recursions; `swe` supplies a shallow-water twin experiment
//! and `harness` the configuration, metrics, CSV, and CLI layers.

pub mod error;
pub mod matrixcore;
pub mod kf;
pub mod decomp;
pub mod ddkf;
pub mod swe;
pub mod harness;

pub use ddkf::{DdkfProblem, LocalFilterState, MultiDdkfProblem};
pub use decomp::{BlockModel, ObservationSplit, SpaceDecomposition, TimeDecomposition};
pub use error::{Error, Result};
pub use harness::{CompareReport, CsvDoc, ExperimentConfig, TwinSetup};
pub use kf::{GlobalFilterState, LinearGaussianSystem, Seq};
pub use matrixcore::{IndexSet, Matrix, Vector};
