//! Link-tracing (adaptive web) sampling from networked populations of unknown
//! size, with Rao-Blackwellized mark-recapture estimation over sample
//! reorderings and a Metropolis-Hastings approximation for large samples.
//!
//! The crate is organized bottom-up:
//!
//! - [`netpop`]: the hidden population graph, edge-list ingest and a synthetic
//!   generator.
//! - [`sampler`]: the two sampling designs (link tracing only, and link tracing
//!   with random jumps), the observed data and its reduction.
//! - [`reorder`]: selection probabilities of hypothetical reorderings,
//!   consistency with the reduced data, and exact Rao-Blackwellization.
//! - [`estimators`]: preliminary estimators, variance estimators and intervals.
//! - [`mcmc`]: the accept/reject resampling chain.
//! - [`harness`]: replication studies, SRS baselines and report output.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod mcmc;
pub mod netpop;
pub mod reorder;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use estimators::{CaptureSummary, Estimate, EstimateReport, Estimator, InitialSamples, Interval};
pub use mcmc::{ChainConfig, ChainResult};
pub use netpop::{NodeId, PopulationGraph};
pub use reorder::{ExactRb, ReorderContext, Reordering, SampleOrdering};
pub use sampler::{ActiveSetPolicy, Design, DesignConfig, ObservedData, OrderedSample, ReducedData};
