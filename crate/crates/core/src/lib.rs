//! Generalized conditional-autoregressive (gCAR) spike-and-slab model for
//! correlated Bayesian multiple testing.
//!
//! Given per-case test statistics and a neighborhood graph that may contain
//! isolated nodes, the crate samples the joint posterior of signal strengths,
//! inclusion indicators and hyperparameters, and turns the draws into
//! inclusion probabilities, credible intervals and model diagnostics. The
//! Scott–Berger independence model is provided as a comparator, along with
//! generators for the standard simulation designs.

pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod graph;
pub mod inference;
pub mod io;
pub mod model;
pub mod sampler;
pub mod sb;
pub mod scoring;
pub mod simgen;
pub mod stats;

pub use error::{GcarError, Result};
pub use graph::{build_graph, spectral_summary, NeighborhoodGraph, RhoSupport, SpectralSummary};
pub use model::{ChainState, ModelSpec, PUpdate, Variant};
pub use sampler::{run_chains, SampleStore, SamplerConfig, StorageMode};
pub use sb::{sb_exact_small, sb_run};
pub use exact::{exact_posterior_small, ExactPosterior, QuadratureGrid};
pub use diagnostics::DiagnosticsReport;
pub use inference::InclusionReport;
pub use scoring::{score, ScoreSummary};
pub use simgen::{Scenario, SimOutput};
