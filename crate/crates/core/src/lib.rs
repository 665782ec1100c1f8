//! Monotone estimation of local and tail false discovery rates.
//!
//! The pipeline bins summarizing statistics into a histogram, fits an
//! empirical null sub-density by Poisson regression over a central null
//! region, forms binned local (`fdr`) and tail (`Fdr`) estimates together
//! with delta-method covariances, monotonizes the tails with weighted
//! isotonic regression, and applies adaptive step-up decision rules.
//!
//! [`simulation`] reproduces a two-scenario Monte Carlo study against
//! closed-form oracles, and [`cli_io`] wires everything to CSV/SVG outputs.

pub mod cli_io;
pub mod decision;
pub mod error;
pub mod fdr_core;
pub mod histogram;
pub mod isotonic;
pub mod null_model;
pub mod pipeline;
pub mod simulation;
pub mod stats_numerics;

pub use decision::{DecisionReport, DecisionRule, ErrorScore};
pub use error::{FdrError, Result};
pub use fdr_core::{FdrEstimates, TailSide};
pub use histogram::Histogram;
pub use isotonic::{ChainProblem, Direction, MonoMethod, MonoTarget, MonotoneFdr, TailBoundaries};
pub use null_model::{FamilyKind, FitControls, NullFit, NullRegion};

pub use stats_numerics::Dof;
pub use simulation::{ScenarioKind, ScenarioSpec, SimulationSummary, StudyConfig};
pub use cli_io::{AnalysisConfig, SimulateConfig};
