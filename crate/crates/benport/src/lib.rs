//! A Ben-Porath life-cycle model with an endogenous retirement decision,
//! comparative statics under war-related shocks (injury, captivity,
//! displacement), a synthetic-cohort life-history simulator, and the
//! regression estimators used to analyse the resulting panels.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: bracketed root finding, brute-force grid search and
//!   adaptive quadrature. The grid search doubles as an independent oracle
//!   for the structural solvers.
//! - [`model`]: the structural model itself — preferences, technology,
//!   shocks, and the ex-ante / ex-post equilibrium solvers.
//! - [`cohort`]: deterministic, seeded generation of agent-level
//!   life-history panels shaped like retrospective survey data.
//! - [`table`]: a minimal numeric column store feeding the estimators.
//! - [`estimators`]: OLS with robust/clustered covariance, age-interaction
//!   event studies, and two-period difference-in-differences.
//! - [`lifehist`]: ingestion of life-history CSV files, education-years
//!   coding from degree records, and derived outcome variables.

pub mod cohort;
pub mod estimators;
pub mod lifehist;
pub mod model;
pub mod numerics;
pub mod table;
