//! Shooting solver, Z_k classifier and a priori estimate checker for radial
//! solutions of the superlinear nonpositone problem
//!
//! ```text
//! −u″ − ((n−1)/t) u′ = g(u) − λ − f(t),   u′(0) = 0,  u(1) = 0.
//! ```

pub mod classification;
pub mod cli;
pub mod continuation;
pub mod error;
pub mod estimates;
pub mod ivp;
pub mod nonlinearity;
pub mod numerics;
pub mod problem;
pub mod profile;
pub mod shooting;

pub use error::{Error, Result};
pub use ivp::{integrate, residual_norm, rhs, IntegratorConfig};
pub use nonlinearity::{ConditionReport, ConditionSettings, Family, Nonlinearity};
pub use problem::{c1_norm, RadialProblem, SourceTerm};
pub use profile::SolutionProfile;
pub use shooting::{boundary_miss, filter_admissible, solve_all, ShootingConfig, Solution, SolutionSet, Terminal};
pub use classification::{classify, phi, ClassificationReport, ZeroRecord};
pub use estimates::{BoundEntry, BoundsReport, EstimateSettings, Verdict};
pub use continuation::{detect_transitions, sweep_lambda, Branch, Sweep, SweepConfig};
