//! Learning rules that are robust to collections of data transformations.
//!
//! The library is organized around a zero-sum game between a hypothesis
//! class `H` (picking predictors) and a transformation collection `T`
//! (picking distribution shifts):
//!
//! - [`domain`] — points, labeled samples, finite-support distributions,
//!   predictors, transforms, and the error functional.
//! - [`hypothesis`] — concrete hypothesis spaces (finite tables, 1-d
//!   thresholds, halfspaces, a two-layer network) with exact or heuristic
//!   ERM routines.
//! - [`transform`] — transformation spaces (finite lists, coordinate
//!   permutation groups, linear maps, hypercube sign flips) with sampling
//!   and dataset inflation.
//! - [`game`] — the learning rules: worst-case risk minimization, coverage
//!   maximization, worst-case regret minimization, and Multiplicative
//!   Weights reductions to an ERM oracle.
//! - [`vc`] — brute-force shattering searches, growth-function bounds, and
//!   sample-complexity calculators.
//! - [`lowerbound`] — a family where `vc(H) = 1` while the composition
//!   with its transforms shatters `k` points.
//! - [`experiment`] — SGD on Boolean-hypercube targets, with and without
//!   invariance-respecting augmentation.
//!
//! All numeric code is generic over a scalar type implementing [`Real`];
//! the `*64` aliases at the crate root fix `f64`, which is what the CLI
//! and the acceptance suite use.

pub mod domain;
pub mod experiment;
pub mod game;
pub mod halfspace;
pub mod hypothesis;
pub mod lowerbound;
pub mod net;
pub mod rng;
pub mod transform;
pub mod vc;

mod scalar;

pub use scalar::Real;

/// `f64` instantiations of the core types.
pub type Point64 = domain::Point<f64>;
pub type Sample64 = domain::LabeledSample<f64>;
pub type Distribution64 = domain::FiniteDistribution<f64>;
pub type Predictor64 = domain::Predictor<f64>;
pub type Transform64 = domain::Transform<f64>;
pub type ErrorMatrix64 = domain::ErrorMatrix<f64>;
pub type HypothesisSpace64 = hypothesis::HypothesisSpace<f64>;
pub type TransformSpace64 = transform::TransformSpace<f64>;
pub type GameReport64 = game::GameReport<f64>;
pub type GameTrace64 = game::GameTrace<f64>;
