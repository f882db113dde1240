//! Numerical toolkit for two weakly interacting kinks of the stationary
//! phi^6 model.
//!
//! The stationary equation `-u'' + 2u - 8u^3 + 6u^5 = 0` has kink solutions
//! connecting the vacua 0 and +-1. This crate builds every computable object
//! of their two-kink stability analysis and measures the claims numerically:
//!
//! - [`grid`]: uniform grids, Simpson quadrature, 4th-order derivatives,
//!   discrete L2/H1 norms (the substrate for everything else);
//! - [`model`]: closed-form kinks and derivatives, the residual operator
//!   `F(u) = u'' - 2u + 8u^3 - 6u^5`, the two-kink potential, interaction
//!   and nonlinear remainder terms, potential energy;
//! - [`interaction`]: tail cross integrals, their `e^{-sqrt2 beta a}` decay,
//!   and the normalized constants converging to 1/3 and 2/15;
//! - [`modulation`]: Newton fit of the two translations so the remainder is
//!   L2-orthogonal to both kink derivatives;
//! - [`linop`]: the linearized operator as a banded matrix, constrained
//!   saddle-point solves, inertia-bisection eigenvalues, and the empirical
//!   coercivity constant;
//! - [`experiments`]: sweeps measuring `|g|_H1` and `e^{-sqrt2 s}` against
//!   `|F(u)|_L2`, the desk-scale version of the stability estimate.

pub mod error;
pub mod experiments;
pub mod grid;
pub mod interaction;
pub mod linop;
pub mod model;
pub mod modulation;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, PerturbationKind, PerturbationSpec, SweepRecord};
pub use grid::{Grid, GridFunction};
pub use interaction::AsymptoticReport;
pub use linop::{CoercivityEstimate, ConstrainedOperator, SingleKinkSpectrum};
pub use model::KinkPair;
pub use modulation::{ModulationConfig, ModulationResult};
