//! Numerical laboratory for superquadratic nonlocal Hamilton-Jacobi
//! equations.
//!
//! The crate provides, in dependency order:
//!
//! - [`params`]: the universal structure data `(delta, q, p, M, T, tau)` and
//!   the dual constants with their Legendre/Young identities;
//! - [`grid`] and [`extremal`]: periodic grid fields and the discrete
//!   extremal operators `M^-`/`M^+` plus the local eigenvalue maps;
//! - [`levy`]: the radial truncated-stable jump measure, with closed-form
//!   tail and inverse tail, and the example inf-sup integral operators;
//! - [`solver`]: a monotone explicit solver for the terminal-value extremal
//!   equations and sandwiched general equations;
//! - [`simulate`]: exact simulation of the controlled compensated-Poisson
//!   martingale, controlled trajectories and the bridge process;
//! - [`verify`]: Monte Carlo checks of the control representation formula,
//!   feedback rollouts and moment bounds;
//! - [`bridge`]: the explicit bridge supersolution, its cost scalings and
//!   the subsolution oscillation bounds;
//! - [`holder`] and [`revholder`]: Holder-modulus fitting, coefficient
//!   uniformity sweeps and the weak reverse Holder estimator.
//!
//! All numerics are generic over the scalar type through [`real::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the default precision.

// `!(x > y)`-style guards double as NaN rejection in validation paths
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod error;
pub mod extremal;
pub mod grid;
pub mod holder;
pub mod levy;
pub mod params;
pub mod real;
pub mod revholder;
pub mod rng;
pub mod simulate;
pub mod solver;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

/// Default-precision aliases for the main domain types.
pub type StructureParams64 = params::StructureParams<f64>;
pub type RegularityEstimate64 = params::RegularityEstimate<f64>;
pub type GridFunction64 = grid::GridFunction<f64>;
pub type SpaceTimeField64 = grid::SpaceTimeField<f64>;
pub type LevyMeasureSpec64 = levy::LevyMeasureSpec<f64>;
pub type LevyIntegralSpec64 = levy::LevyIntegralSpec<f64>;
pub type EquationSpec64 = solver::EquationSpec<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type Solution64 = solver::Solution<f64>;
pub type ControlValue64 = simulate::ControlValue<f64>;
pub type Trajectory64 = simulate::Trajectory<f64>;
pub type MartingalePath64 = simulate::MartingalePath<f64>;
pub type McEstimate64 = stats::McEstimate<f64>;
pub type HolderFit64 = holder::HolderFit<f64>;
pub type BridgeParams64 = bridge::BridgeParams<f64>;
pub type PathBatch64 = revholder::PathBatch<f64>;
pub type ReverseHolderReport64 = revholder::ReverseHolderReport<f64>;
