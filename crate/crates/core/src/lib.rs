//! Closed-form bifurcation and linear-stability quantities for a three-dimensional
//! tumor growth free boundary problem with a Robin (nutrient supply) boundary condition.
//!
//! The crate is organized bottom-up:
//!
//! * [`bessel`] – ratios `P_n(r) = I_{n+3/2}(r) / (r I_{n+1/2}(r))` and the normalized
//!   radial profile `I_{n+1/2}(r)/r^{1/2}`.
//! * [`stationary`] – the radially symmetric equilibrium `(σ_s, p_s, R)`.
//! * [`bifurcation`] – bifurcation values `μ_n`, coefficients `B_n`, the first and second
//!   order boundary expansions and the slope `μ_2'(0)` of the first branch.
//! * [`certificates`] – sign certificates for `E_1, E_2, E_3` including the exact integer
//!   series argument for `G_1(R) < 0`.
//! * [`harmonics`] – spherical harmonics, surface quadrature and geometric expansions.
//! * [`dynamics`] – linearized mode evolution and the eight dimensional 0-group.

// negated float comparisons are used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod bifurcation;
pub mod certificates;
pub mod dynamics;
pub mod error;
pub mod harmonics;
pub mod stationary;

pub use error::{Error, Result};
pub use stationary::{ModelParams, RadialEquilibrium};
