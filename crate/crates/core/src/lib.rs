//! Numerical models of the fractional Peierls-Nabarro equation for edge
//! dislocations in one space dimension.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the
//! algorithms. File formats, configuration and the command line live in the
//! `disloc` companion crate.
//!
//! Modules, bottom-up:
//!
//! - [`potential`]: the periodic multiwell potential `W` and the modulation `a`.
//! - [`grid`]: uniform grids, fields with far-field closure, the order `s`.
//! - [`fraclap`]: `(-Δ)^s` (spectral and whole-line quadrature), the Hilbert
//!   transform, and a Poisson-extension cross-check at `s = 1/2`.
//! - [`layers`]: the heteroclinic layer `u⋆`, the mobility `γ`, superposition
//!   of layers.
//! - [`multibump`]: windowed constrained minimization for heteroclinic,
//!   homoclinic and multibump equilibria of `(-Δ)^s u + a W'(u) = 0`.
//! - [`particles`]: the signed-interaction particle system, collision
//!   detection and collision-time bounds.
//! - [`parabolic`]: the scaled evolution `ε v_t = -(-Δ)^s v - ε^{-2s} W'(v)`,
//!   core tracking, relaxation fits and asymptotic classification.
//! - [`homog`]: level-set densities, the cell problem and effective
//!   Hamiltonian, the Orowan scan and the mean-field transport equation.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fraclap;
pub mod grid;
pub mod homog;
pub mod layers;
pub mod math;
pub mod multibump;
pub mod parabolic;
pub mod particles;
pub mod potential;

pub use error::{Error, Result};
pub use grid::{Boundary, FarField, Field, FractionalOrder, Grid1D};
pub use layers::{GammaConvention, Heteroclinic, Mobility};
pub use particles::{CollisionKind, CollisionReport, LayerConfig, ParticleTrajectory};
pub use potential::{Modulation, Potential};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
