//! Periodic orbits of the discrete nonlinear Schrödinger equation (DNLSE) on a
//! cyclic lattice of `n` sites, in a frame rotating with frequency `ω`.
//!
//! The crate computes Lyapunov families of periodic orbits that bifurcate from
//! the polygonal relative equilibrium `a_j = a e^{i j α ζ}`, `ζ = 2π/n`, follows
//! them with pseudo-arclength continuation of an orthogonal-collocation boundary
//! value problem, detects rational values of the period ratio `T/T₀`, and locks
//! onto them. An `ℓ:m` resonant orbit closes up in the non-rotating frame, where
//! all sites travel along one closed curve (a choreography) or along several
//! (a partial choreography). Floquet multipliers classify linear stability.
//!
//! Module map:
//! - [`lattice`]: the lattice model, conserved quantities, equilibria, and the
//!   extended vector field with unfolding parameters.
//! - [`spectral`]: linearization at the equilibrium, normal modes, and
//!   small-amplitude starting orbits.
//! - [`bvp`]: piecewise-polynomial collocation of periodic orbits, constraint
//!   assembly, Newton solves, and mesh adaptation.
//! - [`continuation`]: pseudo-arclength branch tracing, resonance detection and
//!   location, ratio-locked continuation.
//! - [`floquet`]: monodromy matrices, multipliers, and a-posteriori integration.
//! - [`choreography`]: resonance arithmetic, frame transforms, choreography
//!   verification, and winding numbers.
//! - [`io`] / [`render`] / [`pipeline`]: file formats, SVG output, and the
//!   staged end-to-end run driver.

pub mod bvp;
pub mod choreography;
pub mod continuation;
pub mod eig;
mod error;
pub mod floquet;
pub mod integrate;
pub mod io;
pub mod lattice;
pub mod pipeline;
pub mod render;
pub mod spectral;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
