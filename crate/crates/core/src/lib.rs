//! Geometry and topology of pure and mixed quantum states.
//!
//! This crate computes geometric phases (Aharonov–Anandan phases of state
//! loops, Uhlmann holonomies of density-matrix loops), lattice topological
//! invariants over discretized parameter tori (first Chern numbers, mapping
//! degrees of unit-vector fields, trace-curvature and purity-weighted
//! integrals), Floquet–Bloch fiber decompositions of translation-invariant
//! lattice Hamiltonians, and fiberwise GKLS (Lindblad) open-system dynamics
//! used to probe how dissipation acts on mixed-state topological indices.
//!
//! Modules:
//! - [`states`]: state-space types (pure states, density matrices, amplitude
//!   matrices), thermal states, polar decomposition, rank stratification,
//!   Hilbert–Schmidt and Bures geometry.
//! - [`geometry`]: ambient connection on the sphere of state vectors,
//!   Aharonov–Anandan phases, the Uhlmann connection and horizontal lifts,
//!   discrete Uhlmann transport of density-matrix loops.
//! - [`topology`]: parameter-torus grids and fiber fields, lattice Chern
//!   numbers, mapping degrees, trace-curvature and weighted invariants,
//!   literal winding-form sums.
//! - [`bloch`]: translation-invariant lattice models, Bloch fiber
//!   Hamiltonians, band projectors, thermal fiber families.
//! - [`lindblad`]: GKLS generators, matrix-exponential and RK4 propagation,
//!   fiberwise evolution over a Brillouin-zone grid, invariance experiments.
//! - [`serial`]: JSON wire formats for matrices, loops, and fields.
//! - [`sample`]: seeded random fixtures for tests and self-checks.

// Validation guards use the negated comparison form on purpose: `!(x > 0.0)`
// is true for NaN, so NaN inputs fail validation instead of slipping through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lindblad;
pub mod sample;
pub mod serial;
pub mod states;
pub mod topology;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};

/// Library version string embedded in CLI reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
