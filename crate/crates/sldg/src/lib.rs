//! Semi-Lagrangian discontinuous Galerkin (SLDG) solver for the 2D linear
//! scalar transport equation `U_t + div(A U) = 0` on periodic rectangular
//! domains.
//!
//! The solver advances the weak form of the integral invariant
//! `d/dt ∫ U ψ dx = 0` along characteristics: each time step traces the
//! Eulerian cells backward, remaps the old solution over the traced cells,
//! and reconstructs modal Legendre coefficients on the fixed grid. Two
//! dimensional-splitting backends are provided:
//!
//! * [`solver2d::Backend::Svs`] — separated-variable reconstruction. After a
//!   batch of 1D sweeps at the passive Gauss ordinates, the full 2D
//!   coefficient tensor is recovered with a precomputed basis-value matrix
//!   and its discrete-orthogonality inverse (a matrix multiply per cell).
//! * [`solver2d::Backend::Ibs`] — interpolation-based reconstruction, the
//!   classical baseline. Point values at the tensor Gauss points are
//!   interpolated by a per-cell dense solve and re-projected; the dense
//!   system is rebuilt and refactored per cell per stage on purpose, to
//!   model the cost profile of classical implementations.
//!
//! Unconditional stability of the scheme (no CFL restriction) and the
//! supporting lemmas are checked numerically by the [`verification`]
//! module; [`runner`] drives convergence, benchmark, and verification runs
//! behind the `sldg` command-line tool.

pub mod config;
pub mod error;
pub mod field;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod runner;
pub mod solver2d;
pub mod splitting;
pub mod sweep1d;
pub mod velocity;
pub mod verification;

pub use error::{Result, SldgError};
pub use field::{ModalField1D, ModalField2D};
pub use mesh::{Axis, Mesh1D, Mesh2D};
pub use quadrature::{eval_basis_cell, eval_basis_ref, gauss_legendre, QuadratureRule};
pub use splitting::SplittingScheme;
pub use velocity::{TracerConfig, TracerOrder, VelocityField};
