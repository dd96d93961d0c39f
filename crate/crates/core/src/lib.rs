//! Solvers for the compressible isentropic Euler equations on the periodic
//! torus `[0, 2*pi)^d`, d = 1 or 2.
//!
//! Two independent routes to the same dynamics are provided and
//! cross-validated against each other:
//!
//! * [`lagrangian`] — an Eulerian-Lagrangian solver that evolves the
//!   back-to-labels map, transports the initial density through its
//!   Jacobian, and recovers the velocity from the initial data plus an
//!   accumulated gradient potential, closed by a regularized Picard
//!   fixed-point iteration per time step.
//! * [`reference`](mod@reference) — a classical pseudo-spectral
//!   method-of-lines solver in primitive variables with RK4 time stepping,
//!   used as the oracle.
//!
//! Supporting layers: spectral calculus on the torus ([`spectral`]),
//! characteristic tracing and flow maps ([`flow`]), barotropic pressure laws
//! ([`thermo`]), and closed-form flow linearizations with finite-difference
//! validation ([`frechet`]).

pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod frechet;
pub mod grid;
pub mod initial;
pub mod interp;
pub mod lagrangian;
pub mod reference;
pub mod spectral;
pub mod thermo;

pub use error::{Error, Result};
pub use field::{MatrixField, ScalarField, VectorField};
pub use flow::{FlowMap, VelocityHistory};
pub use grid::TorusGrid;
pub use interp::InterpMethod;
pub use thermo::PressureLaw;
