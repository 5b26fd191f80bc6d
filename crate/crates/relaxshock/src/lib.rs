//! Numerical laboratory for planar viscous shock waves of the compressible
//! Navier-Stokes system with Maxwell-type stress relaxation.
//!
//! The model replaces the Newtonian constitutive law by two relaxation
//! equations with common relaxation time `tau * rho`: a traceless symmetric
//! stress `Pi1` driven by `mu (grad u + grad u^T - (2/3) div u I)` and a
//! scalar stress `Pi2` driven by `lambda div u`. On the domain `R x T^2`
//! (unit torus cross-section) the laboratory provides
//!
//! * exact Rankine-Hugoniot shock construction for the gamma-law pressure
//!   `p(v) = v^{-gamma}` in specific-volume form ([`gas`]),
//! * the planar viscous shock profile as a solution of a scalar first-order
//!   ODE, tabulated and interpolated ([`profile`]),
//! * the shift (instantaneous shock location) ODE and the monotone weight
//!   used by weighted relative-entropy diagnostics ([`shift`]),
//! * an explicit finite-difference solver for the full relaxed system in the
//!   frame moving with the unperturbed shock, plus a Newtonian reference
//!   solver for relaxation-limit studies ([`solver`], [`fields`]),
//! * weighted relative-entropy, good-term, and Poincare diagnostics
//!   ([`diagnostics`]),
//! * experiment drivers behind the `relaxshock` command line ([`config`],
//!   [`runner`]).
//!
//! All floating-point reductions use fixed-shape summation trees ([`reduce`]),
//! so results are bitwise reproducible for a given configuration and seed
//! regardless of the worker-thread count (`RELAXSHOCK_THREADS`).

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod gas;
pub mod profile;
pub mod reduce;
pub mod runner;
pub mod shift;
pub mod snapshot;
pub mod solver;

pub use error::RelaxError;
pub use gas::{GasModel, ShockData};
pub use profile::ProfileTable;
pub use shift::ShiftState;
