//! Numerical laboratory for the inviscid Burgers-Hilbert equation
//!
//! ```text
//! u_t + ε u u_x = H[u]
//! ```
//!
//! and for the near-identity change of spatial variable `x = ξ - ε g(t, ξ)`
//! that turns it into an integro-differential equation with no `O(ε)`
//! nonlinearity. Modules:
//!
//! * [`spectral`]: grids, fields, Hilbert transforms, derivatives, norms.
//! * [`bh_solver`]: time integration of the original equation and breaking detection.
//! * [`coord_transform`]: the coordinate change, its inverse and norm transfer.
//! * [`g_solver`]: the transformed flow, kernel functions and energy monitors.
//! * [`normal_form`]: the dependent-variable normal form and its comparison
//!   with the coordinate change.
//! * [`analysis`]: maximal function, estimate constants and integral identities.
//! * [`experiments`]: sweeps, cross-checks and convergence studies used by the CLI.

pub mod analysis;
pub mod bh_solver;
pub mod coord_transform;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod g_solver;
pub mod initial_data;
pub mod normal_form;
pub(crate) mod rk4;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Field, Grid, GridKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
