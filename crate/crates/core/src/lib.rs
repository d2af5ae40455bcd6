//! A maximally superintegrable Hamiltonian on the conformally flat space
//! `(ℝⁿ, (κ + q²) dq²)`: its quadratic first integrals, numerical and
//! closed-form trajectories, and the geometry of the underlying space.
//!
//! Module map:
//!
//! * [`system`]: parameters, phase points, `𝓗`, `H`, `V`, equations of motion
//! * [`algebra`]: sl(2) realization, Casimirs, partial Casimirs, `I_i`
//! * [`poisson`]: dual-number gradients, brackets, involution and rank checks
//! * [`dynamics`]: implicit-midpoint / RK4 integration and drift monitoring
//! * [`closedform`]: exact `E > 0` orbits
//! * [`geometry`]: curvature, Laplace–Beltrami, intrinsic potentials, HJ separation

pub mod algebra;
pub mod closedform;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod poisson;
pub mod sampling;
pub mod scalar;
pub mod system;

pub use error::{Error, Result};
pub use system::{PhasePoint, SystemParams};
