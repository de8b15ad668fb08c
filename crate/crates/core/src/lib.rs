//! Geodesic Riesz energies on the sphere `S^d`: Gegenbauer expansions, coefficient sign
//! and decay laws, energy extremizers, Stolarsky invariance and cap discrepancy.

pub mod coefficients;
pub mod discrepancy;
pub mod energy;
pub mod error;
pub mod pointsets;
pub mod powerseries;
pub mod quadrature;
pub mod specfun;

pub use coefficients::{CoefficientTable, PotentialSpec};
pub use energy::{MeasureSpec, PointSet};
pub use error::{Error, Result};
pub use specfun::SphereContext;
