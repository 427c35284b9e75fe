//! Boundary element discretization of the hypersingular operator for the
//! Helmholtz equation on flat screens, with a Nitsche-coupled domain
//! decomposition variant and a conforming reference method.

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod postproc;
pub mod quadrature;
pub mod solver;
pub mod spaces;
pub mod study;
pub mod vec3;

pub use error::{Error, Result};
pub use kernels::WaveNumber;
pub use vec3::Vec3;
