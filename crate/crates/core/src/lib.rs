//! Equivariant systems and observers on homogeneous spaces.

pub mod catalog;
pub mod checks;
pub mod equivariance;
pub mod error;
pub mod homogeneous;
pub mod integrators;
pub mod kinematics;
pub mod lie;
pub mod linalg;
pub mod manifold;
pub mod observer;
pub mod scenario;

pub use error::{Error, Result};
