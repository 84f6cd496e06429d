//! Chart-coordinate Finsler geometry: jets of `L^2`, sprays, the Barthel
//! connection, the Cartan, Berwald, Chern and Hashiguchi connections, their
//! torsions and curvatures, concurrent fields and the energy beta-change.

pub mod betachange;
pub mod classify;
pub mod concurrent;
pub mod connections;
pub mod curvature;
pub mod dsl;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod jets;
pub mod local;
pub mod point;
pub mod report;
pub mod tensor;

pub use error::{FinslerError, Result};
pub use jets::{Budget, Jet, MultiIndex, ScalarField};
pub use point::SamplePoint;
pub use tensor::Tensor;
