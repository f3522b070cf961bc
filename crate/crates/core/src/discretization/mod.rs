//! Mesh, finite-element bases, quadrature, linear algebra and assembly.

pub mod assembly;
pub mod banded;
pub mod basis;
pub mod mesh;
pub mod quadrature;
pub mod sparse;

pub use assembly::{Discretization, EnergyParts, Workers, YPoint, DET_FLOOR, P_COMPONENTS};
pub use mesh::{BoundaryEdge, Mesh, Side};
pub use quadrature::QuadratureRule;
