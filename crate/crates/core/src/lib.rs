//! Unfitted least-squares finite elements for the planar elasticity interface problem.

pub mod assembly;
pub mod cutfem_geom;
pub mod elasticity;
pub mod error;
pub mod fem_spaces;
pub mod ghost_penalty;
pub mod interface;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod scalar;
pub mod study;

pub use error::{Error, Result};
pub use scalar::{Point, Real};


/// `f64` instances of the generic geometry types, as used by assembly and the study harness.
pub mod f64_types {
    pub type Mesh = crate::mesh::Mesh<f64>;
    pub type Interface = crate::interface::Interface<f64>;
    pub type CutGeometry = crate::cutfem_geom::CutGeometry<f64>;
    pub type Material = crate::elasticity::Material<f64>;
    pub type QuadratureRule = crate::quadrature::QuadratureRule<f64>;
}
