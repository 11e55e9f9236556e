//! Tensor-product `Q_p` Lagrange finite elements on a rectangle with
//! homogeneous Dirichlet conditions imposed strongly.

mod mesh;
mod space;

pub use mesh::RectMesh;
pub use space::{BrokenLaplacian, QuadPoint, SpatialNorms, SpatialSpace, SpatialVector};
