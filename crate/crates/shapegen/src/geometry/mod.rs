//! Triangle meshes and exact signed-distance queries.
//!
//! The ground-truth SDF of a watertight mesh is computed as the distance to
//! the closest triangle, signed by the generalized winding number: points
//! with winding ≥ 0.5 are inside and get negative sign. A BVH accelerates
//! closest-triangle queries; [`sdf::brute_sdf`] keeps the plain
//! O(triangles) scan as the oracle the accelerated path is tested against.

mod bvh;
mod mesh;
mod mesh_io;
pub mod primitives;
mod sample;
mod sdf;
mod tri;

pub use bvh::Bvh;
pub use mesh::{Aabb, TriangleMesh, UnitCubeMap};
pub use mesh_io::{load_mesh, save_ply};
pub use sample::{load_samples, sample_training_grid, save_samples, GridSpec, SdfSampleSet};
pub use sdf::{brute_nearest_surface_point, brute_sdf, MeshSdf};
pub use tri::{closest_point_on_triangle, triangle_solid_angle};
