mod boundary;
mod builders;
mod deformation;
pub mod io;
mod mesh;

pub use boundary::{compute_boundary_geometry, outward_edge_normal, BoundaryGeometry, CORNER_ANGLE_DEG};
pub use builders::{boundary_from_triangles, build_structured_mesh, default_hold_all, MeshShape, HOLD_ALL_MARGIN};
pub use deformation::{make_bump_field, DeformationField, FieldRecipe};
pub use mesh::{signed_area, BoundaryEdge, BoundingBox, Mesh};
