//! Reference configuration: tetrahedral meshes, the obstacle node set, and quadrature.

mod io;
mod locate;
mod mesh;
mod obstacle;
mod quadrature;

pub(crate) use io::{content_lines, parse_header, parse_numbers};
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub use locate::{barycentric, PointLocator};
pub use mesh::{build_box_mesh, build_unit_cube_mesh, BoundaryTri, BoxFace, DomainShape, Mesh};
pub use obstacle::{convex_hull, extract_obstacle, ObstacleSet, PLANE_TOLERANCE};
pub use quadrature::{
    h1_norm, integrate_surface, integrate_volume, l2_norm, nodal_l2_squared, Region, VolumeIntegrand, TET_DEGREE2,
    TRI_DEGREE2,
};
