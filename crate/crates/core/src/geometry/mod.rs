//! Pose math and exact nearest-surface queries against triangle meshes.

mod bvh;
mod mesh;
mod pose;
mod triangle;

pub use bvh::{Aabb, Bvh, MAX_LEAF_SIZE};
pub use mesh::{closest_point_on_mesh, ClosestPointResult, TriMesh, DEGENERATE_AREA_EPS};
pub use pose::{
    euler_from_rotation, pose_to_transform, rotation_from_euler, transform_point_into_object_frame,
    wrap_angle, Pose, EULER_CONVENTION,
};
pub use triangle::closest_point_on_triangle;
