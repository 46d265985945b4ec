use mupf_core::geometry::{closest_point_on_triangle, Pose, TriMesh};
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, half: f64) -> Point3<f64> {
    Point3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

fn blob() -> TriMesh {
    TriMesh::uv_sphere(16, 25, |theta, phi| {
        0.1 * (1.0 + 0.2 * (3.0 * phi).sin() * theta.sin())
    })
    .unwrap()
}

#[test]
fn box_distances_match_brute_force() {
    let mesh = TriMesh::axis_aligned_box(0.1, 0.3, 0.2).unwrap();
    assert_eq!(mesh.face_count(), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let q = random_point(&mut rng, 0.4);
        let a = mesh.closest_point(&q);
        let b = mesh.closest_point_brute_force(&q);
        assert!((a.distance - b.distance).abs() < 1e-12);
    }
}

#[test]
fn box_distance_closed_form() {
    // outside an axis-aligned box the distance is the norm of the clamped excess
    let h = Vector3::new(0.05, 0.15, 0.1);
    let mesh = TriMesh::axis_aligned_box(0.1, 0.3, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..2000 {
        let q = random_point(&mut rng, 0.5);
        let excess = q.coords.abs() - h;
        let outside = excess.map(|e| e.max(0.0)).norm();
        let expected = if excess.max() > 0.0 {
            outside
        } else {
            -excess.max()
        };
        assert!((mesh.closest_point(&q).distance - expected).abs() < 1e-12);
    }
}

#[test]
fn large_sphere_matches_brute_force() {
    let mesh = TriMesh::uv_sphere(50, 100, |_, _| 1.0).unwrap();
    assert!(mesh.face_count() >= 9800);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let q = random_point(&mut rng, 1.5);
        let a = mesh.closest_point(&q);
        let b = mesh.closest_point_brute_force(&q);
        assert!((a.distance - b.distance).abs() < 1e-12);
    }
}

#[test]
fn closest_point_lies_on_reported_face() {
    let mesh = blob();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let q = random_point(&mut rng, 0.2);
        let hit = mesh.closest_point(&q);
        let [a, b, c] = mesh.triangle(hit.face_index);
        let (on_face, _) = closest_point_on_triangle(&q, &a, &b, &c);
        assert!((on_face - hit.point).norm() < 1e-12);
        assert!(((q - hit.point).norm() - hit.distance).abs() < 1e-12);
        let bary = a.coords * hit.barycentric[0]
            + b.coords * hit.barycentric[1]
            + c.coords * hit.barycentric[2];
        assert!((bary - hit.point.coords).norm() < 1e-12);
    }
}

proptest! {
    #[test]
    fn distance_is_invariant_under_rigid_motion(
        pose in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -3.0f64..3.0, -1.5f64..1.5, -3.0f64..3.0),
        q in (-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3),
    ) {
        let mesh = blob();
        let p = Pose::new(pose.0, pose.1, pose.2, pose.3, pose.4, pose.5);
        let local = Point3::new(q.0, q.1, q.2);
        let world = p.to_world(&local);
        let d_local = mesh.closest_point(&local).distance;
        let d_world = mesh.closest_point(&p.to_object(&world)).distance;
        prop_assert!((d_local - d_world).abs() < 1e-12);
    }

    #[test]
    fn triangle_projection_is_nearest(
        q in (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0),
        u in 0.0f64..1.0,
        v in 0.0f64..1.0,
    ) {
        let (a, b, c) = (Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.2, 0.0), Point3::new(0.3, 1.0, 0.4));
        let q = Point3::new(q.0, q.1, q.2);
        let (p, _) = closest_point_on_triangle(&q, &a, &b, &c);
        // any other point of the triangle is no closer
        let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        let other = a + (b - a) * u + (c - a) * v;
        prop_assert!((q - p).norm() <= (q - other).norm() + 1e-12);
    }
}
