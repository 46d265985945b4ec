use nalgebra::{Point3, Vector3};

/// Closest point on triangle `(a, b, c)` to `p`, with its barycentric
/// coordinates `(u, v, w)` such that `point = u*a + v*b + w*c`.
///
/// Exact Voronoi-region classification (vertex, edge, interior).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> (Point3<f64>, Vector3<f64>) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Vector3::new(1.0, 0.0, 0.0));
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Vector3::new(0.0, 1.0, 0.0));
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Vector3::new(1.0 - v, v, 0.0));
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Vector3::new(0.0, 0.0, 1.0));
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Vector3::new(1.0 - w, 0.0, w));
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Vector3::new(0.0, 1.0 - w, w));
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Vector3::new(1.0 - v - w, v, w))
}

/// Twice the triangle area.
pub fn double_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    (b - a).cross(&(c - a)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri() -> [Point3<f64>; 3] {
        [
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn interior_projection() {
        let [a, b, c] = tri();
        let (q, bary) = closest_point_on_triangle(&Point3::new(0.2, 0.2, 1.0), &a, &b, &c);
        assert!((q - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert!((bary.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vertex_and_edge_regions() {
        let [a, b, c] = tri();
        let (q, _) = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.5), &a, &b, &c);
        assert_eq!(q, a);
        let (q, _) = closest_point_on_triangle(&Point3::new(2.0, -0.5, 0.0), &a, &b, &c);
        assert_eq!(q, b);
        let (q, _) = closest_point_on_triangle(&Point3::new(0.5, -1.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        let (q, _) = closest_point_on_triangle(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
        let (q, _) = closest_point_on_triangle(&Point3::new(-3.0, 0.25, 0.0), &a, &b, &c);
        assert!((q - Point3::new(0.0, 0.25, 0.0)).norm() < 1e-15);
    }

    // Dense barycentric sampling never beats the closed form.
    proptest! {
        #[test]
        fn closed_form_is_minimal(
            px in -2.0..2.0f64, py in -2.0..2.0f64, pz in -2.0..2.0f64,
            cx in -1.0..1.0f64, cy in 0.1..2.0f64, cz in -1.0..1.0f64,
        ) {
            let a = Point3::new(0.0, 0.0, 0.0);
            let b = Point3::new(1.0, 0.0, 0.3);
            let c = Point3::new(cx, cy, cz);
            let p = Point3::new(px, py, pz);
            let (q, bary) = closest_point_on_triangle(&p, &a, &b, &c);
            prop_assert!(bary.iter().all(|&t| (-1e-9..=1.0 + 1e-9).contains(&t)));
            prop_assert!((bary.sum() - 1.0).abs() < 1e-9);
            let recon = Point3::from(a.coords * bary[0] + b.coords * bary[1] + c.coords * bary[2]);
            prop_assert!((recon - q).norm() < 1e-9);
            let d = (p - q).norm();
            let n = 60;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let u = i as f64 / n as f64;
                    let v = j as f64 / n as f64;
                    let s = a + (b - a) * u + (c - a) * v;
                    prop_assert!(d <= (p - s).norm() + 1e-12);
                }
            }
        }
    }
}
