use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::bvh::Bvh;
use super::triangle::{closest_point_on_triangle, double_area};
use crate::error::{Error, Result};

/// Faces with twice-area below this (m^2) are dropped at load time.
pub const DEGENERATE_AREA_EPS: f64 = 1e-14;

/// Result of a nearest-surface query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosestPointResult {
    pub point: Point3<f64>,
    pub distance: f64,
    pub face_index: usize,
    /// Barycentric coordinates of `point` on face `face_index`.
    pub barycentric: Vector3<f64>,
}

/// Indexed triangle mesh in the object frame with a BVH over its faces.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    bvh: Bvh,
}

impl TriMesh {
    /// Validates indices, drops zero-area faces (with a warning) and builds the BVH.
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::FaceIndexOutOfRange {
                    face: fi,
                    index: bad,
                    vertex_count: n,
                });
            }
        }
        let before = faces.len();
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| {
                double_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]) > DEGENERATE_AREA_EPS
            })
            .collect();
        if faces.len() < before {
            warn!("dropped {} degenerate face(s)", before - faces.len());
        }
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let bvh = Bvh::build(&vertices, &faces)?;
        Ok(Self {
            vertices,
            faces,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0]],
            self.vertices[f[1]],
            self.vertices[f[2]],
        ]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * double_area(&a, &b, &c)
    }

    fn face_query(&self, q: &Point3<f64>, face: usize) -> (f64, (Point3<f64>, Vector3<f64>)) {
        let [a, b, c] = self.triangle(face);
        let (p, bary) = closest_point_on_triangle(q, &a, &b, &c);
        ((q - p).norm_squared(), (p, bary))
    }

    /// Nearest point of the surface to `q`, via the BVH.
    pub fn closest_point(&self, q: &Point3<f64>) -> ClosestPointResult {
        let (face_index, _, (point, barycentric)) = self.bvh.nearest(q, |f| self.face_query(q, f));
        ClosestPointResult {
            point,
            distance: (q - point).norm(),
            face_index,
            barycentric,
        }
    }

    /// Exhaustive scan over all faces; reference for the BVH path.
    pub fn closest_point_brute_force(&self, q: &Point3<f64>) -> ClosestPointResult {
        let mut best: Option<(usize, f64, Point3<f64>, Vector3<f64>)> = None;
        for face in 0..self.faces.len() {
            let (d2, (p, bary)) = self.face_query(q, face);
            if best.as_ref().is_none_or(|b| d2 < b.1) {
                best = Some((face, d2, p, bary));
            }
        }
        let (face_index, _, point, barycentric) = best.expect("mesh has at least one face");
        ClosestPointResult {
            point,
            distance: (q - point).norm(),
            face_index,
            barycentric,
        }
    }

    /// Axis-aligned bounds of the vertices.
    pub fn bounds(&self) -> super::bvh::Aabb {
        self.bvh.root_bounds()
    }

    /// Parses Wavefront OBJ text. Only `v` and `f` records are used; polygons
    /// are fan-triangulated and texture/normal indices are ignored.
    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            let mut tokens = content.split_whitespace();
            match tokens.next() {
                Some("v") => {
                    let coords: Vec<f64> = tokens
                        .take(3)
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::ObjParse {
                            line,
                            message: format!("bad vertex coordinate: {e}"),
                        })?;
                    if coords.len() != 3 {
                        return Err(Error::ObjParse {
                            line,
                            message: "vertex needs three coordinates".into(),
                        });
                    }
                    vertices.push(Point3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = tokens
                        .map(|t| parse_obj_index(t, vertices.len(), line))
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(Error::ObjParse {
                            line,
                            message: "face needs at least three vertices".into(),
                        });
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_obj(&text)
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    /// Closed box centred on the origin with full side lengths `sx`, `sy`, `sz`.
    /// Faces come in pairs per side in the order -x, +x, -y, +y, -z, +z, all
    /// wound counter-clockwise seen from outside.
    pub fn axis_aligned_box(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        let (hx, hy, hz) = (0.5 * sx, 0.5 * sy, 0.5 * sz);
        let vertices = vec![
            Point3::new(-hx, -hy, -hz),
            Point3::new(hx, -hy, -hz),
            Point3::new(hx, hy, -hz),
            Point3::new(-hx, hy, -hz),
            Point3::new(-hx, -hy, hz),
            Point3::new(hx, -hy, hz),
            Point3::new(hx, hy, hz),
            Point3::new(-hx, hy, hz),
        ];
        let faces = vec![
            [0, 4, 7],
            [0, 7, 3],
            [1, 2, 6],
            [1, 6, 5],
            [0, 1, 5],
            [0, 5, 4],
            [3, 7, 6],
            [3, 6, 2],
            [0, 3, 2],
            [0, 2, 1],
            [4, 5, 6],
            [4, 6, 7],
        ];
        Self::new(vertices, faces)
    }

    /// Tetrahedron with an equilateral base of side `side` in the z=0 plane,
    /// centred on the origin, and apex at height `height`.
    pub fn tetrahedron(side: f64, height: f64) -> Result<Self> {
        let r = side / 3f64.sqrt();
        let vertices: Vec<Point3<f64>> = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                Point3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .chain(std::iter::once(Point3::new(0.0, 0.0, height)))
            .collect();
        let faces = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]];
        Self::new(vertices, faces)
    }

    /// Closed latitude/longitude sphere; `2 * segments * (rings - 1)` faces.
    /// `radius_fn(theta, phi)` may modulate the radius to produce blobs.
    pub fn uv_sphere(
        rings: usize,
        segments: usize,
        radius_fn: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        use std::f64::consts::PI;
        let mut vertices = vec![Point3::new(0.0, 0.0, radius_fn(0.0, 0.0))];
        for i in 1..rings {
            let th = PI * i as f64 / rings as f64;
            for j in 0..segments {
                let ph = 2.0 * PI * j as f64 / segments as f64;
                let r = radius_fn(th, ph);
                vertices.push(Point3::new(
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    r * th.cos(),
                ));
            }
        }
        vertices.push(Point3::new(0.0, 0.0, -radius_fn(PI, 0.0)));
        let south = vertices.len() - 1;
        let idx = |i: usize, j: usize| 1 + (i - 1) * segments + (j % segments);
        let mut faces = Vec::new();
        for j in 0..segments {
            faces.push([0, idx(1, j), idx(1, j + 1)]);
        }
        for i in 1..rings - 1 {
            for j in 0..segments {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        for j in 0..segments {
            faces.push([south, idx(rings - 1, j + 1), idx(rings - 1, j)]);
        }
        Self::new(vertices, faces)
    }
}

fn parse_obj_index(token: &str, vertex_count: usize, line: usize) -> Result<usize> {
    let first = token.split('/').next().unwrap_or("");
    let raw: i64 = first.parse().map_err(|_| Error::ObjParse {
        line,
        message: format!("bad face index `{token}`"),
    })?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        -1
    };
    if resolved < 0 {
        return Err(Error::ObjParse {
            line,
            message: format!("face index `{token}` out of range"),
        });
    }
    Ok(resolved as usize)
}

/// Nearest surface point of `mesh` to `q`.
pub fn closest_point_on_mesh(mesh: &TriMesh, q: &Point3<f64>) -> ClosestPointResult {
    mesh.closest_point(q)
}
