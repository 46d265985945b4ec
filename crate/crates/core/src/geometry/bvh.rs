//! Axis-aligned bounding volume hierarchy over mesh faces.
//!
//! Built top-down by a median split along the longest axis of the face
//! centroids' bounds, with at most [`MAX_LEAF_SIZE`] faces per leaf. Nodes are
//! stored in a flat vector; leaves reference contiguous ranges of a permuted
//! face index list.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub const MAX_LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    /// Squared distance from `p` to the box (0 inside).
    #[inline]
    pub fn distance_squared(&self, p: &Point3<f64>) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let v = p[k];
            let excess = if v < self.min[k] {
                self.min[k] - v
            } else if v > self.max[k] {
                v - self.max[k]
            } else {
                0.0
            };
            d2 += excess * excess;
        }
        d2
    }
}

#[derive(Debug, Clone)]
pub(crate) enum NodeKind {
    Leaf { start: usize, count: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub(crate) bounds: Aabb,
    pub(crate) kind: NodeKind,
}

/// Bounding volume hierarchy; immutable after construction.
#[derive(Debug, Clone)]
pub struct Bvh {
    pub(crate) nodes: Vec<Node>,
    /// Face indices permuted so that each leaf owns a contiguous slice.
    pub(crate) order: Vec<usize>,
}

impl Bvh {
    /// Builds the hierarchy over faces given by vertex-index triples.
    pub fn build(vertices: &[Point3<f64>], faces: &[[usize; 3]]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let face_bounds: Vec<Aabb> = faces
            .iter()
            .map(|f| {
                let mut b = Aabb::empty();
                for &v in f {
                    b.grow(&vertices[v]);
                }
                b
            })
            .collect();
        let centroids: Vec<Point3<f64>> = faces
            .iter()
            .map(|f| {
                Point3::from(
                    (vertices[f[0]].coords + vertices[f[1]].coords + vertices[f[2]].coords) / 3.0,
                )
            })
            .collect();

        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * faces.len() / MAX_LEAF_SIZE + 1),
            order: (0..faces.len()).collect(),
        };
        bvh.build_node(0, faces.len(), &face_bounds, &centroids);
        Ok(bvh)
    }

    fn build_node(
        &mut self,
        start: usize,
        end: usize,
        face_bounds: &[Aabb],
        centroids: &[Point3<f64>],
    ) -> usize {
        let mut bounds = Aabb::empty();
        let mut centroid_bounds = Aabb::empty();
        for &f in &self.order[start..end] {
            bounds.merge(&face_bounds[f]);
            centroid_bounds.grow(&centroids[f]);
        }

        let id = self.nodes.len();
        let count = end - start;
        if count <= MAX_LEAF_SIZE {
            self.nodes.push(Node {
                bounds,
                kind: NodeKind::Leaf { start, count },
            });
            return id;
        }

        let ext = centroid_bounds.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        self.order[start..end].sort_by(|&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        let mid = start + count / 2;

        // Placeholder, patched once both children exist.
        self.nodes.push(Node {
            bounds,
            kind: NodeKind::Leaf { start, count: 0 },
        });
        let left = self.build_node(start, mid, face_bounds, centroids);
        let right = self.build_node(mid, end, face_bounds, centroids);
        self.nodes[id].kind = NodeKind::Inner { left, right };
        id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root_bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Face indices of every leaf, in tree order.
    pub fn leaves(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf { start, count } => Some(&self.order[start..start + count]),
                NodeKind::Inner { .. } => None,
            })
            .collect()
    }

    /// Checks that every node's box contains its children's boxes.
    pub fn bounds_are_nested(&self) -> bool {
        self.nodes.iter().all(|n| match n.kind {
            NodeKind::Inner { left, right } => {
                let b = &n.bounds;
                [left, right].iter().all(|&c| {
                    let cb = &self.nodes[c].bounds;
                    b.contains(&cb.min) && b.contains(&cb.max)
                })
            }
            NodeKind::Leaf { .. } => true,
        })
    }

    /// Best-first nearest-face search. `face_dist2` returns the squared
    /// distance from the query to a face together with any payload; ties
    /// resolve to the lowest face index.
    pub(crate) fn nearest<T, F>(&self, q: &Point3<f64>, mut face_dist2: F) -> (usize, f64, T)
    where
        F: FnMut(usize) -> (f64, T),
        T: Default,
    {
        let mut best_face = usize::MAX;
        let mut best_d2 = f64::INFINITY;
        let mut best_payload = T::default();

        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance_squared(q)));
        while let Some((id, box_d2)) = stack.pop() {
            if box_d2 > best_d2 {
                continue;
            }
            match self.nodes[id].kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start..start + count] {
                        let (d2, payload) = face_dist2(f);
                        if d2 < best_d2 || (d2 == best_d2 && f < best_face) {
                            best_d2 = d2;
                            best_face = f;
                            best_payload = payload;
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = self.nodes[left].bounds.distance_squared(q);
                    let dr = self.nodes[right].bounds.distance_squared(q);
                    // Push the farther child first so the nearer one is explored first.
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        (best_face, best_d2, best_payload)
    }
}
