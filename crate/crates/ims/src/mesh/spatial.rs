use rayon::prelude::*;
use rstar::{PointDistance, RTree, RTreeObject, AABB};

use super::{dot, sub, InputMap, TriangleMesh};

struct IndexedTriangle {
    face: usize,
    corners: [[f64; 3]; 3],
}

impl RTreeObject for IndexedTriangle {
    type Envelope = AABB<[f64; 3]>;

    fn envelope(&self) -> Self::Envelope {
        let [a, b, c] = self.corners;
        let lo = [0, 1, 2].map(|k| a[k].min(b[k]).min(c[k]));
        let hi = [0, 1, 2].map(|k| a[k].max(b[k]).max(c[k]));
        AABB::from_corners(lo, hi)
    }
}

impl PointDistance for IndexedTriangle {
    fn distance_2(&self, point: &[f64; 3]) -> f64 {
        let (q, _) = closest_on_triangle(point, &self.corners);
        let d = sub(point, &q);
        dot(&d, &d)
    }
}

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPoint {
    pub face: usize,
    pub bary: [f64; 3],
    pub point: [f64; 3],
    pub distance: f64,
}

/// Spatial index over the embedded faces of a mesh.
pub struct FaceIndex {
    tree: RTree<IndexedTriangle>,
}

impl FaceIndex {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let p = mesh.positions();
        let items = mesh
            .faces()
            .iter()
            .enumerate()
            .map(|(face, f)| IndexedTriangle {
                face,
                corners: f.map(|v| p[v]),
            })
            .collect();
        FaceIndex {
            tree: RTree::bulk_load(items),
        }
    }

    /// Global closest point; exact ties go to the lowest face index.
    pub fn closest(&self, q: [f64; 3]) -> ClosestPoint {
        let mut best: Option<(f64, &IndexedTriangle)> = None;
        for (t, d2) in self.tree.nearest_neighbor_iter_with_distance_2(q) {
            match best {
                None => best = Some((d2, t)),
                Some((b, bt)) => {
                    if d2 > b {
                        break;
                    }
                    if t.face < bt.face {
                        best = Some((d2, t));
                    }
                }
            }
        }
        let (d2, t) = best.expect("index is nonempty");
        let (point, bary) = closest_on_triangle(&q, &t.corners);
        ClosestPoint {
            face: t.face,
            bary,
            point,
            distance: d2.sqrt(),
        }
    }
}

pub fn closest_point(mesh: &TriangleMesh, q: [f64; 3]) -> ClosestPoint {
    FaceIndex::new(mesh).closest(q)
}

/// Closest-point maps between two meshes embedded in a common frame.
pub fn nearest_neighbor_maps(a: &TriangleMesh, b: &TriangleMesh) -> (InputMap, InputMap) {
    (project_vertices(a, b), project_vertices(b, a))
}

fn project_vertices(src: &TriangleMesh, dst: &TriangleMesh) -> InputMap {
    let index = FaceIndex::new(dst);
    let hits: Vec<ClosestPoint> = src.positions().par_iter().map(|&p| index.closest(p)).collect();
    InputMap {
        faces: hits.iter().map(|h| h.face).collect(),
        barycentric: hits.iter().map(|h| h.bary).collect(),
    }
}

/// Closest point on a triangle and its barycentric coordinates (Ericson, RTCD 5.1.5).
pub(crate) fn closest_on_triangle(p: &[f64; 3], t: &[[f64; 3]; 3]) -> ([f64; 3], [f64; 3]) {
    let [a, b, c] = t;
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (lerp(a, &ab, v), [1.0 - v, v, 0.0]);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (lerp(a, &ac, w), [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let bc = sub(c, b);
        return (lerp(b, &bc, w), [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let q = [0, 1, 2].map(|k| a[k] + ab[k] * v + ac[k] * w);
    (q, [1.0 - v - w, v, w])
}

fn lerp(a: &[f64; 3], d: &[f64; 3], t: f64) -> [f64; 3] {
    [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]
}
