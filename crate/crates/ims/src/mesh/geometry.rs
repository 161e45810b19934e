use std::f64::consts::PI;

use super::TriangleMesh;
use crate::linalg::{CsrMatrix, C64};

/// Triangle area from side lengths (numerically stable Heron formula).
pub fn triangle_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

/// Interior angle opposite side `opposite` in a triangle with the two other sides `s1`, `s2`.
pub fn corner_angle(opposite: f64, s1: f64, s2: f64) -> f64 {
    ((s1 * s1 + s2 * s2 - opposite * opposite) / (2.0 * s1 * s2))
        .clamp(-1.0, 1.0)
        .acos()
}

/// Intrinsic quantities derived from edge lengths alone.
///
/// Per-corner arrays are indexed like halfedges: corner `3f + c` sits at vertex
/// `faces[f][c]`, which is also the tail of halfedge `3f + c`.
#[derive(Clone, Debug)]
pub struct IntrinsicGeometry {
    pub corner_angles: Vec<f64>,
    pub angle_sums: Vec<f64>,
    pub rescaled_angles: Vec<f64>,
    /// Polar angle of each halfedge in the rescaled tangent plane of its tail.
    pub halfedge_angles: Vec<f64>,
    pub halfedge_directions: Vec<C64>,
    pub face_areas: Vec<f64>,
    /// Signed face-edge incidence (F × E).
    pub d1: CsrMatrix<f64>,
    /// Cotangent edge weights (cot α + cot β) / 2; may be nonpositive on non-Delaunay meshes.
    pub cotan_weights: Vec<f64>,
    /// Cotangent weights clamped to stay positive, used as the edge Hodge star.
    pub hodge_star1: Vec<f64>,
    pub lumped_mass: Vec<f64>,
}

impl IntrinsicGeometry {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let nf = mesh.num_faces();
        let nv = mesh.num_vertices();
        let mut corner_angles = vec![0.0; 3 * nf];
        let mut face_areas = vec![0.0; nf];
        let mut angle_sums = vec![0.0; nv];
        let mut lumped_mass = vec![0.0; nv];
        let mut cotan_weights = vec![0.0; mesh.num_edges()];
        for f in 0..nf {
            let l = mesh.face_lengths(f);
            let area = triangle_area(l[0], l[1], l[2]);
            face_areas[f] = area;
            for c in 0..3 {
                let theta = corner_angle(l[c], l[(c + 1) % 3], l[(c + 2) % 3]);
                corner_angles[3 * f + c] = theta;
                let v = mesh.face(f)[c];
                angle_sums[v] += theta;
                lumped_mass[v] += area / 3.0;
                // corner c is opposite halfedge 3f + c + 1
                let (s1, s2) = (l[(c + 1) % 3], l[(c + 2) % 3]);
                let cot = (s1 * s1 + s2 * s2 - l[c] * l[c]) / (4.0 * area);
                cotan_weights[mesh.edge(3 * f + (c + 1) % 3)] += 0.5 * cot;
            }
        }

        let mut rescaled_angles = vec![0.0; 3 * nf];
        for h in 0..3 * nf {
            let v = mesh.tail(h);
            let scale = if mesh.is_boundary_vertex(v) { 1.0 } else { 2.0 * PI / angle_sums[v] };
            rescaled_angles[h] = scale * corner_angles[h];
        }

        let mut halfedge_angles = vec![0.0; 3 * nf];
        for v in 0..nv {
            let mut acc = 0.0;
            for h in mesh.outgoing(v) {
                halfedge_angles[h] = acc;
                acc += rescaled_angles[h];
            }
        }
        let halfedge_directions = halfedge_angles.iter().map(|&a| C64::from_polar(1.0, a)).collect();

        let trip: Vec<_> = (0..3 * nf)
            .map(|h| (h / 3, mesh.edge(h), mesh.orientation(h)))
            .collect();
        let d1 = CsrMatrix::from_triplets(nf, mesh.num_edges(), &trip);

        let mean_abs = cotan_weights.iter().map(|w| w.abs()).sum::<f64>() / cotan_weights.len() as f64;
        let floor = 1e-3 * mean_abs;
        let hodge_star1 = cotan_weights.iter().map(|&w| w.max(floor)).collect();

        IntrinsicGeometry {
            corner_angles,
            angle_sums,
            rescaled_angles,
            halfedge_angles,
            halfedge_directions,
            face_areas,
            d1,
            cotan_weights,
            hodge_star1,
            lumped_mass,
        }
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Scalar cotangent Laplacian (positive semidefinite convention).
    pub fn cotan_laplacian(&self, mesh: &TriangleMesh) -> CsrMatrix<f64> {
        let mut trip = Vec::with_capacity(4 * mesh.num_edges());
        for e in 0..mesh.num_edges() {
            let (i, j) = mesh.edge_vertices(e);
            let w = self.cotan_weights[e];
            trip.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
        }
        CsrMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), &trip)
    }

    /// Dual 2-form Laplacian 𝖽₁ ∗₁⁻¹ 𝖽₁ᵀ on faces.
    pub fn dual_laplacian(&self) -> CsrMatrix<f64> {
        let d1t = self.d1.transpose();
        let nf = self.d1.nrows();
        let mut trip = Vec::new();
        for e in 0..d1t.nrows() {
            let entries: Vec<_> = d1t.row(e).collect();
            let w = 1.0 / self.hodge_star1[e];
            for &(f, s) in &entries {
                for &(g, t) in &entries {
                    trip.push((f, g, s * t * w));
                }
            }
        }
        CsrMatrix::from_triplets(nf, nf, &trip)
    }

    /// Interior vertices whose rescaled angles do not sum to 2π (relative tolerance).
    pub fn rescaled_sum_defects(&self, mesh: &TriangleMesh, tol: f64) -> Vec<usize> {
        let mut sums = vec![0.0; mesh.num_vertices()];
        for (h, a) in self.rescaled_angles.iter().enumerate() {
            sums[mesh.tail(h)] += a;
        }
        (0..mesh.num_vertices())
            .filter(|&v| !mesh.is_boundary_vertex(v) && ((sums[v] - 2.0 * PI) / (2.0 * PI)).abs() > tol)
            .collect()
    }
}

/// Places the three corners of face `f` in the plane: corner 0 at the origin,
/// corner 1 on the positive x axis, corner 2 in the upper half plane.
pub(crate) fn layout_face(mesh: &TriangleMesh, f: usize) -> [[f64; 2]; 3] {
    let [l0, l1, l2] = mesh.face_lengths(f);
    layout_triangle(l2, l0, l1)
}

/// Layout from lengths of edges 01, 12, 20.
pub(crate) fn layout_triangle(l01: f64, l12: f64, l20: f64) -> [[f64; 2]; 3] {
    let x = (l01 * l01 + l20 * l20 - l12 * l12) / (2.0 * l01);
    let y = (l20 * l20 - x * x).max(0.0).sqrt();
    [[0.0, 0.0], [l01, 0.0], [x, y]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{grid, icosphere, uv_sphere};

    #[test]
    fn heron_matches_cross_product() {
        assert!((triangle_area(3.0, 4.0, 5.0) - 6.0).abs() < 1e-14);
        assert!(triangle_area(1.0, 1.0, 2.0).abs() < 1e-14);
    }

    #[test]
    fn rescaled_angles_sum_to_two_pi() {
        let m = uv_sphere(7, 11);
        let g = IntrinsicGeometry::new(&m);
        assert!(g.rescaled_sum_defects(&m, 1e-12).is_empty());
    }

    #[test]
    fn lumped_mass_sums_to_area() {
        let m = icosphere(4);
        let g = IntrinsicGeometry::new(&m);
        let s: f64 = g.lumped_mass.iter().sum();
        assert!((s - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn d1_columns_have_opposite_signs() {
        let m = icosphere(3);
        let g = IntrinsicGeometry::new(&m);
        let t = g.d1.transpose();
        for e in 0..t.nrows() {
            let col: Vec<_> = t.row(e).map(|(_, v)| v).collect();
            assert_eq!(col.len(), 2);
            assert_eq!(col[0] + col[1], 0.0);
        }
    }

    #[test]
    fn flat_grid_laplacian_annihilates_linear_functions() {
        let m = grid(6, 5, 2.0, 1.0);
        let g = IntrinsicGeometry::new(&m);
        let l = g.cotan_laplacian(&m);
        let x: Vec<f64> = m.positions().iter().map(|p| 3.0 * p[0] - p[1]).collect();
        let y = l.mul_vec(&x);
        for v in 0..m.num_vertices() {
            if !m.is_boundary_vertex(v) {
                assert!(y[v].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn layout_preserves_lengths() {
        let p = layout_triangle(2.0, 1.5, 1.2);
        let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!((d(p[0], p[1]) - 2.0).abs() < 1e-14);
        assert!((d(p[1], p[2]) - 1.5).abs() < 1e-14);
        assert!((d(p[2], p[0]) - 1.2).abs() < 1e-14);
    }
}
