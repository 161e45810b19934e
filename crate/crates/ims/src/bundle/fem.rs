//! Galerkin connection Laplacian and mass matrix for piecewise-magnetic
//! basis functions on a triangle mesh.

use crate::bundle::Connection;
use crate::linalg::{CsrMatrix, C64};
use crate::mesh::{IntrinsicGeometry, TriangleMesh};

const SERIES_CUTOFF: f64 = 0.1;

fn cis(s: f64) -> C64 {
    C64::from_polar(1.0, s)
}

/// Off-diagonal mass factor as a function of face curvature.
pub fn f0(s: f64) -> C64 {
    if s.abs() < SERIES_CUTOFF {
        let (s2, s3, s4, s5) = (s * s, s.powi(3), s.powi(4), s.powi(5));
        return C64::new(1.0 / 12.0 - s2 / 360.0 + s4 / 20160.0, s / 60.0 - s3 / 2520.0 + s5 / 181440.0);
    }
    let s2 = s * s;
    (C64::new(-6.0 + 3.0 * s2, -6.0 * s + s * s2) + 6.0 * cis(s)) / (3.0 * s2 * s2)
}

/// Off-diagonal stiffness factor multiplying the two adjacent squared lengths.
pub fn f1(s: f64) -> C64 {
    if s.abs() < SERIES_CUTOFF {
        let (s2, s3, s4, s5, s6) = (s * s, s.powi(3), s.powi(4), s.powi(5), s.powi(6));
        return C64::new(s2 / 120.0 - s4 / 2688.0 + s6 / 129600.0, -s / 24.0 + s3 / 504.0 - s5 / 17280.0);
    }
    let s2 = s * s;
    let s4 = s2 * s2;
    (C64::new(3.0 + s4 / 24.0, s - s4 * s / 60.0) + C64::new(-3.0 + s2 / 2.0, 2.0 * s) * cis(s)) / s4
}

/// Off-diagonal stiffness factor multiplying the corner dot product.
pub fn f2(s: f64) -> C64 {
    if s.abs() < SERIES_CUTOFF {
        let (s2, s3, s4, s5, s6) = (s * s, s.powi(3), s.powi(4), s.powi(5), s.powi(6));
        return C64::new(
            -0.25 + s2 / 45.0 - s4 / 1120.0 + s6 / 56700.0,
            -s / 24.0 + 5.0 * s3 / 1008.0 - 7.0 * s5 / 51840.0,
        );
    }
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s2 * s2;
    (C64::new(4.0 - s4 / 12.0, s - s3 / 6.0 + s4 * s / 30.0) + C64::new(-4.0 + s2, 3.0 * s) * cis(s)) / s4
}

/// Hermitian operators of one connection on one mesh.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub laplacian: CsrMatrix<C64>,
    pub mass: CsrMatrix<C64>,
    /// Barycentric lumped mass (area / 3 per incident face).
    pub lumped_mass: Vec<f64>,
}

/// Local 3×3 stiffness and mass matrices of one face, indexed by corner.
///
/// `len2[c]` is the squared length of the halfedge from corner c to corner c+1 and
/// `transport[c]` the transport along it.
pub fn face_stencil(len2: [f64; 3], area: f64, curvature: f64, transport: [C64; 3]) -> ([[C64; 3]; 3], [[C64; 3]; 3]) {
    let s = curvature;
    let (g0, g1, g2) = (f0(s), f1(s), f2(s));
    let zero = C64::new(0.0, 0.0);
    let mut l = [[zero; 3]; 3];
    let mut m = [[zero; 3]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let (lij, ljk, lki) = (len2[i], len2[j], len2[k]);
        let dot = 0.5 * (lij - ljk + lki);
        let r = transport[j].conj();
        let wl = r * ((lij + lki) * g1 + dot * g2) / area;
        let wm = r * area * g0;
        l[j][k] += wl;
        l[k][j] += wl.conj();
        m[j][k] += wm;
        m[k][j] += wm.conj();
        l[i][i] += (ljk + s * s * (lij + dot + lki) / 90.0) / (4.0 * area);
        m[i][i] += area / 6.0;
    }
    (l, m)
}

pub(crate) fn face_inputs(mesh: &TriangleMesh, geom: &IntrinsicGeometry, f: usize) -> ([f64; 3], f64) {
    ([0, 1, 2].map(|c| mesh.halfedge_length(3 * f + c).powi(2)), geom.face_areas[f])
}

/// Assembles the connection Laplacian and mass matrix.
///
/// Both matrices share the sparsity pattern (vertices plus both directions of each edge).
pub fn build_fem_matrices(mesh: &TriangleMesh, geom: &IntrinsicGeometry, conn: &Connection) -> OperatorSet {
    let nv = mesh.num_vertices();
    let mut lt: Vec<(usize, usize, C64)> = Vec::with_capacity(9 * mesh.num_faces());
    let mut mt: Vec<(usize, usize, C64)> = Vec::with_capacity(9 * mesh.num_faces());
    for f in 0..mesh.num_faces() {
        let vs = mesh.face(f);
        let (len2, area) = face_inputs(mesh, geom, f);
        let transport = [0, 1, 2].map(|c| conn.along(mesh, 3 * f + c));
        let (l, m) = face_stencil(len2, area, conn.curvature[f], transport);
        for a in 0..3 {
            for b in 0..3 {
                lt.push((vs[a], vs[b], l[a][b]));
                mt.push((vs[a], vs[b], m[a][b]));
            }
        }
    }
    let mut lumped = vec![0.0; nv];
    for f in 0..mesh.num_faces() {
        for v in mesh.face(f) {
            lumped[v] += geom.face_areas[f] / 3.0;
        }
    }
    OperatorSet {
        laplacian: CsrMatrix::from_triplets(nv, nv, &lt),
        mass: CsrMatrix::from_triplets(nv, nv, &mt),
        lumped_mass: lumped,
    }
}
