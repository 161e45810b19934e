#![allow(dead_code)]

use ims::bundle::{build_fem_matrices, surface_connection, Connection, OperatorSet};
use ims::linalg::{CsrMatrix, C64};
use ims::mesh::{IntrinsicGeometry, TriangleMesh};
use ims::product::Section;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One side of a product: mesh, geometry, default bundle and its operators.
pub struct Side {
    pub mesh: TriangleMesh,
    pub geom: IntrinsicGeometry,
    pub conn: Connection,
    pub ops: OperatorSet,
}

impl Side {
    pub fn new(mesh: TriangleMesh) -> Self {
        let geom = IntrinsicGeometry::new(&mesh);
        let conn = surface_connection(&mesh, &geom, 0).unwrap();
        let ops = build_fem_matrices(&mesh, &geom, &conn);
        Side { mesh, geom, conn, ops }
    }

    pub fn normalized(mesh: TriangleMesh) -> Self {
        let mut m = mesh;
        m.normalize();
        Self::new(m)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_section(rows: usize, cols: usize, seed: u64) -> Section {
    let mut r = rng(seed);
    let data = (0..rows * cols)
        .map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    Section::from_vec(rows, cols, data).unwrap()
}

pub fn dense(m: &CsrMatrix<C64>) -> DMatrix<C64> {
    m.to_dense()
}

pub fn diag(d: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}

pub fn vec_of(z: &Section) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(z.data())
}

/// Re(a† b).
pub fn re_dot(a: &nalgebra::DVector<C64>, b: &nalgebra::DVector<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Smallest eigenpair of the Hermitian pencil (K, M) by dense reduction.
pub fn dense_min_eig(k: &DMatrix<C64>, m: &DMatrix<C64>) -> (f64, nalgebra::DVector<C64>) {
    let chol = m.clone().cholesky().expect("mass is positive definite");
    let linv = chol.l().try_inverse().unwrap();
    let c = &linv * k * linv.adjoint();
    let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(c);
    let (i, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, l)| (i, *l))
        .unwrap();
    let y = eig.eigenvectors.column(i).into_owned();
    (lam, linv.adjoint() * y)
}

/// sin of the angle between two complex vectors (phase-invariant).
pub fn subspace_angle(a: &nalgebra::DVector<C64>, b: &nalgebra::DVector<C64>) -> f64 {
    let c = (a.dotc(b)).norm() / (a.norm() * b.norm());
    (1.0 - (c * c).min(1.0)).sqrt()
}

/// A random face whose edge rotations and curvature close to index ±1.
pub fn random_singular_triangle(r: &mut ChaCha8Rng) -> ims::extract::SingularTriangle {
    use std::f64::consts::{PI, TAU};
    loop {
        let (a, b) = (r.random_range(-PI..PI), r.random_range(-PI..PI));
        let curvature = r.random_range(-2.0..2.0);
        let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
        let c = sign * TAU - a - b - curvature;
        if c.abs() < PI {
            return ims::extract::SingularTriangle {
                omega: [a, b, c],
                curvature,
                magnitude: [0, 1, 2].map(|_| r.random_range(0.1..1.0)),
            };
        }
    }
}

/// Winding number of a closed polygon of nonzero complex values.
pub fn winding(values: &[C64]) -> i32 {
    let mut total = 0.0;
    for k in 0..values.len() {
        total += (values[(k + 1) % values.len()] / values[k]).arg();
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// Centres (b_j, b_k) and windings of the cells of an n×n barycentric grid around
/// which `f` winds.
pub fn triangle_grid_zero_cells(f: impl Fn(f64, f64) -> C64, n: usize) -> Vec<((f64, f64), i32)> {
    let h = 1.0 / n as f64;
    let stride = n + 1;
    let mut vals = vec![C64::new(0.0, 0.0); stride * stride];
    for i in 0..=n {
        for k in 0..=(n - i) {
            vals[i * stride + k] = f(i as f64 * h, k as f64 * h);
        }
    }
    let at = |i: usize, k: usize| vals[i * stride + k];
    let mut cells = Vec::new();
    for i in 0..n {
        for k in 0..(n - i) {
            let w = winding(&[at(i, k), at(i + 1, k), at(i, k + 1)]);
            if w != 0 {
                cells.push((((i as f64 + 1.0 / 3.0) * h, (k as f64 + 1.0 / 3.0) * h), w));
            }
            if i + k + 2 <= n {
                let w = winding(&[at(i + 1, k), at(i + 1, k + 1), at(i, k + 1)]);
                if w != 0 {
                    cells.push((((i as f64 + 2.0 / 3.0) * h, (k as f64 + 2.0 / 3.0) * h), w));
                }
            }
        }
    }
    cells
}

/// Centres (s, t) and windings of the cells of an n×n grid on the unit square around
/// which `f` winds.
pub fn square_grid_zero_cells(f: impl Fn(f64, f64) -> C64, n: usize) -> Vec<((f64, f64), i32)> {
    let h = 1.0 / n as f64;
    let vals: Vec<Vec<C64>> = (0..=n).map(|i| (0..=n).map(|k| f(i as f64 * h, k as f64 * h)).collect()).collect();
    let mut cells = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let w = winding(&[vals[i][k], vals[i + 1][k], vals[i + 1][k + 1], vals[i][k + 1]]);
            if w != 0 {
                cells.push((((i as f64 + 0.5) * h, (k as f64 + 0.5) * h), w));
            }
        }
    }
    cells
}

/// Random corner values and transports of an edge×edge face.
pub fn random_edge_quad(r: &mut ChaCha8Rng) -> ims::extract::EdgeQuad {
    let mut c = || C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let z = [c(), c(), c(), c()];
    ims::extract::EdgeQuad {
        z,
        transport_a: C64::from_polar(1.0, r.random_range(-3.0..3.0)),
        transport_b: C64::from_polar(1.0, r.random_range(-3.0..3.0)),
    }
}

pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
