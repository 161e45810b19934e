//! Geodesic distance by the heat method: short-time diffusion, normalized
//! gradient, Poisson recovery. Intrinsic: only edge lengths are used.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::geometry::{layout_face, IntrinsicGeometry};
use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, CsrMatrix};

/// Prefactored heat and Poisson systems for repeated distance queries.
pub struct HeatSolver {
    mesh: TriangleMesh,
    geom: IntrinsicGeometry,
    heat: Cholesky<f64>,
    poisson: Cholesky<f64>,
    pinned: usize,
    pub time: f64,
}

impl HeatSolver {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        let geom = IntrinsicGeometry::new(mesh);
        let time = mesh.mean_edge_length().powi(2);
        let lap = geom.cotan_laplacian(mesh);
        let n = mesh.num_vertices();
        let mut trip: Vec<_> = lap.triplets().map(|(i, j, v)| (i, j, time * v)).collect();
        trip.extend((0..n).map(|i| (i, i, geom.lumped_mass[i])));
        let heat = Cholesky::<f64>::factor(&CsrMatrix::from_triplets(n, n, &trip))?;
        let pinned = 0;
        let keep: Vec<usize> = (0..n).filter(|&i| i != pinned).collect();
        let poisson = Cholesky::<f64>::factor(&lap.principal_submatrix(&keep))?;
        Ok(HeatSolver {
            mesh: mesh.clone(),
            geom,
            heat,
            poisson,
            pinned,
            time,
        })
    }

    /// Approximate geodesic distance from a set of source vertices.
    pub fn distance(&self, sources: &[usize]) -> Result<Vec<f64>> {
        let n = self.mesh.num_vertices();
        if sources.is_empty() {
            return Err(Error::Input("geodesic distance needs at least one source".into()));
        }
        if let Some(&s) = sources.iter().find(|&&s| s >= n) {
            return Err(Error::Input(format!("source vertex {s} out of range")));
        }
        let mut u = vec![0.0; n];
        for &s in sources {
            u[s] = 1.0;
        }
        self.heat.solve_in_place(&mut u);

        // Integrated divergence of the normalized negative heat gradient.
        let mut div = vec![0.0; n];
        for f in 0..self.mesh.num_faces() {
            let p = layout_face(&self.mesh, f);
            let vs = self.mesh.face(f);
            let area = self.geom.face_areas[f];
            let mut grad = [0.0; 2];
            for c in 0..3 {
                let (a, b) = (p[(c + 1) % 3], p[(c + 2) % 3]);
                let perp = [-(b[1] - a[1]), b[0] - a[0]];
                grad[0] += u[vs[c]] * perp[0] / (2.0 * area);
                grad[1] += u[vs[c]] * perp[1] / (2.0 * area);
            }
            let gn = grad[0].hypot(grad[1]);
            if gn == 0.0 || !gn.is_finite() {
                continue;
            }
            let x = [-grad[0] / gn, -grad[1] / gn];
            for c in 0..3 {
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                let e1 = [p[c1][0] - p[c][0], p[c1][1] - p[c][1]];
                let e2 = [p[c2][0] - p[c][0], p[c2][1] - p[c][1]];
                // cot of the angle opposite e1 sits at corner c2, opposite e2 at c1
                let cot2 = cot_at(&p, c2);
                let cot1 = cot_at(&p, c1);
                div[vs[c]] += 0.5 * (cot2 * (e1[0] * x[0] + e1[1] * x[1]) + cot1 * (e2[0] * x[0] + e2[1] * x[1]));
            }
        }
        let mut rhs: Vec<f64> = (0..n).filter(|&i| i != self.pinned).map(|i| -div[i]).collect();
        self.poisson.solve_in_place(&mut rhs);
        let mut phi = vec![0.0; n];
        let mut it = rhs.into_iter();
        for (i, x) in phi.iter_mut().enumerate() {
            if i != self.pinned {
                *x = it.next().unwrap();
            }
        }
        let shift = sources.iter().map(|&s| phi[s]).sum::<f64>() / sources.len() as f64;
        let mut d: Vec<f64> = phi.iter().map(|x| (x - shift).max(0.0)).collect();
        for &s in sources {
            d[s] = 0.0;
        }
        relax_along_edges(&self.mesh, &mut d);
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("geodesic distance produced non-finite values".into()));
        }
        Ok(d)
    }
}

/// Lowers each value to the smallest `d[u] + path length(u, v)` over edge paths.
///
/// The exact distance obeys this bound, so only overestimates (typically near the
/// cut locus) are changed, and the result is 1-Lipschitz along edges.
fn relax_along_edges(mesh: &TriangleMesh, d: &mut [f64]) {
    let mut heap: BinaryHeap<(Reverse<OrderedDist>, usize)> =
        d.iter().enumerate().map(|(v, &x)| (Reverse(OrderedDist(x)), v)).collect();
    while let Some((Reverse(OrderedDist(dv)), v)) = heap.pop() {
        if dv > d[v] {
            continue;
        }
        for h in mesh.outgoing(v) {
            let w = mesh.head(h);
            let cand = dv + mesh.halfedge_length(h);
            if cand < d[w] {
                d[w] = cand;
                heap.push((Reverse(OrderedDist(cand)), w));
            }
        }
        if mesh.is_boundary_vertex(v) {
            // the twin-less incoming halfedge is not covered by the outgoing fan
            for h in mesh.outgoing(v) {
                let p = mesh.prev(h);
                if mesh.twin(p) == super::NONE {
                    let w = mesh.tail(p);
                    let cand = dv + mesh.halfedge_length(p);
                    if cand < d[w] {
                        d[w] = cand;
                        heap.push((Reverse(OrderedDist(cand)), w));
                    }
                }
            }
        }
    }
}

#[derive(PartialEq, PartialOrd)]
struct OrderedDist(f64);

impl Eq for OrderedDist {}

impl Ord for OrderedDist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn cot_at(p: &[[f64; 2]; 3], c: usize) -> f64 {
    let a = p[(c + 1) % 3];
    let b = p[(c + 2) % 3];
    let u = [a[0] - p[c][0], a[1] - p[c][1]];
    let v = [b[0] - p[c][0], b[1] - p[c][1]];
    (u[0] * v[0] + u[1] * v[1]) / (u[0] * v[1] - u[1] * v[0]).abs()
}

/// One-shot geodesic distance from source vertices (or vertex chains).
pub fn geodesic_distance(mesh: &TriangleMesh, sources: &[usize]) -> Result<Vec<f64>> {
    HeatSolver::new(mesh)?.distance(sources)
}
