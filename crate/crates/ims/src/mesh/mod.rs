//! Triangle meshes with halfedge connectivity and intrinsic edge lengths.
//!
//! Halfedges are stored implicitly: halfedge `3 * f + c` runs from corner `c`
//! of face `f` to corner `c + 1`, so the corner index and the outgoing halfedge
//! index coincide.

mod boundary;
mod delaunay;
mod geodesic;
mod geometry;
mod io;
pub mod primitives;
mod spatial;

use std::collections::HashMap;

pub use boundary::{fill_boundaries, FilledMesh};
pub use delaunay::{intrinsic_delaunay, IntrinsicTriangulation, SurfacePoint};
pub use geodesic::{geodesic_distance, HeatSolver};
pub use geometry::{corner_angle, triangle_area, IntrinsicGeometry};
pub(crate) use geometry::layout_triangle;
pub use io::{load_and_normalize, load_obj, parse_obj, write_obj, InputMap};
pub use spatial::{closest_point, nearest_neighbor_maps, ClosestPoint, FaceIndex};

use crate::error::{Error, Result};

pub const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    positions: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    twin: Vec<usize>,
    edge_of: Vec<usize>,
    edge_halfedge: Vec<usize>,
    vertex_halfedge: Vec<usize>,
    lengths: Vec<f64>,
    boundary_loops: Vec<Vec<usize>>,
}

impl TriangleMesh {
    /// Builds connectivity; edge lengths are the Euclidean lengths of `positions`.
    pub fn new(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mut mesh = Self::connectivity(positions, faces)?;
        mesh.lengths = (0..mesh.num_edges())
            .map(|e| {
                let (a, b) = mesh.edge_vertices(e);
                dist(&mesh.positions[a], &mesh.positions[b])
            })
            .collect();
        mesh.check_triangle_inequality()?;
        Ok(mesh)
    }

    /// As [`TriangleMesh::new`] but keeps faces that violate the triangle inequality,
    /// for diagnostics.
    pub fn new_unvalidated(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mut mesh = Self::connectivity(positions, faces)?;
        mesh.lengths = (0..mesh.num_edges())
            .map(|e| {
                let (a, b) = mesh.edge_vertices(e);
                dist(&mesh.positions[a], &mesh.positions[b])
            })
            .collect();
        Ok(mesh)
    }

    /// Builds connectivity with explicitly given per-edge lengths, indexed in the
    /// edge order that `new` would produce for the same faces.
    pub fn with_lengths(
        positions: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
        lengths: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut mesh = Self::connectivity(positions, faces)?;
        mesh.lengths = (0..mesh.num_edges())
            .map(|e| {
                let (a, b) = mesh.edge_vertices(e);
                lengths(a, b)
            })
            .collect();
        mesh.check_triangle_inequality()?;
        Ok(mesh)
    }

    fn connectivity(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = positions.len();
        if faces.is_empty() {
            return Err(Error::Format("mesh has no faces".into()));
        }
        for (f, t) in faces.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::Format(format!("face {f} references a missing vertex")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[2] == t[0] {
                return Err(Error::Structural(format!("face {f} repeats a vertex")));
            }
        }
        let nh = 3 * faces.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(nh);
        for h in 0..nh {
            let (a, b) = (faces[h / 3][h % 3], faces[h / 3][(h % 3 + 1) % 3]);
            if directed.insert((a, b), h).is_some() {
                return Err(Error::Structural(format!(
                    "edge ({a}, {b}) is shared by more than two faces or faces are inconsistently oriented"
                )));
            }
        }
        let mut twin = vec![NONE; nh];
        let mut edge_of = vec![NONE; nh];
        let mut edge_halfedge = Vec::new();
        for h in 0..nh {
            let (a, b) = (faces[h / 3][h % 3], faces[h / 3][(h % 3 + 1) % 3]);
            if let Some(&t) = directed.get(&(b, a)) {
                twin[h] = t;
            }
            if edge_of[h] == NONE {
                edge_of[h] = edge_halfedge.len();
                if twin[h] != NONE {
                    edge_of[twin[h]] = edge_halfedge.len();
                }
                edge_halfedge.push(h);
            }
        }

        let mut mesh = TriangleMesh {
            positions,
            faces,
            twin,
            edge_of,
            edge_halfedge,
            vertex_halfedge: vec![NONE; nv],
            lengths: Vec::new(),
            boundary_loops: Vec::new(),
        };

        let mut outgoing_count = vec![0usize; nv];
        for h in 0..nh {
            let v = mesh.tail(h);
            outgoing_count[v] += 1;
            // Boundary vertices start their fan at the outgoing boundary halfedge.
            if mesh.vertex_halfedge[v] == NONE || mesh.twin[h] == NONE {
                mesh.vertex_halfedge[v] = h;
            }
        }
        for v in 0..nv {
            if mesh.vertex_halfedge[v] == NONE {
                return Err(Error::Structural(format!("vertex {v} is not referenced by any face")));
            }
            let fan = mesh.outgoing(v).count();
            if fan != outgoing_count[v] {
                return Err(Error::Structural(format!(
                    "vertex {v} is non-manifold ({} of {} incident faces form a fan)",
                    fan, outgoing_count[v]
                )));
            }
        }
        mesh.boundary_loops = mesh.trace_boundary_loops();
        mesh.check_connected()?;
        Ok(mesh)
    }

    fn trace_boundary_loops(&self) -> Vec<Vec<usize>> {
        let nh = self.num_halfedges();
        let mut seen = vec![false; nh];
        let mut loops = Vec::new();
        for start in 0..nh {
            if self.twin[start] != NONE || seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut h = start;
            loop {
                seen[h] = true;
                cycle.push(self.tail(h));
                h = self.vertex_halfedge[self.head(h)];
                if h == start {
                    break;
                }
            }
            loops.push(cycle);
        }
        loops
    }

    fn check_connected(&self) -> Result<()> {
        let nf = self.num_faces();
        let mut seen = vec![false; nf];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(f) = stack.pop() {
            for c in 0..3 {
                let t = self.twin[3 * f + c];
                if t != NONE && !seen[t / 3] {
                    seen[t / 3] = true;
                    count += 1;
                    stack.push(t / 3);
                }
            }
        }
        if count != nf {
            return Err(Error::Topology {
                message: format!("mesh has more than one connected component ({count} of {nf} faces reachable)"),
                chi: self.euler_characteristic(),
            });
        }
        Ok(())
    }

    /// Faces violating the strict triangle inequality.
    pub fn degenerate_faces(&self) -> Vec<usize> {
        (0..self.num_faces())
            .filter(|&f| {
                let [a, b, c] = self.face_lengths(f);
                !(a < b + c && b < c + a && c < a + b) || !(a > 0.0 && b > 0.0 && c > 0.0)
            })
            .collect()
    }

    fn check_triangle_inequality(&self) -> Result<()> {
        match self.degenerate_faces().first() {
            None => Ok(()),
            Some(&f) => Err(Error::Input(format!(
                "face {f} violates the strict triangle inequality (lengths {:?})",
                self.face_lengths(f)
            ))),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_halfedge.len()
    }

    pub fn num_halfedges(&self) -> usize {
        3 * self.faces.len()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_loops.is_empty()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Genus of the surface obtained by capping every boundary loop.
    pub fn genus(&self) -> Option<usize> {
        let g2 = 2 - self.euler_characteristic() - self.boundary_loops.len() as i64;
        (g2 >= 0 && g2 % 2 == 0).then_some((g2 / 2) as usize)
    }

    /// Fails unless the mesh is genus zero once its boundary loops are capped.
    pub fn require_genus_zero(&self) -> Result<()> {
        if self.genus() == Some(0) {
            Ok(())
        } else {
            let chi = self.euler_characteristic();
            let b = self.boundary_loops.len();
            Err(Error::Topology {
                message: format!("expected a genus-zero surface (V - E + F = {} with {b} boundary loops)", 2 - b as i64),
                chi,
            })
        }
    }

    pub fn tail(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    pub fn head(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }

    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }

    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 2) % 3
    }

    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }

    pub fn edge(&self, h: usize) -> usize {
        self.edge_of[h]
    }

    pub fn edge_halfedge(&self, e: usize) -> usize {
        self.edge_halfedge[e]
    }

    /// Sign of halfedge `h` relative to its edge's canonical orientation.
    pub fn orientation(&self, h: usize) -> f64 {
        if self.edge_halfedge[self.edge_of[h]] == h {
            1.0
        } else {
            -1.0
        }
    }

    /// Canonically oriented endpoints (tail, head) of edge `e`.
    pub fn edge_vertices(&self, e: usize) -> (usize, usize) {
        let h = self.edge_halfedge[e];
        (self.tail(h), self.head(h))
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.twin[self.edge_halfedge[e]] == NONE
    }

    pub fn halfedge_length(&self, h: usize) -> f64 {
        self.lengths[self.edge_of[h]]
    }

    /// Lengths of the edges opposite corners 0, 1, 2 of face `f`.
    pub fn face_lengths(&self, f: usize) -> [f64; 3] {
        [
            self.halfedge_length(3 * f + 1),
            self.halfedge_length(3 * f + 2),
            self.halfedge_length(3 * f),
        ]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_lengths(f);
        triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_faces()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.lengths.iter().sum::<f64>() / self.lengths.len() as f64
    }

    pub fn vertex_halfedge(&self, v: usize) -> usize {
        self.vertex_halfedge[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.twin[self.vertex_halfedge[v]] == NONE
    }

    /// Outgoing halfedges of `v` in counterclockwise order.
    pub fn outgoing(&self, v: usize) -> Outgoing<'_> {
        let start = self.vertex_halfedge[v];
        Outgoing {
            mesh: self,
            start,
            current: start,
        }
    }

    /// Halfedge from `a` to `b`, if any.
    pub fn find_halfedge(&self, a: usize, b: usize) -> Option<usize> {
        self.outgoing(a).find(|&h| self.head(h) == b)
    }

    pub fn face_centroid(&self, f: usize) -> [f64; 3] {
        let [a, b, c] = self.faces[f];
        let (p, q, r) = (&self.positions[a], &self.positions[b], &self.positions[c]);
        [0, 1, 2].map(|k| (p[k] + q[k] + r[k]) / 3.0)
    }

    /// Area of the triangle spanned by the embedded positions (not the intrinsic lengths).
    pub fn embedded_face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        0.5 * norm(&cross(
            &sub(&self.positions[b], &self.positions[a]),
            &sub(&self.positions[c], &self.positions[a]),
        ))
    }

    /// Scales positions and lengths so the total area is one and recenters the
    /// area-weighted centroid at the origin.
    pub fn normalize(&mut self) {
        let area = self.total_area();
        let mut centroid = [0.0; 3];
        let mut weight = 0.0;
        for f in 0..self.num_faces() {
            let a = self.embedded_face_area(f);
            let c = self.face_centroid(f);
            for k in 0..3 {
                centroid[k] += a * c[k];
            }
            weight += a;
        }
        if weight > 0.0 {
            centroid = centroid.map(|x| x / weight);
        }
        let s = 1.0 / area.sqrt();
        for p in &mut self.positions {
            for k in 0..3 {
                p[k] = (p[k] - centroid[k]) * s;
            }
        }
        for l in &mut self.lengths {
            *l *= s;
        }
    }

    /// Copy with every face winding reversed (normals flipped).
    pub fn reversed(&self) -> Result<TriangleMesh> {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        let lengths: HashMap<(usize, usize), f64> = (0..self.num_edges())
            .map(|e| {
                let (a, b) = self.edge_vertices(e);
                ((a.min(b), a.max(b)), self.lengths[e])
            })
            .collect();
        TriangleMesh::with_lengths(self.positions.clone(), faces, |a, b| lengths[&(a.min(b), a.max(b))])
    }

    pub(crate) fn set_face(&mut self, f: usize, face: [usize; 3]) {
        self.faces[f] = face;
    }

    pub(crate) fn set_twin(&mut self, h: usize, t: usize) {
        self.twin[h] = t;
        if t != NONE {
            self.twin[t] = h;
        }
    }

    pub(crate) fn set_edge(&mut self, h: usize, e: usize) {
        self.edge_of[h] = e;
    }

    pub(crate) fn set_edge_halfedge(&mut self, e: usize, h: usize) {
        self.edge_halfedge[e] = h;
    }

    pub(crate) fn set_length(&mut self, e: usize, l: f64) {
        self.lengths[e] = l;
    }

    pub(crate) fn set_vertex_halfedge(&mut self, v: usize, h: usize) {
        self.vertex_halfedge[v] = h;
    }
}

pub struct Outgoing<'a> {
    mesh: &'a TriangleMesh,
    start: usize,
    current: usize,
}

impl Iterator for Outgoing<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.current == NONE {
            return None;
        }
        let h = self.current;
        let t = self.mesh.twin[self.mesh.prev(h)];
        self.current = if t == self.start { NONE } else { t };
        Some(h)
    }
}

pub(crate) fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm(&sub(a, b))
}
