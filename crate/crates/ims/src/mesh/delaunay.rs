//! Intrinsic Delaunay triangulation by edge flips.
//!
//! Every halfedge carries a signpost: its polar angle at the tail vertex,
//! measured in actual (unscaled) angle around the vertex from a reference
//! direction shared by the input and the intrinsic triangulation. Points are
//! transferred between the two triangulations by tracing straight lines from a
//! corner vertex, which is exact because intrinsic edges are geodesics of the
//! input surface and intrinsic faces contain no input vertices.

use std::collections::VecDeque;
use std::f64::consts::PI;

use super::geometry::{corner_angle, layout_triangle};
use super::{TriangleMesh, NONE};
use crate::error::{Error, Result};

const DELAUNAY_TOL: f64 = 1e-12;

/// A point on a triangle mesh: face index and barycentric coordinates of its corners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
}

impl SurfacePoint {
    pub fn new(face: usize, bary: [f64; 3]) -> Self {
        SurfacePoint { face, bary }
    }

    pub fn at_corner(face: usize, corner: usize) -> Self {
        let mut bary = [0.0; 3];
        bary[corner] = 1.0;
        SurfacePoint { face, bary }
    }

    pub fn centroid(face: usize) -> Self {
        SurfacePoint {
            face,
            bary: [1.0 / 3.0; 3],
        }
    }

    /// Position in 3D using the mesh's embedded vertex positions.
    pub fn position(&self, mesh: &TriangleMesh) -> [f64; 3] {
        let f = mesh.face(self.face);
        let p = mesh.positions();
        [0, 1, 2].map(|k| (0..3).map(|c| self.bary[c] * p[f[c]][k]).sum())
    }
}

/// An intrinsic triangulation of an input mesh, with point transfer in both directions.
#[derive(Clone, Debug)]
pub struct IntrinsicTriangulation {
    pub input: TriangleMesh,
    pub intrinsic: TriangleMesh,
    input_signposts: Vec<f64>,
    signposts: Vec<f64>,
    angle_sums: Vec<f64>,
    pub flips: usize,
}

impl IntrinsicTriangulation {
    /// The trivial intrinsic triangulation (identical to the input).
    pub fn identity(mesh: &TriangleMesh) -> Self {
        let (signposts, angle_sums) = signposts_of(mesh);
        IntrinsicTriangulation {
            input: mesh.clone(),
            intrinsic: mesh.clone(),
            input_signposts: signposts.clone(),
            signposts,
            angle_sums,
            flips: 0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.flips == 0
    }

    /// Expresses a point on the intrinsic triangulation on the input triangulation.
    pub fn to_input(&self, p: SurfacePoint) -> SurfacePoint {
        if self.flips == 0 {
            return p;
        }
        transfer(&self.intrinsic, &self.signposts, &self.input, &self.input_signposts, &self.angle_sums, p)
    }

    /// Expresses a point on the input triangulation on the intrinsic triangulation.
    pub fn from_input(&self, p: SurfacePoint) -> SurfacePoint {
        if self.flips == 0 {
            return p;
        }
        transfer(&self.input, &self.input_signposts, &self.intrinsic, &self.signposts, &self.angle_sums, p)
    }

    /// Whether every interior edge satisfies the local Delaunay condition.
    pub fn is_delaunay(&self) -> bool {
        (0..self.intrinsic.num_edges()).all(|e| !needs_flip(&self.intrinsic, e))
    }

    /// Further flips until Delaunay; returns the number performed.
    pub fn flip_to_delaunay(&mut self) -> Result<usize> {
        let mesh = &mut self.intrinsic;
        let limit = 100 * mesh.num_edges();
        let mut queue: VecDeque<usize> = (0..mesh.num_edges()).collect();
        let mut queued = vec![true; mesh.num_edges()];
        let mut count = 0;
        while let Some(e) = queue.pop_front() {
            queued[e] = false;
            if !needs_flip(mesh, e) {
                continue;
            }
            let touched = flip_edge(mesh, &mut self.signposts, &self.angle_sums, e);
            count += 1;
            if count > limit {
                return Err(Error::Numerical(format!(
                    "intrinsic Delaunay flipping did not converge after {limit} flips"
                )));
            }
            for t in touched {
                if !queued[t] {
                    queued[t] = true;
                    queue.push_back(t);
                }
            }
        }
        self.flips += count;
        Ok(count)
    }
}

/// Flips edges of `mesh` until it is intrinsically Delaunay.
pub fn intrinsic_delaunay(mesh: &TriangleMesh) -> Result<IntrinsicTriangulation> {
    let mut tri = IntrinsicTriangulation::identity(mesh);
    tri.flip_to_delaunay()?;
    Ok(tri)
}

fn signposts_of(mesh: &TriangleMesh) -> (Vec<f64>, Vec<f64>) {
    let mut sp = vec![0.0; mesh.num_halfedges()];
    let mut sums = vec![0.0; mesh.num_vertices()];
    for v in 0..mesh.num_vertices() {
        let mut acc = 0.0;
        for h in mesh.outgoing(v) {
            sp[h] = acc;
            acc += halfedge_corner_angle(mesh, h);
        }
        sums[v] = acc;
    }
    (sp, sums)
}

/// Corner angle of face(h) at tail(h).
fn halfedge_corner_angle(mesh: &TriangleMesh, h: usize) -> f64 {
    let a = mesh.halfedge_length(h);
    let b = mesh.halfedge_length(mesh.prev(h));
    let opp = mesh.halfedge_length(mesh.next(h));
    corner_angle(opp, a, b)
}

fn needs_flip(mesh: &TriangleMesh, e: usize) -> bool {
    let h1 = mesh.edge_halfedge(e);
    let h2 = mesh.twin(h1);
    if h2 == NONE {
        return false;
    }
    let k = mesh.tail(mesh.prev(h1));
    let l = mesh.tail(mesh.prev(h2));
    if k == l {
        return false;
    }
    let lij = mesh.halfedge_length(h1);
    let theta_k = corner_angle(lij, mesh.halfedge_length(mesh.next(h1)), mesh.halfedge_length(mesh.prev(h1)));
    let theta_l = corner_angle(lij, mesh.halfedge_length(mesh.next(h2)), mesh.halfedge_length(mesh.prev(h2)));
    theta_k + theta_l > PI + DELAUNAY_TOL
}

/// Flips edge `e`; returns the four edges of the surrounding quad.
fn flip_edge(mesh: &mut TriangleMesh, signposts: &mut [f64], sums: &[f64], e: usize) -> [usize; 4] {
    let h1 = mesh.edge_halfedge(e);
    let h2 = mesh.twin(h1);
    let (f1, f2) = (h1 / 3, h2 / 3);
    let (h1n, h1p, h2n, h2p) = (mesh.next(h1), mesh.prev(h1), mesh.next(h2), mesh.prev(h2));
    let (i, j, k, l) = (mesh.tail(h1), mesh.head(h1), mesh.tail(h1p), mesh.tail(h2p));

    let lij = mesh.halfedge_length(h1);
    let (ljk, lki, lil, llj) = (
        mesh.halfedge_length(h1n),
        mesh.halfedge_length(h1p),
        mesh.halfedge_length(h2n),
        mesh.halfedge_length(h2p),
    );
    // i at the origin, j on the x axis, k above and l below.
    let pk = layout_triangle(lij, ljk, lki)[2];
    let pl = layout_triangle(lij, llj, lil)[2];
    let lkl = ((pk[0] - pl[0]).powi(2) + (pk[1] + pl[1]).powi(2)).sqrt();

    let moved = [
        (h1p, 3 * f1 + 1),
        (h2n, 3 * f1 + 2),
        (h2p, 3 * f2 + 1),
        (h1n, 3 * f2 + 2),
    ];
    let saved: Vec<_> = moved
        .iter()
        .map(|&(old, _)| {
            let ed = mesh.edge(old);
            (mesh.twin(old), ed, mesh.edge_halfedge(ed) == old, signposts[old])
        })
        .collect();

    let sp_kl = wrap(signposts[h1p] + corner_angle(lil, lki, lkl), sums[k], mesh.is_boundary_vertex(k));
    let sp_lk = wrap(signposts[h2p] + corner_angle(ljk, llj, lkl), sums[l], mesh.is_boundary_vertex(l));

    let remap = |h: usize| -> usize {
        if h == h1 {
            3 * f1 + 2
        } else if h == h2 {
            3 * f2 + 2
        } else {
            moved.iter().find(|&&(old, _)| old == h).map_or(h, |&(_, new)| new)
        }
    };
    let vh: Vec<(usize, usize)> = [i, j, k, l]
        .iter()
        .map(|&v| (v, remap(mesh.vertex_halfedge(v))))
        .collect();

    mesh.set_face(f1, [l, k, i]);
    mesh.set_face(f2, [k, l, j]);
    for (&(_, new), &(twin, ed, canonical, sp)) in moved.iter().zip(&saved) {
        mesh.set_twin(new, twin);
        mesh.set_edge(new, ed);
        if canonical {
            mesh.set_edge_halfedge(ed, new);
        }
        signposts[new] = sp;
    }
    let (a, b) = (3 * f1, 3 * f2);
    mesh.set_twin(a, b);
    mesh.set_edge(a, e);
    mesh.set_edge(b, e);
    mesh.set_edge_halfedge(e, a);
    mesh.set_length(e, lkl);
    signposts[a] = sp_lk;
    signposts[b] = sp_kl;
    for (v, h) in vh {
        mesh.set_vertex_halfedge(v, h);
    }
    [saved[0].1, saved[1].1, saved[2].1, saved[3].1]
}

fn wrap(angle: f64, sum: f64, boundary: bool) -> f64 {
    if boundary {
        angle
    } else {
        angle.rem_euclid(sum)
    }
}

/// Moves point `p` on `src` to the corresponding point on `dst` (two triangulations
/// of the same surface sharing vertices and signpost reference directions).
fn transfer(
    src: &TriangleMesh,
    src_sp: &[f64],
    dst: &TriangleMesh,
    dst_sp: &[f64],
    sums: &[f64],
    p: SurfacePoint,
) -> SurfacePoint {
    let c = (0..3).max_by(|&a, &b| p.bary[a].total_cmp(&p.bary[b])).unwrap();
    let h = 3 * p.face + c;
    let v = src.tail(h);
    // Layout with corner c at the origin and halfedge h along +x.
    let pos = layout_triangle(src.halfedge_length(h), src.halfedge_length(src.next(h)), src.halfedge_length(src.prev(h)));
    let b = [p.bary[c], p.bary[(c + 1) % 3], p.bary[(c + 2) % 3]];
    let q = [
        b[1] * pos[1][0] + b[2] * pos[2][0],
        b[1] * pos[1][1] + b[2] * pos[2][1],
    ];
    let r = q[0].hypot(q[1]);
    if r < 1e-300 || b[0] >= 1.0 {
        return vertex_point(dst, v);
    }
    let angle = src_sp[h] + q[1].atan2(q[0]);
    trace_from_vertex(dst, dst_sp, sums, v, angle, r)
}

/// A surface point at vertex `v` of `mesh`.
pub(crate) fn vertex_point(mesh: &TriangleMesh, v: usize) -> SurfacePoint {
    let h = mesh.vertex_halfedge(v);
    SurfacePoint::at_corner(h / 3, h % 3)
}

/// Walks a straight line of length `dist` leaving vertex `v` at signpost angle `angle`.
pub(crate) fn trace_from_vertex(
    mesh: &TriangleMesh,
    sp: &[f64],
    sums: &[f64],
    v: usize,
    angle: f64,
    dist: f64,
) -> SurfacePoint {
    let boundary = mesh.is_boundary_vertex(v);
    // Corner of v containing the direction.
    let mut best: Option<(usize, f64)> = None;
    let mut fallback: Option<(usize, f64, f64)> = None;
    for h in mesh.outgoing(v) {
        let theta = halfedge_corner_angle(mesh, h);
        let off = if boundary { angle - sp[h] } else { (angle - sp[h]).rem_euclid(sums[v]) };
        if off >= -1e-12 && off <= theta + 1e-12 {
            if best.is_none_or(|(_, o)| off < o) {
                best = Some((h, off.clamp(0.0, theta)));
            }
        }
        let miss = if off < 0.0 { -off } else { off - theta };
        if fallback.is_none_or(|(_, m, _)| miss < m) {
            fallback = Some((h, miss, off.clamp(0.0, theta)));
        }
    }
    let (h, psi) = best.unwrap_or_else(|| {
        let (h, _, o) = fallback.unwrap();
        (h, o)
    });

    let f = h / 3;
    let c = h % 3;
    let lay = layout_triangle(mesh.halfedge_length(h), mesh.halfedge_length(mesh.next(h)), mesh.halfedge_length(mesh.prev(h)));
    let mut pts = [[0.0; 2]; 3];
    pts[c] = lay[0];
    pts[(c + 1) % 3] = lay[1];
    pts[(c + 2) % 3] = lay[2];
    let dir = [psi.cos(), psi.sin()];
    let target = [dist * dir[0], dist * dir[1]];
    walk(mesh, f, pts, 3 * f + (c + 1) % 3, dir, target)
}

/// Straight-line walk. `exit_candidates` restricts the first exit to one halfedge.
fn walk(
    mesh: &TriangleMesh,
    mut face: usize,
    mut pts: [[f64; 2]; 3],
    first_exit: usize,
    dir: [f64; 2],
    target: [f64; 2],
) -> SurfacePoint {
    let mut entry = NONE;
    let max_steps = 4 * mesh.num_faces() + 16;
    for step in 0..max_steps {
        let b = barycentric_2d(&pts, target);
        if b.iter().all(|&x| x >= -1e-12) {
            return SurfacePoint::new(face, clamp_bary(b));
        }
        // Exit edge: the halfedge whose segment the ray crosses farthest along.
        let mut exit: Option<(usize, f64, f64)> = None;
        for c in 0..3 {
            let h = 3 * face + c;
            if h == entry || (step == 0 && h != first_exit) {
                continue;
            }
            let (a, bb) = (pts[c], pts[(c + 1) % 3]);
            if let Some((t, s)) = ray_segment(dir, a, bb) {
                let score = (s.min(1.0 - s)).min(0.0);
                if exit.is_none_or(|(_, sc, tt)| score > sc || (score == sc && t > tt)) {
                    exit = Some((h, score, t));
                }
            }
        }
        let Some((h, _, _)) = exit else {
            return SurfacePoint::new(face, clamp_bary(b));
        };
        let t = mesh.twin(h);
        if t == NONE {
            return SurfacePoint::new(face, clamp_bary(b));
        }
        let c = h % 3;
        let (pa, pb) = (pts[c], pts[(c + 1) % 3]);
        // Unfold the neighbor across h; it contains t = (b -> a) with its third corner on the left.
        let nf = t / 3;
        let tc = t % 3;
        let lba = mesh.halfedge_length(t);
        let lbx = mesh.halfedge_length(mesh.prev(t));
        let lax = mesh.halfedge_length(mesh.next(t));
        let u = [(pa[0] - pb[0]) / lba, (pa[1] - pb[1]) / lba];
        let n = [-u[1], u[0]];
        let alpha = (lba * lba + lbx * lbx - lax * lax) / (2.0 * lba);
        let beta = (lbx * lbx - alpha * alpha).max(0.0).sqrt();
        let px = [pb[0] + alpha * u[0] + beta * n[0], pb[1] + alpha * u[1] + beta * n[1]];
        let mut np = [[0.0; 2]; 3];
        np[tc] = pb;
        np[(tc + 1) % 3] = pa;
        np[(tc + 2) % 3] = px;
        face = nf;
        pts = np;
        entry = t;
    }
    let b = barycentric_2d(&pts, target);
    SurfacePoint::new(face, clamp_bary(b))
}

/// Ray from the origin along `dir` against segment a-b: (ray parameter, segment parameter).
fn ray_segment(dir: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<(f64, f64)> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let det = dir[0] * (-e[1]) - dir[1] * (-e[0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let t = (a[0] * (-e[1]) - a[1] * (-e[0])) / det;
    let s = (dir[0] * a[1] - dir[1] * a[0]) / det;
    (t > 0.0).then_some((t, s))
}

pub(crate) fn barycentric_2d(p: &[[f64; 2]; 3], q: [f64; 2]) -> [f64; 3] {
    let d = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let b1 = ((q[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (q[1] - p[0][1])) / d;
    let b2 = ((p[1][0] - p[0][0]) * (q[1] - p[0][1]) - (q[0] - p[0][0]) * (p[1][1] - p[0][1])) / d;
    [1.0 - b1 - b2, b1, b2]
}

pub(crate) fn clamp_bary(b: [f64; 3]) -> [f64; 3] {
    let c = b.map(|x| x.max(0.0));
    let s: f64 = c.iter().sum();
    if s > 0.0 {
        c.map(|x| x / s)
    } else {
        [1.0 / 3.0; 3]
    }
}
