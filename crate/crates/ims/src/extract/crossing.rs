//! Crossings of A-edges with images of B-edges: zeros on edge×edge faces of A×B.

use std::fmt::Write as _;
use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;

use super::index::principal_angle;
use super::map::ProductView;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Corner values of one edge×edge face: z at (i,a), (j,a), (j,b), (i,b) with the A edge
/// i→j and the B edge a→b, plus the transports along both edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeQuad {
    pub z: [C64; 4],
    pub transport_a: C64,
    pub transport_b: C64,
}

/// A zero on an edge×edge face at parameters s (along the A edge) and t (along the B edge).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub edge_a: usize,
    pub edge_b: usize,
    pub s: f64,
    pub t: f64,
    pub residual: f64,
}

impl EdgeQuad {
    /// Signed zero count of the flat quad.
    pub fn index(&self) -> i32 {
        let [zi, zj, zk, zl] = self.z;
        let (ra, rb) = (self.transport_a, self.transport_b);
        let w = principal_angle(zj / (ra * zi)) + principal_angle(zk / (rb * zj))
            - principal_angle(zk / (ra * zl))
            - principal_angle(zl / (rb * zi));
        (w / TAU).round() as i32
    }

    /// Coefficients (a, b, c) of 1 + s b + t c + s t a = 0 after dividing by z_i.
    pub fn coefficients(&self) -> (C64, C64, C64) {
        let [zi, zj, zk, zl] = self.z;
        let p = zj / (self.transport_a * zi);
        let q = zl / (self.transport_b * zi);
        let r = zk / (self.transport_a * self.transport_b * zi);
        let b = p - 1.0;
        let c = q - 1.0;
        let a = -1.0 - b - c + r;
        (a, b, c)
    }

    /// Tensor-product interpolant at (s, t), with edge angles taken from the transports.
    pub fn interpolant(&self, s: f64, t: f64) -> C64 {
        let [zi, zj, zk, zl] = self.z;
        let (ra, rb) = (self.transport_a.arg(), self.transport_b.arg());
        let e = |x: f64| C64::from_polar(1.0, x);
        (1.0 - s) * (1.0 - t) * e(s * ra + t * rb) * zi
            + s * (1.0 - t) * e(-(1.0 - s) * ra + t * rb) * zj
            + s * t * e(-(1.0 - s) * ra - (1.0 - t) * rb) * zk
            + (1.0 - s) * t * e(s * ra - (1.0 - t) * rb) * zl
    }

    /// |1 + s b + t c + s t a| relative to the coefficient scale.
    pub fn residual(&self, s: f64, t: f64) -> f64 {
        let (a, b, c) = self.coefficients();
        let scale = 1.0f64.max(a.norm()).max(b.norm()).max(c.norm());
        (1.0 + b * s + c * t + a * (s * t)).norm() / scale
    }

    /// All zeros with s, t ∈ [0, 1].
    pub fn zeros(&self) -> Vec<(f64, f64)> {
        let (a, b, c) = self.coefficients();
        let d = C64::new(1.0, 0.0);
        // Im((c t + d) conj(a t + b)) = 0 makes s real
        let q2 = (c * a.conj()).im;
        let q1 = (c * b.conj() + d * a.conj()).im;
        let q0 = (d * b.conj()).im;
        let scale = q2.abs().max(q1.abs()).max(q0.abs()).max(1e-300);
        let mut ts = Vec::new();
        if q2.abs() < 1e-14 * scale.max(1.0) {
            if q1.abs() > 1e-300 {
                ts.push(-q0 / q1);
            }
        } else {
            let disc = q1 * q1 - 4.0 * q2 * q0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // numerically stable pair
                let m = -0.5 * (q1 + q1.signum() * sq);
                if m != 0.0 {
                    ts.push(m / q2);
                    ts.push(q0 / m);
                } else {
                    ts.push(0.0);
                }
            }
        }
        let mut out = Vec::new();
        for t in ts {
            if !(-1e-12..=1.0 + 1e-12).contains(&t) {
                continue;
            }
            let t = t.clamp(0.0, 1.0);
            let den = a * t + b;
            if den.norm_sqr() < 1e-300 {
                continue;
            }
            let s = -((c * t + d) * den.conj()).re / den.norm_sqr();
            if (-1e-12..=1.0 + 1e-12).contains(&s) {
                out.push((s.clamp(0.0, 1.0), t));
            }
        }
        out
    }
}

impl<'a> ProductView<'a> {
    pub fn edge_quad(&self, edge_a: usize, edge_b: usize) -> EdgeQuad {
        let (i, j) = self.mesh_a.edge_vertices(edge_a);
        let (a, b) = self.mesh_b.edge_vertices(edge_b);
        let z = |u: usize, v: usize| self.section.get(u, v);
        EdgeQuad {
            z: [z(i, a), z(j, a), z(j, b), z(i, b)],
            transport_a: self.conn_a.transport[edge_a],
            transport_b: self.conn_b.transport[edge_b],
        }
    }

    /// Zeros on every edge×edge face whose index is nonzero.
    pub fn edge_edge_intersections(&self) -> Vec<Crossing> {
        let (ea, eb) = (self.mesh_a.num_edges(), self.mesh_b.num_edges());
        let (na, nb) = (self.mesh_a.num_vertices(), self.mesh_b.num_vertices());
        let z = self.section;
        let nz = |x: C64| if x == C64::new(0.0, 0.0) { C64::new(1e-300, 0.0) } else { x };
        // rotations along A edges for every B vertex, and along B edges for every A vertex
        let wa: Vec<f64> = (0..ea)
            .into_par_iter()
            .flat_map_iter(|e| {
                let (i, j) = self.mesh_a.edge_vertices(e);
                let r = self.conn_a.transport[e];
                (0..nb).map(move |w| principal_angle(nz(z.get(j, w)) / (r * nz(z.get(i, w)))))
            })
            .collect();
        let wb: Vec<f64> = (0..na)
            .into_par_iter()
            .flat_map_iter(|v| {
                let row = z.row(v);
                (0..eb).map(move |e| {
                    let (a, b) = self.mesh_b.edge_vertices(e);
                    principal_angle(nz(row[b]) / (self.conn_b.transport[e] * nz(row[a])))
                })
            })
            .collect();
        (0..ea)
            .into_par_iter()
            .flat_map_iter(|e| {
                let (i, j) = self.mesh_a.edge_vertices(e);
                let (wa, wb) = (&wa, &wb);
                (0..eb).flat_map(move |f| {
                    let (a, b) = self.mesh_b.edge_vertices(f);
                    let w = wa[e * nb + a] + wb[j * eb + f] - wa[e * nb + b] - wb[i * eb + f];
                    let found = if (w / TAU).round() != 0.0 {
                        let q = self.edge_quad(e, f);
                        q.zeros()
                            .into_iter()
                            .map(|(s, t)| Crossing { edge_a: e, edge_b: f, s, t, residual: q.residual(s, t) })
                            .collect()
                    } else {
                        Vec::new()
                    };
                    found.into_iter()
                })
            })
            .collect()
    }
}

/// One `eA eB s t` line per crossing.
pub fn overlay_text(crossings: &[Crossing]) -> String {
    let mut s = String::new();
    for c in crossings {
        let _ = writeln!(s, "{} {} {} {}", c.edge_a, c.edge_b, c.s, c.t);
    }
    s
}

pub fn write_overlay(path: &Path, crossings: &[Crossing]) -> Result<()> {
    std::fs::write(path, overlay_text(crossings)).map_err(|e| Error::io(path, e))
}
