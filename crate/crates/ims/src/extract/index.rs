use std::f64::consts::{PI, TAU};

use crate::bundle::Connection;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mesh::TriangleMesh;

/// Largest tolerated distance of (dω + Ω)/2π from an integer.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Rotation of a section relative to parallel transport, one angle per canonical edge.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularForm {
    pub omega: Vec<f64>,
}

impl AngularForm {
    /// ω on a halfedge, negated against the canonical orientation.
    pub fn along(&self, mesh: &TriangleMesh, h: usize) -> f64 {
        let w = self.omega[mesh.edge(h)];
        if mesh.orientation(h) > 0.0 {
            w
        } else {
            -w
        }
    }

    /// ω on the three halfedges of a face, in corner order.
    pub fn face(&self, mesh: &TriangleMesh, f: usize) -> [f64; 3] {
        [0, 1, 2].map(|c| self.along(mesh, 3 * f + c))
    }
}

/// Signed zero count per face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexForm {
    pub index: Vec<i32>,
}

impl IndexForm {
    pub fn total(&self) -> i64 {
        self.index.iter().map(|&i| i as i64).sum()
    }

    pub fn singular_faces(&self) -> Vec<usize> {
        (0..self.index.len()).filter(|&f| self.index[f] != 0).collect()
    }
}

/// arg(w) in [−π, π).
pub fn principal_angle(w: C64) -> f64 {
    let a = w.arg();
    if a >= PI {
        a - TAU
    } else {
        a
    }
}

/// Replaces exact zeros by a tiny value so every angle is defined.
pub(crate) fn nudge_zeros(slice: &[C64]) -> Vec<C64> {
    slice
        .iter()
        .map(|&z| if z == C64::new(0.0, 0.0) { C64::new(1e-300, 0.0) } else { z })
        .collect()
}

/// ω_ij = arg(z_j / (r_ij z_i)) per edge, and ind = (dω + Ω)/2π per face.
pub fn slice_index_form(mesh: &TriangleMesh, slice: &[C64], conn: &Connection) -> Result<(AngularForm, IndexForm)> {
    if slice.len() != mesh.num_vertices() {
        return Err(Error::Dimension(format!(
            "slice has {} values for {} vertices",
            slice.len(),
            mesh.num_vertices()
        )));
    }
    let z = nudge_zeros(slice);
    let omega: Vec<f64> = (0..mesh.num_edges())
        .map(|e| {
            let (i, j) = mesh.edge_vertices(e);
            principal_angle(z[j] / (conn.transport[e] * z[i]))
        })
        .collect();
    let form = AngularForm { omega };
    let mut index = Vec::with_capacity(mesh.num_faces());
    for f in 0..mesh.num_faces() {
        let w = form.face(mesh, f);
        let raw = (w[0] + w[1] + w[2] + conn.curvature[f]) / TAU;
        let k = raw.round();
        if (raw - k).abs() > INTEGRALITY_TOL {
            return Err(Error::Extraction(format!(
                "face {f} has non-integer index {raw:.9} (section vanishes on an edge)"
            )));
        }
        index.push(k as i32);
    }
    Ok((form, IndexForm { index }))
}
