//! Product connection whose curvature sits on the graph of an initial map,
//! stored slice by slice and applied without forming per-slice matrices.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rayon::prelude::*;

use super::Section;
use crate::bundle::{face_inputs, face_stencil, Connection, CurvatureSolver};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mesh::{IntrinsicGeometry, TriangleMesh};

/// Per-mesh data shared by every slice on that mesh.
#[derive(Clone, Debug)]
struct SliceGeometry {
    edges: Vec<(usize, usize)>,
    /// Cotangent weight per edge (the Ω = 0 stencil).
    weights: Vec<f64>,
    faces: Vec<[usize; 3]>,
    /// Per face: edge and orientation sign of each halfedge.
    face_edges: Vec<[(usize, bool); 3]>,
    len2: Vec<[f64; 3]>,
    areas: Vec<f64>,
    lumped: Vec<f64>,
}

impl SliceGeometry {
    fn new(mesh: &TriangleMesh, geom: &IntrinsicGeometry) -> Self {
        let nf = mesh.num_faces();
        let mut lumped = vec![0.0; mesh.num_vertices()];
        for f in 0..nf {
            for v in mesh.face(f) {
                lumped[v] += geom.face_areas[f] / 3.0;
            }
        }
        SliceGeometry {
            edges: (0..mesh.num_edges()).map(|e| mesh.edge_vertices(e)).collect(),
            weights: geom.cotan_weights.clone(),
            faces: mesh.faces().to_vec(),
            face_edges: (0..nf)
                .map(|f| [0, 1, 2].map(|c| (mesh.edge(3 * f + c), mesh.orientation(3 * f + c) > 0.0)))
                .collect(),
            len2: (0..nf).map(|f| face_inputs(mesh, geom, f).0).collect(),
            areas: geom.face_areas.clone(),
            lumped,
        }
    }

    fn face_transport(&self, t: &[C64], f: usize) -> [C64; 3] {
        self.face_edges[f].map(|(e, fwd)| if fwd { t[e] } else { t[e].conj() })
    }

    /// y += scale · L z for the slice with edge transports `t` and curved faces `curved`.
    fn apply(&self, t: &[C64], curved: &[(usize, f64)], z: &[C64], y: &mut [C64], scale: f64) {
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let c = self.weights[e];
            let r = t[e];
            y[i] += (z[i] - r.conj() * z[j]) * (c * scale);
            y[j] += (z[j] - r * z[i]) * (c * scale);
        }
        for &(f, omega) in curved {
            let tr = self.face_transport(t, f);
            let (curv, _) = face_stencil(self.len2[f], self.areas[f], omega, tr);
            let (flat, _) = face_stencil(self.len2[f], self.areas[f], 0.0, tr);
            let vs = self.faces[f];
            for a in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..3 {
                    acc += (curv[a][b] - flat[a][b]) * z[vs[b]];
                }
                y[vs[a]] += acc * scale;
            }
        }
    }
}

/// Slice connections of A×B: each B-slice {v_A}×B and each A-slice A×{v_B} carries
/// its own single-surface connection with total curvature 2π.
#[derive(Clone, Debug)]
pub struct SliceConnection {
    /// Row v_A holds the transports on B's edges (|V_A| × |E_B|).
    pub b_transport: Vec<C64>,
    /// Row v_B holds the transports on A's edges (|V_B| × |E_A|).
    pub a_transport: Vec<C64>,
    /// Nonzero face curvatures of each B-slice.
    pub b_curvature: Vec<Vec<(usize, f64)>>,
    /// Nonzero face curvatures of each A-slice.
    pub a_curvature: Vec<Vec<(usize, f64)>>,
    geom_a: SliceGeometry,
    geom_b: SliceGeometry,
}

/// Where each slice puts its 2π of curvature.
#[derive(Clone, Copy, Debug)]
pub enum SliceTargets<'a> {
    /// One face per slice vertex.
    Faces(&'a [usize]),
    /// A per-face density per slice vertex, each summing to 2π.
    Densities(&'a [Vec<f64>]),
}

fn slice_family(
    mesh: &TriangleMesh,
    geom: &IntrinsicGeometry,
    base: &Connection,
    targets: SliceTargets,
) -> Result<(Vec<C64>, Vec<Vec<(usize, f64)>>)> {
    let ne = mesh.num_edges();
    let nf = mesh.num_faces();
    let solver = CurvatureSolver::new(geom, 0)?;
    let rotate = |delta: Vec<f64>| -> Vec<C64> {
        let alpha = solver.offset_angles(&delta);
        base.transport.iter().zip(&alpha).map(|(r, a)| C64::from_polar(1.0, *a) * r).collect()
    };
    match targets {
        SliceTargets::Faces(faces) => {
            if let Some(&f) = faces.iter().find(|&&f| f >= nf) {
                return Err(Error::Input(format!("initial map targets face {f} but the mesh has {nf} faces")));
            }
            let mut cache: HashMap<usize, Vec<C64>> = HashMap::new();
            let mut distinct: Vec<usize> = faces.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            let solved: Vec<(usize, Vec<C64>)> = distinct
                .par_iter()
                .map(|&f| {
                    let mut delta: Vec<f64> = base.curvature.iter().map(|w| -w).collect();
                    delta[f] += TAU;
                    (f, rotate(delta))
                })
                .collect();
            cache.extend(solved);
            let mut transport = Vec::with_capacity(faces.len() * ne);
            for f in faces {
                transport.extend_from_slice(&cache[f]);
            }
            Ok((transport, faces.iter().map(|&f| vec![(f, TAU)]).collect()))
        }
        SliceTargets::Densities(rows) => {
            let mut transport = Vec::with_capacity(rows.len() * ne);
            let mut curved = Vec::with_capacity(rows.len());
            for (s, row) in rows.iter().enumerate() {
                if row.len() != nf {
                    return Err(Error::Dimension(format!("density {s} has {} entries for {nf} faces", row.len())));
                }
                let total: f64 = row.iter().sum();
                if (total - TAU).abs() > 1e-9 {
                    return Err(Error::CurvatureSum { current: total, target: TAU });
                }
                let delta: Vec<f64> = row.iter().zip(&base.curvature).map(|(d, w)| d - w).collect();
                transport.extend(rotate(delta));
                curved.push(row.iter().enumerate().filter(|(_, &d)| d != 0.0).map(|(f, &d)| (f, d)).collect());
            }
            Ok((transport, curved))
        }
    }
}

/// Rigs every B-slice {v_A}×B to concentrate its curvature at φ(v_A), and every
/// A-slice A×{v_B} at ψ(v_B), by re-prescribing curvature on the base connections.
#[allow(clippy::too_many_arguments)]
pub fn build_slice_connection(
    mesh_a: &TriangleMesh,
    geom_a: &IntrinsicGeometry,
    conn_a: &Connection,
    mesh_b: &TriangleMesh,
    geom_b: &IntrinsicGeometry,
    conn_b: &Connection,
    targets_b: SliceTargets,
    targets_a: SliceTargets,
) -> Result<SliceConnection> {
    let count = |t: &SliceTargets| match t {
        SliceTargets::Faces(f) => f.len(),
        SliceTargets::Densities(d) => d.len(),
    };
    if count(&targets_b) != mesh_a.num_vertices() || count(&targets_a) != mesh_b.num_vertices() {
        return Err(Error::Dimension(format!(
            "initial maps have {} and {} entries for meshes with {} and {} vertices",
            count(&targets_b),
            count(&targets_a),
            mesh_a.num_vertices(),
            mesh_b.num_vertices()
        )));
    }
    let (b_transport, b_curvature) = slice_family(mesh_b, geom_b, conn_b, targets_b)?;
    let (a_transport, a_curvature) = slice_family(mesh_a, geom_a, conn_a, targets_a)?;
    Ok(SliceConnection {
        b_transport,
        a_transport,
        b_curvature,
        a_curvature,
        geom_a: SliceGeometry::new(mesh_a, geom_a),
        geom_b: SliceGeometry::new(mesh_b, geom_b),
    })
}

impl SliceConnection {
    pub fn shape(&self) -> (usize, usize) {
        (self.geom_a.lumped.len(), self.geom_b.lumped.len())
    }

    pub fn lumped_mass_a(&self) -> &[f64] {
        &self.geom_a.lumped
    }

    pub fn lumped_mass_b(&self) -> &[f64] {
        &self.geom_b.lumped
    }

    fn expand(curved: &[(usize, f64)], nf: usize) -> Vec<f64> {
        let mut c = vec![0.0; nf];
        for &(f, w) in curved {
            c[f] = w;
        }
        c
    }

    /// The connection on B carried by the slice {v_A}×B.
    pub fn b_slice(&self, v_a: usize) -> Connection {
        let ne = self.geom_b.edges.len();
        Connection {
            transport: self.b_transport[v_a * ne..(v_a + 1) * ne].to_vec(),
            curvature: Self::expand(&self.b_curvature[v_a], self.geom_b.faces.len()),
        }
    }

    /// The connection on A carried by the slice A×{v_B}.
    pub fn a_slice(&self, v_b: usize) -> Connection {
        let ne = self.geom_a.edges.len();
        Connection {
            transport: self.a_transport[v_b * ne..(v_b + 1) * ne].to_vec(),
            curvature: Self::expand(&self.a_curvature[v_b], self.geom_a.faces.len()),
        }
    }

    /// Z'_{v,w} = (M_A)_{vv} (L^v_B z_v)_w + (M_B)_{ww} (L^w_A z^w)_v.
    pub fn laplacian_apply(&self, z: &Section) -> Result<Section> {
        let (na, nb) = self.shape();
        z.check_shape(na, nb)?;
        let (ea, eb) = (self.geom_a.edges.len(), self.geom_b.edges.len());
        let mut out = Section::zeros(na, nb);
        out.data_mut().par_chunks_mut(nb).enumerate().for_each(|(v, y)| {
            let m = self.geom_a.lumped[v];
            self.geom_b.apply(
                &self.b_transport[v * eb..(v + 1) * eb],
                &self.b_curvature[v],
                z.row(v),
                y,
                m,
            );
        });
        let zt = z.transpose();
        let mut cols = Section::zeros(nb, na);
        cols.data_mut().par_chunks_mut(na).enumerate().for_each(|(w, y)| {
            let m = self.geom_b.lumped[w];
            self.geom_a.apply(
                &self.a_transport[w * ea..(w + 1) * ea],
                &self.a_curvature[w],
                zt.row(w),
                y,
                m,
            );
        });
        let data = out.data_mut();
        for w in 0..nb {
            for v in 0..na {
                data[v * nb + w] += cols.data()[w * na + v];
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`SliceConnection::laplacian_apply`].
pub fn slicewise_laplacian_apply(sc: &SliceConnection, z: &Section) -> Result<Section> {
    sc.laplacian_apply(z)
}
