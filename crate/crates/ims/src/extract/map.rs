use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::index::slice_index_form;
use super::zero::{find_triangle_zero, relative_residual, SingularTriangle};
use crate::bundle::Connection;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mesh::TriangleMesh;
use crate::product::Section;

/// Which way a correspondence is read off the section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Rows of Z: vertices of A located on B.
    AToB,
    /// Columns of Z: vertices of B located on A.
    BToA,
}

/// One zero found on a slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceZero {
    pub face: usize,
    pub index: i32,
    /// Barycentric location; absent for faces with |index| > 1.
    pub bary: Option<[f64; 3]>,
    pub residual: f64,
}

/// Image of a point: target face, barycentric coordinates and the multi-zero flag.
#[derive(Clone, Debug, PartialEq)]
pub struct PointImage {
    pub face: usize,
    pub bary: [f64; 3],
    pub multi_zero: bool,
    pub residual: f64,
}

impl PointImage {
    pub fn position(&self, mesh: &TriangleMesh) -> [f64; 3] {
        let p = mesh.positions();
        let f = mesh.face(self.face);
        let mut out = [0.0; 3];
        for c in 0..3 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.bary[c] * p[f[c]][k];
            }
        }
        out
    }
}

/// Located zeros of one slice and the chosen image.
#[derive(Clone, Debug)]
pub struct SliceExtraction {
    pub image: PointImage,
    pub zeros: Vec<SliceZero>,
}

fn face_triangle(mesh: &TriangleMesh, conn: &Connection, omega: &super::AngularForm, slice: &[C64], f: usize) -> SingularTriangle {
    let vs = mesh.face(f);
    SingularTriangle {
        omega: omega.face(mesh, f),
        curvature: conn.curvature[f],
        magnitude: vs.map(|v| slice[v].norm().max(1e-300)),
    }
}

fn locate_once(mesh: &TriangleMesh, conn: &Connection, slice: &[C64]) -> Result<SliceExtraction> {
    let (omega, ind) = slice_index_form(mesh, slice, conn)?;
    let total = ind.total();
    if total != 1 {
        return Err(Error::Extraction(format!("slice index sums to {total}, expected 1")));
    }
    let mut zeros = Vec::new();
    for f in ind.singular_faces() {
        let index = ind.index[f];
        let (bary, residual) = if index.abs() == 1 {
            let tri = face_triangle(mesh, conn, &omega, slice, f);
            let b = find_triangle_zero(&tri)?;
            (Some(b), relative_residual(&tri, b))
        } else {
            (None, f64::INFINITY)
        };
        zeros.push(SliceZero { face: f, index, bary, residual });
    }
    // prefer positively oriented zeros, then the smallest residual
    let best = zeros
        .iter()
        .filter(|z| z.bary.is_some())
        .min_by(|a, b| (a.index != 1, a.residual).partial_cmp(&(b.index != 1, b.residual)).unwrap())
        .ok_or_else(|| Error::Extraction("no locatable zero on the slice".into()))?;
    let image = PointImage {
        face: best.face,
        bary: best.bary.unwrap(),
        multi_zero: zeros.len() > 1,
        residual: best.residual,
    };
    Ok(SliceExtraction { image, zeros })
}

/// Locates the zero of a section on `mesh`; on a degenerate slice (zero on an edge) the
/// phases are jittered by a relative 1e-10 and the search is retried once.
pub fn locate_slice_zero(mesh: &TriangleMesh, conn: &Connection, slice: &[C64], jitter_seed: u64) -> Result<SliceExtraction> {
    match locate_once(mesh, conn, slice) {
        Ok(x) => Ok(x),
        Err(Error::Extraction(first)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(jitter_seed);
            let jittered: Vec<C64> = slice
                .iter()
                .map(|z| z * C64::from_polar(1.0, 1e-10 * rng.random_range(-1.0..1.0)))
                .collect();
            locate_once(mesh, conn, &jittered).map_err(|e| Error::Extraction(format!("{first}; after jitter: {e}")))
        }
        Err(e) => Err(e),
    }
}

/// ∫ of the Whitney-interpolated connection form along the segment from each corner to
/// the point with barycentric coordinates `bary`; `rho` holds the angles on edges
/// (corner 0→1, 1→2, 2→0).
pub fn whitney_phase(rho: [f64; 3], bary: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|c| rho[c] * bary[(c + 1) % 3] - rho[(c + 2) % 3] * bary[(c + 2) % 3])
}

/// Complex weights of the three corner fibers at a point of face `f`.
pub fn point_weights(mesh: &TriangleMesh, conn: &Connection, f: usize, bary: [f64; 3]) -> [C64; 3] {
    let r0 = conn.along(mesh, 3 * f).arg();
    let r1 = conn.along(mesh, 3 * f + 1).arg();
    // close the face form so that its integral equals the face curvature
    let rho = [r0, r1, conn.curvature[f] - r0 - r1];
    let phase = whitney_phase(rho, bary);
    [0, 1, 2].map(|c| C64::from_polar(bary[c], phase[c]))
}

fn check_bary(bary: [f64; 3]) -> Result<()> {
    if bary.iter().any(|&b| !(b >= -1e-12)) || (bary.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("barycentric coordinates {bary:?} are not in the simplex")));
    }
    Ok(())
}

/// A section over A×B together with the bundles it lives in.
#[derive(Clone, Copy)]
pub struct ProductView<'a> {
    pub mesh_a: &'a TriangleMesh,
    pub conn_a: &'a Connection,
    pub mesh_b: &'a TriangleMesh,
    pub conn_b: &'a Connection,
    pub section: &'a Section,
}

impl<'a> ProductView<'a> {
    pub fn new(
        mesh_a: &'a TriangleMesh,
        conn_a: &'a Connection,
        mesh_b: &'a TriangleMesh,
        conn_b: &'a Connection,
        section: &'a Section,
    ) -> Result<Self> {
        section.check_shape(mesh_a.num_vertices(), mesh_b.num_vertices())?;
        Ok(ProductView { mesh_a, conn_a, mesh_b, conn_b, section })
    }

    fn source(&self, dir: Direction) -> (&'a TriangleMesh, &'a Connection) {
        match dir {
            Direction::AToB => (self.mesh_a, self.conn_a),
            Direction::BToA => (self.mesh_b, self.conn_b),
        }
    }

    fn target(&self, dir: Direction) -> (&'a TriangleMesh, &'a Connection) {
        match dir {
            Direction::AToB => (self.mesh_b, self.conn_b),
            Direction::BToA => (self.mesh_a, self.conn_a),
        }
    }

    /// Section on the target surface carried by a source vertex.
    pub fn vertex_slice(&self, dir: Direction, v: usize) -> Vec<C64> {
        match dir {
            Direction::AToB => self.section.row(v).to_vec(),
            Direction::BToA => self.section.column(v),
        }
    }

    /// Section on the target surface carried by a point of a source face.
    pub fn point_slice(&self, dir: Direction, face: usize, bary: [f64; 3]) -> Vec<C64> {
        let (src, conn) = self.source(dir);
        let w = point_weights(src, conn, face, bary);
        let vs = src.face(face);
        let slices = vs.map(|v| self.vertex_slice(dir, v));
        (0..slices[0].len())
            .map(|k| w[0] * slices[0][k] + w[1] * slices[1][k] + w[2] * slices[2][k])
            .collect()
    }

    pub fn map_vertex(&self, dir: Direction, v: usize) -> Result<SliceExtraction> {
        let (src, _) = self.source(dir);
        if v >= src.num_vertices() {
            return Err(Error::Input(format!("vertex {v} out of range")));
        }
        let (mesh, conn) = self.target(dir);
        locate_slice_zero(mesh, conn, &self.vertex_slice(dir, v), v as u64)
            .map_err(|e| Error::Extraction(format!("vertex {v}: {e}")))
    }

    pub fn map_point(&self, dir: Direction, face: usize, bary: [f64; 3]) -> Result<SliceExtraction> {
        let (src, _) = self.source(dir);
        if face >= src.num_faces() {
            return Err(Error::Input(format!("face {face} out of range")));
        }
        check_bary(bary)?;
        let (mesh, conn) = self.target(dir);
        locate_slice_zero(mesh, conn, &self.point_slice(dir, face, bary), face as u64)
            .map_err(|e| Error::Extraction(format!("face {face} at {bary:?}: {e}")))
    }

    /// Images of every source vertex, extracted in parallel.
    pub fn map_all(&self, dir: Direction) -> Result<CorrespondenceMap> {
        let (src, _) = self.source(dir);
        let (tgt, _) = self.target(dir);
        let images = (0..src.num_vertices())
            .into_par_iter()
            .map(|v| self.map_vertex(dir, v).map(|x| (x.image, x.zeros.len())))
            .collect::<Result<Vec<_>>>()?;
        let (images, zero_counts) = images.into_iter().unzip();
        Ok(CorrespondenceMap {
            source_vertices: src.num_vertices(),
            target_vertices: tgt.num_vertices(),
            images,
            zero_counts,
        })
    }
}

/// Vertex images of one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceMap {
    pub source_vertices: usize,
    pub target_vertices: usize,
    pub images: Vec<PointImage>,
    /// Number of singular faces found on each source slice.
    pub zero_counts: Vec<usize>,
}

impl CorrespondenceMap {
    pub fn multi_zero_count(&self) -> usize {
        self.images.iter().filter(|i| i.multi_zero).count()
    }

    pub fn multi_zero_fraction(&self) -> f64 {
        self.multi_zero_count() as f64 / self.images.len().max(1) as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.images.iter().map(|i| i.residual).fold(0.0, f64::max)
    }

    pub fn positions(&self, target: &TriangleMesh) -> Vec<[f64; 3]> {
        self.images.iter().map(|i| i.position(target)).collect()
    }

    /// `IMSMAP v1 nsrc ntgt`, then `v face b0 b1 b2 flag` per source vertex.
    pub fn to_text(&self) -> String {
        let mut s = format!("IMSMAP v1 {} {}\n", self.source_vertices, self.target_vertices);
        for (v, im) in self.images.iter().enumerate() {
            let _ = writeln!(
                s,
                "{v} {} {} {} {} {}",
                im.face,
                im.bary[0],
                im.bary[1],
                im.bary[2],
                u8::from(im.multi_zero)
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if head.len() != 4 || head[0] != "IMSMAP" || head[1] != "v1" {
            return Err(Error::Format("expected header `IMSMAP v1 nsrc ntgt`".into()));
        }
        let num = |t: &str| t.parse::<usize>().map_err(|_| Error::Format(format!("bad count `{t}`")));
        let (ns, nt) = (num(head[2])?, num(head[3])?);
        let mut images = Vec::with_capacity(ns);
        for (k, line) in lines.enumerate() {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 6 || num(t[0])? != k {
                return Err(Error::Format(format!("bad map line `{line}`")));
            }
            let fl = |x: &str| x.parse::<f64>().map_err(|_| Error::Format(format!("bad number `{x}`")));
            images.push(PointImage {
                face: num(t[1])?,
                bary: [fl(t[2])?, fl(t[3])?, fl(t[4])?],
                multi_zero: t[5] == "1",
                residual: 0.0,
            });
        }
        if images.len() != ns {
            return Err(Error::Format(format!("map lists {} vertices, header says {ns}", images.len())));
        }
        let zero_counts = images.iter().map(|i| if i.multi_zero { 2 } else { 1 }).collect();
        Ok(CorrespondenceMap { source_vertices: ns, target_vertices: nt, images, zero_counts })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
