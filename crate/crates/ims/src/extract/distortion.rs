//! Per-face distortion of the piecewise-linear map through the vertex images.

use std::fmt::Write as _;
use std::path::Path;

use super::map::CorrespondenceMap;
use crate::error::{Error, Result};
use crate::mesh::layout_triangle;
use crate::mesh::TriangleMesh;

/// Why a face has no singular values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceStatus {
    Ok,
    /// A corner's slice had several zeros.
    MultiZero,
    /// The image triangle has (numerically) zero area.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceDistortion {
    pub status: FaceStatus,
    /// σ₁ ≥ σ₂ (zero when degenerate).
    pub sigma: [f64; 2],
    /// The image triangle is flipped against the target's surface normal.
    pub flipped: bool,
    pub area: f64,
}

impl FaceDistortion {
    /// √((1+σ₁²)(1+σ₂²)).
    pub fn area_density(&self) -> f64 {
        let [a, b] = self.sigma;
        ((1.0 + a * a) * (1.0 + b * b)).sqrt()
    }

    /// σ₁² + σ₂² + σ₁⁻² + σ₂⁻².
    pub fn symmetric_dirichlet(&self) -> f64 {
        let [a, b] = self.sigma;
        a * a + b * b + 1.0 / (a * a) + 1.0 / (b * b)
    }
}

/// Fixed-range histogram; out-of-range values land in the end bins.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0; bins];
        for v in values {
            let k = (((v - lo) / (hi - lo)) * bins as f64).floor();
            counts[(k.max(0.0) as usize).min(bins - 1)] += 1;
        }
        Histogram { lo, hi, counts }
    }
}

#[derive(Clone, Debug)]
pub struct DistortionReport {
    pub faces: Vec<FaceDistortion>,
    /// Area of the evaluated (non-multi-zero) source faces.
    pub source_area: f64,
    /// ∫ √((1+σ₁²)(1+σ₂²)) over the evaluated faces.
    pub graph_area: f64,
    /// ∫ (σ₁²+σ₂²+σ₁⁻²+σ₂⁻²) over non-degenerate faces.
    pub symmetric_dirichlet: f64,
    /// ∫ |det dφ|.
    pub jacobian_area: f64,
    /// ∫ ½|dφ|².
    pub dirichlet: f64,
    pub flipped_faces: usize,
    pub area_histogram: Histogram,
    pub symmetric_histogram: Histogram,
}

impl DistortionReport {
    /// ∫|det dφ| ≤ Area(Σ) − Area(A) ≤ ∫ ½|dφ|², up to rounding.
    pub fn sandwich_holds(&self) -> bool {
        let excess = self.graph_area - self.source_area;
        let tol = 1e-12 * self.graph_area.abs().max(1.0);
        self.jacobian_area <= excess + tol && excess <= self.dirichlet + tol
    }

    pub fn excluded_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].status != FaceStatus::Ok).collect()
    }

    /// CSV: `face,sigma1,sigma2,f_area,f_sym,flipped,status`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("face,sigma1,sigma2,f_area,f_sym,flipped,status\n");
        for (f, d) in self.faces.iter().enumerate() {
            let status = match d.status {
                FaceStatus::Ok => "ok",
                FaceStatus::MultiZero => "multi_zero",
                FaceStatus::Degenerate => "degenerate",
            };
            let (fa, fs) = match d.status {
                FaceStatus::Ok => (d.area_density(), d.symmetric_dirichlet()),
                _ => (f64::NAN, f64::NAN),
            };
            let _ = writeln!(s, "{f},{},{},{fa},{fs},{},{status}", d.sigma[0], d.sigma[1], u8::from(d.flipped));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Singular values σ₁ ≥ σ₂ of the affine map from a source triangle, given by the
/// lengths opposite its corners, onto a triangle in space.
pub fn triangle_singular_values(lengths: [f64; 3], image: [[f64; 3]; 3]) -> [f64; 2] {
    let p = layout_triangle(lengths[2], lengths[0], lengths[1]);
    // P = [p1−p0, p2−p0] with p0 at the origin and p1 on the x axis
    let (p1x, p2x, p2y) = (p[1][0], p[2][0], p[2][1]);
    let e1 = sub(image[1], image[0]);
    let e2 = sub(image[2], image[0]);
    // J = Q P⁻¹ with P⁻¹ = [[1/p1x, −p2x/(p1x p2y)], [0, 1/p2y]]
    let c1 = e1.map(|x| x / p1x);
    let c2: Vec<f64> = (0..3).map(|k| (e2[k] - p2x * c1[k]) / p2y).collect();
    let c2 = [c2[0], c2[1], c2[2]];
    let (a, b, c) = (dot(c1, c1), dot(c1, c2), dot(c2, c2));
    let mean = 0.5 * (a + c);
    let dev = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    [(mean + dev).max(0.0).sqrt(), (mean - dev).max(0.0).sqrt()]
}

/// Distortion of the map A → B through the images of A's vertices.
pub fn distortion_report(source: &TriangleMesh, target: &TriangleMesh, map: &CorrespondenceMap) -> Result<DistortionReport> {
    if map.images.len() != source.num_vertices() {
        return Err(Error::Dimension(format!(
            "map has {} images for {} source vertices",
            map.images.len(),
            source.num_vertices()
        )));
    }
    let pos = map.positions(target);
    let tp = target.positions();
    let mut faces = Vec::with_capacity(source.num_faces());
    for f in 0..source.num_faces() {
        let vs = source.face(f);
        let area = source.face_area(f);
        if vs.iter().any(|&v| map.images[v].multi_zero) {
            faces.push(FaceDistortion { status: FaceStatus::MultiZero, sigma: [0.0; 2], flipped: false, area });
            continue;
        }
        let image = vs.map(|v| pos[v]);
        let sigma = triangle_singular_values(source.face_lengths(f), image);
        let n_img = cross(sub(image[1], image[0]), sub(image[2], image[0]));
        let tf = target.face(map.images[vs[0]].face);
        let n_tgt = cross(sub(tp[tf[1]], tp[tf[0]]), sub(tp[tf[2]], tp[tf[0]]));
        let flipped = dot(n_img, n_tgt) < 0.0;
        let status = if sigma[1] <= 1e-12 * sigma[0].max(1e-300) { FaceStatus::Degenerate } else { FaceStatus::Ok };
        faces.push(FaceDistortion { status, sigma, flipped, area });
    }
    let mut report = DistortionReport {
        source_area: 0.0,
        graph_area: 0.0,
        symmetric_dirichlet: 0.0,
        jacobian_area: 0.0,
        dirichlet: 0.0,
        flipped_faces: faces.iter().filter(|d| d.flipped).count(),
        area_histogram: Histogram::new(
            faces.iter().filter(|d| d.status == FaceStatus::Ok).map(|d| d.area_density()),
            2.0,
            4.0,
            20,
        ),
        symmetric_histogram: Histogram::new(
            faces.iter().filter(|d| d.status == FaceStatus::Ok).map(|d| d.symmetric_dirichlet()),
            4.0,
            12.0,
            20,
        ),
        faces: Vec::new(),
    };
    for d in &faces {
        if d.status == FaceStatus::MultiZero {
            continue;
        }
        let [a, b] = d.sigma;
        report.source_area += d.area;
        report.graph_area += d.area * d.area_density();
        report.jacobian_area += d.area * a * b;
        report.dirichlet += d.area * 0.5 * (a * a + b * b);
        if d.status == FaceStatus::Ok {
            report.symmetric_dirichlet += d.area * d.symmetric_dirichlet();
        }
    }
    report.faces = faces;
    Ok(report)
}
