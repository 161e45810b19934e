use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::section::parse_header;
use crate::error::{Error, Result};
use crate::mesh::{HeatSolver, TriangleMesh};

/// A pair of corresponding vertex chains, one on each surface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvePair {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

/// Spatially varying well depth V on A×B; V ≡ 1 without constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct PinningPotential {
    rows: usize,
    cols: usize,
    values: Option<Vec<f64>>,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub landmarks: Vec<(usize, usize)>,
    pub curves: Vec<CurvePair>,
}

impl PinningPotential {
    /// The unconstrained potential V ≡ 1.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        PinningPotential {
            rows,
            cols,
            values: None,
            sigma_a: 1.0,
            sigma_b: 1.0,
            landmarks: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.values.is_none()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        match &self.values {
            None => 1.0,
            Some(v) => v[i * self.cols + j],
        }
    }

    /// Dense row-major values.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.values {
            None => vec![1.0; self.rows * self.cols],
            Some(v) => v.clone(),
        }
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if (self.rows, self.cols) != (rows, cols) {
            return Err(Error::Dimension(format!(
                "pinning potential is {}×{} but the section is {rows}×{cols}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Binary dump: header `IMSV1 rows cols\n` then little-endian f64 values, row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("IMSV1 {} {}\n", self.rows, self.cols).into_bytes();
        for x in self.to_dense() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// Reads a dump back as raw values (shape, row-major data).
    pub fn dense_from_bytes(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
        let (rows, cols, body) = parse_header(bytes, "IMSV1")?;
        if body.len() != rows * cols * 8 {
            return Err(Error::Format(format!(
                "IMSV1 {rows}×{cols} needs {} data bytes, found {}",
                rows * cols * 8,
                body.len()
            )));
        }
        let v = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok((rows, cols, v))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn check_vertices(list: &[usize], n: usize, what: &str) -> Result<()> {
    if let Some(&v) = list.iter().find(|&&v| v >= n) {
        return Err(Error::Input(format!("{what} vertex {v} out of range ({n} vertices)")));
    }
    Ok(())
}

/// Builds V(p_A, p_B) = min over constraints of 1 − exp(−d_A²/(2σ_A²) − d_B²/(2σ_B²)).
///
/// Point constraints use distances to the landmark vertices; curve constraints use
/// distances to the whole vertex chains.
pub fn build_pinning_potential(
    a: &TriangleMesh,
    b: &TriangleMesh,
    landmarks: &[(usize, usize)],
    curves: &[CurvePair],
    sigma_a: f64,
    sigma_b: f64,
) -> Result<PinningPotential> {
    let (na, nb) = (a.num_vertices(), b.num_vertices());
    let mut pot = PinningPotential::uniform(na, nb);
    if landmarks.is_empty() && curves.is_empty() {
        return Ok(pot);
    }
    if !(sigma_a > 0.0 && sigma_b > 0.0 && sigma_a.is_finite() && sigma_b.is_finite()) {
        return Err(Error::Input(format!("kernel widths must be positive (got {sigma_a}, {sigma_b})")));
    }
    for &(i, j) in landmarks {
        check_vertices(&[i], na, "landmark A")?;
        check_vertices(&[j], nb, "landmark B")?;
    }
    for c in curves {
        if c.a.is_empty() || c.b.is_empty() {
            return Err(Error::Input("curve constraint with an empty chain".into()));
        }
        check_vertices(&c.a, na, "curve A")?;
        check_vertices(&c.b, nb, "curve B")?;
    }
    let heat_a = HeatSolver::new(a)?;
    let heat_b = HeatSolver::new(b)?;
    let sources: Vec<(Vec<usize>, Vec<usize>)> = landmarks
        .iter()
        .map(|&(i, j)| (vec![i], vec![j]))
        .chain(curves.iter().map(|c| (c.a.clone(), c.b.clone())))
        .collect();
    let mut kernels = Vec::with_capacity(sources.len());
    for (sa, sb) in &sources {
        let da = heat_a.distance(sa)?;
        let db = heat_b.distance(sb)?;
        let ka: Vec<f64> = da.iter().map(|d| (-d * d / (2.0 * sigma_a * sigma_a)).exp()).collect();
        let kb: Vec<f64> = db.iter().map(|d| (-d * d / (2.0 * sigma_b * sigma_b)).exp()).collect();
        kernels.push((ka, kb));
    }
    let mut values = vec![1.0; na * nb];
    values.par_chunks_mut(nb).enumerate().for_each(|(i, row)| {
        for (ka, kb) in &kernels {
            let x = ka[i];
            for (w, v) in row.iter_mut().enumerate() {
                *v = f64::min(*v, 1.0 - x * kb[w]);
            }
        }
    });
    pot.values = Some(values);
    pot.sigma_a = sigma_a;
    pot.sigma_b = sigma_b;
    pot.landmarks = landmarks.to_vec();
    pot.curves = curves.to_vec();
    Ok(pot)
}
