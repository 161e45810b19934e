use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// A section of the product bundle: one complex value per vertex pair, row-major |V_A| × |V_B|.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Section {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Section {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}×{cols} section",
                data.len()
            )));
        }
        Ok(Section { rows, cols, data })
    }

    /// Entries drawn uniformly from the closed unit disk.
    pub fn random_unit_disk<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| {
                let r = rng.random::<f64>().sqrt();
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                C64::from_polar(r, t)
            })
            .collect();
        Section { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Section {
        let mut t = Section::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Real inner product Re Σ conj(a) b.
    pub fn inner(&self, other: &Section) -> f64 {
        real_inner(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, c: f64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::Dimension(format!(
                "section is {}×{} but the meshes have {rows}×{cols} vertices",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Binary form: text header `IMSZ1 rows cols\n`, then little-endian f64 (re, im) pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("IMSZ1 {} {}\n", self.rows, self.cols).into_bytes();
        out.reserve(16 * self.data.len());
        for z in &self.data {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, cols, body) = parse_header(bytes, "IMSZ1")?;
        let expect = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(16))
            .ok_or_else(|| Error::Format("IMSZ1 shape overflows".into()))?;
        if body.len() != expect {
            return Err(Error::Format(format!(
                "IMSZ1 {rows}×{cols} needs {expect} data bytes, found {}",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Section { rows, cols, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub(crate) fn real_inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub(crate) fn parse_header<'a>(bytes: &'a [u8], magic: &str) -> Result<(usize, usize, &'a [u8])> {
    let nl = bytes
        .iter()
        .take(256)
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format(format!("missing {magic} header line")))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Format(format!("bad {magic} header")))?;
    let t: Vec<&str> = header.split_whitespace().collect();
    if t.len() != 3 || t[0] != magic {
        return Err(Error::Format(format!("expected header `{magic} rows cols`, found `{header}`")));
    }
    let rows = t[1].parse().map_err(|_| Error::Format(format!("bad row count `{}`", t[1])))?;
    let cols = t[2].parse().map_err(|_| Error::Format(format!("bad column count `{}`", t[2])))?;
    Ok((rows, cols, &bytes[nl + 1..]))
}
