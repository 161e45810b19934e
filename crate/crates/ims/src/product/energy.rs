//! Ginzburg-Landau energy on the product of two meshes, evaluated with
//! factor-wise sparse products on the dense section matrix.

use rayon::prelude::*;

use super::{PinningPotential, Section};
use crate::bundle::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, C64};

/// Energy split and real gradient of one evaluation.
#[derive(Clone, Debug)]
pub struct GlEvaluation {
    pub energy: f64,
    pub dirichlet: f64,
    pub well: f64,
    pub gradient: Section,
}

fn check(a: &OperatorSet, b: &OperatorSet, z: &Section) -> Result<()> {
    z.check_shape(a.lumped_mass.len(), b.lumped_mass.len())
}

/// Applies a pair of same-pattern matrices to every row: (Z Pᵀ, Z Qᵀ).
fn rows_times(p: &CsrMatrix<C64>, q: &CsrMatrix<C64>, z: &Section) -> (Vec<C64>, Vec<C64>) {
    let n = z.cols();
    let mut y1 = vec![C64::new(0.0, 0.0); z.data().len()];
    let mut y2 = vec![C64::new(0.0, 0.0); z.data().len()];
    let (ip, idx, pv, qv) = (p.indptr(), p.indices(), p.values(), q.values());
    y1.par_chunks_mut(n)
        .zip(y2.par_chunks_mut(n))
        .enumerate()
        .for_each(|(v, (r1, r2))| {
            let row = z.row(v);
            for w in 0..n {
                let (mut s1, mut s2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for k in ip[w]..ip[w + 1] {
                    let x = row[idx[k]];
                    s1 += pv[k] * x;
                    s2 += qv[k] * x;
                }
                r1[w] = s1;
                r2[w] = s2;
            }
        });
    (y1, y2)
}

/// P Y1 + Q Y2 for same-pattern P, Q acting on the row index.
fn columns_times(p: &CsrMatrix<C64>, y1: &[C64], q: &CsrMatrix<C64>, y2: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); y1.len()];
    let (ip, idx, pv, qv) = (p.indptr(), p.indices(), p.values(), q.values());
    out.par_chunks_mut(n).enumerate().for_each(|(v, row)| {
        for k in ip[v]..ip[v + 1] {
            let u = idx[k];
            let (a, b) = (pv[k], qv[k]);
            let (r1, r2) = (&y1[u * n..(u + 1) * n], &y2[u * n..(u + 1) * n]);
            for w in 0..n {
                row[w] += a * r1[w] + b * r2[w];
            }
        }
    });
    out
}

/// (L_A ⊗ M_B + M_A ⊗ L_B) z, i.e. L_A Z M_Bᵀ + M_A Z L_Bᵀ.
pub fn dirichlet_apply(a: &OperatorSet, b: &OperatorSet, z: &Section) -> Result<Section> {
    check(a, b, z)?;
    if !a.laplacian.same_pattern(&a.mass) || !b.laplacian.same_pattern(&b.mass) {
        return Err(Error::Structural("Laplacian and mass matrix patterns differ".into()));
    }
    let (y1, y2) = rows_times(&b.mass, &b.laplacian, z);
    let g = columns_times(&a.laplacian, &y1, &a.mass, &y2, z.cols());
    Section::from_vec(z.rows(), z.cols(), g)
}

/// ½⟨Z, L_A Z M_Bᵀ⟩ + ½⟨Z, M_A Z L_Bᵀ⟩.
pub fn dirichlet_energy(a: &OperatorSet, b: &OperatorSet, z: &Section) -> Result<f64> {
    let g = dirichlet_apply(a, b, z)?;
    Ok(0.5 * z.inner(&g))
}

/// Dirichlet energy plus the vertex-lumped well (λ/4) Σ U² m_A m_B with U = |Z|² − V, and its gradient
/// with respect to the real inner product Re Σ conj(a) b.
pub fn gl_energy_and_gradient(
    a: &OperatorSet,
    b: &OperatorSet,
    z: &Section,
    lambda: f64,
    potential: &PinningPotential,
) -> Result<GlEvaluation> {
    check(a, b, z)?;
    potential.check_shape(z.rows(), z.cols())?;
    let mut g = dirichlet_apply(a, b, z)?;
    let dirichlet = 0.5 * z.inner(&g);
    let n = z.cols();
    let (ma, mb) = (&a.lumped_mass, &b.lumped_mass);
    let well: f64 = g
        .data_mut()
        .par_chunks_mut(n)
        .enumerate()
        .map(|(v, row)| {
            let zr = z.row(v);
            let mut acc = 0.0;
            for w in 0..n {
                let u = zr[w].norm_sqr() - potential.value(v, w);
                let m = ma[v] * mb[w];
                acc += u * u * m;
                row[w] += zr[w] * (lambda * u * m);
            }
            acc
        })
        .sum::<f64>()
        * 0.25
        * lambda;
    let energy = dirichlet + well;
    if !energy.is_finite() || !g.is_finite() {
        return Err(Error::Numerical("Ginzburg-Landau evaluation produced non-finite values".into()));
    }
    Ok(GlEvaluation {
        energy,
        dirichlet,
        well,
        gradient: g,
    })
}

/// Lumped product mass: Z ↦ M_A Z M_Bᵀ with diagonal masses.
pub fn mass_apply(mass_a: &[f64], mass_b: &[f64], z: &Section) -> Result<Section> {
    z.check_shape(mass_a.len(), mass_b.len())?;
    let n = z.cols();
    let mut out = z.clone();
    out.data_mut().par_chunks_mut(n).enumerate().for_each(|(v, row)| {
        for (w, x) in row.iter_mut().enumerate() {
            *x *= mass_a[v] * mass_b[w];
        }
    });
    Ok(out)
}
