//! Smallest generalized eigenpairs of Hermitian pencils.

use faer::Mat;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, CsrMatrix, C64};

type Block = Vec<Vec<C64>>;

fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn gram(u: &Block, v: &Block) -> DMatrix<C64> {
    DMatrix::from_fn(u.len(), v.len(), |i, j| dotc(&u[i], &v[j]))
}

fn combine(basis: &[&Vec<C64>], coeffs: &DMatrix<C64>, col: usize, n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, b) in basis.iter().enumerate() {
        let c = coeffs[(i, col)];
        if c != C64::new(0.0, 0.0) {
            axpy(&mut out, c, b);
        }
    }
    out
}

/// Rayleigh-Ritz on the pencil (H, G) with G positive semidefinite.
///
/// Directions with tiny G-eigenvalues are dropped; returns ascending Ritz values and
/// G-orthonormal coefficient columns.
pub(crate) fn rayleigh_ritz(h: &DMatrix<C64>, g: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = g.nrows();
    let gs = (g + g.adjoint()) * C64::new(0.5, 0.0);
    let eg = nalgebra::SymmetricEigen::new(gs);
    let top = eg.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) || !top.is_finite() {
        return Err(Error::Numerical("Rayleigh-Ritz basis has no positive directions".into()));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eg.eigenvalues[i] > 1e-13 * top).collect();
    let mut t = DMatrix::<C64>::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / eg.eigenvalues[i].sqrt();
        for r in 0..n {
            t[(r, c)] = eg.eigenvectors[(r, i)] * s;
        }
    }
    let reduced = t.adjoint() * h * &t;
    let reduced = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
    let er = nalgebra::SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&a, &b| er.eigenvalues[a].total_cmp(&er.eigenvalues[b]));
    let values = order.iter().map(|&i| er.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<C64>::zeros(keep.len(), keep.len());
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &er.eigenvectors.column(i));
    }
    Ok((values, t * vecs))
}

fn random_block(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Block {
    (0..k)
        .map(|_| (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect()
}

/// Smallest eigenpair of (L, M) for one factor, by block inverse subspace iteration.
pub fn min_generalized_eigen(ops: &OperatorSet, tol: f64, max_iter: usize) -> Result<(f64, Vec<C64>)> {
    let n = ops.lumped_mass.len();
    let l = &ops.laplacian;
    let m = &ops.mass;
    let factor = match Cholesky::<C64>::factor(l) {
        Ok(f) => f,
        Err(_) => {
            // singular pencil (flat bundle): shift by a small multiple of the mass matrix
            let scale = l.diagonal().iter().map(|x| x.re).sum::<f64>() / m.diagonal().iter().map(|x| x.re).sum::<f64>();
            let trip: Vec<_> = l
                .triplets()
                .chain(m.triplets().map(|(i, j, v)| (i, j, v * (1e-8 * scale))))
                .collect();
            Cholesky::<C64>::factor(&CsrMatrix::from_triplets(n, n, &trip))?
        }
    };
    let k = 6.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = random_block(n, k, &mut rng);
    let mut best = (f64::INFINITY, vec![], f64::INFINITY);
    for _ in 0..max_iter {
        for col in x.iter_mut() {
            let mut y = m.mul_vec(col);
            factor.solve_in_place(&mut y);
            *col = y;
        }
        let lx: Block = x.iter().map(|c| l.mul_vec(c)).collect();
        let mx: Block = x.iter().map(|c| m.mul_vec(c)).collect();
        let (vals, coeffs) = rayleigh_ritz(&gram(&x, &lx), &gram(&x, &mx))?;
        let basis: Vec<&Vec<C64>> = x.iter().collect();
        let kk = vals.len();
        let nx: Block = (0..kk).map(|c| combine(&basis, &coeffs, c, n)).collect();
        let lb: Vec<&Vec<C64>> = lx.iter().collect();
        let mb: Vec<&Vec<C64>> = mx.iter().collect();
        let l0 = combine(&lb, &coeffs, 0, n);
        let m0 = combine(&mb, &coeffs, 0, n);
        let res: Vec<C64> = l0.iter().zip(&m0).map(|(a, b)| a - b * vals[0]).collect();
        let rel = norm(&res) / (vals[0].abs() * norm(&m0)).max(1e-300);
        if rel < best.2 {
            best = (vals[0], nx[0].clone(), rel);
        }
        if rel < tol {
            return Ok((vals[0], nx[0].clone()));
        }
        x = nx;
        if x.len() < k {
            x.extend(random_block(n, k - x.len(), &mut rng));
        }
    }
    Err(Error::Numerical(format!(
        "base eigenvalue did not converge in {max_iter} iterations (best λ {}, relative residual {:.3e})",
        best.0, best.2
    )))
}

/// λ₀ = smallest eigenvalue of (L_A, M_A) plus that of (L_B, M_B).
pub fn base_eigenvalue(a: &OperatorSet, b: &OperatorSet) -> Result<f64> {
    let (la, _) = min_generalized_eigen(a, 1e-12, 500)?;
    let (lb, _) = min_generalized_eigen(b, 1e-12, 500)?;
    Ok(la + lb)
}

/// Outcome of a block eigensolve.
#[derive(Clone, Debug)]
pub struct EigenReport {
    pub eigenvalue: f64,
    pub vector: Vec<C64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    /// Smallest Ritz value after each iteration.
    pub ritz_history: Vec<f64>,
}

/// Block LOBPCG for the smallest eigenpair of A x = λ B x with B a positive diagonal.
///
/// The residual block is scaled by B⁻¹ (no other preconditioning). Returns the best
/// iterate even without convergence.
pub fn lobpcg(
    apply_a: impl Fn(&[C64]) -> Result<Vec<C64>>,
    diag_b: &[f64],
    block: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<EigenReport> {
    let n = diag_b.len();
    let k = block.clamp(1, n.max(1));
    let apply_block = |x: &Mat<C64>| -> Result<Mat<C64>> {
        let mut out = Mat::zeros(n, x.ncols());
        for j in 0..x.ncols() {
            column_mut(&mut out, j).copy_from_slice(&apply_a(column(x, j))?);
        }
        Ok(out)
    };
    let scale_b = |x: &Mat<C64>| columnwise(x, |_, i, v| v * diag_b[i]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_block(n, k, &mut rng);
    let x0 = Mat::from_fn(n, k, |i, j| start[j][i]);
    let ax0 = apply_block(&x0)?;
    let (vals, coeffs) = rayleigh_ritz(&hermitian_gram(&x0, &ax0), &hermitian_gram(&x0, &scale_b(&x0)))?;
    let c = to_faer(&coeffs, vals.len());
    let mut x = &x0 * &c;
    let mut ax = &ax0 * &c;
    let mut lambda = vals;
    let mut p: Option<(Mat<C64>, Mat<C64>)> = None;
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, column(&x, 0).to_vec(), f64::INFINITY);
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let bx = scale_b(&x);
        let mut r = ax.clone();
        for j in 0..r.ncols() {
            for (v, b) in column_mut(&mut r, j).iter_mut().zip(column(&bx, j)) {
                *v -= b * lambda[j];
            }
        }
        let rel = norm(column(&r, 0)) / (lambda[0].abs() * norm(column(&bx, 0))).max(1e-300);
        if rel < best.2 {
            best = (lambda[0], column(&x, 0).to_vec(), rel);
        }
        if rel < tol {
            break;
        }
        let w = columnwise(&r, |_, i, v| v / diag_b[i]);
        let aw = apply_block(&w)?;
        let (mut s, mut as_) = match &p {
            Some((p, ap)) => (hcat(&[&x, &w, p]), hcat(&[&ax, &aw, ap])),
            None => (hcat(&[&x, &w]), hcat(&[&ax, &aw])),
        };
        // normalize columns for conditioning
        for j in 0..s.ncols() {
            let nb = norm(column(&s, j));
            if nb > 0.0 {
                let inv = 1.0 / nb;
                column_mut(&mut s, j).iter_mut().for_each(|v| *v *= inv);
                column_mut(&mut as_, j).iter_mut().for_each(|v| *v *= inv);
            }
        }
        let (vals, coeffs) = match rayleigh_ritz(&hermitian_gram(&s, &as_), &hermitian_gram(&s, &scale_b(&s))) {
            Ok(v) => v,
            Err(_) => {
                p = None;
                continue;
            }
        };
        let kk = k.min(vals.len());
        let c = to_faer(&coeffs, kk);
        // new search directions: the parts of the Ritz vectors outside the current X
        let mut cp = c.clone();
        for r in 0..x.ncols() {
            for j in 0..kk {
                cp[(r, j)] = C64::new(0.0, 0.0);
            }
        }
        p = Some((&s * &cp, &as_ * &cp));
        x = &s * &c;
        ax = &as_ * &c;
        lambda = vals[..kk].to_vec();
        history.push(lambda[0]);
    }
    let converged = best.2 < tol;
    Ok(EigenReport {
        eigenvalue: best.0,
        vector: best.1,
        iterations,
        relative_residual: best.2,
        converged,
        ritz_history: history,
    })
}

fn column(m: &Mat<C64>, j: usize) -> &[C64] {
    m.col(j).try_as_col_major().expect("owned matrices have contiguous columns").as_slice()
}

fn column_mut(m: &mut Mat<C64>, j: usize) -> &mut [C64] {
    m.col_mut(j).try_as_col_major_mut().expect("owned matrices have contiguous columns").as_slice_mut()
}

/// Applies `f(column, row, value)` entrywise.
fn columnwise(m: &Mat<C64>, f: impl Fn(usize, usize, C64) -> C64) -> Mat<C64> {
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for (i, (o, &v)) in column_mut(&mut out, j).iter_mut().zip(column(m, j)).enumerate() {
            *o = f(j, i, v);
        }
    }
    out
}

fn hcat(parts: &[&Mat<C64>]) -> Mat<C64> {
    let n = parts[0].nrows();
    let mut out = Mat::zeros(n, parts.iter().map(|m| m.ncols()).sum());
    let mut c = 0;
    for m in parts {
        out.as_mut().subcols_mut(c, m.ncols()).copy_from(m.as_ref());
        c += m.ncols();
    }
    out
}

/// uᴴv, symmetrized; v = A u with A Hermitian.
fn hermitian_gram(u: &Mat<C64>, v: &Mat<C64>) -> DMatrix<C64> {
    let g = u.adjoint() * v;
    DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| 0.5 * (g[(i, j)] + g[(j, i)].conj()))
}

fn to_faer(m: &DMatrix<C64>, cols: usize) -> Mat<C64> {
    Mat::from_fn(m.nrows(), cols, |i, j| m[(i, j)])
}

