//! Compressed sparse row matrices and sparse Cholesky factorizations.

use std::ops::{Add, AddAssign, Mul, Sub};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Field scalars supported by the sparse kernels.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + 'static
{
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for C64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn from_real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Assembles a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![T::default(); triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, T)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_by_key(|&(j, _)| j);
            for &(j, v) in &row {
                if indices.len() > indptr[i] && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// Entry lookup by binary search; zero if structurally absent.
    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => T::default(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::default();
            for p in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[p] * x[self.indices[p]];
            }
            *yi = acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &trip)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Largest |A_ij - conj(A_ji)|.
    pub fn hermitian_defect(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).abs())
            .fold(0.0, f64::max)
    }

    /// Whether both matrices store entries at exactly the same positions.
    pub fn same_pattern(&self, other: &CsrMatrix<T>) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.indptr == other.indptr
            && self.indices == other.indices
    }

    /// Copy of the matrix with rows and columns in `keep` only (in that order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.nrows];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let trip: Vec<_> = self
            .triplets()
            .filter(|&(i, j, _)| map[i] != usize::MAX && map[j] != usize::MAX)
            .map(|(i, j, v)| (map[i], map[j], v))
            .collect();
        Self::from_triplets(keep.len(), keep.len(), &trip)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<T>
    where
        T: nalgebra::Scalar,
    {
        let mut m = nalgebra::DMatrix::from_element(self.nrows, self.ncols, T::default());
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

impl CsrMatrix<f64> {
    pub fn to_complex(&self) -> CsrMatrix<C64> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }
}

/// Sparse Cholesky factorization of a Hermitian positive definite matrix.
pub struct Cholesky<T: faer::traits::ComplexField> {
    llt: Llt<usize, T>,
    n: usize,
}

macro_rules! impl_cholesky {
    ($t:ty) => {
        impl Cholesky<$t> {
            pub fn factor(a: &CsrMatrix<$t>) -> Result<Self> {
                if a.nrows() != a.ncols() {
                    return Err(Error::Dimension(format!(
                        "cannot factor a {}x{} matrix",
                        a.nrows(),
                        a.ncols()
                    )));
                }
                let trip: Vec<_> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
                let csc = SparseColMat::<usize, $t>::try_new_from_triplets(a.nrows(), a.ncols(), &trip)
                    .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
                let llt = csc.sp_cholesky(Side::Lower).map_err(|e| {
                    let diag = a.diagonal();
                    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                        (lo.min(d.abs()), hi.max(d.abs()))
                    });
                    Error::Numerical(format!(
                        "Cholesky factorization failed ({e:?}); n = {}, diagonal range [{lo:.3e}, {hi:.3e}]",
                        a.nrows()
                    ))
                })?;
                Ok(Cholesky { llt, n: a.nrows() })
            }

            pub fn solve_in_place(&self, b: &mut [$t]) {
                assert_eq!(b.len(), self.n);
                let mut m = Mat::<$t>::from_fn(self.n, 1, |i, _| b[i]);
                self.llt.solve_in_place(m.as_mut());
                for (i, bi) in b.iter_mut().enumerate() {
                    *bi = m[(i, 0)];
                }
            }

            /// Solves for several right-hand sides stored as columns.
            pub fn solve_columns(&self, cols: &mut [Vec<$t>]) {
                if cols.is_empty() {
                    return;
                }
                let mut m = Mat::<$t>::from_fn(self.n, cols.len(), |i, j| cols[j][i]);
                self.llt.solve_in_place(m.as_mut());
                for (j, col) in cols.iter_mut().enumerate() {
                    for (i, x) in col.iter_mut().enumerate() {
                        *x = m[(i, j)];
                    }
                }
            }

            pub fn dim(&self) -> usize {
                self.n
            }
        }
    };
}

impl_cholesky!(f64);
impl_cholesky!(C64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 1, 3.0), (0, 0, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 2.0]);
    }

    #[test]
    fn complex_hermitian_solve() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[
                (0, 0, C64::new(4.0, 0.0)),
                (0, 1, C64::new(1.0, 1.0)),
                (1, 0, C64::new(1.0, -1.0)),
                (1, 1, C64::new(3.0, 0.0)),
            ],
        );
        let chol = Cholesky::<C64>::factor(&a).unwrap();
        let x = vec![C64::new(0.5, -2.0), C64::new(1.0, 0.25)];
        let mut b = a.mul_vec(&x);
        chol.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(Cholesky::<f64>::factor(&a), Err(Error::Numerical(_))));
    }
}
