use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix on a Fock basis. Diagonal operators keep only their
/// diagonal, single-mode operators are dense and multi-mode ones are CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    storage: Storage,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Diagonal(Vec<Complex64>),
    Dense(DMatrix<Complex64>),
    Sparse(Csr),
}

#[derive(Debug, Clone, PartialEq)]
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl Csr {
    fn from_rows(dim: usize, rows: Vec<BTreeMap<usize, Complex64>>) -> Self {
        debug_assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != Complex64::new(0.0, 0.0) {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { row_ptr, cols, values }
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }
}

impl OperatorMatrix {
    pub fn from_diagonal(diagonal: Vec<Complex64>) -> Self {
        OperatorMatrix { dim: diagonal.len(), storage: Storage::Diagonal(diagonal) }
    }

    pub fn from_real_diagonal(diagonal: &[f64]) -> Self {
        Self::from_diagonal(diagonal.iter().map(|&d| Complex64::new(d, 0.0)).collect())
    }

    pub fn from_dense(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square(), "operator matrices are square");
        OperatorMatrix { dim: matrix.nrows(), storage: Storage::Dense(matrix) }
    }

    /// Sparse matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut rows = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            *rows[r].entry(c).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        OperatorMatrix { dim, storage: Storage::Sparse(Csr::from_rows(dim, rows)) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Stored entries, counting explicit zeros of dense storage.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Diagonal(d) => d.len(),
            Storage::Dense(m) => m.len(),
            Storage::Sparse(s) => s.values.len(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        match &self.storage {
            Storage::Diagonal(d) => if row == col { d[row] } else { zero },
            Storage::Dense(m) => m[(row, col)],
            Storage::Sparse(s) => s.row(row).find(|&(c, _)| c == col).map_or(zero, |(_, v)| v),
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Nonzero entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let zero = Complex64::new(0.0, 0.0);
        match &self.storage {
            Storage::Diagonal(d) => {
                d.iter().enumerate().filter(|(_, v)| **v != zero).map(|(i, &v)| (i, i, v)).collect()
            }
            Storage::Dense(m) => {
                let mut out = Vec::new();
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        if m[(r, c)] != zero {
                            out.push((r, c, m[(r, c)]));
                        }
                    }
                }
                out
            }
            Storage::Sparse(s) => {
                (0..self.dim).flat_map(|r| s.row(r).map(move |(c, v)| (r, c, v))).collect()
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            _ => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for (r, c, v) in self.triplets() {
                    m[(r, c)] = v;
                }
                m
            }
        }
    }

    /// y = A x
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        match &self.storage {
            Storage::Diagonal(d) => {
                for ((yi, di), xi) in y.iter_mut().zip(d).zip(x) {
                    *yi = di * xi;
                }
            }
            Storage::Dense(m) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, xc) in x.iter().enumerate() {
                        acc += m[(r, c)] * xc;
                    }
                    *yr = acc;
                }
            }
            Storage::Sparse(s) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, v) in s.row(r) {
                        acc += v * x[c];
                    }
                    *yr = acc;
                }
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        match &self.storage {
            Storage::Diagonal(d) => Self::from_diagonal(d.iter().map(|v| v.conj()).collect()),
            Storage::Dense(m) => Self::from_dense(m.adjoint()),
            Storage::Sparse(_) => {
                Self::from_triplets(self.dim, self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())))
            }
        }
    }

    pub fn scale(&self, factor: Complex64) -> OperatorMatrix {
        match &self.storage {
            Storage::Diagonal(d) => Self::from_diagonal(d.iter().map(|v| v * factor).collect()),
            Storage::Dense(m) => Self::from_dense(m * factor),
            Storage::Sparse(s) => OperatorMatrix {
                dim: self.dim,
                storage: Storage::Sparse(Csr {
                    row_ptr: s.row_ptr.clone(),
                    cols: s.cols.clone(),
                    values: s.values.iter().map(|v| v * factor).collect(),
                }),
            },
        }
    }

    /// a·A + b·B
    pub fn linear_combination(a: f64, lhs: &OperatorMatrix, b: f64, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        if lhs.dim != rhs.dim {
            return Err(Error::Dimension { expected: lhs.dim, got: rhs.dim });
        }
        let (a, b) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        Ok(match (&lhs.storage, &rhs.storage) {
            (Storage::Diagonal(x), Storage::Diagonal(y)) => {
                Self::from_diagonal(x.iter().zip(y).map(|(x, y)| a * x + b * y).collect())
            }
            (Storage::Dense(_), _) | (_, Storage::Dense(_)) => {
                Self::from_dense(lhs.to_dense() * a + rhs.to_dense() * b)
            }
            _ => Self::from_triplets(
                lhs.dim,
                lhs.triplets()
                    .into_iter()
                    .map(|(r, c, v)| (r, c, a * v))
                    .chain(rhs.triplets().into_iter().map(|(r, c, v)| (r, c, b * v))),
            ),
        })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        Self::linear_combination(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        Self::linear_combination(1.0, self, -1.0, other)
    }

    /// Matrix product self · other.
    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim != other.dim {
            return Err(Error::Dimension { expected: self.dim, got: other.dim });
        }
        Ok(match (&self.storage, &other.storage) {
            (Storage::Diagonal(x), Storage::Diagonal(y)) => {
                Self::from_diagonal(x.iter().zip(y).map(|(x, y)| x * y).collect())
            }
            (Storage::Dense(_), _) | (_, Storage::Dense(_)) => Self::from_dense(self.to_dense() * other.to_dense()),
            _ => {
                let rhs_rows: Vec<Vec<(usize, Complex64)>> = {
                    let mut rows = vec![Vec::new(); other.dim];
                    for (r, c, v) in other.triplets() {
                        rows[r].push((c, v));
                    }
                    rows
                };
                let mut rows = vec![BTreeMap::new(); self.dim];
                for (r, k, v) in self.triplets() {
                    for &(c, w) in &rhs_rows[k] {
                        *rows[r].entry(c).or_insert(Complex64::new(0.0, 0.0)) += v * w;
                    }
                }
                OperatorMatrix { dim: self.dim, storage: Storage::Sparse(Csr::from_rows(self.dim, rows)) }
            }
        })
    }

    /// [A, B] = AB − BA
    pub fn commutator(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.triplets().iter().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    /// max |A − A†|
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(d) => d.iter().map(|v| 2.0 * v.im.abs()).fold(0.0, f64::max),
            _ => self.sub(&self.adjoint()).map(|m| m.max_abs()).unwrap_or(f64::INFINITY),
        }
    }

    /// ⟨x|A|x⟩
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let ax = self.apply(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    /// Coordinate-list text: a `% dim <n> nnz <m>` header followed by one
    /// `row col re im` line per nonzero entry, zero-based.
    pub fn to_coordinate_text(&self) -> String {
        let triplets = self.triplets();
        let mut out = format!("% dim {} nnz {}\n", self.dim, triplets.len());
        for (r, c, v) in triplets {
            let _ = writeln!(out, "{r} {c} {:e} {:e}", v.re, v.im);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn storage_kinds_agree() {
        let t = [(0, 1, c(2.0)), (1, 0, c(2.0)), (2, 2, c(-1.0)), (1, 2, Complex64::new(0.0, 1.0))];
        let sparse = OperatorMatrix::from_triplets(3, t);
        let dense = OperatorMatrix::from_dense(sparse.to_dense());
        let x = vec![c(1.0), Complex64::new(0.5, -0.5), c(3.0)];
        assert_eq!(sparse.apply(&x), dense.apply(&x));
        let p1 = sparse.matmul(&sparse).unwrap().to_dense();
        let p2 = dense.matmul(&dense).unwrap().to_dense();
        assert!((p1 - p2).camax() < 1e-15);
        assert_eq!(sparse.get(1, 2), Complex64::new(0.0, 1.0));
        assert_eq!(sparse.get(2, 1), c(0.0));
        assert!(sparse.hermiticity_defect() > 0.9);
    }

    #[test]
    fn coordinate_text_lists_nonzeros() {
        let d = OperatorMatrix::from_real_diagonal(&[0.0, 1.0, 4.0]);
        let text = d.to_coordinate_text();
        assert!(text.starts_with("% dim 3 nnz 2\n"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().nth(1).unwrap(), "1 1 1e0 0e0");
    }

    #[test]
    fn mismatched_dimensions_are_errors() {
        let a = OperatorMatrix::identity(2);
        let b = OperatorMatrix::identity(3);
        assert!(a.add(&b).is_err());
        assert!(a.matmul(&b).is_err());
    }
}
