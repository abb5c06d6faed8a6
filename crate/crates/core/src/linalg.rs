//! Dense complex matrices for systems of one to three qubits.
//!
//! Everything here is sized for dimensions 2, 4 and 8 (plus column vectors of
//! those lengths). Tensor factors are ordered left to right, so for systems
//! `1 ⊗ 2 ⊗ 3` the first factor carries the most significant index bit.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported row or column count.
pub const MAX_DIM: usize = 8;
/// Default elementwise tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default tolerance for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Row-major dense complex matrix with at most 8 rows and 8 columns.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::UnsupportedDimension(rows.max(cols)));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0 && rows <= MAX_DIM && cols <= MAX_DIM);
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), ncols, rows.concat())
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows.iter().flatten().map(|&x| c(x, 0.0)).collect();
        Self::new(N, N, data).expect("static dimensions")
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let e: Vec<_> = entries.iter().map(|&x| c(x, 0.0)).collect();
        Self::diag(&e)
    }

    /// Column vector (n×1).
    pub fn column(entries: &[Complex64]) -> Result<Self> {
        Self::new(entries.len(), 1, entries.to_vec())
    }

    /// Standard basis column vector `|index⟩` of length `dim`.
    pub fn basis_vector(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim, 1);
        v[(index, 0)] = ONE;
        v
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col_vector(&self, col: usize) -> ComplexMatrix {
        let entries: Vec<_> = (0..self.rows).map(|r| self[(r, col)]).collect();
        ComplexMatrix::column(&entries).expect("column of a valid matrix")
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                out[(col, r)] = self[(r, col)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                out[(col, r)] = self[(r, col)];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Matrix product with a dimension check.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for col in 0..rhs.cols {
                    out[(r, col)] += a * rhs[(k, col)];
                }
            }
        }
        Ok(out)
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Complex64 {
        assert_eq!(self.cols, rhs.rows);
        assert_eq!(self.rows, rhs.cols);
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(r, k)] * rhs[(k, r)];
            }
        }
        acc
    }

    /// Hilbert-Schmidt inner product `⟨self|rhs⟩ = tr(self† rhs)`.
    pub fn inner(&self, rhs: &Self) -> Complex64 {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |M − M†|` over entries; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for col in r..self.cols {
                dev = dev.max((self[(r, col)] - self[(col, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                out[(r, col)] = m[(r, col)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, col): (usize, usize)) -> &Complex64 {
        assert!(r < self.rows && col < self.cols, "index out of bounds");
        &self.data[r * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut Complex64 {
        assert!(r < self.rows && col < self.cols, "index out of bounds");
        &mut self.data[r * self.cols + col]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product dimensions")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for x in self.row(r) {
                write!(f, "{:+.6}{:+.6}i  ", x.re, x.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).expect("2x2")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]])
}

/// `[σˣ, σʸ, σᶻ]`.
pub fn paulis() -> [ComplexMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::UnsupportedDimension(rows.max(cols)));
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    Ok(out)
}

/// Traces out the factors listed in `traced` of a square operator on
/// `dims[0] ⊗ dims[1] ⊗ …`. Tracing every factor yields a 1×1 matrix.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], traced: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(
            "partial trace of non-square matrix".into(),
        ));
    }
    if dims.is_empty() || dims.contains(&0) || dims.iter().product::<usize>() != m.rows {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not multiply to {}",
            m.rows
        )));
    }
    if traced.is_empty() {
        return Err(Error::InvalidArgument("no subsystem to trace".into()));
    }
    let mut is_traced = vec![false; dims.len()];
    for &t in traced {
        if t >= dims.len() || is_traced[t] {
            return Err(Error::InvalidArgument(format!("bad traced index {t}")));
        }
        is_traced[t] = true;
    }

    let kept: Vec<usize> = (0..dims.len()).filter(|&k| !is_traced[k]).collect();
    let out_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);

    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = idx % dims[k];
            idx /= dims[k];
        }
        d
    };
    let kept_index = |d: &[usize]| kept.iter().fold(0, |acc, &k| acc * dims[k] + d[k]);

    for r in 0..m.rows {
        let dr = digits(r);
        for col in 0..m.cols {
            let dc = digits(col);
            if (0..dims.len()).any(|k| is_traced[k] && dr[k] != dc[k]) {
                continue;
            }
            out[(kept_index(&dr), kept_index(&dc))] += m[(r, col)];
        }
    }
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexMatrix {
        self.vectors.col_vector(k)
    }

    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        &(&self.vectors * &ComplexMatrix::diag_real(&d)) * &self.vectors.adjoint()
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with_tol(m, HERMITIAN_TOL)
}

pub fn hermitian_eig_with_tol(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigen> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    let dev = m.hermitian_deviation();
    if dev.is_nan() || dev > tol {
        return Err(Error::NotHermitian(dev));
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let mut vectors = ComplexMatrix::zeros(m.rows, m.rows);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..m.rows {
            vectors[(r, dst)] = vecs[(r, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// True iff the smallest eigenvalue is at least `-tol`. Non-Hermitian input
/// (beyond `tol`) is never positive semidefinite.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    min_eigenvalue(m, tol).is_some_and(|l| l >= -tol)
}

pub fn min_eigenvalue(m: &ComplexMatrix, tol: f64) -> Option<f64> {
    hermitian_eig_with_tol(m, tol)
        .ok()
        .and_then(|e| e.values.last().copied())
}

/// Principal square root of a positive semidefinite matrix; eigenvalues in
/// `[-tol, 0)` are clamped to zero.
pub fn psd_sqrt(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig_with_tol(m, tol)?;
    if let Some(&min) = eig.values.last() {
        if min < -tol {
            return Err(Error::InvalidArgument(format!(
                "square root of a matrix with eigenvalue {min:e}"
            )));
        }
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}
