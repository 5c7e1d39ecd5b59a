//! Small dense complex square matrices used for gate unitaries, Kraus
//! operators and the reference simulators.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major `dim × dim` complex matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `data.len()` is not a perfect square.
    pub fn from_row_major(data: Vec<Complex64>) -> Self {
        let dim = (data.len() as f64).sqrt().round() as usize;
        assert_eq!(dim * dim, data.len(), "matrix data must be square");
        Matrix { dim, data }
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Matrix { dim: N, data }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Matrix {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (&self.dagger() * self).max_abs_diff(&Matrix::identity(self.dim)) <= tol
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == ZERO)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self.get(r, c) == ZERO))
    }

    /// Where the nonzero entries of `col` sit.
    pub fn column_support(&self, col: usize) -> ColumnSupport {
        let mut found = None;
        for r in 0..self.dim {
            if self.get(r, col) != ZERO {
                if found.is_some() {
                    return ColumnSupport::Dense;
                }
                found = Some(r);
            }
        }
        match found {
            Some(r) => ColumnSupport::Single(r),
            None => ColumnSupport::Empty,
        }
    }

    /// At most one nonzero entry per column.
    pub fn is_column_monomial(&self) -> bool {
        (0..self.dim).all(|c| !matches!(self.column_support(c), ColumnSupport::Dense))
    }

    /// Generalized permutation matrix: exactly one nonzero per row and column.
    pub fn is_monomial(&self) -> bool {
        let mut rows_hit = vec![false; self.dim];
        for c in 0..self.dim {
            match self.column_support(c) {
                ColumnSupport::Single(r) if !rows_hit[r] => rows_hit[r] = true,
                _ => return false,
            }
        }
        true
    }
}

/// Shape of one matrix column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnSupport {
    Empty,
    Single(usize),
    Dense,
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.get(k, c);
                }
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self.get(r, c);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
