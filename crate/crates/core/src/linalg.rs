//! Small dense complex matrices. Factorizations (LU, complex Schur) are
//! delegated to `nalgebra` in double precision; the row-major [`CMatrix`]
//! wrapper keeps the rest of the crate generic over the scalar.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Fallible element constructor; the first error aborts the build.
    pub fn try_from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Result<C<T>>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j)?);
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C<T>, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `self * other - other * self`
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn mat_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(C::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Row vector times matrix: `x^T * self`.
    pub fn vec_mat(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![C::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == C::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    fn to_na(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| widen(self[(i, j)]))
    }

    /// Determinant via LU with partial pivoting. The empty matrix has determinant one.
    pub fn det(&self) -> C<T> {
        assert!(self.is_square(), "determinant of a non-square matrix");
        if self.rows == 0 {
            return C::one();
        }
        narrow(self.to_na().lu().determinant())
    }

    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        let lu = Lu::new(self.clone()).ok_or_else(|| Error::Dimension("singular matrix in solve".into()))?;
        Ok(lu.solve(b))
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .to_na()
            .try_inverse()
            .ok_or_else(|| Error::Dimension("singular matrix in inverse".into()))?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| narrow(inv[(i, j)])))
    }

    /// All eigenvalues (with multiplicity), unordered. NaN entries signal
    /// that the Schur iteration did not converge.
    pub fn eigenvalues(&self) -> Vec<C<T>> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return Vec::new();
        }
        let scale = self.max_abs().to_f64_lossy().max(f64::MIN_POSITIVE);
        let schur = nalgebra::Schur::try_new(self.to_na(), f64::EPSILON * scale, 1000 * n);
        match schur {
            Some(s) => {
                let (_, t) = s.unpack();
                (0..n).map(|i| narrow(t[(i, i)])).collect()
            }
            None => vec![C::new(T::nan(), T::nan()); n],
        }
    }

    /// Right eigenvector for an (approximate) eigenvalue by inverse iteration,
    /// normalised to unit Euclidean norm.
    pub fn eigenvector(&self, lambda: C<T>) -> Vec<C<T>> {
        let n = self.rows;
        let scale = self.max_abs().max(T::one());
        let mut shifted = self.clone();
        // tiny offset keeps the LU factorisation finite at an exact eigenvalue
        let delta = scale * T::epsilon() * T::lit(16.0);
        for i in 0..n {
            shifted[(i, i)] -= lambda + C::new(delta, delta);
        }
        let lu = match Lu::new(shifted) {
            Some(lu) => lu,
            None => {
                let mut e = vec![C::zero(); n];
                e[0] = C::one();
                return e;
            }
        };
        let mut x: Vec<C<T>> = (0..n)
            .map(|i| C::new(T::one(), T::from_usize(i).unwrap() * T::lit(0.137)))
            .collect();
        for _ in 0..4 {
            x = lu.solve(&x);
            normalize(&mut x);
        }
        x
    }
}

pub fn norm2<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn normalize<T: Real>(x: &mut [C<T>]) {
    let n = norm2(x);
    if n > T::zero() && n.is_finite() {
        x.iter_mut().for_each(|z| *z /= n);
    }
}

/// Plain bilinear product `x^T y` (no conjugation).
pub fn dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    x.iter().zip(y).fold(C::zero(), |acc, (&a, &b)| acc + a * b)
}

/// Hermitian product `x^H y`.
pub fn cdot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    x.iter().zip(y).fold(C::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == C::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

/// LU factorisation with partial pivoting.
pub struct Lu<T: Real> {
    inner: nalgebra::LU<Complex64, Dyn, Dyn>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> Lu<T> {
    /// Returns `None` for a square matrix with an exactly zero pivot.
    pub fn new(a: CMatrix<T>) -> Option<Self> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let inner = a.to_na().lu();
        if !inner.is_invertible() {
            return None;
        }
        Some(Self {
            inner,
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn det(&self) -> C<T> {
        narrow(self.inner.determinant())
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let rhs = DVector::from_iterator(b.len(), b.iter().map(|&z| widen(z)));
        match self.inner.solve(&rhs) {
            Some(x) => x.iter().map(|&z| narrow(z)).collect(),
            None => vec![C::new(T::nan(), T::nan()); b.len()],
        }
    }
}

fn widen<T: Real>(z: C<T>) -> Complex64 {
    Complex64::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

fn narrow<T: Real>(z: Complex64) -> C<T> {
    C::new(T::lit(z.re), T::lit(z.im))
}

/// Sort by lexicographic `(re, im)`.
pub fn sort_lex<T: Real>(v: &mut [C<T>]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Evaluate at `x` the Lagrange interpolant through `(nodes[i], values[i])`.
pub fn lagrange_eval<T: Real>(nodes: &[C<T>], values: &[C<T>], x: C<T>) -> C<T> {
    let mut acc = C::zero();
    for (i, (&xi, &yi)) in nodes.iter().zip(values).enumerate() {
        let mut w = C::one();
        for (j, &xj) in nodes.iter().enumerate() {
            if i != j {
                w *= (x - xj) / (xi - xj);
            }
        }
        acc += yi * w;
    }
    acc
}
