//! State vectors, the linear-operator abstraction, affine rescaling and
//! Chebyshev-series application.

use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::PauliHamiltonian;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense complex amplitude vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    /// Equal-amplitude superposition with unit norm.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self(vec![Complex64::new(a, 0.0); dim])
    }

    /// Normalized complex Gaussian vector.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut v = Self(
            (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        );
        v.normalize();
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &[Complex64]) -> Complex64 {
        inner(&self.0, other)
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.0 {
                *z /= n;
            }
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: Complex64, x: &[Complex64]) {
        for (y, &xi) in self.0.iter_mut().zip(x) {
            *y += a * xi;
        }
    }
}

impl From<Vec<Complex64>> for StateVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl Deref for StateVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

/// `Σ conj(a_k) b_k`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Hermitian operator on `C^dim` accessed through matrix-vector products.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>>;

    /// Cheap upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;

    fn check_dim(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }
}

impl LinearOperator for PauliHamiltonian {
    fn dim(&self) -> usize {
        PauliHamiltonian::dim(self)
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        PauliHamiltonian::apply(self, v)
    }

    fn norm_bound(&self) -> f64 {
        self.spectral_norm_bound()
    }
}

/// `H v` for a Pauli-sum Hamiltonian.
pub fn matvec(h: &PauliHamiltonian, v: &[Complex64]) -> Result<Vec<Complex64>> {
    h.apply(v)
}

/// Upper bound on `‖op‖`.
pub fn spectral_norm_bound(op: &dyn LinearOperator) -> f64 {
    op.norm_bound()
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    m: DMatrix<Complex64>,
}

impl DenseHermitian {
    /// Validates squareness and Hermiticity to `1e-10 · max(1, max|m_ij|)`.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-10 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { m })
    }

    /// Materialize any operator column by column.
    pub fn from_operator(op: &dyn LinearOperator) -> Result<Self> {
        let dim = op.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let image = op.apply(&StateVector::basis(dim, col))?;
            for (row, z) in image.into_iter().enumerate() {
                m[(row, col)] = z;
            }
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    /// Ascending eigenvalues and matching eigenvector columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let eig = SymmetricEigen::try_new(self.m.clone(), 1e-14, 0).ok_or(Error::EigenNonConvergence)?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(self.m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        Ok((values, vectors))
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        let (vals, _) = self.eigh()?;
        Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

impl LinearOperator for DenseHermitian {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_dim(v)?;
        let n = self.m.nrows();
        let mut out = vec![ZERO; n];
        for col in 0..n {
            let x = v[col];
            if x == ZERO {
                continue;
            }
            for (row, o) in out.iter_mut().enumerate() {
                *o += self.m[(row, col)] * x;
            }
        }
        Ok(out)
    }

    /// Frobenius norm.
    fn norm_bound(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `scale · A + shift · I`.
#[derive(Debug, Clone, Copy)]
pub struct AffineOperator<'a, O: LinearOperator + ?Sized> {
    pub inner: &'a O,
    pub scale: f64,
    pub shift: f64,
}

impl<'a, O: LinearOperator + ?Sized> AffineOperator<'a, O> {
    pub fn new(inner: &'a O, scale: f64, shift: f64) -> Self {
        Self { inner, scale, shift }
    }
}

impl<O: LinearOperator + ?Sized> LinearOperator for AffineOperator<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = self.inner.apply(v)?;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = *o * self.scale + x * self.shift;
        }
        Ok(out)
    }

    fn norm_bound(&self) -> f64 {
        self.scale.abs() * self.inner.norm_bound() + self.shift.abs()
    }
}

/// `Σ_k c_k T_k(A) v` by Clenshaw's backward recurrence: `deg(c)` products.
pub fn apply_poly(op: &dyn LinearOperator, cheb: &[f64], v: &[Complex64]) -> Result<Vec<Complex64>> {
    op.check_dim(v)?;
    let n = v.len();
    match cheb.len() {
        0 => return Err(Error::InvalidParameter("empty coefficient list".into())),
        1 => return Ok(v.iter().map(|x| x * cheb[0]).collect()),
        _ => {}
    }
    let d = cheb.len() - 1;
    // b_{k} = c_k v + 2 A b_{k+1} - b_{k+2}
    let mut b1: Vec<Complex64> = v.iter().map(|x| x * cheb[d]).collect();
    let mut b2 = vec![ZERO; n];
    for k in (1..d).rev() {
        let ab = op.apply(&b1)?;
        let next: Vec<Complex64> =
            (0..n).map(|i| v[i] * cheb[k] + ab[i] * 2.0 - b2[i]).collect();
        b2 = std::mem::replace(&mut b1, next);
    }
    let ab = op.apply(&b1)?;
    Ok((0..n).map(|i| v[i] * cheb[0] + ab[i] - b2[i]).collect())
}
