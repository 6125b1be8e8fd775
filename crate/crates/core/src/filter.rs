//! Chebyshev filtering: the affine window map, `T_ℓ` evaluation, the
//! normalization constant and gap-growth bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PauliHamiltonian, SpectralReference};
use crate::operator::{apply_poly, AffineOperator, DenseHermitian, LinearOperator, StateVector};

/// Largest degree for which exact integer monomial coefficients are produced.
pub const MAX_MONOMIAL_DEGREE: usize = 20;

/// Filter window, degree and normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub lambda_lb: f64,
    pub lambda_ub: f64,
    pub degree: usize,
    /// Upper bound on `max |T_ℓ(λ̄)|` over the spectrum.
    pub c: f64,
}

/// How the window is chosen in a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterBounds {
    Fractions { f_ub: f64, f_lb: f64 },
    Explicit { lambda_lb: f64, lambda_ub: f64 },
}

/// `[filter]` block: bounds plus degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    #[serde(flatten)]
    pub bounds: FilterBounds,
    pub degree: usize,
}

impl FilterSpec {
    pub fn new(lambda_lb: f64, lambda_ub: f64, degree: usize, c: f64) -> Result<Self> {
        check_window(lambda_lb, lambda_ub)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("normalization C must be positive, got {c}")));
        }
        Ok(Self { lambda_lb, lambda_ub, degree, c })
    }

    /// Window and exact `C` from a dense reference.
    pub fn from_reference(lambda_lb: f64, lambda_ub: f64, degree: usize, r: &SpectralReference) -> Result<Self> {
        check_window(lambda_lb, lambda_ub)?;
        let c = normalization_c(lambda_lb, lambda_ub, degree, r);
        Self::new(lambda_lb, lambda_ub, degree, c)
    }

    /// Window with `C` bounded through the Pauli-norm bound of `H`.
    pub fn from_norm_bound(lambda_lb: f64, lambda_ub: f64, degree: usize, h: &PauliHamiltonian) -> Result<Self> {
        check_window(lambda_lb, lambda_ub)?;
        let b = h.spectral_norm_bound();
        let lo = affine_transform(-b, lambda_lb, lambda_ub);
        let hi = affine_transform(b, lambda_lb, lambda_ub);
        let c = chebyshev_value(degree, lo).abs().max(chebyshev_value(degree, hi).abs()).max(1.0);
        Self::new(lambda_lb, lambda_ub, degree, c)
    }

    pub fn transform(&self, lambda: f64) -> f64 {
        affine_transform(lambda, self.lambda_lb, self.lambda_ub)
    }

    /// `(s, shift)` with `λ̄ = s λ + shift`.
    pub fn scale_shift(&self) -> (f64, f64) {
        let w = self.lambda_ub - self.lambda_lb;
        (2.0 / w, 1.0 - 2.0 * self.lambda_ub / w)
    }

    /// `p_ℓ(λ) = T_ℓ(λ̄)`.
    pub fn eval(&self, lambda: f64) -> f64 {
        chebyshev_value(self.degree, self.transform(lambda))
    }
}

fn check_window(lb: f64, ub: f64) -> Result<()> {
    if !(lb.is_finite() && ub.is_finite() && lb < ub) {
        return Err(Error::InvalidParameter(format!(
            "filter bounds need lambda_lb < lambda_ub, got [{lb}, {ub}]"
        )));
    }
    Ok(())
}

/// `λ̄ = 2(λ − λ_ub)/(λ_ub − λ_lb) + 1`.
pub fn affine_transform(lambda: f64, lambda_lb: f64, lambda_ub: f64) -> f64 {
    2.0 * (lambda - lambda_ub) / (lambda_ub - lambda_lb) + 1.0
}

/// `(λ_lb, λ_ub) = (λ_min + f_lb Δ, λ_max + f_ub Δ)`, `Δ = λ_max − λ_min`.
pub fn bounds_from_fractions(r: &SpectralReference, f_ub: f64, f_lb: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (r.lambda_min(), r.lambda_max());
    let delta = hi - lo;
    let lb = lo + f_lb * delta;
    let ub = hi + f_ub * delta;
    check_window(lb, ub)?;
    Ok((lb, ub))
}

impl FilterConfig {
    /// Resolve to a concrete filter; fractions need a reference.
    pub fn resolve(&self, h: &PauliHamiltonian, r: Option<&SpectralReference>) -> Result<FilterSpec> {
        let (lb, ub) = match (self.bounds, r) {
            (FilterBounds::Fractions { f_ub, f_lb }, Some(r)) => bounds_from_fractions(r, f_ub, f_lb)?,
            (FilterBounds::Fractions { .. }, None) => {
                return Err(Error::Config("fractional filter bounds need an exact spectrum".into()));
            }
            (FilterBounds::Explicit { lambda_lb, lambda_ub }, _) => (lambda_lb, lambda_ub),
        };
        match r {
            Some(r) => FilterSpec::from_reference(lb, ub, self.degree, r),
            None => FilterSpec::from_norm_bound(lb, ub, self.degree, h),
        }
    }
}

/// `T_ℓ(x)` for any real `x`; outside `[-1, 1]` via
/// `((x − √(x²−1))^ℓ + (x + √(x²−1))^ℓ)/2`.
pub fn chebyshev_value(ell: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        return (ell as f64 * x.acos()).cos();
    }
    let r = x.abs() + (x * x - 1.0).sqrt();
    let e = ell as i32;
    let mag = 0.5 * (r.powi(e) + r.powi(-e));
    if x < 0.0 && ell % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// `T_ℓ(x)` via the three-term recurrence.
pub fn chebyshev_recurrence(ell: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if ell == 0 {
        return a;
    }
    for _ in 1..ell {
        let next = 2.0 * x * b - a;
        a = b;
        b = next;
    }
    b
}

/// Integer monomial coefficients `d_j` with `T_ℓ(x) = Σ d_j x^j`.
pub fn chebyshev_monomial(ell: usize) -> Result<Vec<i64>> {
    if ell > MAX_MONOMIAL_DEGREE {
        return Err(Error::DegreeTooLarge(ell));
    }
    let mut prev = vec![1i64];
    if ell == 0 {
        return Ok(prev);
    }
    let mut cur = vec![0i64, 1];
    for _ in 1..ell {
        let mut next = vec![0i64; cur.len() + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += 2 * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= c;
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `max_k |T_ℓ(λ̄_k)|` over the reference spectrum.
pub fn normalization_c(lambda_lb: f64, lambda_ub: f64, degree: usize, r: &SpectralReference) -> f64 {
    r.eigenvalues
        .iter()
        .map(|&l| chebyshev_value(degree, affine_transform(l, lambda_lb, lambda_ub)).abs())
        .fold(0.0, f64::max)
}

/// Sign `σ` making the ground state the most negative eigenvalue of `σ·T_ℓ(H̄)`
/// when `λ̄₁ < −1`.
pub fn orientation(degree: usize) -> f64 {
    if degree % 2 == 1 || degree == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `|T_ℓ(λ̄₁) − T_ℓ(λ̄₂)|` for `ℓ = 1..=ell_max`.
pub fn gap_growth(lbar1: f64, lbar2: f64, ell_max: usize) -> Result<Vec<(usize, f64)>> {
    if lbar1 >= -1.0 {
        return Err(Error::NotSeparated(lbar1));
    }
    Ok((1..=ell_max)
        .map(|l| (l, (chebyshev_value(l, lbar1) - chebyshev_value(l, lbar2)).abs()))
        .collect())
}

/// Asymptotic log-slope `log(|λ̄₁| + √(λ̄₁² − 1))` of the filtered gap.
pub fn gap_growth_slope(lbar1: f64) -> f64 {
    (lbar1.abs() + (lbar1 * lbar1 - 1.0).max(0.0).sqrt()).ln()
}

/// Filtered gap between the ground level and the first excited level.
pub fn gap_growth_report(lambda_lb: f64, lambda_ub: f64, r: &SpectralReference, ell_max: usize) -> Result<Vec<(usize, f64)>> {
    let l1 = affine_transform(r.lambda_min(), lambda_lb, lambda_ub);
    let l2 = affine_transform(r.first_excited().unwrap_or(r.lambda_min()), lambda_lb, lambda_ub);
    gap_growth(l1, l2, ell_max)
}

/// `T_ℓ(H̄)` as an operator, or `H` itself when unfiltered.
#[derive(Debug, Clone)]
pub struct FilteredOperator {
    h: PauliHamiltonian,
    spec: Option<FilterSpec>,
}

impl FilteredOperator {
    pub fn new(h: PauliHamiltonian, spec: Option<FilterSpec>) -> Self {
        Self { h, spec }
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.h
    }

    pub fn spec(&self) -> Option<&FilterSpec> {
        self.spec.as_ref()
    }

    /// `(s, shift)` of the window map; identity when unfiltered.
    pub fn scale_shift(&self) -> (f64, f64) {
        self.spec.map_or((1.0, 0.0), |s| s.scale_shift())
    }

    pub fn transformed(&self) -> AffineOperator<'_, PauliHamiltonian> {
        let (s, b) = self.scale_shift();
        AffineOperator::new(&self.h, s, b)
    }

    /// Chebyshev-basis coefficients of the applied polynomial.
    pub fn chebyshev_coeffs(&self) -> Vec<f64> {
        let ell = self.spec.map_or(1, |s| s.degree);
        let mut c = vec![0.0; ell + 1];
        c[ell] = 1.0;
        c
    }

    pub fn degree(&self) -> usize {
        self.spec.map_or(1, |s| s.degree)
    }

    /// Bound on entries and norm of the applied polynomial.
    pub fn normalization(&self) -> f64 {
        self.spec.map_or(self.h.spectral_norm_bound(), |s| s.c)
    }

    pub fn orientation(&self) -> f64 {
        self.spec.map_or(1.0, |s| orientation(s.degree))
    }

    /// Scalar polynomial `p(λ)`.
    pub fn eval(&self, lambda: f64) -> f64 {
        self.spec.map_or(lambda, |s| s.eval(lambda))
    }

    /// Bound on `‖H̄‖`.
    pub fn transformed_norm_bound(&self) -> f64 {
        self.transformed().norm_bound()
    }

    /// `⟨i|p(H)|j⟩`, one polynomial application.
    pub fn element_exact(&self, i: usize, j: usize) -> Result<Complex64> {
        let dim = self.h.dim();
        if i >= dim || j >= dim {
            return Err(Error::IndexOutOfRange { row: i, col: j, dim });
        }
        Ok(self.column(j)?[i])
    }

    /// `p(H) e_j`.
    pub fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        let dim = self.h.dim();
        if j >= dim {
            return Err(Error::IndexOutOfRange { row: 0, col: j, dim });
        }
        self.apply(&StateVector::basis(dim, j))
    }

    pub fn to_dense(&self) -> Result<DenseHermitian> {
        let dim = self.h.dim();
        if self.h.n_qubits() > crate::model::MAX_DENSE_QUBITS {
            return Err(Error::TooLarge {
                what: "qubit count",
                size: self.h.n_qubits(),
                limit: crate::model::MAX_DENSE_QUBITS,
            });
        }
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
        for j in 0..dim {
            for (i, z) in self.column(j)?.into_iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        DenseHermitian::new(m)
    }
}

impl LinearOperator for FilteredOperator {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        apply_poly(&self.transformed(), &self.chebyshev_coeffs(), v)
    }

    fn norm_bound(&self) -> f64 {
        self.normalization()
    }
}
