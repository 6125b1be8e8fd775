//! Fejér-weighted Fourier series of `T_ℓ(αx)` on `[-π, π]`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{chebyshev_monomial, chebyshev_value};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(1/2π) ∫_{-π}^{π} xⁿ e^{-ikx} dx`.
pub fn moment(k: i64, n: usize) -> Complex64 {
    if k == 0 {
        return if n % 2 == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(PI.powi(n as i32) / (n as f64 + 1.0), 0.0)
        };
    }
    let kf = k as f64;
    let e_minus = Complex64::from_polar(1.0, -kf * PI);
    let e_plus = Complex64::from_polar(1.0, kf * PI);
    let mut c = Complex64::new(0.0, 0.0);
    for m in 0..n {
        let p = (m + 1) as i32;
        let boundary = e_minus * PI.powi(p) - e_plus * (-PI).powi(p);
        c = I / (2.0 * PI * kf) * boundary + c * ((m + 1) as f64) / (I * kf);
    }
    c
}

/// Coefficients `c_k`, `k = -K..=K`, approximating `T_ℓ(αx) ≈ Σ c_k e^{ikx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FejerExpansion {
    pub order: usize,
    pub alpha: f64,
    pub degree: usize,
    /// Index `k + K` holds `c_k`.
    pub coeffs: Vec<Complex64>,
    /// Monomial coefficients of `T_ℓ`.
    pub monomial: Vec<i64>,
}

impl FejerExpansion {
    pub fn build(degree: usize, alpha: f64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("Fejér order must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let monomial = chebyshev_monomial(degree)?;
        let kk = order as i64;
        let coeffs = (-kk..=kk)
            .map(|k| {
                let weight = (kk - k.abs() + 1) as f64 / kk as f64;
                let s: Complex64 = monomial
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d != 0)
                    .map(|(j, &d)| moment(k, j) * (alpha.powi(j as i32) * d as f64))
                    .sum();
                s * weight
            })
            .collect();
        Ok(Self { order, alpha, degree, coeffs, monomial })
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[(k + self.order as i64) as usize]
    }

    /// `(k, c_k)` pairs in ascending `k`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let kk = self.order as i64;
        self.coeffs.iter().enumerate().map(move |(idx, &c)| (idx as i64 - kk, c))
    }

    /// `Σ c_k e^{ikx}`.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.terms().map(|(k, c)| c * Complex64::from_polar(1.0, k as f64 * x)).sum()
    }

    /// Target `T_ℓ(αx)`.
    pub fn target(&self, x: f64) -> f64 {
        chebyshev_value(self.degree, self.alpha * x)
    }

    /// CSV rows `k, re, im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "re", "im"])?;
        for (k, c) in self.terms() {
            out.write_record([k.to_string(), format!("{:.16e}", c.re), format!("{:.16e}", c.im)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `max |Σ c_k e^{ikx} − T_ℓ(αx)|` over `grid`.
pub fn reconstruction_error(exp: &FejerExpansion, grid: &[f64]) -> f64 {
    grid.iter().map(|&x| (exp.eval(x) - exp.target(x)).norm()).fold(0.0, f64::max)
}

/// `points` equally spaced values in `[-π + δ, π − δ]`.
pub fn interior_grid(delta: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (-PI + delta, PI - delta);
    if points < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss–Legendre (5-point) on `[-π, π]`.
    fn quad_moment(k: i64, n: usize) -> Complex64 {
        const X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
        const W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
        let panels = 400;
        let h = 2.0 * PI / panels as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..panels {
            let mid = -PI + (p as f64 + 0.5) * h;
            for (x, w) in X.iter().zip(W) {
                let t = mid + 0.5 * h * x;
                acc += Complex64::from_polar(1.0, -(k as f64) * t) * t.powi(n as i32) * (w * 0.5 * h);
            }
        }
        acc / (2.0 * PI)
    }

    #[test]
    fn base_cases() {
        assert_eq!(moment(0, 0), Complex64::new(1.0, 0.0));
        assert!((moment(0, 2).re - PI * PI / 3.0).abs() < 1e-14);
        assert_eq!(moment(0, 3), Complex64::new(0.0, 0.0));
        assert!((moment(1, 1) - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert_eq!(moment(5, 0).norm(), 0.0);
    }

    #[test]
    fn moments_match_quadrature() {
        for k in -40..=40i64 {
            for n in 0..=10 {
                let (a, b) = (moment(k, n), quad_moment(k, n));
                assert!((a - b).norm() < 1e-9 * b.norm().max(1.0), "k={k} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_target() {
        let e = FejerExpansion::build(0, 1.0, 20).unwrap();
        assert!((e.coeff(0).re - 21.0 / 20.0).abs() < 1e-14);
        assert!(e.terms().filter(|(k, _)| *k != 0).all(|(_, c)| c.norm() < 1e-14));
        let err = reconstruction_error(&e, &interior_grid(0.1, 50));
        assert!(err <= 1.0 / 20.0 + 1e-12);
    }

    #[test]
    fn linear_target_odd_coefficients() {
        let e = FejerExpansion::build(1, 1.0, 10).unwrap();
        for (k, c) in e.terms() {
            if k == 0 {
                assert!(c.norm() < 1e-14);
            } else {
                // Fourier coefficient of x is i(-1)^k / k
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let fourier = Complex64::new(0.0, sign / k as f64);
                let w = (10 - k.abs() + 1) as f64 / 10.0;
                assert!((c - fourier * w).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn conjugate_symmetric_and_real() {
        let e = FejerExpansion::build(3, 0.5, 30).unwrap();
        for k in 0..=30 {
            assert!((e.coeff(-k) - e.coeff(k).conj()).norm() < 1e-12);
        }
        for x in interior_grid(0.01, 101) {
            assert!(e.eval(x).im.abs() < 1e-10);
        }
    }

    #[test]
    fn error_decreases_with_order() {
        let grid = interior_grid(0.5, 201);
        let errs: Vec<f64> = [10, 30, 100]
            .iter()
            .map(|&k| reconstruction_error(&FejerExpansion::build(3, 0.4, k).unwrap(), &grid))
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn csv_dump_has_all_rows() {
        let e = FejerExpansion::build(3, 0.5, 4).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
        assert!(text.starts_with("k,re,im\n-4,"));
    }

    #[test]
    fn invalid_inputs() {
        assert!(FejerExpansion::build(3, 1.0, 0).is_err());
        assert!(FejerExpansion::build(3, 0.0, 5).is_err());
        assert!(matches!(FejerExpansion::build(25, 1.0, 5), Err(Error::DegreeTooLarge(25))));
    }
}
