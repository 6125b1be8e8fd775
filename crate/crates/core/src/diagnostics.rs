//! Ground-truth comparisons: subspace fidelity, perturbation reports,
//! Weyl audits and the growing-rate constant.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpectralReference;
use crate::operator::{inner, DenseHermitian};

/// `√(Σ_j |⟨ψ_j|x⟩|²) / ‖x‖` over the ground subspace of `r`.
pub fn fidelity_subspace(x: &[Complex64], r: &SpectralReference) -> Result<f64> {
    if x.len() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), found: x.len() });
    }
    let norm_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter("fidelity of the zero vector".into()));
    }
    let s: f64 = r.ground_states().iter().map(|g| inner(g, x).norm_sqr()).sum();
    Ok((s / norm_sq).sqrt().min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// `‖p̃ − p‖` (spectral norm).
    pub e_norm: f64,
    /// `(λ_{g+1} − λ_1) / 2` of the unperturbed matrix.
    pub half_gap: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub degeneracy: usize,
    pub lam1_tilde: f64,
    /// `λ̃_{g+1}`, the first perturbed level past the ground multiplet.
    pub lam2_tilde: f64,
    pub interval: [f64; 2],
    /// `⟨ψ̃_k|P_{λ₁}|ψ̃_k⟩` for the `g` lowest perturbed eigenvectors.
    pub overlap: Vec<f64>,
    /// `‖E‖ < half_gap`.
    pub hypothesis_holds: bool,
    /// `λ̃₁` inside and `λ̃_{g+1}` outside the interval.
    pub interval_filter_holds: bool,
}

impl PerturbationReport {
    pub fn lam1_in_interval(&self) -> bool {
        self.interval[0] <= self.lam1_tilde && self.lam1_tilde <= self.interval[1]
    }

    pub fn lam2_outside_interval(&self) -> bool {
        !(self.interval[0] <= self.lam2_tilde && self.lam2_tilde <= self.interval[1])
    }

    pub fn min_overlap(&self) -> f64 {
        self.overlap.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["parameter", "lhs", "rhs", "lam1_tilde", "lam2_tilde", "lam1_minus_lhs", "lam1_plus_lhs", "overlap"];

    /// Table row: parameter, LHS, RHS, λ̃₁, λ̃₂, λ₁ − LHS, λ₁ + LHS, overlap.
    pub fn csv_row(&self, parameter: f64) -> [String; 8] {
        [
            format!("{parameter:.16e}"),
            format!("{:.16e}", self.e_norm),
            format!("{:.16e}", self.half_gap),
            format!("{:.16e}", self.lam1_tilde),
            format!("{:.16e}", self.lam2_tilde),
            format!("{:.16e}", self.interval[0]),
            format!("{:.16e}", self.interval[1]),
            format!("{:.16e}", self.min_overlap()),
        ]
    }
}

/// Write a table of `(parameter, report)` rows.
pub fn write_table_csv<W: Write>(rows: &[(f64, PerturbationReport)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PerturbationReport::CSV_HEADER)?;
    for (p, r) in rows {
        out.write_record(r.csv_row(*p))?;
    }
    out.flush()?;
    Ok(())
}

fn sym_norm(m: &DMatrix<Complex64>) -> Result<f64> {
    DenseHermitian::new(m.clone())?.spectral_norm()
}

/// Compare the exact filter matrix `p` with its estimated counterpart.
pub fn perturbation_report(p: &DenseHermitian, p_tilde: &DenseHermitian) -> Result<PerturbationReport> {
    let n = p.matrix().nrows();
    if p_tilde.matrix().nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p_tilde.matrix().nrows() });
    }
    let r = SpectralReference::from_dense(p, None)?;
    let (vt, wt) = p_tilde.eigh()?;
    let e_norm = sym_norm(&(p_tilde.matrix() - p.matrix()))?;
    let g = r.degeneracy;
    let lambda1 = r.lambda_min();
    let lambda2 = r.first_excited().unwrap_or(lambda1);
    let half_gap = (lambda2 - lambda1).abs() / 2.0;
    let lam1_tilde = vt[0];
    let lam2_tilde = *vt.get(g).unwrap_or(&vt[vt.len() - 1]);
    let interval = [lambda1 - e_norm, lambda1 + e_norm];
    let ground = r.ground_states();
    let overlap = (0..g)
        .map(|k| {
            let col: Vec<Complex64> = wt.column(k).iter().copied().collect();
            ground.iter().map(|gs| inner(gs, &col).norm_sqr()).sum::<f64>().min(1.0)
        })
        .collect();
    let mut rep = PerturbationReport {
        e_norm,
        half_gap,
        lambda1,
        lambda2,
        degeneracy: g,
        lam1_tilde,
        lam2_tilde,
        interval,
        overlap,
        hypothesis_holds: e_norm < half_gap,
        interval_filter_holds: false,
    };
    rep.interval_filter_holds = rep.lam1_in_interval() && rep.lam2_outside_interval();
    Ok(rep)
}

/// Largest `|λ_k(A + E) − λ_k(A)| − ‖E‖`; never positive beyond rounding.
pub fn weyl_audit(a: &DenseHermitian, e: &DenseHermitian) -> Result<f64> {
    if a.matrix().nrows() != e.matrix().nrows() {
        return Err(Error::DimensionMismatch { expected: a.matrix().nrows(), found: e.matrix().nrows() });
    }
    let (va, _) = a.eigh()?;
    let (vs, _) = DenseHermitian::new(a.matrix() + e.matrix())?.eigh()?;
    let en = e.spectral_norm()?;
    Ok(va.iter().zip(&vs).map(|(x, y)| (y - x).abs() - en).fold(f64::NEG_INFINITY, f64::max))
}

/// Strict upper limit on admissible step sizes for [`growing_rate`].
pub fn max_admissible_step(eigs: &[f64], degeneracy: usize, m_r: usize, m_c: usize) -> Result<f64> {
    let n = eigs.len();
    if n < 2 || degeneracy == 0 || degeneracy >= n {
        return Err(Error::InvalidParameter("spectrum needs a level above the ground multiplet".into()));
    }
    let nf = n as f64;
    let (l1, l2) = (eigs[0], eigs[degeneracy]);
    let max_sq = eigs[degeneracy..].iter().map(|l| l * l).fold(0.0, f64::max);
    let denom = (nf * l2 * l2 * (m_c as f64 - 1.0) / (nf - 1.0) + nf * (nf - m_c as f64) / (nf - 1.0) * max_sq).abs();
    let by_gap = if denom > 0.0 { m_r as f64 * (l2 - l1) / denom } else { f64::INFINITY };
    let op_norm = eigs.iter().map(|l| l.abs()).fold(0.0, f64::max);
    Ok(by_gap.min(1.0 / op_norm))
}

/// `A / (A(1 − ε/2) + B ε/2)` for the ascending spectrum `eigs` of the
/// oriented filter operator.
pub fn growing_rate(eigs: &[f64], degeneracy: usize, a: f64, m_r: usize, m_c: usize, epsilon: f64) -> Result<f64> {
    let limit = max_admissible_step(eigs, degeneracy, m_r, m_c)?;
    if !(a > 0.0 && a < limit) {
        return Err(Error::InvalidParameter(format!("step size {a} outside the admissible range (0, {limit})")));
    }
    let (aa, bb) = growth_coefficients(eigs, degeneracy, a, m_r, m_c);
    Ok(aa / (aa * (1.0 - epsilon / 2.0) + bb * epsilon / 2.0))
}

/// `(A, B)` of the growing-rate formula.
pub fn growth_coefficients(eigs: &[f64], degeneracy: usize, a: f64, m_r: usize, m_c: usize) -> (f64, f64) {
    let nf = eigs.len() as f64;
    let (mr, mc) = (m_r as f64, m_c as f64);
    let l1 = eigs[0];
    let l2 = eigs[degeneracy];
    let max_sq = eigs[degeneracy..].iter().map(|l| l * l).fold(0.0, f64::max);
    let aa = (1.0 - a * mr * mc * l1 / (nf * nf)).powi(2);
    let b2 = 1.0 - 2.0 * a * l2 * mr * mc / (nf * nf) + a * a * l2 * l2 * mc * (mc - 1.0) / (nf * (nf - 1.0));
    let bb = b2 + mc * (nf - mc) * a * a / (nf * (nf - 1.0)) * max_sq;
    (aa, bb)
}

/// Least-squares `(slope, intercept)` of `ys` on `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
