//! Spin-model Hamiltonians as weighted Pauli sums, plus exact spectra at
//! desk scale.
//!
//! Qubit `k` (0-based, left-most in a Pauli label) is stored in bit
//! `n - 1 - k` of a basis index, so the dense matrix of `A ⊗ B` is the
//! Kronecker product in reading order.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{DenseHermitian, StateVector};

/// Largest qubit count for which dense matrices are materialized.
pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidParameter(format!("malformed Pauli label `{other}`"))),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn phases(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A real-weighted tensor product of single-qubit Paulis.
///
/// Acting on a basis state, `P|b⟩ = i^{#Y} (-1)^{|b ∧ z|} |b ⊕ x⟩` where `x`
/// marks X/Y positions and `z` marks Z/Y positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    ops: Vec<Pauli>,
    coeff: f64,
    x_mask: u64,
    z_mask: u64,
    y_phase: Complex64,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>, coeff: f64) -> Result<Self> {
        if ops.is_empty() || ops.len() > 63 {
            return Err(Error::InvalidParameter(format!(
                "Pauli string must act on 1..=63 qubits, got {}",
                ops.len()
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite coefficient {coeff}")));
        }
        let n = ops.len();
        let mut x_mask = 0u64;
        let mut z_mask = 0u64;
        let mut ny = 0u32;
        for (k, op) in ops.iter().enumerate() {
            let bit = 1u64 << (n - 1 - k);
            if op.flips() {
                x_mask |= bit;
            }
            if op.phases() {
                z_mask |= bit;
            }
            if *op == Pauli::Y {
                ny += 1;
            }
        }
        let y_phase = match ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        Ok(Self { ops, coeff, x_mask, z_mask, y_phase })
    }

    /// Parse a label such as `"XZI"`.
    pub fn parse(label: &str, coeff: f64) -> Result<Self> {
        let ops = label.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        Self::new(ops, coeff)
    }

    /// Identity everywhere except the listed `(qubit, op)` factors.
    pub fn sparse(n: usize, factors: &[(usize, Pauli)], coeff: f64) -> Result<Self> {
        let mut ops = vec![Pauli::I; n];
        for &(q, op) in factors {
            if q >= n {
                return Err(Error::InvalidParameter(format!("qubit {q} out of range for n = {n}")));
            }
            ops[q] = op;
        }
        Self::new(ops, coeff)
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn label(&self) -> String {
        self.ops.iter().map(|p| p.to_string()).collect()
    }

    /// Image of basis state `col` without the coefficient: `(row, phase)`.
    #[inline]
    pub fn act_on_basis(&self, col: usize) -> (usize, Complex64) {
        let row = col ^ self.x_mask as usize;
        let parity = ((col as u64) & self.z_mask).count_ones() & 1;
        let phase = if parity == 1 { -self.y_phase } else { self.y_phase };
        (row, phase)
    }

    /// `out += scale · P v` over the full vector.
    pub fn apply_add(&self, scale: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        for (col, &amp) in v.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (row, phase) = self.act_on_basis(col);
            out[row] += scale * phase * amp;
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+} {}", self.coeff, self.label())
    }
}

/// Weighted sum of Pauli strings on a common register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n: usize,
    terms: Vec<PauliString>,
}

impl PauliHamiltonian {
    pub fn new(n: usize, terms: Vec<PauliString>) -> Result<Self> {
        if n == 0 || n > 63 {
            return Err(Error::InvalidParameter(format!("qubit count {n} out of range")));
        }
        if let Some(t) = terms.iter().find(|t| t.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: t.n() });
        }
        Ok(Self { n, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// `H v` by per-term bit manipulation.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for term in &self.terms {
            term.apply_add(Complex64::new(term.coeff(), 0.0), v, &mut out);
        }
        Ok(out)
    }

    /// Nonzero entries of column `col`, duplicates merged.
    pub fn column(&self, col: usize) -> Vec<(usize, Complex64)> {
        let mut entries: Vec<(usize, Complex64)> = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let (row, phase) = term.act_on_basis(col);
            let value = phase * term.coeff();
            match entries.iter_mut().find(|(r, _)| *r == row) {
                Some((_, acc)) => *acc += value,
                None => entries.push((row, value)),
            }
        }
        entries.retain(|(_, v)| v.norm_sqr() > 0.0);
        entries
    }

    /// `⟨row|H|col⟩` in O(terms).
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let (r, phase) = t.act_on_basis(col);
                if r == row {
                    phase * t.coeff()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .sum()
    }

    /// Triangle-inequality bound `Σ |coeff| ≥ ‖H‖`.
    pub fn spectral_norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff().abs()).sum()
    }

    pub fn to_dense(&self) -> Result<DenseHermitian> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::TooLarge { what: "qubit count", size: self.n, limit: MAX_DENSE_QUBITS });
        }
        let dim = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            for (row, v) in self.column(col) {
                m[(row, col)] += v;
            }
        }
        DenseHermitian::new(m)
    }
}

fn check_chain(len: usize, what: &str) -> Result<()> {
    if len < 2 {
        return Err(Error::InvalidParameter(format!("{what} must be at least 2, got {len}")));
    }
    Ok(())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

/// Transverse-field Ising chain, `J Σ Z_j Z_{j+1} + D Σ X_j`, open boundary.
pub fn build_tfim(n: usize, j: f64, d: f64) -> Result<PauliHamiltonian> {
    check_chain(n, "qubit count")?;
    finite("J", j)?;
    finite("D", d)?;
    let mut terms = Vec::with_capacity(2 * n - 1);
    for q in 0..n - 1 {
        terms.push(PauliString::sparse(n, &[(q, Pauli::Z), (q + 1, Pauli::Z)], j)?);
    }
    for q in 0..n {
        terms.push(PauliString::sparse(n, &[(q, Pauli::X)], d)?);
    }
    PauliHamiltonian::new(n, terms)
}

/// XXZ chain, `J Σ (X_j X_{j+1} + Y_j Y_{j+1}) - D Σ Z_j Z_{j+1}`.
pub fn build_xxz(n: usize, j: f64, d: f64) -> Result<PauliHamiltonian> {
    check_chain(n, "qubit count")?;
    finite("J", j)?;
    finite("D", d)?;
    let mut terms = Vec::with_capacity(3 * (n - 1));
    for q in 0..n - 1 {
        terms.push(PauliString::sparse(n, &[(q, Pauli::X), (q + 1, Pauli::X)], j)?);
        terms.push(PauliString::sparse(n, &[(q, Pauli::Y), (q + 1, Pauli::Y)], j)?);
        terms.push(PauliString::sparse(n, &[(q, Pauli::Z), (q + 1, Pauli::Z)], -d)?);
    }
    PauliHamiltonian::new(n, terms)
}

/// Qubit holding spin-orbital `(site, spin)`; spin 0 is up, 1 is down.
pub fn hubbard_qubit(site: usize, spin: usize) -> usize {
    2 * site + spin
}

/// One-dimensional Hubbard chain in the 2-local Pauli form
/// `-(t/2) Σ_σ Σ_j (X X + Y Y) + (U/4) Σ_j (-Z_↑ - Z_↓ + Z_↑ Z_↓)`,
/// with the identity offset dropped. Uses `2 · sites` qubits.
pub fn build_hubbard_jw(sites: usize, t: f64, u: f64) -> Result<PauliHamiltonian> {
    check_chain(sites, "site count")?;
    finite("t", t)?;
    finite("U", u)?;
    let n = 2 * sites;
    let mut terms = Vec::with_capacity(4 * (sites - 1) + 3 * sites);
    for spin in 0..2 {
        for site in 0..sites - 1 {
            let a = hubbard_qubit(site + 1, spin);
            let b = hubbard_qubit(site, spin);
            terms.push(PauliString::sparse(n, &[(a, Pauli::X), (b, Pauli::X)], -t / 2.0)?);
            terms.push(PauliString::sparse(n, &[(a, Pauli::Y), (b, Pauli::Y)], -t / 2.0)?);
        }
    }
    for site in 0..sites {
        let up = hubbard_qubit(site, 0);
        let dn = hubbard_qubit(site, 1);
        terms.push(PauliString::sparse(n, &[(up, Pauli::Z)], -u / 4.0)?);
        terms.push(PauliString::sparse(n, &[(dn, Pauli::Z)], -u / 4.0)?);
        terms.push(PauliString::sparse(n, &[(up, Pauli::Z), (dn, Pauli::Z)], u / 4.0)?);
    }
    PauliHamiltonian::new(n, terms)
}

/// Model block of a run configuration.
///
/// ```toml
/// [model]
/// model = "tfim"   # or "xxz"
/// n = 2
/// j = 1.0
/// d = 0.5
/// ```
/// or `model = "hubbard"` with `sites`, `t` and `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Tfim { n: usize, j: f64, d: f64 },
    Xxz { n: usize, j: f64, d: f64 },
    Hubbard { sites: usize, t: f64, u: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<PauliHamiltonian> {
        match *self {
            ModelSpec::Tfim { n, j, d } => build_tfim(n, j, d),
            ModelSpec::Xxz { n, j, d } => build_xxz(n, j, d),
            ModelSpec::Hubbard { sites, t, u } => build_hubbard_jw(sites, t, u),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match *self {
            ModelSpec::Tfim { n, .. } | ModelSpec::Xxz { n, .. } => n,
            ModelSpec::Hubbard { sites, .. } => 2 * sites,
        }
    }

    /// Override a named scalar parameter (`j`, `d`, `t`, `u`).
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match (&mut out, name) {
            (ModelSpec::Tfim { j, .. } | ModelSpec::Xxz { j, .. }, "j") => *j = value,
            (ModelSpec::Tfim { d, .. } | ModelSpec::Xxz { d, .. }, "d") => *d = value,
            (ModelSpec::Hubbard { t, .. }, "t") => *t = value,
            (ModelSpec::Hubbard { u, .. }, "u") => *u = value,
            _ => {
                return Err(Error::Config(format!("model has no sweepable parameter `{name}`")));
            }
        }
        Ok(out)
    }
}

/// Full ascending spectrum with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralReference {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Complex64>,
    pub degeneracy: usize,
    pub gap_tol: f64,
}

impl SpectralReference {
    /// Diagonalize a dense Hermitian matrix; `gap_tol = None` uses
    /// `1e-8 · max(1, ‖H‖)`.
    pub fn from_dense(h: &DenseHermitian, gap_tol: Option<f64>) -> Result<Self> {
        let (eigenvalues, eigenvectors) = h.eigh()?;
        let norm = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gap_tol = gap_tol.unwrap_or(1e-8 * norm.max(1.0));
        let degeneracy = eigenvalues.iter().take_while(|&&v| v - eigenvalues[0] <= gap_tol).count();
        Ok(Self { eigenvalues, eigenvectors, degeneracy, gap_tol })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// First eigenvalue above the ground multiplet, if any.
    pub fn first_excited(&self) -> Option<f64> {
        self.eigenvalues.get(self.degeneracy).copied()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        StateVector::from(self.eigenvectors.column(k).iter().copied().collect::<Vec<_>>())
    }

    pub fn ground_states(&self) -> Vec<StateVector> {
        (0..self.degeneracy).map(|k| self.eigenvector(k)).collect()
    }

    /// Spectral norm `max |λ|`.
    pub fn norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }
}

/// Dense diagonalization at desk scale (n ≤ 14 qubits).
pub fn exact_reference(h: &PauliHamiltonian) -> Result<SpectralReference> {
    SpectralReference::from_dense(&h.to_dense()?, None)
}
