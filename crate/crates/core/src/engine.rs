//! The randomized power iteration: sparse gradient sampling, the update
//! `x ← x − a σ g` and O(m_r·m_c) maintenance of norm, energy and overlaps.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PauliHamiltonian;
use crate::operator::{inner, StateVector};
use crate::oracle::MatrixElements;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `a_t = a0 · decay^{⌊t / period⌋}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub a0: f64,
    pub decay: f64,
    pub period: usize,
}

impl StepSchedule {
    pub fn new(a0: f64, decay: f64, period: usize) -> Result<Self> {
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::InvalidParameter(format!("a0 must be positive, got {a0}")));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::InvalidParameter(format!("decay must lie in (0, 1], got {decay}")));
        }
        if period == 0 {
            return Err(Error::InvalidParameter("decay period must be at least 1".into()));
        }
        Ok(Self { a0, decay, period })
    }

    pub fn constant(a0: f64) -> Result<Self> {
        Self::new(a0, 1.0, 1)
    }

    pub fn at(&self, t: usize) -> f64 {
        self.a0 * self.decay.powi((t / self.period) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    #[default]
    Uniform,
    Random,
}

/// `[engine]` block of a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub m_r: usize,
    pub m_c: usize,
    /// Defaults to `0.5 / C`.
    #[serde(default)]
    pub a0: Option<f64>,
    #[serde(default = "one_f")]
    pub decay: f64,
    #[serde(default = "one_u")]
    pub period: usize,
    pub iterations: usize,
    #[serde(default = "default_renorm")]
    pub renorm_period: usize,
    #[serde(default)]
    pub initial: InitialGuess,
    #[serde(default = "default_floor")]
    pub norm_floor: f64,
}

fn one_f() -> f64 {
    1.0
}

fn one_u() -> usize {
    1
}

fn default_renorm() -> usize {
    1000
}

fn default_floor() -> f64 {
    1e-200
}

impl EngineConfig {
    pub fn schedule(&self, c: f64) -> Result<StepSchedule> {
        StepSchedule::new(self.a0.unwrap_or(0.5 / c), self.decay, self.period)
    }
}

/// Draw `m` distinct indices from `0..n` by partial Fisher–Yates with
/// virtual swaps: O(m) time and memory.
pub fn sample_indices<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("sample size {m} must lie in 1..={n}")));
    }
    let mut swaps: HashMap<usize, usize> = HashMap::with_capacity(2 * m);
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let j = rng.random_range(k..n);
        let vj = *swaps.get(&j).unwrap_or(&j);
        let vk = *swaps.get(&k).unwrap_or(&k);
        swaps.insert(j, vk);
        out.push(vj);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// `(c, g_c)` for each sampled column.
    pub g: Vec<(usize, Complex64)>,
}

impl GradientSample {
    pub fn zero() -> Self {
        Self { rows: Vec::new(), cols: Vec::new(), g: Vec::new() }
    }

    pub fn to_dense(&self, dim: usize) -> StateVector {
        let mut v = StateVector::zeros(dim);
        for &(c, z) in &self.g {
            v[c] += z;
        }
        v
    }
}

/// `g_c = Σ_{r ∈ rows} ξ(c, r) x_r` on the given index sets.
pub fn gradient_on(x: &[Complex64], elements: &dyn MatrixElements, rows: &[usize], cols: &[usize]) -> Result<Vec<(usize, Complex64)>> {
    cols.iter()
        .map(|&c| {
            let mut acc = ZERO;
            for &r in rows {
                let xr = x[r];
                if xr != ZERO {
                    acc += elements.element(c, r)? * xr;
                }
            }
            Ok((c, acc))
        })
        .collect()
}

/// Sample fresh row and column sets and form the sparse estimator.
pub fn sample_gradient<R: Rng + ?Sized>(
    x: &[Complex64],
    elements: &dyn MatrixElements,
    m_r: usize,
    m_c: usize,
    rng: &mut R,
) -> Result<GradientSample> {
    let n = elements.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    let rows = sample_indices(n, m_r, rng)?;
    let cols = sample_indices(n, m_c, rng)?;
    let g = gradient_on(x, elements, &rows, &cols)?;
    Ok(GradientSample { rows, cols, g })
}

/// Iterate with recursively maintained `‖x‖²`, `Hx` and `(x, Hx)` for the
/// raw Hamiltonian, plus overlaps with the supplied ground states.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: StateVector,
    pub hx: StateVector,
    pub norm_sq: f64,
    pub quad: f64,
    pub t: usize,
    ground: Vec<StateVector>,
    overlaps: Vec<Complex64>,
}

impl IterateState {
    pub fn new(x: StateVector, h: &PauliHamiltonian, ground: Vec<StateVector>) -> Result<Self> {
        if x.dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), found: x.dim() });
        }
        if let Some(g) = ground.iter().find(|g| g.dim() != x.dim()) {
            return Err(Error::DimensionMismatch { expected: x.dim(), found: g.dim() });
        }
        let mut s = Self {
            hx: StateVector::zeros(x.dim()),
            x,
            norm_sq: 0.0,
            quad: 0.0,
            t: 0,
            overlaps: vec![ZERO; ground.len()],
            ground,
        };
        s.resync(h)?;
        Ok(s)
    }

    /// Recompute every tracked quantity from `x`.
    pub fn resync(&mut self, h: &PauliHamiltonian) -> Result<()> {
        self.hx = StateVector::from(h.apply(&self.x)?);
        self.norm_sq = self.x.norm_sqr();
        self.quad = inner(&self.x, &self.hx).re;
        self.overlaps = self.ground.iter().map(|g| inner(g, &self.x)).collect();
        Ok(())
    }

    /// Rescale to unit norm; a no-op for Rayleigh quotient and fidelity.
    pub fn renormalize(&mut self, h: &PauliHamiltonian) -> Result<()> {
        self.resync(h)?;
        let n = self.norm_sq.sqrt();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.x.iter_mut().for_each(|z| *z *= inv);
            self.hx.iter_mut().for_each(|z| *z *= inv);
            self.overlaps.iter_mut().for_each(|z| *z *= inv);
            self.norm_sq = self.x.norm_sqr();
            self.quad *= inv * inv;
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.max(0.0).sqrt()
    }

    pub fn rayleigh(&self) -> f64 {
        self.quad / self.norm_sq
    }

    /// Subspace fidelity from tracked overlaps; `None` without ground states.
    pub fn fidelity(&self) -> Option<f64> {
        if self.ground.is_empty() {
            return None;
        }
        let s: f64 = self.overlaps.iter().map(|z| z.norm_sqr()).sum();
        Some((s / self.norm_sq).sqrt().min(1.0))
    }

    /// `x ← x − (a σ) g` with every tracked quantity updated from the
    /// `m_c` nonzero entries of `g` and sparse columns of `H`.
    pub fn step(&mut self, g: &[(usize, Complex64)], a: f64, sigma: f64, h: &PauliHamiltonian) -> Result<()> {
        if !(a >= 0.0) {
            return Err(Error::InvalidParameter(format!("step size must be non-negative, got {a}")));
        }
        let dim = self.x.dim();
        if let Some(&(c, _)) = g.iter().find(|(c, _)| *c >= dim) {
            return Err(Error::IndexOutOfRange { row: 0, col: c, dim });
        }
        let scale = a * sigma;
        let mut g_norm = 0.0;
        let mut g_x = ZERO;
        let mut g_hx = ZERO;
        let mut gmap: BTreeMap<usize, Complex64> = BTreeMap::new();
        for &(c, z) in g {
            *gmap.entry(c).or_insert(ZERO) += z;
        }
        for (&c, &z) in &gmap {
            g_norm += z.norm_sqr();
            g_x += z.conj() * self.x[c];
            g_hx += z.conj() * self.hx[c];
        }
        // H g from sparse columns, accumulated by row; ordered maps keep the
        // floating-point summation order reproducible
        let mut hg: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (&c, &z) in &gmap {
            for (row, v) in h.column(c) {
                *hg.entry(row).or_insert(ZERO) += v * z;
            }
        }
        let g_hg: f64 = hg.iter().filter_map(|(r, v)| gmap.get(r).map(|z| (z.conj() * v).re)).sum();

        self.norm_sq += -2.0 * scale * g_x.re + scale * scale * g_norm;
        self.quad += -2.0 * scale * g_hx.re + scale * scale * g_hg;
        for (k, gs) in self.ground.iter().enumerate() {
            let proj: Complex64 = gmap.iter().map(|(&c, &z)| gs[c].conj() * z).sum();
            self.overlaps[k] -= proj * scale;
        }
        for (&c, &z) in &gmap {
            self.x[c] -= z * scale;
        }
        for (&r, &v) in &hg {
            self.hx[r] -= v * scale;
        }
        self.t += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub rayleigh_energy: f64,
    pub fidelity: Option<f64>,
    pub norm: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.last().and_then(|r| r.fidelity)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "rayleigh_energy", "fidelity", "norm", "step_size"])?;
        for r in &self.rows {
            out.write_record([
                r.t.to_string(),
                format!("{:.16e}", r.rayleigh_energy),
                r.fidelity.map(|f| format!("{f:.16e}")).unwrap_or_default(),
                format!("{:.16e}", r.norm),
                format!("{:.16e}", r.step_size),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Everything `run` needs besides the element source and the RNG.
#[derive(Debug, Clone)]
pub struct RunSetup<'a> {
    pub h: &'a PauliHamiltonian,
    pub sigma: f64,
    pub m_r: usize,
    pub m_c: usize,
    pub schedule: StepSchedule,
    pub iterations: usize,
    pub renorm_period: usize,
    pub norm_floor: f64,
    pub initial: StateVector,
    pub ground: Vec<StateVector>,
}

/// Run the iteration and record one trace row per step (row 0 is the
/// initial guess).
pub fn run<R: Rng + ?Sized>(setup: &RunSetup<'_>, elements: &dyn MatrixElements, rng: &mut R) -> Result<RunTrace> {
    let n = elements.dim();
    if setup.m_r == 0 || setup.m_r > n || setup.m_c == 0 || setup.m_c > n {
        return Err(Error::InvalidParameter(format!(
            "m_r = {} and m_c = {} must lie in 1..={n}",
            setup.m_r, setup.m_c
        )));
    }
    if setup.initial.norm_sqr() == 0.0 {
        return Err(Error::InvalidParameter("initial guess is the zero vector".into()));
    }
    let mut state = IterateState::new(setup.initial.clone(), setup.h, setup.ground.clone())?;
    let mut trace = RunTrace { rows: Vec::with_capacity(setup.iterations + 1) };
    let row = |s: &IterateState, a: f64| TraceRow {
        t: s.t,
        rayleigh_energy: s.rayleigh(),
        fidelity: s.fidelity(),
        norm: s.norm(),
        step_size: a,
    };
    trace.rows.push(row(&state, 0.0));
    for t in 0..setup.iterations {
        let a = setup.schedule.at(t);
        let sample = sample_gradient(&state.x, elements, setup.m_r, setup.m_c, rng)?;
        state.step(&sample.g, a, setup.sigma, setup.h)?;
        if !state.norm_sq.is_finite() || state.norm_sq > 1e300 {
            return Err(Error::Diverged(state.t));
        }
        if state.norm_sq < setup.norm_floor {
            return Err(Error::NormUnderflow { norm_sq: state.norm_sq, floor: setup.norm_floor });
        }
        if setup.renorm_period > 0 && state.t % setup.renorm_period == 0 {
            state.renormalize(setup.h)?;
        }
        trace.rows.push(row(&state, a));
    }
    Ok(trace)
}

/// Average of `g` over every pair of row and column subsets of the given
/// sizes; equals `E[g]` exactly.
pub fn exhaustive_mean(x: &[Complex64], elements: &dyn MatrixElements, m_r: usize, m_c: usize) -> Result<StateVector> {
    let n = elements.dim();
    if m_r == 0 || m_r > n || m_c == 0 || m_c > n {
        return Err(Error::InvalidParameter(format!("m_r = {m_r}, m_c = {m_c} out of range for N = {n}")));
    }
    let row_sets: Vec<Vec<usize>> = (0..n).combinations(m_r).collect();
    let col_sets: Vec<Vec<usize>> = (0..n).combinations(m_c).collect();
    let mut acc = StateVector::zeros(n);
    for rows in &row_sets {
        for cols in &col_sets {
            for (c, z) in gradient_on(x, elements, rows, cols)? {
                acc[c] += z;
            }
        }
    }
    let count = (row_sets.len() * col_sets.len()) as f64;
    acc.iter_mut().for_each(|z| *z /= count);
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCheckReport {
    pub trials: usize,
    /// Largest `|mean − expected| / standard error` over real and imaginary
    /// parts of all coordinates.
    pub max_z: f64,
    /// Empirical `E‖g‖²`.
    pub second_moment: f64,
    pub second_moment_se: f64,
    /// Structured bound on `E‖g‖²`.
    pub bound: f64,
}

impl MeanCheckReport {
    pub fn mean_ok(&self, z: f64) -> bool {
        self.max_z <= z
    }

    pub fn bound_ok(&self, sigmas: f64) -> bool {
        self.second_moment <= self.bound + sigmas * self.second_moment_se
    }
}

/// Monte Carlo check of `E[g] = (m_r m_c / N²) P x` and of the
/// second-moment bound
/// `m_c(N−m_c)/(N(N−1)) Σ|(Px)_c|² + m_c(m_c−1)/(N(N−1)) ‖Px‖² + (N−m_r)/N ‖P‖² ‖x‖²`.
///
/// `p_x` is `P x` and `p_norm` is `‖P‖` for the matrix behind `elements`.
pub fn conditional_mean_check<R: Rng + ?Sized>(
    x: &[Complex64],
    p_x: &[Complex64],
    p_norm: f64,
    elements: &dyn MatrixElements,
    m_r: usize,
    m_c: usize,
    trials: usize,
    rng: &mut R,
) -> Result<MeanCheckReport> {
    let n = elements.dim();
    let nf = n as f64;
    let mut s1 = vec![(0.0f64, 0.0f64); n];
    let mut s2 = vec![(0.0f64, 0.0f64); n];
    let (mut m1, mut m2) = (0.0, 0.0);
    for _ in 0..trials {
        let sample = sample_gradient(x, elements, m_r, m_c, rng)?;
        let mut sq = 0.0;
        for &(c, z) in &sample.g {
            s1[c].0 += z.re;
            s1[c].1 += z.im;
            s2[c].0 += z.re * z.re;
            s2[c].1 += z.im * z.im;
            sq += z.norm_sqr();
        }
        m1 += sq;
        m2 += sq * sq;
    }
    let tf = trials as f64;
    let factor = (m_r * m_c) as f64 / (nf * nf);
    let mut max_z: f64 = 0.0;
    for c in 0..n {
        let want = p_x[c] * factor;
        for (sum, sum_sq, target) in [(s1[c].0, s2[c].0, want.re), (s1[c].1, s2[c].1, want.im)] {
            let mean = sum / tf;
            let var = (sum_sq / tf - mean * mean).max(0.0);
            let se = (var / tf).sqrt();
            let dev = (mean - target).abs();
            let z = if se > 0.0 { dev / se } else if dev <= 1e-12 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
        }
    }
    let second_moment = m1 / tf;
    let second_moment_se = ((m2 / tf - second_moment * second_moment).max(0.0) / tf).sqrt();
    let px_sq: f64 = p_x.iter().map(|z| z.norm_sqr()).sum();
    let x_sq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    let (mr, mc) = (m_r as f64, m_c as f64);
    let bound = if n > 1 {
        mc * (nf - mc) / (nf * (nf - 1.0)) * px_sq
            + mc * (mc - 1.0) / (nf * (nf - 1.0)) * px_sq
            + (nf - mr) / nf * p_norm * p_norm * x_sq
    } else {
        px_sq
    };
    Ok(MeanCheckReport { trials, max_z, second_moment, second_moment_se, bound })
}
