//! Matrix-element estimation of the filtered operator and the persistent
//! element cache.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fejer::FejerExpansion;
use crate::filter::FilteredOperator;
use crate::model::PauliHamiltonian;
use crate::operator::{DenseHermitian, LinearOperator, StateVector};
use crate::rng::{substream, TAG_FRESH, TAG_ORACLE};

/// Columns are memoized while `N` stays at or below this size.
const COLUMN_MEMO_LIMIT: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Exact,
    HadamardBlock,
    TrotterFourier,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Exact => "exact",
            Regime::HadamardBlock => "hadamard_block",
            Regime::TrotterFourier => "trotter_fourier",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Regime::Exact),
            "hadamard_block" => Ok(Regime::HadamardBlock),
            "trotter_fourier" => Ok(Regime::TrotterFourier),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementEstimate {
    pub i: usize,
    pub j: usize,
    pub value: Complex64,
    pub shots_used: u64,
    pub regime: Regime,
}

/// `Trotter steps = max(k² + offset, floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepsRule {
    pub offset: usize,
    pub floor: usize,
}

impl Default for StepsRule {
    fn default() -> Self {
        Self { offset: 20, floor: 50 }
    }
}

impl StepsRule {
    pub fn steps(&self, k: usize) -> usize {
        (k * k + self.offset).max(self.floor).max(1)
    }
}

/// One Hadamard-test estimate of `C·w`.
///
/// The real part is `C(2k − S)/S` with `k ~ Binomial(S, (1 + Re w)/2)`, the
/// imaginary part likewise with `Im w`, so the estimate is unbiased.
/// `shots = None` returns `C·w` without sampling noise.
pub fn hadamard_sample<R: Rng + ?Sized>(w: Complex64, c: f64, shots: Option<u64>, rng: &mut R) -> Result<Complex64> {
    if !(w.norm() <= 1.0 + 1e-9) {
        return Err(Error::InvalidNormalization(w.norm()));
    }
    let Some(s) = shots else {
        return Ok(w * c);
    };
    if s == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    let mut part = |x: f64| -> Result<f64> {
        let p = ((1.0 + x) / 2.0).clamp(0.0, 1.0);
        let k = Binomial::new(s, p).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng);
        Ok(c * (2.0 * k as f64 - s as f64) / s as f64)
    };
    let re = part(w.re)?;
    let im = part(w.im)?;
    Ok(Complex64::new(re, im))
}

/// `⌈4C²/ε² · ln(4/δ)⌉`, the shot count for `P(|ξ − w| ≥ ε) ≤ δ`.
pub fn hoeffding_shots(c: f64, eps: f64, delta: f64) -> u64 {
    (4.0 * c * c / (eps * eps) * (4.0 / delta).ln()).ceil() as u64
}

/// First-order product formula for `e^{i(sH + b)t}` applied to `v`:
/// `e^{ibt} (Π_k e^{iθ_k P_k})^r v` with terms in builder order.
pub fn trotter_evolve(h: &PauliHamiltonian, scale: f64, shift: f64, t: f64, steps: usize, v: &[Complex64]) -> Vec<Complex64> {
    let mut cur = v.to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); v.len()];
    let dt = t / steps as f64;
    for _ in 0..steps {
        for term in h.terms() {
            let theta = scale * term.coeff() * dt;
            let (cs, sn) = (theta.cos(), theta.sin());
            if term.is_identity() {
                let ph = Complex64::from_polar(1.0, theta);
                cur.iter_mut().for_each(|z| *z *= ph);
                continue;
            }
            for (col, &amp) in cur.iter().enumerate() {
                let (row, phase) = term.act_on_basis(col);
                scratch[row] = phase * amp;
            }
            let isn = Complex64::new(0.0, sn);
            for (z, p) in cur.iter_mut().zip(&scratch) {
                *z = *z * cs + isn * p;
            }
        }
    }
    let global = Complex64::from_polar(1.0, shift * t);
    cur.iter_mut().for_each(|z| *z *= global);
    cur
}

/// Largest entry of `U_trotter − e^{i(sH + b)t}`, the exact propagator
/// taken from a dense matrix exponential.
pub fn trotter_unitary_error(h: &PauliHamiltonian, scale: f64, shift: f64, t: f64, steps: usize) -> Result<f64> {
    let dense = h.to_dense()?;
    let dim = h.dim();
    let gen = dense.matrix() * Complex64::new(0.0, scale * t) + DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(0.0, shift * t);
    let exact = gen.exp();
    let mut worst: f64 = 0.0;
    for j in 0..dim {
        let col = trotter_evolve(h, scale, shift, t, steps, &StateVector::basis(dim, j));
        for (i, z) in col.iter().enumerate() {
            worst = worst.max((z - exact[(i, j)]).norm());
        }
    }
    Ok(worst)
}

/// `α = ‖H̄‖_bound / π` so that `‖H̄/α‖ ≤ π`.
pub fn fejer_alpha(op: &FilteredOperator) -> f64 {
    op.transformed_norm_bound() / PI
}

/// `[oracle]` block of a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub regime: Regime,
    /// Shots per Hadamard test; absent means noiseless.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default = "default_fejer_order")]
    pub fejer_order: usize,
    #[serde(default)]
    pub steps_rule: StepsRule,
    #[serde(default = "default_true")]
    pub hermitian_fill: bool,
}

fn default_fejer_order() -> usize {
    30
}

fn default_true() -> bool {
    true
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            regime: Regime::Exact,
            shots: None,
            fejer_order: default_fejer_order(),
            steps_rule: StepsRule::default(),
            hermitian_fill: true,
        }
    }
}

/// Estimator for `⟨i|p(H)|j⟩` in one of the three regimes.
pub struct ElementOracle {
    op: FilteredOperator,
    regime: Regime,
    shots: Option<u64>,
    expansion: Option<FejerExpansion>,
    steps_rule: StepsRule,
    columns: RwLock<HashMap<usize, Arc<Vec<Complex64>>>>,
    /// Per column: `U_m e_j` for `m = -K..=K`.
    evolved: RwLock<HashMap<usize, Arc<Vec<Vec<Complex64>>>>>,
}

impl fmt::Debug for ElementOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElementOracle")
            .field("regime", &self.regime)
            .field("shots", &self.shots)
            .field("dim", &self.op.dim())
            .finish()
    }
}

impl ElementOracle {
    pub fn exact(op: FilteredOperator) -> Self {
        Self::with_parts(op, Regime::Exact, None, None, StepsRule::default())
    }

    pub fn hadamard(op: FilteredOperator, shots: Option<u64>) -> Self {
        Self::with_parts(op, Regime::HadamardBlock, shots, None, StepsRule::default())
    }

    pub fn trotter_fourier(op: FilteredOperator, order: usize, steps_rule: StepsRule, shots: Option<u64>) -> Result<Self> {
        if op.hamiltonian().n_qubits() > 10 {
            return Err(Error::TooLarge { what: "Trotter statevector qubits", size: op.hamiltonian().n_qubits(), limit: 10 });
        }
        let exp = FejerExpansion::build(op.degree(), fejer_alpha(&op), order)?;
        Ok(Self::with_parts(op, Regime::TrotterFourier, shots, Some(exp), steps_rule))
    }

    pub fn from_config(op: FilteredOperator, cfg: &OracleConfig) -> Result<Self> {
        match cfg.regime {
            Regime::Exact => Ok(Self::exact(op)),
            Regime::HadamardBlock => Ok(Self::hadamard(op, cfg.shots)),
            Regime::TrotterFourier => Self::trotter_fourier(op, cfg.fejer_order, cfg.steps_rule, cfg.shots),
        }
    }

    fn with_parts(op: FilteredOperator, regime: Regime, shots: Option<u64>, expansion: Option<FejerExpansion>, steps_rule: StepsRule) -> Self {
        Self {
            op,
            regime,
            shots,
            expansion,
            steps_rule,
            columns: RwLock::new(HashMap::new()),
            evolved: RwLock::new(HashMap::new()),
        }
    }

    pub fn operator(&self) -> &FilteredOperator {
        &self.op
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    pub fn expansion(&self) -> Option<&FejerExpansion> {
        self.expansion.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        let dim = self.dim();
        if i >= dim || j >= dim {
            return Err(Error::IndexOutOfRange { row: i, col: j, dim });
        }
        Ok(())
    }

    fn column(&self, j: usize) -> Result<Arc<Vec<Complex64>>> {
        if let Some(c) = self.columns.read().expect("column memo poisoned").get(&j) {
            return Ok(c.clone());
        }
        let col = Arc::new(self.op.column(j)?);
        if self.dim() <= COLUMN_MEMO_LIMIT {
            self.columns.write().expect("column memo poisoned").entry(j).or_insert_with(|| col.clone());
        }
        Ok(col)
    }

    fn evolved_column(&self, j: usize) -> Arc<Vec<Vec<Complex64>>> {
        if let Some(c) = self.evolved.read().expect("evolution memo poisoned").get(&j) {
            return c.clone();
        }
        let exp = self.expansion.as_ref().expect("trotter oracle has an expansion");
        let (s, b) = self.op.scale_shift();
        let e_j = StateVector::basis(self.dim(), j);
        let kk = exp.order as i64;
        let cols: Vec<Vec<Complex64>> = (-kk..=kk)
            .map(|m| {
                if m == 0 {
                    return e_j.0.clone();
                }
                let t = m as f64 / exp.alpha;
                trotter_evolve(self.op.hamiltonian(), s, b, t, self.steps_rule.steps(m.unsigned_abs() as usize), &e_j)
            })
            .collect();
        let cols = Arc::new(cols);
        self.evolved.write().expect("evolution memo poisoned").entry(j).or_insert_with(|| cols.clone());
        cols
    }

    /// Noise-free target of this regime: `⟨i|p(H)|j⟩`, or the Trotterized
    /// Fourier sum for the Trotter regime.
    pub fn noiseless(&self, i: usize, j: usize) -> Result<Complex64> {
        self.check(i, j)?;
        match self.regime {
            Regime::Exact | Regime::HadamardBlock => Ok(self.column(j)?[i]),
            Regime::TrotterFourier => {
                let exp = self.expansion.as_ref().expect("trotter oracle has an expansion");
                let cols = self.evolved_column(j);
                Ok(exp.coeffs.iter().zip(cols.iter()).map(|(c, u)| c * u[i]).sum())
            }
        }
    }

    /// Exact `⟨i|p(H)|j⟩` regardless of regime.
    pub fn element_exact(&self, i: usize, j: usize) -> Result<Complex64> {
        self.check(i, j)?;
        Ok(self.column(j)?[i])
    }

    pub fn estimate<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> Result<ElementEstimate> {
        self.check(i, j)?;
        let (value, shots_used) = match self.regime {
            Regime::Exact => (self.column(j)?[i], 0),
            Regime::HadamardBlock => {
                let c = self.op.normalization();
                let w = self.column(j)?[i] / c;
                (hadamard_sample(w, c, self.shots, rng)?, self.shots.unwrap_or(0))
            }
            Regime::TrotterFourier => {
                let exp = self.expansion.as_ref().expect("trotter oracle has an expansion");
                let cols = self.evolved_column(j);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, u) in exp.coeffs.iter().zip(cols.iter()) {
                    acc += c * hadamard_sample(u[i], 1.0, self.shots, rng)?;
                }
                (acc, self.shots.unwrap_or(0) * exp.coeffs.len() as u64)
            }
        };
        Ok(ElementEstimate { i, j, value, shots_used, regime: self.regime })
    }
}

/// Read access to the entries of a (possibly perturbed) matrix.
pub trait MatrixElements: Sync {
    fn dim(&self) -> usize;

    fn element(&self, i: usize, j: usize) -> Result<Complex64>;
}

impl MatrixElements for DenseHermitian {
    fn dim(&self) -> usize {
        LinearOperator::dim(self)
    }

    fn element(&self, i: usize, j: usize) -> Result<Complex64> {
        let dim = LinearOperator::dim(self);
        if i >= dim || j >= dim {
            return Err(Error::IndexOutOfRange { row: i, col: j, dim });
        }
        Ok(DenseHermitian::element(self, i, j))
    }
}

/// Each `(i, j)` is estimated once and then frozen, which fixes a single
/// perturbed matrix `p̃(H)` for every later query.
#[derive(Debug)]
pub struct ElementCache {
    oracle: ElementOracle,
    seed: u64,
    hermitian_fill: bool,
    map: RwLock<HashMap<(usize, usize), ElementEstimate>>,
}

impl ElementCache {
    pub fn new(oracle: ElementOracle, seed: u64, hermitian_fill: bool) -> Self {
        Self { oracle, seed, hermitian_fill, map: RwLock::new(HashMap::new()) }
    }

    pub fn oracle(&self) -> &ElementOracle {
        &self.oracle
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hermitian_fill(&self) -> bool {
        self.hermitian_fill
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn compute(&self, i: usize, j: usize, path: &[u64]) -> Result<ElementEstimate> {
        let mut rng = substream(self.seed, path);
        let mut est = self.oracle.estimate(i, j, &mut rng)?;
        if self.hermitian_fill && i == j {
            est.value = Complex64::new(est.value.re, 0.0);
        }
        Ok(est)
    }

    /// Stored value for `(i, j)`, estimating it on first use.
    pub fn get_or_estimate(&self, i: usize, j: usize) -> Result<ElementEstimate> {
        if let Some(e) = self.map.read().expect("cache poisoned").get(&(i, j)) {
            return Ok(*e);
        }
        let (a, b) = if self.hermitian_fill && i > j { (j, i) } else { (i, j) };
        let est = self.compute(a, b, &[TAG_ORACLE, a as u64, b as u64])?;
        let mut map = self.map.write().expect("cache poisoned");
        let stored = *map.entry((a, b)).or_insert(est);
        if self.hermitian_fill && a != b {
            map.entry((b, a)).or_insert(ElementEstimate { i: b, j: a, value: stored.value.conj(), ..stored });
        }
        Ok(map[&(i, j)])
    }

    pub fn get(&self, i: usize, j: usize) -> Result<Complex64> {
        Ok(self.get_or_estimate(i, j)?.value)
    }

    /// Fresh, uncached estimate keyed by `draw`; used for unbiasedness checks.
    pub fn fresh(&self, i: usize, j: usize, draw: u64) -> Result<Complex64> {
        self.oracle.check(i, j)?;
        Ok(self.compute(i, j, &[TAG_FRESH, i as u64, j as u64, draw])?.value)
    }

    /// Fill every entry (in parallel) and return the dense matrix `p̃(H)`.
    pub fn fill_dense(&self) -> Result<DMatrix<Complex64>> {
        let dim = self.oracle.dim();
        if self.oracle.operator().hamiltonian().n_qubits() > crate::model::MAX_DENSE_QUBITS {
            return Err(Error::TooLarge {
                what: "qubit count",
                size: self.oracle.operator().hamiltonian().n_qubits(),
                limit: crate::model::MAX_DENSE_QUBITS,
            });
        }
        let pairs: Vec<(usize, usize)> = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.hermitian_fill || i <= j)
            .collect();
        pairs.par_iter().try_for_each(|&(i, j)| self.get_or_estimate(i, j).map(|_| ()))?;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = self.get(i, j)?;
            }
        }
        Ok(m)
    }

    /// All stored entries sorted by `(i, j)`.
    pub fn entries(&self) -> Vec<ElementEstimate> {
        let mut v: Vec<_> = self.map.read().expect("cache poisoned").values().copied().collect();
        v.sort_by_key(|e| (e.i, e.j));
        v
    }

    /// CSV rows `i, j, re, im, shots, regime` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "re", "im", "shots", "regime"])?;
        for e in self.entries() {
            out.write_record([
                e.i.to_string(),
                e.j.to_string(),
                format!("{:.16e}", e.value.re),
                format!("{:.16e}", e.value.im),
                e.shots_used.to_string(),
                e.regime.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Merge rows from a CSV written by [`ElementCache::write_csv`]; rows
    /// already present are kept.
    pub fn read_csv<R: Read>(&self, r: R) -> Result<usize> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut map = self.map.write().expect("cache poisoned");
        let mut added = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 6 {
                return Err(Error::Config(format!("cache row has {} fields, expected 6", rec.len())));
            }
            let parse_err = |what: &str| Error::Config(format!("bad {what} in cache row {:?}", rec.position()));
            let i: usize = rec[0].parse().map_err(|_| parse_err("i"))?;
            let j: usize = rec[1].parse().map_err(|_| parse_err("j"))?;
            let re: f64 = rec[2].parse().map_err(|_| parse_err("re"))?;
            let im: f64 = rec[3].parse().map_err(|_| parse_err("im"))?;
            let shots: u64 = rec[4].parse().map_err(|_| parse_err("shots"))?;
            let regime: Regime = rec[5].parse()?;
            self.oracle.check(i, j)?;
            if let std::collections::hash_map::Entry::Vacant(e) = map.entry((i, j)) {
                e.insert(ElementEstimate { i, j, value: Complex64::new(re, im), shots_used: shots, regime });
                added += 1;
            }
        }
        Ok(added)
    }
}

impl MatrixElements for ElementCache {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }

    fn element(&self, i: usize, j: usize) -> Result<Complex64> {
        self.get(i, j)
    }
}

/// View of a cache that draws a new uncached estimate on every query.
pub struct FreshElements<'a> {
    cache: &'a ElementCache,
    counter: std::sync::atomic::AtomicU64,
}

impl<'a> FreshElements<'a> {
    pub fn new(cache: &'a ElementCache, start: u64) -> Self {
        Self { cache, counter: std::sync::atomic::AtomicU64::new(start) }
    }
}

impl MatrixElements for FreshElements<'_> {
    fn dim(&self) -> usize {
        self.cache.dim()
    }

    fn element(&self, i: usize, j: usize) -> Result<Complex64> {
        let draw = self.counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.cache.fresh(i, j, draw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{bounds_from_fractions, FilterSpec};
    use crate::model::{build_tfim, exact_reference, PauliString};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn filtered(n: usize, d: f64, degree: usize) -> FilteredOperator {
        let h = build_tfim(n, 1.0, d).unwrap();
        let r = exact_reference(&h).unwrap();
        let (lb, ub) = bounds_from_fractions(&r, 0.2, 0.2).unwrap();
        FilteredOperator::new(h, Some(FilterSpec::from_reference(lb, ub, degree, &r).unwrap()))
    }

    #[test]
    fn exact_matches_dense_polynomial() {
        let op = filtered(2, 0.8, 3);
        let dense = op.to_dense().unwrap();
        let o = ElementOracle::exact(op);
        for i in 0..4 {
            for j in 0..4 {
                assert!((o.element_exact(i, j).unwrap() - dense.element(i, j)).norm() < 1e-10);
            }
        }
        assert!(matches!(o.element_exact(4, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn degree_zero_is_identity_and_degree_one_is_transformed_h() {
        let h = build_tfim(2, 1.0, 1.0).unwrap();
        let r = exact_reference(&h).unwrap();
        let (lb, ub) = bounds_from_fractions(&r, 0.2, 0.2).unwrap();
        let o0 = ElementOracle::exact(FilteredOperator::new(h.clone(), Some(FilterSpec::from_reference(lb, ub, 0, &r).unwrap())));
        let spec1 = FilterSpec::from_reference(lb, ub, 1, &r).unwrap();
        let o1 = ElementOracle::exact(FilteredOperator::new(h.clone(), Some(spec1)));
        let (s, b) = spec1.scale_shift();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((o0.element_exact(i, j).unwrap() - Complex64::new(want, 0.0)).norm() < 1e-14);
            }
            let diag = h.element(i, i) * s + b;
            assert!((o1.element_exact(i, i).unwrap() - diag).norm() < 1e-14);
        }
    }

    #[test]
    fn hadamard_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = hadamard_sample(Complex64::new(1.0, 0.0), 2.5, Some(10), &mut rng).unwrap();
        assert_eq!(v.re, 2.5);
        assert!(matches!(
            hadamard_sample(Complex64::new(1.1, 0.0), 1.0, Some(10), &mut rng),
            Err(Error::InvalidNormalization(_))
        ));
        let w = Complex64::new(0.3, -0.2);
        assert_eq!(hadamard_sample(w, 2.0, None, &mut rng).unwrap(), w * 2.0);
        // balanced coin: mean of Re over many draws near 0
        let mean: f64 = (0..4000)
            .map(|_| hadamard_sample(Complex64::new(0.0, 0.0), 1.0, Some(1), &mut rng).unwrap().re)
            .sum::<f64>()
            / 4000.0;
        assert!(mean.abs() < 5.0 / 4000f64.sqrt());
    }

    #[test]
    fn hoeffding_sample_size() {
        assert_eq!(hoeffding_shots(1.0, 0.1, 0.05), 1753);
    }

    #[test]
    fn steps_rule_default() {
        let r = StepsRule::default();
        assert_eq!(r.steps(6), 56);
        assert_eq!(r.steps(2), 50);
    }

    #[test]
    fn trotter_is_exact_for_a_single_term() {
        let h = PauliHamiltonian::new(2, vec![PauliString::parse("XZ", 0.7).unwrap()]).unwrap();
        let d = h.to_dense().unwrap();
        let t = 1.3;
        let u = (d.matrix() * Complex64::new(0.0, t)).exp();
        let v = StateVector::basis(4, 2);
        let got = trotter_evolve(&h, 1.0, 0.0, t, 1, &v);
        for r in 0..4 {
            assert!((got[r] - u[(r, 2)]).norm() < 1e-12);
        }
    }

    #[test]
    fn trotter_fourier_noiseless_close_to_exact() {
        let o = ElementOracle::trotter_fourier(filtered(2, 1.0, 3), 30, StepsRule::default(), None).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let d = (o.noiseless(i, j).unwrap() - o.element_exact(i, j).unwrap()).norm();
                worst = worst.max(d);
            }
        }
        let c = o.operator().normalization();
        assert!(worst < 0.2 * c, "worst {worst}, C {c}");
    }

    #[test]
    fn cache_is_frozen_and_hermitian() {
        let cache = ElementCache::new(ElementOracle::hadamard(filtered(3, 0.9, 3), Some(100)), 11, true);
        let a = cache.get(3, 5).unwrap();
        let b = cache.get(3, 5).unwrap();
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(cache.get(5, 3).unwrap(), a.conj());
        assert_eq!(cache.get(2, 2).unwrap().im, 0.0);
        let m = cache.fill_dense().unwrap();
        assert_eq!(m.clone(), m.adjoint());
    }

    #[test]
    fn cache_is_order_independent() {
        let mk = || ElementCache::new(ElementOracle::hadamard(filtered(3, 0.9, 3), Some(50)), 5, false);
        let (a, b) = (mk(), mk());
        let x = a.get(1, 6).unwrap();
        let _ = b.get(7, 7).unwrap();
        let _ = b.get(0, 2).unwrap();
        assert_eq!(b.get(1, 6).unwrap(), x);
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let cache = ElementCache::new(ElementOracle::hadamard(filtered(2, 0.6, 3), Some(37)), 2, true);
        cache.fill_dense().unwrap();
        let mut buf = Vec::new();
        cache.write_csv(&mut buf).unwrap();
        let other = ElementCache::new(ElementOracle::hadamard(filtered(2, 0.6, 3), Some(37)), 99, true);
        assert_eq!(other.read_csv(buf.as_slice()).unwrap(), 16);
        for (x, y) in cache.entries().iter().zip(other.entries()) {
            assert_eq!(x.value.re.to_bits(), y.value.re.to_bits());
            assert_eq!(x.value.im.to_bits(), y.value.im.to_bits());
            assert_eq!((x.i, x.j, x.shots_used, x.regime), (y.i, y.j, y.shots_used, y.regime));
        }
    }

    #[test]
    fn fresh_draws_differ_but_cached_do_not() {
        let cache = ElementCache::new(ElementOracle::hadamard(filtered(2, 0.6, 3), Some(10)), 3, false);
        let fresh = FreshElements::new(&cache, 0);
        let draws: Vec<_> = (0..20).map(|_| fresh.element(0, 1).unwrap()).collect();
        assert!(draws.iter().any(|d| *d != draws[0]));
        assert_eq!(cache.element(0, 1).unwrap(), cache.element(0, 1).unwrap());
    }

    #[test]
    fn oracle_config_defaults() {
        let cfg: OracleConfig = toml::from_str("regime = \"hadamard_block\"\nshots = 1000\n").unwrap();
        assert_eq!(cfg.fejer_order, 30);
        assert!(cfg.hermitian_fill);
        assert_eq!(cfg.steps_rule, StepsRule::default());
    }
}
