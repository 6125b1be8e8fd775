//! Acceptance checks. Each test prints one `ACCEPTANCE <id> PASS|FAIL ...` line.

use std::time::{Duration, Instant};

use qrpm::diagnostics::{growing_rate, linear_fit, max_admissible_step, perturbation_report, weyl_audit};
use qrpm::engine::{conditional_mean_check, exhaustive_mean, run, RunSetup, StepSchedule};
use qrpm::fejer::{interior_grid, reconstruction_error, FejerExpansion};
use qrpm::filter::{bounds_from_fractions, gap_growth, gap_growth_slope, FilterSpec, FilteredOperator};
use qrpm::harness::{point_report, random_hermitian, recursion_drift, run_point, trotter_slope, ExperimentConfig, PointContext};
use qrpm::model::{build_tfim, build_xxz, exact_reference, PauliHamiltonian, PauliString};
use qrpm::oracle::{fejer_alpha, hadamard_sample, hoeffding_shots, ElementCache, ElementOracle};
use qrpm::rng::substream;
use qrpm::{Complex64, LinearOperator, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TFIM_GRID: [f64; 11] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5];
const XXZ_GRID: [f64; 11] = [-0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn verdict(id: &str, pass: bool, elapsed: Duration, limit: Duration, detail: String) {
    let ok = pass && elapsed <= limit;
    println!(
        "ACCEPTANCE {id} {} elapsed={:.3}s limit={}s {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

fn filtered(h: PauliHamiltonian, f_ub: f64, f_lb: f64, degree: usize) -> FilteredOperator {
    let r = exact_reference(&h).unwrap();
    let (lb, ub) = bounds_from_fractions(&r, f_ub, f_lb).unwrap();
    let spec = FilterSpec::from_reference(lb, ub, degree, &r).unwrap();
    FilteredOperator::new(h, Some(spec))
}

fn half_gap(op: &FilteredOperator) -> f64 {
    let p = op.to_dense().unwrap();
    perturbation_report(&p, &p).unwrap().half_gap
}

#[test]
fn criterion_01_half_gap_table() {
    let start = Instant::now();
    let tfim_rhs = [2.37, 2.86, 3.25, 3.54, 3.74, 3.88, 3.97, 4.03, 4.07, 4.09, 4.11];
    let xxz_rhs = [3.28, 4.07, 5.03, 6.39, 8.03, 9.72, 11.62, 13.96, 16.6, 19.35, 22.33];
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for (d, want) in TFIM_GRID.iter().zip(tfim_rhs) {
        let got = half_gap(&filtered(build_tfim(2, 1.0, *d).unwrap(), 0.2, 0.2, 3));
        worst = worst.max((got - want).abs());
        rows.push(format!("tfim:{d}:{got:.3}/{want}"));
    }
    for (d, want) in XXZ_GRID.iter().zip(xxz_rhs) {
        let got = half_gap(&filtered(build_xxz(2, 1.0, *d).unwrap(), 0.2, 0.2, 3));
        worst = worst.max((got - want).abs());
        rows.push(format!("xxz:{d}:{got:.3}/{want}"));
    }
    verdict("1", worst <= 0.02, start.elapsed(), Duration::from_secs(5), format!("max_dev={worst:.4} rows={}", rows.join(",")));
}

#[test]
fn criterion_02_exhaustive_unbiasedness() {
    let start = Instant::now();
    let p = filtered(build_tfim(2, 1.0, 1.0).unwrap(), 0.2, 0.2, 3).to_dense().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = StateVector::random(4, &mut rng);
        let mean = exhaustive_mean(&x, &p, 1, 1).unwrap();
        let px = p.apply(&x).unwrap();
        for c in 0..4 {
            worst = worst.max((mean[c] - px[c] / 16.0).norm());
        }
    }
    verdict("2", worst <= 1e-12, start.elapsed(), Duration::from_secs(1), format!("max_error={worst:.3e}"));
}

#[test]
fn criterion_03_estimator_moments() {
    let start = Instant::now();
    let p = filtered(build_tfim(4, 1.0, 1.0).unwrap(), 0.2, 0.2, 3).to_dense().unwrap();
    let norm = p.spectral_norm().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = StateVector::random(16, &mut rng);
    let px = p.apply(&x).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for m in [1, 4] {
        let rep = conditional_mean_check(&x, &px, norm, &p, m, m, 100_000, &mut rng).unwrap();
        pass &= rep.mean_ok(5.0) && rep.bound_ok(3.0);
        detail.push(format!(
            "m={m}:max_z={:.3},second_moment={:.4e},bound={:.4e}",
            rep.max_z, rep.second_moment, rep.bound
        ));
    }
    verdict("3", pass, start.elapsed(), Duration::from_secs(30), detail.join(" "));
}

fn convergence_config(model: &str, grid: &[f64]) -> ExperimentConfig {
    let values: Vec<String> = grid.iter().map(|v| v.to_string()).collect();
    ExperimentConfig::from_toml(&format!(
        r#"
seed = 2024
output_dir = "unused"
replicas = 100

[model]
model = "{model}"
n = 2
j = 1.0
d = 1.0

[filter]
f_ub = 0.2
f_lb = 0.2
degree = 3

[oracle]
regime = "trotter_fourier"
shots = 400000
fejer_order = 30

[engine]
m_r = 1
m_c = 1
a0 = 1.0
decay = 0.5
period = 10
iterations = 100

[sweep]
parameter = "d"
values = [{}]
"#,
        values.join(", ")
    ))
    .unwrap()
}

#[test]
fn criterion_04_convergence_full_grid() {
    let start = Instant::now();
    let cfg = convergence_config("tfim", &TFIM_GRID);
    let mut worst = f64::INFINITY;
    let mut rows = Vec::new();
    for p in cfg.points().unwrap() {
        let ctx = PointContext::build(&cfg, p).unwrap();
        let traces = run_point(&cfg, &ctx).unwrap();
        let mean = traces.iter().map(|t| t.final_fidelity().unwrap()).sum::<f64>() / traces.len() as f64;
        worst = worst.min(mean);
        rows.push(format!("{}:{mean:.4}", ctx.point.label));
    }
    verdict("4", worst >= 0.90, start.elapsed(), Duration::from_secs(600), format!("min_mean_fidelity={worst:.4} {}", rows.join(",")));
}

#[test]
fn criterion_05_growth_rate() {
    let start = Instant::now();
    let h = build_tfim(2, 1.0, 1.5).unwrap();
    let r = exact_reference(&h).unwrap();
    let op = filtered(h.clone(), 0.2, 0.2, 3);
    let sigma = op.orientation();
    let p = op.to_dense().unwrap();
    let mut eigs: Vec<f64> = r.eigenvalues.iter().map(|&l| sigma * op.eval(l)).collect();
    eigs.sort_by(f64::total_cmp);
    let a = 0.1;
    let limit = max_admissible_step(&eigs, r.degeneracy, 1, 1).unwrap();
    let rate = growing_rate(&eigs, r.degeneracy, a, 1, 1, 0.9).unwrap();
    let setup = RunSetup {
        h: &h,
        sigma,
        m_r: 1,
        m_c: 1,
        schedule: StepSchedule::constant(a).unwrap(),
        iterations: 60,
        renorm_period: 1000,
        norm_floor: 1e-200,
        initial: StateVector::uniform(4),
        ground: r.ground_states(),
    };
    let replicas = 500;
    let mut rbar = vec![0.0; setup.iterations + 1];
    for k in 0..replicas {
        let trace = run(&setup, &p, &mut substream(5, &[k])).unwrap();
        for (t, row) in trace.rows.iter().enumerate() {
            rbar[t] += row.fidelity.unwrap().powi(2) / replicas as f64;
        }
    }
    let ratios: Vec<f64> = (0..setup.iterations).filter(|&t| rbar[t] <= 0.1).map(|t| rbar[t + 1] / rbar[t]).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = a < limit && !ratios.is_empty() && min_ratio >= rate - 0.02;
    verdict(
        "5",
        pass,
        start.elapsed(),
        Duration::from_secs(120),
        format!("a={a} a_max={limit:.4} rate={rate:.4} min_ratio={min_ratio:.4} steps_checked={}", ratios.len()),
    );
}

#[test]
fn criterion_06_hoeffding_shots() {
    let start = Instant::now();
    let (eps, delta) = (0.1, 0.05);
    let shots = hoeffding_shots(1.0, eps, delta);
    let w = Complex64::new(0.3, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 10_000;
    let misses = (0..trials)
        .filter(|_| (hadamard_sample(w, 1.0, Some(shots), &mut rng).unwrap() - w).norm() >= eps)
        .count();
    let frac = misses as f64 / trials as f64;
    verdict("6", shots == 1753 && frac <= delta, start.elapsed(), Duration::from_secs(30), format!("shots={shots} miss_fraction={frac:.4}"));
}

#[test]
fn criterion_07_weyl_audit() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let a = random_hermitian(32, &mut rng);
        let e = random_hermitian(32, &mut rng);
        worst = worst.max(weyl_audit(&a, &e).unwrap());
    }
    verdict("7", worst <= 1e-9, start.elapsed(), Duration::from_secs(10), format!("max_violation={worst:.3e}"));
}

#[test]
fn criterion_08_interval_filter() {
    let start = Instant::now();
    let mut runs = 0;
    let mut lam1_in = 0;
    let (mut hyp, mut lam2_out) = (0, 0);
    let (mut hyp_top, mut overlap_ok) = (0, 0);
    let mut min_overlap = f64::INFINITY;
    for model in ["tfim", "xxz"] {
        let grid = if model == "tfim" { TFIM_GRID } else { XXZ_GRID };
        for seed in [1u64, 2, 3] {
            for shots in [1_000u64, 10_000, 100_000] {
                let values: Vec<String> = grid.iter().map(|v| v.to_string()).collect();
                let cfg = ExperimentConfig::from_toml(&format!(
                    r#"
seed = {seed}
output_dir = "unused"

[model]
model = "{model}"
n = 2
j = 1.0
d = 1.0

[filter]
f_ub = 0.2
f_lb = 0.2
degree = 3

[oracle]
regime = "hadamard_block"
shots = {shots}

[engine]
m_r = 1
m_c = 1
iterations = 1

[sweep]
parameter = "d"
values = [{}]
"#,
                    values.join(", ")
                ))
                .unwrap();
                for p in cfg.points().unwrap() {
                    let ctx = PointContext::build(&cfg, p).unwrap();
                    let rep = point_report(&ctx).unwrap();
                    runs += 1;
                    lam1_in += rep.lam1_in_interval() as usize;
                    if rep.hypothesis_holds {
                        hyp += 1;
                        lam2_out += rep.lam2_outside_interval() as usize;
                        if shots == 100_000 {
                            hyp_top += 1;
                            overlap_ok += (rep.min_overlap() >= 0.95) as usize;
                            min_overlap = min_overlap.min(rep.min_overlap());
                        }
                    }
                }
            }
        }
    }
    let pass = lam1_in == runs && lam2_out == hyp && overlap_ok == hyp_top && hyp_top > 0;
    verdict(
        "8",
        pass,
        start.elapsed(),
        Duration::from_secs(120),
        format!(
            "runs={runs} lam1_in={lam1_in} hypothesis={hyp} lam2_out={lam2_out} top_shots_hypothesis={hyp_top} overlap_ok={overlap_ok} min_overlap={min_overlap:.4}"
        ),
    );
}

#[test]
fn criterion_09_gap_growth_slope() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for lbar1 in [-1.5, -2.0, -3.0] {
        let pts: Vec<(usize, f64)> = gap_growth(lbar1, 0.0, 10).unwrap().into_iter().filter(|(l, _)| *l >= 2).collect();
        let xs: Vec<f64> = pts.iter().map(|(l, _)| *l as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, g)| g.ln()).collect();
        let slope = linear_fit(&xs, &ys).0;
        let want = gap_growth_slope(lbar1);
        let rel = (slope - want).abs() / want;
        worst = worst.max(rel);
        detail.push(format!("lbar1={lbar1}:slope={slope:.4}/{want:.4}"));
    }
    verdict("9", worst <= 0.05, start.elapsed(), Duration::from_secs(1), format!("max_rel_dev={worst:.4} {}", detail.join(",")));
}

#[test]
fn criterion_10_recursion_consistency() {
    let start = Instant::now();
    let worst = recursion_drift(&mut ChaCha8Rng::seed_from_u64(10), 1000).unwrap();
    verdict("10", worst <= 1e-8, start.elapsed(), Duration::from_secs(10), format!("max_relative_drift={worst:.3e}"));
}

#[test]
fn criterion_11_trotter_order() {
    let start = Instant::now();
    let slope = trotter_slope().unwrap();
    verdict("11", (slope + 1.0).abs() <= 0.15, start.elapsed(), Duration::from_secs(30), format!("slope={slope:.4}"));
}

#[test]
fn criterion_12_fejer_convergence() {
    let start = Instant::now();
    let op = filtered(build_tfim(2, 1.0, 1.0).unwrap(), 0.2, 0.2, 3);
    let alpha = fejer_alpha(&op);
    let grid = interior_grid(0.5, 401);
    let errs: Vec<f64> =
        [10, 30, 100].iter().map(|&k| reconstruction_error(&FejerExpansion::build(3, alpha, k).unwrap(), &grid)).collect();
    verdict(
        "12",
        errs[2] < errs[1] && errs[1] < errs[0],
        start.elapsed(),
        Duration::from_secs(5),
        format!("alpha={alpha:.4} err_k10={:.4e} err_k30={:.4e} err_k100={:.4e}", errs[0], errs[1], errs[2]),
    );
}

fn block_encoding_config(shots: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
seed = 11
output_dir = "unused"
replicas = 20

[model]
model = "tfim"
n = 6
j = 1.0
d = 1.0

[filter]
f_ub = 0.1
f_lb = 0.03
degree = 7

[oracle]
regime = "hadamard_block"
shots = {shots}

[engine]
m_r = 20
m_c = 20
a0 = 0.5
decay = 0.8
period = 500
iterations = 2000
"#
    ))
    .unwrap()
}

#[test]
fn criterion_13a_block_encoding_shot_ordering() {
    let start = Instant::now();
    let mut means = Vec::new();
    for shots in [10_000u64, 100_000, 1_000_000] {
        let cfg = block_encoding_config(shots);
        let ctx = PointContext::build(&cfg, cfg.points().unwrap().remove(0)).unwrap();
        let traces = run_point(&cfg, &ctx).unwrap();
        means.push(traces.iter().map(|t| t.final_fidelity().unwrap()).sum::<f64>() / traces.len() as f64);
    }
    verdict(
        "13a",
        means[0] < means[1] && means[1] < means[2],
        start.elapsed(),
        Duration::from_secs(600),
        format!("mean_fidelity_1e4={:.4} 1e5={:.4} 1e6={:.4}", means[0], means[1], means[2]),
    );
}

/// Five-qubit transverse-field chain padded with an idle qubit, so every
/// level is exactly two-fold degenerate.
fn padded_tfim() -> PauliHamiltonian {
    let base = build_tfim(5, 1.0, 1.0).unwrap();
    let terms = base.terms().iter().map(|t| PauliString::parse(&format!("I{}", t.label()), t.coeff()).unwrap()).collect();
    PauliHamiltonian::new(6, terms).unwrap()
}

#[test]
fn criterion_13b_degenerate_subspace_fidelity() {
    let start = Instant::now();
    let h = padded_tfim();
    let r = exact_reference(&h).unwrap();
    let op = filtered(h.clone(), 0.1, 0.03, 7);
    let sigma = op.orientation();
    let c = op.normalization();
    let cache = ElementCache::new(ElementOracle::hadamard(op, Some(1_000_000)), 13, true);
    let mut init_rng = ChaCha8Rng::seed_from_u64(13);
    let setup = RunSetup {
        h: &h,
        sigma,
        m_r: 20,
        m_c: 20,
        schedule: StepSchedule::new(0.5, 0.8, 500).unwrap(),
        iterations: 2000,
        renorm_period: 1000,
        norm_floor: 1e-200,
        initial: StateVector::random(h.dim(), &mut init_rng),
        ground: r.ground_states(),
    };
    let replicas = 10u64;
    let fids: Vec<f64> =
        (0..replicas).map(|k| run(&setup, &cache, &mut substream(13, &[k])).unwrap().final_fidelity().unwrap()).collect();
    let mean = fids.iter().sum::<f64>() / fids.len() as f64;
    verdict(
        "13b",
        r.degeneracy == 2 && mean >= 0.9,
        start.elapsed(),
        Duration::from_secs(600),
        format!("degeneracy={} C={c:.3} mean_subspace_fidelity={mean:.4}", r.degeneracy),
    );
}
