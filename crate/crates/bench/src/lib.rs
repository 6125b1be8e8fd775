//! Shared fixtures for the benchmarks.

use qrpm::filter::bounds_from_fractions;
use qrpm::model::{build_tfim, exact_reference};
use qrpm::{FilterSpec, FilteredOperator, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Degree-`degree` filter of an `n`-qubit transverse-field chain with
/// bounds at 20% inside the spectrum.
pub fn tfim_filter(n: usize, degree: usize) -> FilteredOperator {
    let h = build_tfim(n, 1.0, 1.0).expect("valid model");
    let r = exact_reference(&h).expect("dense reference");
    let (lb, ub) = bounds_from_fractions(&r, 0.2, 0.2).expect("bounds");
    let spec = FilterSpec::from_reference(lb, ub, degree, &r).expect("spec");
    FilteredOperator::new(h, Some(spec))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(dim: usize, seed: u64) -> StateVector {
    StateVector::random(dim, &mut rng(seed))
}
