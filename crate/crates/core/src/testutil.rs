//! Proptest strategies shared by the unit tests.

use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::measure::{family_conditioned_sum, family_independent, ExplicitMeasure, TestFunction};
use crate::rational::rat;

fn from_weights(n: usize, weights: &[u8]) -> ExplicitMeasure {
    let total: i64 = weights.iter().map(|&w| i64::from(w)).sum();
    ExplicitMeasure::new(
        n,
        weights
            .iter()
            .enumerate()
            .map(|(x, &w)| (x as u32, rat(i64::from(w), total))),
    )
    .expect("normalized weights")
}

/// Arbitrary measures on `1..=max_n` variables; roughly half the atoms are empty.
pub fn measure(max_n: usize) -> impl Strategy<Value = ExplicitMeasure> {
    (1..=max_n).prop_flat_map(measure_on)
}

pub fn measure_on(n: usize) -> impl Strategy<Value = ExplicitMeasure> {
    prop::collection::vec(prop_oneof![Just(0u8), 1u8..6], 1usize << n)
        .prop_filter("some mass", |w| w.iter().any(|&v| v > 0))
        .prop_map(move |w| from_weights(n, &w))
}

pub fn measure_pair(max_n: usize) -> impl Strategy<Value = (ExplicitMeasure, ExplicitMeasure)> {
    (1..=max_n).prop_flat_map(|n| (measure_on(n), measure_on(n)))
}

fn probability() -> impl Strategy<Value = BigRational> {
    (1i64..8).prop_map(|k| rat(k, 8))
}

/// Product measures and sums conditioned on a window of one or two values; all are
/// strongly Rayleigh.
pub fn strongly_rayleigh(max_n: usize) -> impl Strategy<Value = ExplicitMeasure> {
    (2..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(probability(), n),
            0..=n,
            0..=n,
            any::<bool>(),
        )
            .prop_map(move |(p, a, b, product)| {
                if product {
                    family_independent(&p).unwrap()
                } else {
                    // rank windows wider than one can break real stability
                    let lo = a.min(b);
                    family_conditioned_sum(&p, lo, (lo + 1).min(a.max(b))).unwrap()
                }
            })
    })
}

/// Seeded random 1-Lipschitz function; monotone when asked.
pub fn function(n: usize) -> impl Strategy<Value = TestFunction> {
    (any::<u64>(), any::<bool>()).prop_map(move |(seed, monotone)| {
        TestFunction::random(n, monotone, &mut ChaCha8Rng::seed_from_u64(seed))
    })
}
