//! Shared fixtures for the benchmark suite.

use num_rational::BigRational;
use scenerylab_core::cyclotomic::CyclotomicNumber;
use scenerylab_core::scenery::Scenery;
use scenerylab_core::walk::StepDistribution;

/// The colliding three-step walk on `Z_7`.
pub fn walk_124() -> StepDistribution {
    StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap()
}

/// A distinguishing walk on a larger prime cycle, for transform scaling.
pub fn walk_on_prime(p: u64) -> StepDistribution {
    StepDistribution::uniform_cycle(p, &[1, 2, 5]).unwrap()
}

/// The indicator pair from the `Z_7` worked example.
pub fn z7_pair() -> (Scenery, Scenery) {
    (
        Scenery::indicator_cycle(7, &[0, 1]).unwrap(),
        Scenery::indicator_cycle(7, &[0, 2]).unwrap(),
    )
}

/// A dense element of `Q(w_7, w_11)` for arithmetic benchmarks.
pub fn dense_cyclotomic(seed: i64) -> CyclotomicNumber {
    let ctx = [7u64, 11];
    let terms: Vec<(Vec<i64>, BigRational)> = (0..5)
        .flat_map(|i| {
            (0..9).map(move |j| {
                (
                    vec![i, j],
                    BigRational::new((seed + i * 9 + j).into(), (j + 2).into()),
                )
            })
        })
        .collect();
    CyclotomicNumber::from_terms(&ctx, terms).unwrap()
}
