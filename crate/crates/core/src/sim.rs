//! Seeded simulation of labeled walks and the explicit couplings.
//!
//! Reproducibility contract: traces are a pure function of (walk, scenery,
//! steps, seed). The generator is ChaCha8 with one stream per walk (stream 0
//! for the primary walk, stream 1 for coupling draws), increments are drawn
//! through integer alias tables, and index reduction uses the widening
//! multiply, so traces are bit-identical across platforms.

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::numeric::BigReal;
use crate::scenery::Scenery;
use crate::walk::StepDistribution;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// A simulated labeled walk: positions (element indices) and the observed
/// bits, one per time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkTrace {
    pub seed: u64,
    pub positions: Vec<u64>,
    pub observations: Vec<u8>,
}

/// Two coupled traces with bit-identical observation streams.
#[derive(Debug, Clone)]
pub struct CoupledTraces {
    pub trace1: WalkTrace,
    pub trace2: WalkTrace,
    /// Description of the element-wise transform linking the two walks.
    pub transform: String,
}

/// Empirical temporal autocorrelation with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalAutocorrelation {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Walker alias table over fixed-point weights that sum to exactly 2^64.
struct AliasTable {
    outcomes: Vec<u64>,
    threshold: Vec<u128>,
    alias: Vec<usize>,
}

const TOTAL: u128 = 1u128 << 64;

impl AliasTable {
    fn new(entries: &[(u64, u128)]) -> Self {
        let m = entries.len();
        debug_assert!(m > 0);
        debug_assert_eq!(entries.iter().map(|&(_, w)| w).sum::<u128>(), TOTAL);
        let outcomes: Vec<u64> = entries.iter().map(|&(o, _)| o).collect();
        let mut scaled: Vec<u128> = entries.iter().map(|&(_, w)| w * m as u128).collect();
        let mut threshold = vec![TOTAL; m];
        let mut alias: Vec<usize> = (0..m).collect();
        let mut small: Vec<usize> = (0..m).rev().filter(|&i| scaled[i] < TOTAL).collect();
        let mut large: Vec<usize> = (0..m).rev().filter(|&i| scaled[i] >= TOTAL).collect();
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            threshold[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= TOTAL - scaled[s];
            if scaled[l] < TOTAL {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers (rounding) keep threshold = TOTAL: always take the slot.
        AliasTable { outcomes, threshold, alias }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        let m = self.outcomes.len() as u128;
        let slot = ((rng.next_u64() as u128 * m) >> 64) as usize;
        if (rng.next_u64() as u128) < self.threshold[slot] {
            self.outcomes[slot]
        } else {
            self.outcomes[self.alias[slot]]
        }
    }
}

/// Weights in 2^64 fixed point, exactly normalized (remainder goes to the
/// heaviest entries, deterministically).
fn fixed_point_weights(entries: &[(u64, BigReal)]) -> Vec<(u64, u128)> {
    let mut raw: Vec<(u64, u128)> = entries
        .iter()
        .map(|(idx, p)| {
            let hex = p.rescale(64).mantissa_hex();
            // Tolerance-level negatives clamp to zero.
            let mant = if hex.starts_with('-') {
                0
            } else {
                u128::from_str_radix(&hex, 16).unwrap_or(0)
            };
            (*idx, mant.min(TOTAL))
        })
        .collect();
    let sum: u128 = raw.iter().map(|&(_, w)| w).sum();
    if sum < TOTAL {
        let mut deficit = TOTAL - sum;
        // Heaviest entries absorb the rounding remainder.
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(raw[i].1));
        let mut i = 0;
        while deficit > 0 {
            raw[order[i % order.len()]].1 += 1;
            deficit -= 1;
            i += 1;
        }
    } else if sum > TOTAL {
        let mut excess = sum - TOTAL;
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(raw[i].1));
        let mut i = 0;
        while excess > 0 {
            let j = order[i % order.len()];
            if raw[j].1 > 0 {
                raw[j].1 -= 1;
                excess -= 1;
            }
            i += 1;
        }
    }
    raw
}

fn walk_alias(walk: &StepDistribution) -> AliasTable {
    let entries = walk.entries_as_reals(96);
    AliasTable::new(&fixed_point_weights(&entries))
}

fn uniform_index(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulate `steps` observations: uniform start, i.i.d. increments from the
/// walk. Deterministic given the seed.
pub fn simulate(
    walk: &StepDistribution,
    scenery: &Scenery,
    steps: usize,
    seed: u64,
) -> Result<WalkTrace> {
    if steps < 1 {
        return Err(Error::Domain("need at least one step".into()));
    }
    if walk.group() != scenery.group() {
        return Err(Error::Mismatch("walk and scenery on different groups".into()));
    }
    let group = walk.group();
    let alias = walk_alias(walk);
    let mut rng = rng_for(seed, 0);
    let mut pos = uniform_index(&mut rng, group.order());
    let mut positions = Vec::with_capacity(steps);
    let mut observations = Vec::with_capacity(steps);
    for _ in 0..steps {
        positions.push(pos);
        observations.push(scenery.value_at_index(pos));
        pos = group.index_add(pos, alias.draw(&mut rng));
    }
    Ok(WalkTrace { seed, positions, observations })
}

/// Coupled simulation on a cycle: walk 2 is walk 1 scaled by the multiplier
/// `v`. Preconditions `f1(k) = f2(v k)` and `gamma(v k) = gamma(k)` are
/// verified before running; observation streams are asserted identical at
/// every step.
pub fn simulate_coupled_cycle(
    walk: &StepDistribution,
    f1: &Scenery,
    f2: &Scenery,
    v: u64,
    steps: usize,
    seed: u64,
) -> Result<CoupledTraces> {
    let group = walk.group().clone();
    let n = group
        .cycle_modulus()
        .ok_or_else(|| Error::Domain("cycle coupling needs a cycle".into()))?;
    if f1.group() != &group || f2.group() != &group {
        return Err(Error::Mismatch("sceneries on a different group".into()));
    }
    let vm = v % n;
    for k in 0..n {
        if f1.value_at_index(k) != f2.value_at_index((vm * k) % n) {
            return Err(Error::Domain(format!(
                "coupling precondition f1(k) = f2(v k) fails at k = {k}"
            )));
        }
    }
    // gamma(v k) = gamma(k): exact walks compare exactly, float within
    // tolerance.
    match walk.exact_entries() {
        Some(probs) => {
            for (&k, p) in probs {
                if probs.get(&((vm * k) % n)) != Some(p) {
                    return Err(Error::Domain(format!(
                        "walk not invariant under multiplier {vm} at k = {k}"
                    )));
                }
            }
        }
        None => {
            let scale = crate::numeric::working_scale(96);
            let entries: BTreeMap<u64, BigReal> =
                walk.entries_as_reals(scale).into_iter().collect();
            let tol = BigReal::from_f64(
                walk.declared_tolerance().unwrap_or(crate::walk::DEFAULT_FLOAT_TOLERANCE),
                scale,
            );
            for (&k, p) in &entries {
                let q = entries
                    .get(&((vm * k) % n))
                    .cloned()
                    .unwrap_or_else(|| BigReal::zero(scale));
                if p.sub(&q).abs() > tol {
                    return Err(Error::Domain(format!(
                        "walk not invariant under multiplier {vm} at k = {k}"
                    )));
                }
            }
        }
    }

    let trace1 = simulate(walk, f1, steps, seed)?;
    let positions2: Vec<u64> = trace1.positions.iter().map(|&p| (p * vm) % n).collect();
    let observations2: Vec<u8> =
        positions2.iter().map(|&p| f2.value_at_index(p)).collect();
    if observations2 != trace1.observations {
        return Err(Error::Inconsistency(
            "coupled observation streams differ despite verified preconditions".into(),
        ));
    }
    let trace2 = WalkTrace { seed, positions: positions2, observations: observations2 };
    Ok(CoupledTraces {
        trace1,
        trace2,
        transform: format!("v2(t) = {vm} * v1(t) mod {n}"),
    })
}

/// Dot-product label of an element against a witness, one coordinate per
/// factor, encoded in mixed radix.
fn label_of(
    group: &crate::group::GroupSpec,
    k: &GroupElement,
    w: &GroupElement,
) -> Result<u64> {
    let mut out = 0u64;
    for (j, &(n, _)) in group.factors().iter().enumerate() {
        out = out * n + group.dot(k, w, j)?;
    }
    Ok(out)
}

/// Coupled simulation on a product group: per step, walk 2's increment is
/// drawn from `gamma` conditioned on matching every dot-product fiber of
/// walk 1's increment. The per-fiber mass equality is verified exactly
/// before running; fibers are sampled through precomputed alias tables.
pub fn simulate_coupled_product(
    walk: &StepDistribution,
    f1: &Scenery,
    f2: &Scenery,
    x: &GroupElement,
    y: &GroupElement,
    steps: usize,
    seed: u64,
) -> Result<CoupledTraces> {
    let group = walk.group().clone();
    if f1.group() != &group || f2.group() != &group {
        return Err(Error::Mismatch("sceneries on a different group".into()));
    }
    if x.group() != &group || y.group() != &group {
        return Err(Error::Mismatch("witness elements on a different group".into()));
    }
    let probs = walk
        .exact_entries()
        .ok_or_else(|| Error::Domain("product coupling needs exact probabilities".into()))?;

    // Component-wise zero pattern must match, or the uniform start cannot be
    // coupled fiber by fiber.
    for (j, (xc, yc)) in x.coords().iter().zip(y.coords()).enumerate() {
        let xz = xc.iter().all(|&c| c == 0);
        let yz = yc.iter().all(|&c| c == 0);
        if xz != yz {
            return Err(Error::Domain(format!(
                "fiber mass mismatch: witness coordinate {j} vanishes on one side only"
            )));
        }
    }

    let elements = group.enumerate()?;
    // Step-mass per fiber must agree exactly (this is what the collision
    // guarantees).
    let mut mass_x: BTreeMap<u64, BigRational> = BTreeMap::new();
    let mut mass_y: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (&k, p) in probs {
        let ke = &elements[k as usize];
        *mass_x.entry(label_of(&group, ke, x)?).or_insert_with(BigRational::zero) += p;
        *mass_y.entry(label_of(&group, ke, y)?).or_insert_with(BigRational::zero) += p;
    }
    if mass_x != mass_y {
        return Err(Error::Domain(
            "fiber mass mismatch: the walk does not exhibit this collision".into(),
        ));
    }

    // Observation compatibility: f1 constant on x-fibers, f2 constant on
    // y-fibers, with equal values on matching labels.
    let mut value_x: BTreeMap<u64, u8> = BTreeMap::new();
    let mut value_y: BTreeMap<u64, u8> = BTreeMap::new();
    for (i, ke) in elements.iter().enumerate() {
        let lx = label_of(&group, ke, x)?;
        let b1 = f1.value_at_index(i as u64);
        if *value_x.entry(lx).or_insert(b1) != b1 {
            return Err(Error::Domain(format!(
                "f1 is not constant on the fiber of element {ke}"
            )));
        }
        let ly = label_of(&group, ke, y)?;
        let b2 = f2.value_at_index(i as u64);
        if *value_y.entry(ly).or_insert(b2) != b2 {
            return Err(Error::Domain(format!(
                "f2 is not constant on the fiber of element {ke}"
            )));
        }
    }
    for (l, b1) in &value_x {
        if value_y.get(l) != Some(b1) {
            return Err(Error::Domain(format!(
                "sceneries disagree on matching fibers at label {l}"
            )));
        }
    }

    // Per-fiber alias tables over the conditional step law of walk 2, and
    // full-group fiber members for the coupled uniform start.
    let scale = 96u32;
    let mut fiber_support: BTreeMap<u64, Vec<(u64, BigRational)>> = BTreeMap::new();
    for (&k, p) in probs {
        let ke = &elements[k as usize];
        fiber_support
            .entry(label_of(&group, ke, y)?)
            .or_default()
            .push((k, p.clone()));
    }
    let fiber_alias: BTreeMap<u64, AliasTable> = fiber_support
        .iter()
        .map(|(&label, entries)| {
            let total: BigRational = entries.iter().map(|(_, p)| p.clone()).sum();
            let reals: Vec<(u64, BigReal)> = entries
                .iter()
                .map(|(k, p)| (*k, BigReal::from_rational(&(p / &total), scale)))
                .collect();
            (label, AliasTable::new(&fixed_point_weights(&reals)))
        })
        .collect();
    let mut fiber_members: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (i, ke) in elements.iter().enumerate() {
        fiber_members
            .entry(label_of(&group, ke, y)?)
            .or_default()
            .push(i as u64);
    }

    let alias1 = walk_alias(walk);
    let mut rng1 = rng_for(seed, 0);
    let mut rng2 = rng_for(seed, 1);

    let pos1_start = uniform_index(&mut rng1, group.order());
    let start_label = label_of(&group, &elements[pos1_start as usize], x)?;
    let members = fiber_members
        .get(&start_label)
        .ok_or_else(|| Error::Domain("empty start fiber".into()))?;
    let pos2_start = members[uniform_index(&mut rng2, members.len() as u64) as usize];

    let mut pos1 = pos1_start;
    let mut pos2 = pos2_start;
    let mut t1 = WalkTrace { seed, positions: Vec::new(), observations: Vec::new() };
    let mut t2 = WalkTrace { seed, positions: Vec::new(), observations: Vec::new() };
    for _ in 0..steps {
        t1.positions.push(pos1);
        t2.positions.push(pos2);
        let o1 = f1.value_at_index(pos1);
        let o2 = f2.value_at_index(pos2);
        if o1 != o2 {
            return Err(Error::Inconsistency(
                "coupled observation streams differ despite verified preconditions".into(),
            ));
        }
        t1.observations.push(o1);
        t2.observations.push(o2);
        let d1 = alias1.draw(&mut rng1);
        let label = label_of(&group, &elements[d1 as usize], x)?;
        let d2 = fiber_alias
            .get(&label)
            .ok_or_else(|| Error::Domain("empty step fiber".into()))?
            .draw(&mut rng2);
        pos1 = group.index_add(pos1, d1);
        pos2 = group.index_add(pos2, d2);
    }
    Ok(CoupledTraces {
        trace1: t1,
        trace2: t2,
        transform: "per-step fiber coupling: y.v2(t) = x.v1(t)".into(),
    })
}

/// Windowed empirical estimate of the temporal autocorrelation, with
/// batch-means standard errors (100 batches).
pub fn estimate_b(trace: &WalkTrace, max_lag: usize) -> Result<EmpiricalAutocorrelation> {
    let t = trace.observations.len();
    if t < max_lag + 1000 {
        return Err(Error::Domain(format!(
            "trace of length {t} too short for lag {max_lag} (need lag + 1000)"
        )));
    }
    let obs = &trace.observations;
    let mut values = Vec::with_capacity(max_lag + 1);
    let mut std_errors = Vec::with_capacity(max_lag + 1);
    const BATCHES: usize = 100;
    for lag in 0..=max_lag {
        let m = t - lag;
        let batch = m / BATCHES;
        let mut batch_means = Vec::with_capacity(BATCHES);
        let mut total = 0u64;
        for bi in 0..BATCHES {
            let lo = bi * batch;
            let hi = if bi + 1 == BATCHES { m } else { lo + batch };
            let mut s = 0u64;
            for i in lo..hi {
                s += (obs[i] & obs[i + lag]) as u64;
            }
            total += s;
            batch_means.push(s as f64 / (hi - lo) as f64);
        }
        let mean = total as f64 / m as f64;
        let bm = batch_means.iter().sum::<f64>() / BATCHES as f64;
        let var = batch_means.iter().map(|v| (v - bm) * (v - bm)).sum::<f64>()
            / (BATCHES as f64 - 1.0);
        values.push(mean);
        std_errors.push((var / BATCHES as f64).sqrt());
    }
    Ok(EmpiricalAutocorrelation { values, std_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::scenery::build_pair_torus;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn stay_put_walk_is_constant() {
        let walk = StepDistribution::uniform_cycle(7, &[0]).unwrap();
        let f = Scenery::indicator_cycle(7, &[0, 1]).unwrap();
        let trace = simulate(&walk, &f, 500, 9).unwrap();
        assert!(trace.positions.iter().all(|&p| p == trace.positions[0]));
        assert!(trace.observations.iter().all(|&o| o == trace.observations[0]));
    }

    #[test]
    fn fixed_seed_reproduces_trace() {
        let walk = StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap();
        let f = Scenery::indicator_cycle(7, &[0, 1]).unwrap();
        let a = simulate(&walk, &f, 2000, 42).unwrap();
        let b = simulate(&walk, &f, 2000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&walk, &f, 2000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn observation_mean_matches_density() {
        let walk = StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap();
        let f = Scenery::indicator_cycle(7, &[0, 1, 4]).unwrap();
        let steps = 1_000_000;
        let trace = simulate(&walk, &f, steps, 77).unwrap();
        let mean: f64 =
            trace.observations.iter().map(|&o| o as f64).sum::<f64>() / steps as f64;
        let p = 3.0 / 7.0;
        let sigma = (p * (1.0 - p) / steps as f64).sqrt();
        assert!(
            (mean - p).abs() < 3.0 * sigma * 3.0, // slack for walk dependence
            "mean {mean} vs {p} (sigma {sigma})"
        );
    }

    #[test]
    fn empirical_increments_pass_chi_square() {
        let walk = StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap();
        let f = Scenery::zeros(GroupSpec::cycle(7).unwrap());
        let steps = 100_000;
        let trace = simulate(&walk, &f, steps, 5).unwrap();
        let mut counts = [0u64; 7];
        for w in trace.positions.windows(2) {
            counts[((w[1] + 7 - w[0]) % 7) as usize] += 1;
        }
        let total = (steps - 1) as f64;
        let expected = total / 3.0;
        let stat: f64 = [1usize, 2, 4]
            .iter()
            .map(|&k| {
                let d = counts[k] as f64 - expected;
                d * d / expected
            })
            .sum();
        assert_eq!(counts[0] + counts[3] + counts[5] + counts[6], 0);
        let crit = ChiSquared::new(2.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi-square {stat} >= {crit}");
    }

    #[test]
    fn coupled_cycle_matches_and_verifies() {
        let walk = StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap();
        let f1 = Scenery::indicator_cycle(7, &[0, 1]).unwrap();
        let f2 = Scenery::indicator_cycle(7, &[0, 2]).unwrap();
        let coupled = simulate_coupled_cycle(&walk, &f1, &f2, 2, 100_000, 11).unwrap();
        assert_eq!(coupled.trace1.observations, coupled.trace2.observations);
        for (p1, p2) in coupled.trace1.positions.iter().zip(&coupled.trace2.positions) {
            assert_eq!((p1 * 2) % 7, *p2);
        }

        // v = 1 with equal sceneries: identical traces.
        let same = simulate_coupled_cycle(&walk, &f1, &f1, 1, 1000, 3).unwrap();
        assert_eq!(same.trace1, same.trace2);

        // The coupled walk's own increments still follow gamma.
        let mut counts = [0u64; 7];
        for w in coupled.trace2.positions.windows(2) {
            counts[((w[1] + 7 - w[0]) % 7) as usize] += 1;
        }
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / 3.0;
        let stat: f64 = [1usize, 2, 4]
            .iter()
            .map(|&k| {
                let d = counts[k] as f64 - expected;
                d * d / expected
            })
            .sum();
        let crit = ChiSquared::new(2.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi-square {stat} >= {crit}");
    }

    #[test]
    fn coupled_cycle_rejects_bad_preconditions() {
        let walk = StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap();
        let f1 = Scenery::indicator_cycle(7, &[0, 1]).unwrap();
        let f3 = Scenery::indicator_cycle(7, &[0, 3]).unwrap();
        // f1(k) != f3(2k) somewhere.
        assert!(simulate_coupled_cycle(&walk, &f1, &f3, 2, 100, 1).is_err());
        // Walk not invariant under v = 3.
        let f2 = Scenery::indicator_cycle(7, &[0, 3]).unwrap();
        assert!(simulate_coupled_cycle(&walk, &f1, &f2, 3, 100, 1).is_err());
    }

    #[test]
    fn coupled_product_on_torus_collision() {
        let g = GroupSpec::parse("Z7^2").unwrap();
        let x = g.element_from_ints(&[1, 0]).unwrap();
        let y = g.element_from_ints(&[2, 0]).unwrap();
        // Walk invariant under the case-1 multiplier: support {1,2,4} x {0},
        // extended with a second-coordinate drift that both dot products
        // ignore differently (kept zero here so fibers match).
        let steps: Vec<_> = [1i64, 2, 4]
            .iter()
            .map(|&k| g.element_from_ints(&[k, 3]).unwrap())
            .collect();
        let walk = StepDistribution::uniform(g.clone(), &steps).unwrap();
        let pair = build_pair_torus(7, 2, &x, &y).unwrap();
        let coupled =
            simulate_coupled_product(&walk, &pair.f1, &pair.f2, &x, &y, 100_000, 21).unwrap();
        assert_eq!(coupled.trace1.observations, coupled.trace2.observations);

        // Marginal of walk 2's increments must still be gamma.
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for w in coupled.trace2.positions.windows(2) {
            let delta = g.index_add(w[1], g.index_neg(w[0]));
            *counts.entry(delta).or_insert(0) += 1;
        }
        let support: Vec<u64> = steps.iter().map(|e| g.index_of(e)).collect();
        let total: u64 = counts.values().sum();
        let expected = total as f64 / 3.0;
        let stat: f64 = support
            .iter()
            .map(|k| {
                let d = *counts.get(k).unwrap_or(&0) as f64 - expected;
                d * d / expected
            })
            .sum();
        let crit = ChiSquared::new(2.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi-square {stat} >= {crit}");
        assert_eq!(counts.len(), 3, "all mass on the declared support");
    }

    #[test]
    fn coupled_product_identity_witness() {
        let g = GroupSpec::parse("Z7^2").unwrap();
        let x = g.element_from_ints(&[1, 0]).unwrap();
        let steps: Vec<_> = [0i64, 1, 2]
            .iter()
            .map(|&k| g.element_from_ints(&[k, 1]).unwrap())
            .collect();
        let walk = StepDistribution::uniform(g.clone(), &steps).unwrap();
        let f = Scenery::from_ones(
            g.clone(),
            &g.enumerate()
                .unwrap()
                .iter()
                .filter(|k| k.coords()[0][0] == 0)
                .map(|k| g.index_of(k))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        // x = y: the fibers coincide and observations match trivially.
        let coupled = simulate_coupled_product(&walk, &f, &f, &x, &x, 5000, 4).unwrap();
        assert_eq!(coupled.trace1.observations, coupled.trace2.observations);
    }

    #[test]
    fn coupled_product_detects_missing_collision() {
        let g = GroupSpec::parse("Z7^2").unwrap();
        let x = g.element_from_ints(&[1, 0]).unwrap();
        let y = g.element_from_ints(&[3, 0]).unwrap();
        let steps: Vec<_> = [1i64, 2, 4]
            .iter()
            .map(|&k| g.element_from_ints(&[k, 0]).unwrap())
            .collect();
        let walk = StepDistribution::uniform(g.clone(), &steps).unwrap();
        let f = Scenery::zeros(g.clone());
        // 3 * {1,2,4} = {3,6,5} != {1,2,4}: fiber masses differ.
        let err = simulate_coupled_product(&walk, &f, &f, &x, &y, 100, 1).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn estimate_b_basics() {
        let walk = StepDistribution::uniform_cycle(7, &[0]).unwrap();
        let f = Scenery::indicator_cycle(7, &[0, 1, 3]).unwrap();
        let trace = simulate(&walk, &f, 20_000, 13).unwrap();
        let est = estimate_b(&trace, 5).unwrap();
        // Stay-put: every lag equals lag 0 exactly.
        for lag in 1..=5 {
            assert_eq!(est.values[lag], est.values[0]);
        }
        assert!(estimate_b(&trace, 19_500).is_err());
    }
}
