//! Spectral statistics and constructive reconstruction up to shift.
//!
//! The temporal autocorrelation of an observation process is a linear image
//! of the spatial autocorrelation of the scenery; the matrix of that map is
//! a Vandermonde system in the walk's Fourier coefficients, invertible
//! exactly when they are distinct. The same holds one tensor power up for
//! the multispectrum, whose spatial form determines the scenery up to shift.
//! This module computes all four statistics exactly, inverts the systems,
//! and recovers sceneries by candidate filtering over shift classes.

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::linalg::invert_rational;
use crate::scenery::Scenery;
use crate::walk::{find_collisions, fourier_transform, FourierTable, StepDistribution};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Order cap for sparse multispectrum computation.
pub const MULTISPECTRUM_CAP: u64 = 8;
/// Order cap for dense tables over `H^(n-1)` and the tensor solve.
pub const DENSE_CAP: u64 = 6;
/// Order cap for scenery recovery (candidate filtering).
pub const RECOVER_CAP: u64 = 8;
/// Order cap for the cyclotomic Vandermonde solve.
pub const VANDERMONDE_CAP: u64 = 16;

/// `a_f(l) = sum_k f(k) f(k+l)`, indexed by the lag's element index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialAutocorrelation {
    pub group: GroupSpec,
    pub values: Vec<u64>,
}

/// `b_f(l) = E[f(v(T)) f(v(T+l))]` for lags `0..=L`, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalAutocorrelation {
    pub values: Vec<BigRational>,
}

/// Sparse spatial multispectrum: tuple of jumps (element indices, length
/// |H|-1) to the number of ones-paths realizing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialMultispectrum {
    pub group: GroupSpec,
    pub arity: usize,
    pub entries: BTreeMap<Vec<u64>, u64>,
}

/// Temporal multispectrum on explicitly requested lag tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalMultispectrum {
    pub arity: usize,
    pub entries: BTreeMap<Vec<u64>, BigRational>,
}

/// Dense transform of the spatial multispectrum over `H^(n-1)`.
#[derive(Debug, Clone)]
pub struct FourierMultispectrum {
    pub group: GroupSpec,
    pub arity: usize,
    /// Mixed-radix dense table: index = sum_i x_i * order^(arity-1-i).
    pub values: Vec<Complex64>,
}

pub fn spatial_autocorrelation(f: &Scenery) -> SpatialAutocorrelation {
    let group = f.group().clone();
    let order = group.order();
    let ones = f.ones_indices();
    let mut values = vec![0u64; order as usize];
    for &i in &ones {
        for &j in &ones {
            let lag = group.index_add(j, group.index_neg(i));
            values[lag as usize] += 1;
        }
    }
    SpatialAutocorrelation { group, values }
}

/// Dense convolution of two distributions over the group.
fn convolve(group: &GroupSpec, a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = group.order();
    let mut out = vec![BigRational::zero(); n as usize];
    for i in 0..n {
        if a[i as usize].is_zero() {
            continue;
        }
        for j in 0..n {
            if b[j as usize].is_zero() {
                continue;
            }
            let k = group.index_add(i, j);
            out[k as usize] += &a[i as usize] * &b[j as usize];
        }
    }
    out
}

fn walk_density(walk: &StepDistribution) -> Result<Vec<BigRational>> {
    let probs = walk
        .exact_entries()
        .ok_or_else(|| Error::Domain("exact spectral statistics need exact probabilities".into()))?;
    let n = walk.group().order() as usize;
    let mut dense = vec![BigRational::zero(); n];
    for (&k, p) in probs {
        dense[k as usize] = p.clone();
    }
    Ok(dense)
}

/// Iterated convolution powers `gamma^(0) .. gamma^(max_lag)`.
fn convolution_powers(
    walk: &StepDistribution,
    max_lag: usize,
) -> Result<Vec<Vec<BigRational>>> {
    let group = walk.group();
    let n = group.order() as usize;
    let gamma = walk_density(walk)?;
    let mut powers = Vec::with_capacity(max_lag + 1);
    let mut delta0 = vec![BigRational::zero(); n];
    delta0[0] = BigRational::one();
    powers.push(delta0);
    for l in 1..=max_lag {
        let next = convolve(group, &powers[l - 1], &gamma);
        powers.push(next);
    }
    Ok(powers)
}

/// `b_f(l) = (1/n) sum_x gamma^(l)(x) a_f(x)` for `l = 0..=max_lag`.
pub fn temporal_autocorrelation_exact(
    walk: &StepDistribution,
    f: &Scenery,
    max_lag: usize,
) -> Result<TemporalAutocorrelation> {
    if walk.group() != f.group() {
        return Err(Error::Mismatch("walk and scenery on different groups".into()));
    }
    let a = spatial_autocorrelation(f);
    let n = walk.group().order();
    let powers = convolution_powers(walk, max_lag)?;
    let inv_n = BigRational::new(BigInt::one(), BigInt::from(n));
    let values = powers
        .iter()
        .map(|gl| {
            let s: BigRational = gl
                .iter()
                .zip(&a.values)
                .map(|(g, &av)| g * BigRational::from(BigInt::from(av)))
                .sum();
            s * &inv_n
        })
        .collect();
    Ok(TemporalAutocorrelation { values })
}

/// Exact discrete Fourier transform of a rational table over the group, into
/// the cyclotomic field (prime factor moduli only).
fn exact_dft(group: &GroupSpec, values: &[BigRational]) -> Result<Vec<CyclotomicNumber>> {
    let context: Vec<u64> = group.factors().iter().map(|&(n, _)| n).collect();
    let elements = group.enumerate()?;
    let m = context.len();
    let mut out = Vec::with_capacity(elements.len());
    for x in &elements {
        let terms: Vec<(Vec<i64>, BigRational)> = elements
            .iter()
            .zip(values)
            .filter(|(_, v)| !v.is_zero())
            .map(|(k, v)| {
                let exps: Vec<i64> = (0..m)
                    .map(|j| group.dot(k, x, j).expect("same group") as i64)
                    .collect();
                (exps, v.clone())
            })
            .collect();
        out.push(CyclotomicNumber::from_terms(&context, terms)?);
    }
    Ok(out)
}

/// `b_f` computed through the Fourier route: with unnormalized transforms,
/// `b_f(l) = (1/n^2) sum_x gamma_hat(x)^l a_hat_f(x)`. Exact; prime factor
/// moduli only. Agrees with [`temporal_autocorrelation_exact`] identically.
pub fn temporal_autocorrelation_fourier_exact(
    walk: &StepDistribution,
    f: &Scenery,
    max_lag: usize,
) -> Result<TemporalAutocorrelation> {
    let group = walk.group().clone();
    let table = fourier_transform(walk)?;
    let FourierTable::Exact { values: gamma_hat, .. } = table else {
        unreachable!("exact transform returns an exact table");
    };
    let a = spatial_autocorrelation(f);
    let a_rational: Vec<BigRational> = a
        .values
        .iter()
        .map(|&v| BigRational::from(BigInt::from(v)))
        .collect();
    let a_hat = exact_dft(&group, &a_rational)?;
    let n = group.order();
    let context: Vec<u64> = group.factors().iter().map(|&(m, _)| m).collect();
    let inv_n2 = BigRational::new(BigInt::one(), BigInt::from(n * n));
    let mut powers: Vec<CyclotomicNumber> = (0..n)
        .map(|_| CyclotomicNumber::one(&context))
        .collect::<std::result::Result<_, _>>()?;
    let mut values = Vec::with_capacity(max_lag + 1);
    for _ in 0..=max_lag {
        let mut acc = CyclotomicNumber::zero(&context)?;
        for (p, ah) in powers.iter().zip(&a_hat) {
            acc = acc.add(&p.mul(ah)?)?;
        }
        let rational = acc.as_rational().ok_or_else(|| {
            Error::Numerical("Fourier-route autocorrelation is not rational".into())
        })?;
        values.push(rational * &inv_n2);
        for (p, g) in powers.iter_mut().zip(&gamma_hat) {
            *p = p.mul(g)?;
        }
    }
    Ok(TemporalAutocorrelation { values })
}

/// Gaussian elimination over the cyclotomic field. `None` when singular.
#[allow(clippy::needless_range_loop)] // elimination touches two rows at once
fn solve_cyclotomic(
    mut a: Vec<Vec<CyclotomicNumber>>,
    mut b: Vec<CyclotomicNumber>,
) -> Result<Option<Vec<CyclotomicNumber>>> {
    let n = a.len();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Ok(None);
        };
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].inverse()?;
        for v in a[col].iter_mut() {
            *v = v.mul(&inv)?;
        }
        b[col] = b[col].mul(&inv)?;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..n {
                    let t = a[col][c].mul(&f)?;
                    a[r][c] = a[r][c].sub(&t)?;
                }
                let t = b[col].mul(&f)?;
                b[r] = b[r].sub(&t)?;
            }
        }
    }
    Ok(Some(b))
}

fn collision_summary(table: &FourierTable) -> String {
    let group = table.group();
    find_collisions(table)
        .collisions
        .iter()
        .map(|&(x, y)| format!("({}, {})", group.element_at(x), group.element_at(y)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Recover the spatial autocorrelation from temporal values at lags
/// `0..n-1`, through the Vandermonde system in the Fourier coefficients.
/// Fails with a singular-system error when coefficients collide.
pub fn vandermonde_recover_af(
    walk: &StepDistribution,
    b: &TemporalAutocorrelation,
) -> Result<SpatialAutocorrelation> {
    let group = walk.group().clone();
    let n = group.order();
    if n > VANDERMONDE_CAP {
        return Err(Error::Capacity(format!(
            "Vandermonde solve capped at order {VANDERMONDE_CAP}, got {n}"
        )));
    }
    let table = fourier_transform(walk)?;
    let scan = find_collisions(&table);
    if !scan.collisions.is_empty() {
        return Err(Error::Singular(collision_summary(&table)));
    }
    if (b.values.len() as u64) < n {
        return Err(Error::Domain(format!(
            "need temporal values at lags 0..{} (got {})",
            n - 1,
            b.values.len()
        )));
    }
    let FourierTable::Exact { values: gamma_hat, .. } = table else {
        unreachable!("exact transform returns an exact table");
    };
    let context: Vec<u64> = group.factors().iter().map(|&(m, _)| m).collect();

    // V[l][x] = gamma_hat(x)^l, built row by row.
    let mut matrix: Vec<Vec<CyclotomicNumber>> = Vec::with_capacity(n as usize);
    let mut row: Vec<CyclotomicNumber> = (0..n)
        .map(|_| CyclotomicNumber::one(&context))
        .collect::<std::result::Result<_, _>>()?;
    for l in 0..n {
        matrix.push(row.clone());
        if l + 1 < n {
            for (r, g) in row.iter_mut().zip(&gamma_hat) {
                *r = r.mul(g)?;
            }
        }
    }
    // Solve V z = n^2 b for z = a_hat_f.
    let n2 = BigRational::from(BigInt::from(n * n));
    let rhs: Vec<CyclotomicNumber> = b.values[..n as usize]
        .iter()
        .map(|v| CyclotomicNumber::from_rational(&context, v * &n2))
        .collect::<std::result::Result<_, _>>()?;
    let z = solve_cyclotomic(matrix, rhs)?.ok_or_else(|| {
        Error::Inconsistency("Vandermonde singular despite distinct coefficients".into())
    })?;

    // Inverse transform: a_f(k) = (1/n) sum_x w^{-k.x} z(x).
    let elements = group.enumerate()?;
    let m = context.len();
    let inv_n = BigRational::new(BigInt::one(), BigInt::from(n));
    let mut values = Vec::with_capacity(n as usize);
    for k in &elements {
        let mut acc = CyclotomicNumber::zero(&context)?;
        for (x, zx) in elements.iter().zip(&z) {
            let mut exps: Vec<i64> = Vec::with_capacity(m);
            for j in 0..m {
                exps.push(-(group.dot(k, x, j)? as i64));
            }
            let shifted = CyclotomicNumber::from_terms(
                &context,
                zx.terms()
                    .map(|(e, c)| {
                        let moved: Vec<i64> = e
                            .iter()
                            .zip(&exps)
                            .map(|(&ej, &sj)| ej as i64 + sj)
                            .collect();
                        (moved, c.clone())
                    })
                    .collect::<Vec<_>>(),
            )?;
            acc = acc.add(&shifted)?;
        }
        let rational = acc
            .as_rational()
            .ok_or_else(|| Error::Numerical("recovered autocorrelation not rational".into()))?
            * &inv_n;
        if rational.is_negative() || !rational.is_integer() {
            return Err(Error::Numerical(format!(
                "recovered autocorrelation entry {rational} is not a nonnegative integer"
            )));
        }
        values.push(rational.to_integer().to_u64().ok_or_else(|| {
            Error::Numerical("autocorrelation entry out of u64 range".into())
        })?);
    }
    Ok(SpatialAutocorrelation { group, values })
}

/// Sparse spatial multispectrum: `A_f(l_1..l_{n-1})` counts the starts `k`
/// with ones at every partial sum `k + l_1 + ... + l_i`.
pub fn spatial_multispectrum(f: &Scenery) -> Result<SpatialMultispectrum> {
    let group = f.group().clone();
    let n = group.order();
    if n > MULTISPECTRUM_CAP {
        return Err(Error::Capacity(format!(
            "multispectrum capped at order {MULTISPECTRUM_CAP}, got {n}"
        )));
    }
    let arity = (n - 1) as usize;
    let ones = f.ones_indices();
    let mut entries: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    if ones.is_empty() {
        return Ok(SpatialMultispectrum { group, arity, entries });
    }
    // Depth-first over all walks through ones positions.
    let mut tuple = vec![0u64; arity];
    fn descend(
        group: &GroupSpec,
        ones: &[u64],
        depth: usize,
        arity: usize,
        current: u64,
        tuple: &mut Vec<u64>,
        entries: &mut BTreeMap<Vec<u64>, u64>,
    ) {
        if depth == arity {
            *entries.entry(tuple.clone()).or_insert(0) += 1;
            return;
        }
        for &next in ones {
            let jump = group.index_add(next, group.index_neg(current));
            tuple[depth] = jump;
            descend(group, ones, depth + 1, arity, next, tuple, entries);
        }
    }
    for &start in &ones {
        descend(&group, &ones, 0, arity, start, &mut tuple, &mut entries);
    }
    Ok(SpatialMultispectrum { group, arity, entries })
}

fn dft_bits(group: &GroupSpec, bits: &[u8]) -> Vec<Complex64> {
    let elements = group.enumerate().expect("within caps");
    let m = group.factors().len();
    elements
        .iter()
        .map(|x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &b) in elements.iter().zip(bits) {
                if b == 0 {
                    continue;
                }
                let mut phase = 0.0f64;
                for j in 0..m {
                    let n = group.factors()[j].0 as f64;
                    let d = group.dot(k, x, j).expect("same group") as f64;
                    phase -= 2.0 * std::f64::consts::PI * d / n;
                }
                acc += Complex64::new(phase.cos(), phase.sin());
            }
            acc
        })
        .collect()
}

/// The transform of the spatial multispectrum, computed directly from the
/// scenery transform:
/// `A_hat(x_1..x_{n-1}) = conj(f_hat(x_1)) f_hat(x_{n-1})
///  prod_i f_hat(x_i - x_{i+1})`.
pub fn multispectrum_fourier(f: &Scenery) -> Result<FourierMultispectrum> {
    let group = f.group().clone();
    let n = group.order();
    if n > DENSE_CAP {
        return Err(Error::Capacity(format!(
            "dense multispectrum transform capped at order {DENSE_CAP}, got {n}"
        )));
    }
    let arity = (n - 1) as usize;
    let fh = dft_bits(&group, f.bits());
    let total = (n as usize).pow(arity as u32);
    let mut values = Vec::with_capacity(total);
    let mut x = vec![0u64; arity];
    for flat in 0..total {
        let mut rem = flat;
        for i in (0..arity).rev() {
            x[i] = (rem % n as usize) as u64;
            rem /= n as usize;
        }
        let mut v = fh[x[0] as usize].conj() * fh[x[arity - 1] as usize];
        for i in 0..arity.saturating_sub(1) {
            let d = group.index_add(x[i], group.index_neg(x[i + 1]));
            v *= fh[d as usize];
        }
        values.push(v);
    }
    Ok(FourierMultispectrum { group, arity, values })
}

/// Exact temporal multispectrum on explicit lag tuples, through the
/// convolution form `(1/n) sum gamma^(l_1)(x_1) ... A_f(x_1, ...)`,
/// evaluated by forward substitution so the dense tensor never materializes.
pub fn temporal_multispectrum_exact(
    walk: &StepDistribution,
    f: &Scenery,
    tuples: &[Vec<u64>],
) -> Result<TemporalMultispectrum> {
    let group = walk.group().clone();
    if &group != f.group() {
        return Err(Error::Mismatch("walk and scenery on different groups".into()));
    }
    let n = group.order() as usize;
    let arity = n - 1;
    let max_lag = tuples
        .iter()
        .flat_map(|t| t.iter())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    let powers = convolution_powers(walk, max_lag)?;
    let inv_n = BigRational::new(BigInt::one(), BigInt::from(n as u64));
    let f_rational: Vec<BigRational> = f
        .bits()
        .iter()
        .map(|&b| BigRational::from(BigInt::from(b)))
        .collect();
    let mut entries = BTreeMap::new();
    for tuple in tuples {
        if tuple.len() != arity {
            return Err(Error::Domain(format!(
                "lag tuple length {} != arity {arity}",
                tuple.len()
            )));
        }
        let mut w: Vec<BigRational> =
            f_rational.iter().map(|v| v * &inv_n).collect();
        for &lag in tuple {
            let gl = &powers[lag as usize];
            let mut next = vec![BigRational::zero(); n];
            for kp in 0..n as u64 {
                if f.value_at_index(kp) == 0 {
                    continue;
                }
                let mut acc = BigRational::zero();
                for k in 0..n as u64 {
                    if w[k as usize].is_zero() {
                        continue;
                    }
                    let delta = group.index_add(kp, group.index_neg(k));
                    acc += &gl[delta as usize] * &w[k as usize];
                }
                next[kp as usize] = acc;
            }
            w = next;
        }
        let b: BigRational = w.iter().sum();
        entries.insert(tuple.clone(), b);
    }
    Ok(TemporalMultispectrum { arity, entries })
}

/// Recover the scenery (up to shift) whose spatial multispectrum equals `a`:
/// candidates are the shift-class representatives with the right number of
/// ones, filtered by the positivity of their own visiting tuple and verified
/// by full multispectrum equality. The matching representative is unique.
pub fn recover_scenery(a: &SpatialMultispectrum) -> Result<Scenery> {
    let group = a.group.clone();
    let n = group.order();
    if n > RECOVER_CAP {
        return Err(Error::Capacity(format!(
            "scenery recovery capped at order {RECOVER_CAP}, got {n}"
        )));
    }
    if a.arity != (n - 1) as usize {
        return Err(Error::Domain(format!(
            "multispectrum arity {} does not match group order {n}",
            a.arity
        )));
    }
    let zeros_tuple = vec![0u64; a.arity];
    let ones_count = a.entries.get(&zeros_tuple).copied().unwrap_or(0);
    if ones_count == 0 {
        if !a.entries.values().all(|&v| v == 0) {
            return Err(Error::Domain(
                "inconsistent multispectrum: zero ones but nonzero entries".into(),
            ));
        }
        return Ok(Scenery::zeros(group));
    }
    if a.entries.values().any(|&v| v > ones_count) {
        return Err(Error::Domain(
            "inconsistent multispectrum: entry above the ones count".into(),
        ));
    }

    // Shift-class representatives with the right ones count.
    let mut seen = std::collections::BTreeSet::new();
    let mut matches: Vec<Scenery> = Vec::new();
    for mask in 0u64..(1 << n) {
        if (mask.count_ones() as u64) != ones_count {
            continue;
        }
        let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        let scenery = Scenery::new(group.clone(), bits)?;
        let canon = scenery.canonical_shift_form();
        if !seen.insert(canon.clone()) {
            continue;
        }
        let candidate = Scenery::new(group.clone(), canon)?;
        // Cheap filter: the tuple visiting all ones of the candidate must be
        // realized in `a`.
        let ones = candidate.ones_indices();
        let mut visiting = Vec::with_capacity(a.arity);
        for w in ones.windows(2) {
            visiting.push(group.index_add(w[1], group.index_neg(w[0])));
        }
        visiting.resize(a.arity, 0);
        if a.entries.get(&visiting).copied().unwrap_or(0) == 0 {
            continue;
        }
        if spatial_multispectrum(&candidate)?.entries == a.entries {
            matches.push(candidate);
        }
    }
    match matches.len() {
        1 => Ok(matches.pop().unwrap()),
        0 => Err(Error::Domain(
            "no scenery realizes this multispectrum".into(),
        )),
        _ => Err(Error::Inconsistency(
            "multiple shift classes share one multispectrum".into(),
        )),
    }
}

/// End-to-end reconstruction: compute the exact temporal multispectrum of a
/// hidden scenery on the `{0..n-1}^(n-1)` lag grid, invert the tensored
/// Vandermonde system axis by axis, and recover the scenery from the
/// resulting spatial multispectrum. The output is shift-equivalent to the
/// hidden scenery.
pub fn full_pipeline(walk: &StepDistribution, f_hidden: &Scenery) -> Result<Scenery> {
    let group = walk.group().clone();
    if &group != f_hidden.group() {
        return Err(Error::Mismatch("walk and scenery on different groups".into()));
    }
    // Distinctness first: collisions are the expected failure mode.
    match fourier_transform(walk) {
        Ok(table) => {
            let scan = find_collisions(&table);
            if !scan.collisions.is_empty() {
                return Err(Error::Singular(collision_summary(&table)));
            }
        }
        Err(Error::FallbackRequired { .. }) => {
            // Composite factors: distinctness is decided by the solvability
            // of the lag-grid system below.
        }
        Err(e) => return Err(e),
    }
    let n = group.order();
    if n > DENSE_CAP {
        return Err(Error::Capacity(format!(
            "tensor solve capped at order {DENSE_CAP}, got {n}"
        )));
    }
    let arity = (n - 1) as usize;

    // M[l][x] = gamma^(l)(x) on lags {0..n-1}; each axis of the temporal
    // grid is one copy of M.
    let powers = convolution_powers(walk, (n - 1) as usize)?;
    let matrix: Vec<Vec<BigRational>> = powers.to_vec();
    let minv = invert_rational(&matrix).ok_or_else(|| {
        Error::Singular("lag-grid system singular: Fourier coefficients collide".into())
    })?;

    // Temporal grid over {0..n-1}^arity.
    let total = (n as usize).pow(arity as u32);
    let mut grid_tuples = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut tuple = vec![0u64; arity];
        for i in (0..arity).rev() {
            tuple[i] = (rem % n as usize) as u64;
            rem /= n as usize;
        }
        grid_tuples.push(tuple);
    }
    let b = temporal_multispectrum_exact(walk, f_hidden, &grid_tuples)?;
    let mut tensor: Vec<BigRational> = grid_tuples
        .iter()
        .map(|t| b.entries[t].clone())
        .collect();

    // A = n * (M^-1 tensor ... tensor M^-1) B, applied axis by axis.
    for axis in 0..arity {
        tensor = apply_axis(&tensor, &minv, n as usize, arity, axis);
    }
    let n_rational = BigRational::from(BigInt::from(n));
    let mut entries = BTreeMap::new();
    for (flat, v) in tensor.iter().enumerate() {
        let scaled = v * &n_rational;
        if scaled.is_zero() {
            continue;
        }
        if scaled.is_negative() || !scaled.is_integer() {
            return Err(Error::Numerical(format!(
                "recovered multispectrum entry {scaled} is not a nonnegative integer"
            )));
        }
        let mut rem = flat;
        let mut tuple = vec![0u64; arity];
        for i in (0..arity).rev() {
            tuple[i] = (rem % n as usize) as u64;
            rem /= n as usize;
        }
        entries.insert(
            tuple,
            scaled.to_integer().to_u64().ok_or_else(|| {
                Error::Numerical("multispectrum entry out of u64 range".into())
            })?,
        );
    }
    let a = SpatialMultispectrum { group, arity, entries };
    recover_scenery(&a)
}

/// Contract a square matrix along one axis of a dense tensor with equal
/// extents.
pub(crate) fn apply_axis(
    tensor: &[BigRational],
    matrix: &[Vec<BigRational>],
    extent: usize,
    arity: usize,
    axis: usize,
) -> Vec<BigRational> {
    let stride = extent.pow((arity - 1 - axis) as u32);
    let mut out = vec![BigRational::zero(); tensor.len()];
    let block = stride * extent;
    for base in (0..tensor.len()).step_by(block) {
        for off in 0..stride {
            for lp in 0..extent {
                let mut acc = BigRational::zero();
                for l in 0..extent {
                    let v = &tensor[base + l * stride + off];
                    if !v.is_zero() && !matrix[lp][l].is_zero() {
                        acc += &matrix[lp][l] * v;
                    }
                }
                out[base + lp * stride + off] = acc;
            }
        }
    }
    out
}
