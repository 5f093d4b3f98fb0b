//! Step distributions and the reconstructibility analysis.
//!
//! The Fourier coefficients of a step distribution decide everything:
//! distinct coefficients make the walk reconstructive on any finite abelian
//! group; on products of distinct prime cycles larger than 5 with rational
//! probabilities, a coefficient collision makes it non-reconstructive, and
//! the collision exposes a multiplier symmetry of the support. This module
//! computes exact (cyclotomic) and numeric Fourier tables, searches for
//! collisions, evaluates the drift and bounded-support criteria, and folds
//! it all into a verdict.

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::group::{inverse_mod, is_prime, GroupElement, GroupSpec};
use crate::numeric::{roots_of_unity, working_scale, BigComplex, BigReal};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};

/// Default tolerance for float-mode comparisons (paired with 256-bit precision).
pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-30;

/// Default precision for the numeric path.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Probabilities of a step distribution: exact rationals, or high-precision
/// floats carrying the tolerance they were declared with.
#[derive(Debug, Clone)]
pub enum WalkProbs {
    Exact(BTreeMap<u64, BigRational>),
    Float { probs: BTreeMap<u64, BigReal>, tolerance: f64 },
}

/// The law `gamma` of a random walk's increments on a finite abelian group.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    group: GroupSpec,
    probs: WalkProbs,
}

impl StepDistribution {
    /// Exact walk from (element index, probability) pairs. Probabilities
    /// must be nonnegative and sum to exactly one.
    pub fn exact_from_indices(group: GroupSpec, entries: Vec<(u64, BigRational)>) -> Result<Self> {
        let order = group.order();
        let mut probs: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (idx, p) in entries {
            if idx >= order {
                return Err(Error::Domain(format!("element index {idx} out of range")));
            }
            if p.is_negative() {
                return Err(Error::Domain("negative probability".into()));
            }
            if p.is_zero() {
                continue;
            }
            *probs.entry(idx).or_insert_with(BigRational::zero) += p;
        }
        let total: BigRational = probs.values().sum();
        if !total.is_one() {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(StepDistribution { group, probs: WalkProbs::Exact(probs) })
    }

    pub fn exact(group: GroupSpec, entries: &[(GroupElement, BigRational)]) -> Result<Self> {
        let indexed = entries
            .iter()
            .map(|(e, p)| {
                if e.group() != &group {
                    return Err(Error::Mismatch("walk entry from a different group".into()));
                }
                Ok((group.index_of(e), p.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::exact_from_indices(group, indexed)
    }

    /// Uniform distribution over a multiset of elements.
    pub fn uniform(group: GroupSpec, elements: &[GroupElement]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Domain("empty multiset".into()));
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(elements.len()));
        let entries = elements
            .iter()
            .map(|e| (e.clone(), w.clone()))
            .collect::<Vec<_>>();
        Self::exact(group, &entries)
    }

    /// Uniform walk on a cycle from signed step sizes, e.g. `{-1, 1}`.
    pub fn uniform_cycle(n: u64, steps: &[i64]) -> Result<Self> {
        let group = GroupSpec::cycle(n)?;
        let elems = steps
            .iter()
            .map(|&s| group.element_from_ints(&[s]))
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(group, &elems)
    }

    /// Float-mode walk. Entries must be nonnegative and sum to 1 within the
    /// declared tolerance.
    pub fn float_from_indices(
        group: GroupSpec,
        entries: Vec<(u64, BigReal)>,
        tolerance: f64,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("empty distribution".into()));
        }
        let order = group.order();
        let scale = entries[0].1.scale();
        let tol = BigReal::from_f64(tolerance, scale);
        let mut probs: BTreeMap<u64, BigReal> = BTreeMap::new();
        let mut total = BigReal::zero(scale);
        for (idx, p) in entries {
            if idx >= order {
                return Err(Error::Domain(format!("element index {idx} out of range")));
            }
            if p.scale() != scale {
                return Err(Error::Mismatch("mixed scales in float walk".into()));
            }
            if p.neg() > tol {
                return Err(Error::Domain("negative probability".into()));
            }
            total = total.add(&p);
            let entry = probs.entry(idx).or_insert_with(|| BigReal::zero(scale));
            *entry = entry.add(&p);
        }
        if total.sub(&BigReal::one(scale)).abs() > tol {
            return Err(Error::Domain(format!(
                "probabilities sum to {} (outside tolerance {tolerance})",
                total.to_f64()
            )));
        }
        Ok(StepDistribution { group, probs: WalkProbs::Float { probs, tolerance } })
    }

    /// The irrational walk on `Z_7` that collides at (3, -3) yet
    /// distinguishes all sceneries: with `c = cos(6 pi / 7)` and
    /// `delta = (c + 1/2) / (2c - 1)`, steps 1 and 2 carry probabilities
    /// `1/2 + delta` and `1/2 - delta`.
    pub fn irrational_collision_walk_z7(precision_bits: u32) -> Self {
        let scale = working_scale(precision_bits);
        // cos(6 pi / 7) = cos(2 pi * 3 / 7)
        let c = crate::numeric::cos_sin_two_pi_frac(3, 7, scale).0;
        let half = BigReal::from_rational(&BigRational::new(1.into(), 2.into()), scale);
        let one = BigReal::one(scale);
        let delta = c.add(&half).div(&c.add(&c).sub(&one));
        let p1 = half.add(&delta);
        let p2 = half.sub(&delta);
        let group = GroupSpec::cycle(7).unwrap();
        StepDistribution::float_from_indices(group, vec![(1, p1), (2, p2)], DEFAULT_FLOAT_TOLERANCE)
            .expect("constructed walk is a valid distribution")
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn probs(&self) -> &WalkProbs {
        &self.probs
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.probs, WalkProbs::Exact(_))
    }

    pub fn exact_entries(&self) -> Option<&BTreeMap<u64, BigRational>> {
        match &self.probs {
            WalkProbs::Exact(m) => Some(m),
            WalkProbs::Float { .. } => None,
        }
    }

    /// Probabilities as high-precision reals at the given scale, whatever the
    /// mode.
    pub fn entries_as_reals(&self, scale: u32) -> Vec<(u64, BigReal)> {
        match &self.probs {
            WalkProbs::Exact(m) => m
                .iter()
                .map(|(&k, p)| (k, BigReal::from_rational(p, scale)))
                .collect(),
            WalkProbs::Float { probs, .. } => probs
                .iter()
                .map(|(&k, p)| (k, p.rescale(scale)))
                .collect(),
        }
    }

    pub fn declared_tolerance(&self) -> Option<f64> {
        match &self.probs {
            WalkProbs::Exact(_) => None,
            WalkProbs::Float { tolerance, .. } => Some(*tolerance),
        }
    }

    pub fn support_indices(&self) -> Vec<u64> {
        match &self.probs {
            WalkProbs::Exact(m) => m.keys().copied().collect(),
            WalkProbs::Float { probs, .. } => probs.keys().copied().collect(),
        }
    }

    /// `gamma(k) = gamma(-k)` for all k.
    pub fn is_symmetric(&self) -> bool {
        match &self.probs {
            WalkProbs::Exact(m) => m.iter().all(|(&k, p)| {
                let nk = self.group.index_neg(k);
                m.get(&nk).map(|q| q == p).unwrap_or(false)
            }),
            WalkProbs::Float { probs, tolerance } => {
                let scale = probs.values().next().map(|p| p.scale()).unwrap_or(64);
                let tol = BigReal::from_f64(*tolerance, scale);
                probs.iter().all(|(&k, p)| {
                    let nk = self.group.index_neg(k);
                    let q = probs.get(&nk).cloned().unwrap_or_else(|| BigReal::zero(scale));
                    p.sub(&q).abs() <= tol
                })
            }
        }
    }

    /// The minimal multiset representation of an exact walk: each support
    /// element with its smallest integer multiplicity.
    pub fn minimal_multiset(&self) -> Option<Vec<(u64, BigInt)>> {
        let probs = self.exact_entries()?;
        let lcm = probs
            .values()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let mut weights: Vec<(u64, BigInt)> = probs
            .iter()
            .map(|(&k, p)| (k, (p * BigRational::from(lcm.clone())).to_integer()))
            .collect();
        let g = weights
            .iter()
            .fold(BigInt::zero(), |acc, (_, w)| acc.gcd(w));
        if !g.is_zero() {
            for (_, w) in weights.iter_mut() {
                *w /= &g;
            }
        }
        Some(weights)
    }

    /// Drift of an exact walk on a cycle: the sum of its minimal multiset.
    pub fn drift(&self) -> Option<GroupElement> {
        if !self.group.is_cycle() {
            return None;
        }
        let n = self.group.cycle_modulus()?;
        let weights = self.minimal_multiset()?;
        let mut acc: u64 = 0;
        for (k, w) in weights {
            let wm = w.mod_floor(&BigInt::from(n)).to_u64().unwrap_or(0);
            acc = (acc + wm * (k % n)) % n;
        }
        Some(self.group.element_at(acc))
    }
}

impl std::fmt::Display for StepDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {{", self.group)?;
        match &self.probs {
            WalkProbs::Exact(m) => {
                for (i, (k, p)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}: {}", self.group.element_at(*k), p)?;
                }
            }
            WalkProbs::Float { probs, .. } => {
                for (i, (k, p)) in probs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}: {:.6}", self.group.element_at(*k), p.to_f64())?;
                }
            }
        }
        write!(f, "}}")
    }
}

/// A nonempty multiset of group elements; induces the uniform step
/// distribution over its entries.
#[derive(Debug, Clone)]
pub struct StepMultiset {
    group: GroupSpec,
    elements: Vec<GroupElement>,
}

impl StepMultiset {
    pub fn new(group: GroupSpec, elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Domain("empty multiset".into()));
        }
        for e in &elements {
            if e.group() != &group {
                return Err(Error::Mismatch("multiset entry from a different group".into()));
            }
        }
        Ok(StepMultiset { group, elements })
    }

    /// Multiset on a cycle from signed integers.
    pub fn from_ints_cycle(n: u64, ints: &[i64]) -> Result<Self> {
        let group = GroupSpec::cycle(n)?;
        let elements = ints
            .iter()
            .map(|&v| group.element_from_ints(&[v]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, elements)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn to_distribution(&self) -> StepDistribution {
        StepDistribution::uniform(self.group.clone(), &self.elements)
            .expect("multiset is nonempty and well-formed")
    }

    /// `D(Gamma)`: the sum of the entries, in the group.
    pub fn drift(&self) -> GroupElement {
        let mut acc = self.group.zero();
        for e in &self.elements {
            acc = self.group.add(&acc, e).expect("same group");
        }
        acc
    }

    /// Multiset equality with its own negation.
    pub fn is_symmetric(&self) -> bool {
        let mut a: Vec<u64> = self.elements.iter().map(|e| self.group.index_of(e)).collect();
        let mut b: Vec<u64> = a.iter().map(|&i| self.group.index_neg(i)).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// The Fourier table of a step distribution over the whole dual group,
/// indexed by element index.
#[derive(Debug, Clone)]
pub enum FourierTable {
    Exact {
        group: GroupSpec,
        values: Vec<CyclotomicNumber>,
    },
    Float {
        group: GroupSpec,
        values: Vec<BigComplex>,
        tolerance: f64,
        precision_bits: u32,
    },
}

impl FourierTable {
    pub fn group(&self) -> &GroupSpec {
        match self {
            FourierTable::Exact { group, .. } => group,
            FourierTable::Float { group, .. } => group,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FourierTable::Exact { values, .. } => values.len(),
            FourierTable::Float { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric rendering (f64) of every value, for reports.
    pub fn to_numeric_rows(&self) -> Vec<(String, f64, f64)> {
        match self {
            FourierTable::Exact { group, values } => values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (re, im) = v.numeric_eval(64).to_f64_pair();
                    (group.element_at(i as u64).to_string(), re, im)
                })
                .collect(),
            FourierTable::Float { group, values, .. } => values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (re, im) = v.to_f64_pair();
                    (group.element_at(i as u64).to_string(), re, im)
                })
                .collect(),
        }
    }
}

/// First factor modulus that rules out the exact cyclotomic path, if any.
fn exact_path_obstruction(group: &GroupSpec) -> Option<u64> {
    group
        .factors()
        .iter()
        .map(|&(n, _)| n)
        .find(|&n| n == 2 || !is_prime(n))
}

fn cyclotomic_context(group: &GroupSpec) -> Vec<u64> {
    group.factors().iter().map(|&(n, _)| n).collect()
}

/// Exact Fourier transform `gamma_hat(x) = sum_k prod_j w_{p_j}^{k_j . x_j}
/// gamma(k)` over the whole dual group. Requires exact probabilities and all
/// factor moduli odd primes; otherwise reports which factor forces the
/// numeric fallback.
pub fn fourier_transform(dist: &StepDistribution) -> Result<FourierTable> {
    let group = dist.group().clone();
    if let Some(modulus) = exact_path_obstruction(&group) {
        return Err(Error::FallbackRequired { modulus });
    }
    let probs = dist.exact_entries().ok_or(Error::Domain(
        "exact transform needs exact probabilities; use the numeric transform".into(),
    ))?;
    let context = cyclotomic_context(&group);
    let order = group.order();
    let elements = group.enumerate()?;
    let support: Vec<(&GroupElement, &BigRational)> = probs
        .iter()
        .map(|(&k, p)| (&elements[k as usize], p))
        .collect();
    let m = context.len();
    let mut values = Vec::with_capacity(order as usize);
    for x in &elements {
        let terms: Vec<(Vec<i64>, BigRational)> = support
            .iter()
            .map(|(k, p)| {
                let exps: Vec<i64> = (0..m)
                    .map(|j| group.dot(k, x, j).expect("members of the group") as i64)
                    .collect();
                (exps, (*p).clone())
            })
            .collect();
        values.push(CyclotomicNumber::from_terms(&context, terms)?);
    }
    Ok(FourierTable::Exact { group, values })
}

/// Numeric Fourier transform at the given precision; accepts any abelian
/// group and either probability mode.
pub fn fourier_transform_float(
    dist: &StepDistribution,
    precision_bits: u32,
) -> Result<FourierTable> {
    let group = dist.group().clone();
    let order = group.order();
    if order > crate::group::DEFAULT_ENUM_CAP {
        return Err(Error::Capacity(format!(
            "dual group of order {order} exceeds the enumeration cap"
        )));
    }
    let scale = working_scale(precision_bits);
    let entries = dist.entries_as_reals(scale);
    let tolerance = dist.declared_tolerance().unwrap_or(DEFAULT_FLOAT_TOLERANCE);
    let mut values = Vec::with_capacity(order as usize);
    if let Some(n) = group.cycle_modulus() {
        let roots = roots_of_unity(n, scale);
        for x in 0..n {
            let mut acc = BigComplex::zero(scale);
            for (k, p) in &entries {
                let term = roots[((k * x) % n) as usize].scale_by(p);
                acc = acc.add(&term);
            }
            values.push(acc);
        }
    } else {
        let elements = group.enumerate()?;
        let tables: Vec<_> = group
            .factors()
            .iter()
            .map(|&(n, _)| roots_of_unity(n, scale))
            .collect();
        let m = group.factors().len();
        for x in &elements {
            let mut acc = BigComplex::zero(scale);
            for (k, p) in &entries {
                let ke = &elements[*k as usize];
                let mut chi = BigComplex::one(scale);
                for (j, table) in tables.iter().enumerate().take(m) {
                    let d = group.dot(ke, x, j).expect("members of the group");
                    if d != 0 {
                        chi = chi.mul(&table[d as usize]);
                    }
                }
                acc = acc.add(&chi.scale_by(p));
            }
            values.push(acc);
        }
    }
    Ok(FourierTable::Float { group, values, tolerance, precision_bits })
}

/// Result of a collision search over a Fourier table.
#[derive(Debug, Clone, Default)]
pub struct CollisionScan {
    /// Unordered pairs (x < y, element indices) with equal values. In float
    /// mode, "equal" means within the declared tolerance.
    pub collisions: Vec<(u64, u64)>,
    /// Float mode only: pairs whose difference lands in (tol, 10 tol], close
    /// enough to poison the verdict.
    pub near_ties: Vec<(u64, u64)>,
}

/// All colliding pairs of the table. Exact tables group by canonical form;
/// float tables compare within tolerance and flag near-ties.
pub fn find_collisions(table: &FourierTable) -> CollisionScan {
    match table {
        FourierTable::Exact { values, .. } => {
            let mut groups: HashMap<&CyclotomicNumber, Vec<u64>> = HashMap::new();
            for (i, v) in values.iter().enumerate() {
                groups.entry(v).or_default().push(i as u64);
            }
            let mut collisions = Vec::new();
            for members in groups.values() {
                for i in 0..members.len() {
                    for j in (i + 1)..members.len() {
                        collisions.push((members[i], members[j]));
                    }
                }
            }
            collisions.sort_unstable();
            CollisionScan { collisions, near_ties: Vec::new() }
        }
        FourierTable::Float { values, tolerance, .. } => {
            let scale = values
                .first()
                .map(|v| v.re.scale())
                .unwrap_or_else(|| working_scale(DEFAULT_PRECISION_BITS));
            let tol = BigReal::from_f64(*tolerance, scale);
            let near = BigReal::from_f64(*tolerance * 10.0, scale);
            // Sort by real part; pairs within 10*tol must be close in the
            // real coordinate, which prunes the quadratic scan.
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].re.cmp(&values[b].re));
            let mut collisions = Vec::new();
            let mut near_ties = Vec::new();
            for (si, &i) in order.iter().enumerate() {
                for &j in order[si + 1..].iter() {
                    if values[j].re.sub(&values[i].re) > near {
                        break;
                    }
                    let d = values[i].sub(&values[j]).max_norm();
                    let pair = ((i as u64).min(j as u64), (i as u64).max(j as u64));
                    if d <= tol {
                        collisions.push(pair);
                    } else if d <= near {
                        near_ties.push(pair);
                    }
                }
            }
            collisions.sort_unstable();
            near_ties.sort_unstable();
            CollisionScan { collisions, near_ties }
        }
    }
}

/// For a collision `gamma_hat(x) = gamma_hat(y)` on a prime cycle `Z_p`,
/// `p > 5`, with exact rational probabilities: the multiplier `v = x^-1 y`
/// whose support symmetry `gamma(k v) = gamma(k)` the collision forces.
/// When `x` or `y` is zero the walk must be the stay-put walk
/// (`gamma(0) = 1`) and no multiplier exists.
pub fn multiplier_of_collision(
    dist: &StepDistribution,
    x: &GroupElement,
    y: &GroupElement,
) -> Result<Option<u64>> {
    let group = dist.group();
    let p = group
        .cycle_modulus()
        .filter(|&p| p > 5 && is_prime(p))
        .ok_or_else(|| {
            Error::Domain("multiplier analysis needs a prime cycle larger than 5".into())
        })?;
    let probs = dist
        .exact_entries()
        .ok_or_else(|| Error::Domain("multiplier analysis needs exact probabilities".into()))?;
    let xi = group.index_of(x);
    let yi = group.index_of(y);
    if xi == yi {
        return Err(Error::Domain("x and y must differ".into()));
    }
    if xi == 0 || yi == 0 {
        let stay = probs.get(&0).map(|p| p.is_one()).unwrap_or(false);
        if !stay {
            return Err(Error::Inconsistency(
                "collision with 0 must force the stay-put walk".into(),
            ));
        }
        return Ok(None);
    }
    let v = (inverse_mod(xi, p)? * yi) % p;
    for (&k, pk) in probs {
        let kv = (k * v) % p;
        if probs.get(&kv) != Some(pk) {
            return Err(Error::Inconsistency(format!(
                "support not invariant under multiplier {v}: gamma({kv}) != gamma({k})"
            )));
        }
    }
    Ok(Some(v))
}

/// Report of the bounded-support criterion for an integer multiset.
#[derive(Debug, Clone)]
pub struct BoundedSupportReport {
    /// For every prime `n > n_bound`, the embedded walk is reconstructive
    /// (unless the multiset is symmetric).
    pub n_bound: u64,
    pub symmetric: bool,
    /// gcd of the entries (0 when all entries are 0).
    pub gcd: i64,
    /// Entries divided by the gcd, sorted.
    pub normalized: Vec<i64>,
    /// Certificate `sum c_i g_i = 1` over the distinct normalized values.
    pub certificate: Vec<(i64, i64)>,
    /// Max absolute value over the combination multiset and the normalized
    /// entries; `n_bound = max(2 b^2, gcd)`.
    pub b: i64,
}

/// Compute an explicit bound `N` such that for every prime `n > N` the
/// embedding of the multiset into `Z_n` is reconstructive, unless the
/// multiset is symmetric (in which case no `N` works and the report says so).
pub fn bounded_support_bound(entries: &[i64]) -> Result<BoundedSupportReport> {
    if entries.is_empty() {
        return Err(Error::Domain("empty multiset".into()));
    }
    let mut sorted = entries.to_vec();
    sorted.sort_unstable();
    let mut neg: Vec<i64> = entries.iter().map(|&v| -v).collect();
    neg.sort_unstable();
    let symmetric = sorted == neg;

    let d = entries.iter().fold(0i64, |acc, &v| num_integer::gcd(acc, v.abs()));
    if d == 0 {
        // All entries zero: the stay-put walk.
        return Ok(BoundedSupportReport {
            n_bound: 0,
            symmetric: true,
            gcd: 0,
            normalized: sorted,
            certificate: Vec::new(),
            b: 0,
        });
    }
    let normalized: Vec<i64> = sorted.iter().map(|&v| v / d).collect();
    let mut support: Vec<i64> = normalized.iter().copied().filter(|&v| v != 0).collect();
    support.sort_unstable();
    support.dedup();
    let certificate = gcd_certificate(&support)?;

    // b bounds both the combination multiset c(Gamma) and Gamma itself.
    let mut max_combo: i64 = 0;
    let mut min_combo: i64 = 0;
    for &(c, _) in &certificate {
        let vals = normalized.iter().map(|&s| c * s);
        max_combo += vals.clone().max().unwrap();
        min_combo += vals.min().unwrap();
    }
    let b_combo = max_combo.abs().max(min_combo.abs());
    let b_gamma = normalized.iter().map(|&v| v.abs()).max().unwrap();
    let b = b_combo.max(b_gamma);

    // The gcd must also be invertible mod n, so n has to exceed it.
    let n_bound = (2 * b * b).max(d) as u64;
    Ok(BoundedSupportReport { n_bound, symmetric, gcd: d, normalized, certificate, b })
}

/// A coefficient vector `c` over the distinct support values with
/// `sum c_i g_i = 1`. For supports of at most 4 values the vector with the
/// smallest max |c_i| is found by widening box search; larger supports take
/// the first extended-Euclid certificate over a greedy coprime subfamily.
fn gcd_certificate(support: &[i64]) -> Result<Vec<(i64, i64)>> {
    if support.is_empty() {
        return Err(Error::Domain("no nonzero entries".into()));
    }
    debug_assert_eq!(
        support.iter().fold(0i64, |a, &v| num_integer::gcd(a, v.abs())),
        1,
        "support must be coprime after gcd normalization"
    );
    let r = support.len();
    if r <= 4 {
        for beta in 1..=64i64 {
            let mut coeffs = vec![-beta; r];
            'grid: loop {
                let total: i64 = coeffs.iter().zip(support).map(|(c, g)| c * g).sum();
                if total == 1 {
                    return Ok(coeffs
                        .into_iter()
                        .zip(support)
                        .filter(|(ci, _)| *ci != 0)
                        .map(|(ci, &gi)| (ci, gi))
                        .collect());
                }
                for c in coeffs.iter_mut() {
                    if *c < beta {
                        *c += 1;
                        continue 'grid;
                    }
                    *c = -beta;
                }
                break;
            }
        }
        return Err(Error::Inconsistency("no certificate found within search box".into()));
    }
    // Greedy coprime subfamily, then chain the extended Euclid algorithm.
    let mut family: Vec<i64> = Vec::new();
    let mut g = 0i64;
    for &v in support {
        let ng = num_integer::gcd(g, v.abs());
        if ng != g || family.is_empty() {
            family.push(v);
            g = ng;
        }
        if g == 1 {
            break;
        }
    }
    let mut coeffs: Vec<i64> = vec![1];
    let mut acc = family[0];
    for &v in &family[1..] {
        let (ng, u, w) = crate::group::extended_gcd(acc, v);
        for c in coeffs.iter_mut() {
            *c *= u;
        }
        coeffs.push(w);
        acc = ng;
    }
    debug_assert_eq!(acc, 1);
    Ok(coeffs.into_iter().zip(family).filter(|(c, _)| *c != 0).collect())
}

/// Embed an integer multiset into `Z_n`, aggregating entries that collide:
/// `gamma_n(k) = sum_{a = k mod n} gamma(a)`.
pub fn embed_mod_n(entries: &[i64], n: u64) -> Result<StepDistribution> {
    if entries.is_empty() {
        return Err(Error::Domain("empty multiset".into()));
    }
    let group = GroupSpec::cycle(n)?;
    let w = BigRational::new(BigInt::one(), BigInt::from(entries.len()));
    let indexed = entries
        .iter()
        .map(|&v| (v.rem_euclid(n as i64) as u64, w.clone()))
        .collect();
    StepDistribution::exact_from_indices(group, indexed)
}

/// The reconstructibility verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Reconstructive,
    NotReconstructive,
    Unknown,
}

/// Why a verdict is `Unknown`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    /// A factor modulus is composite; the collision dichotomy is not proved
    /// there, so a non-distinct table yields no conclusion.
    CompositeFactor(u64),
    /// A factor prime is 5 or less, where non-distinct coefficients can
    /// still be reconstructive.
    SmallPrime(u64),
    /// The walk has float-mode (possibly irrational) probabilities, for
    /// which a collision proves nothing.
    IrrationalEntries,
    /// A pairwise difference landed within 10x of the tolerance.
    NearTolerance,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::CompositeFactor(n) => write!(f, "composite factor Z_{n}"),
            UnknownReason::SmallPrime(p) => write!(f, "prime factor {p} <= 5"),
            UnknownReason::IrrationalEntries => write!(f, "non-rational probabilities"),
            UnknownReason::NearTolerance => write!(f, "difference within 10x of tolerance"),
        }
    }
}

/// A coefficient collision, with the forced support multiplier when the
/// group is a prime cycle larger than 5 and the walk is exact.
#[derive(Debug, Clone)]
pub struct Collision {
    pub x: u64,
    pub y: u64,
    pub multiplier: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisMode {
    Exact,
    Float,
}

/// Full output of [`analyze`].
#[derive(Debug, Clone)]
pub struct AnalysisVerdict {
    pub verdict: Verdict,
    pub reason: Option<UnknownReason>,
    pub distinct: bool,
    pub collisions: Vec<Collision>,
    pub near_ties: Vec<(u64, u64)>,
    pub drift: Option<GroupElement>,
    pub symmetric: bool,
    pub mode: AnalysisMode,
    pub table: Option<FourierTable>,
}

/// Decide reconstructibility:
/// - distinct coefficients: reconstructive on any abelian group;
/// - a collision with exact probabilities on a product of distinct primes
///   larger than 5: not reconstructive;
/// - a collision anywhere else: unknown, with the reason.
pub fn analyze(dist: &StepDistribution, precision_bits: u32) -> Result<AnalysisVerdict> {
    let group = dist.group();
    let symmetric = dist.is_symmetric();
    let drift = dist.drift();

    let table = match fourier_transform(dist) {
        Ok(t) => t,
        Err(Error::FallbackRequired { .. }) | Err(Error::Domain(_)) => {
            fourier_transform_float(dist, precision_bits)?
        }
        Err(e) => return Err(e),
    };
    let scan = find_collisions(&table);
    let mode = if matches!(table, FourierTable::Exact { .. }) {
        AnalysisMode::Exact
    } else {
        AnalysisMode::Float
    };

    if !scan.near_ties.is_empty() {
        return Ok(AnalysisVerdict {
            verdict: Verdict::Unknown,
            reason: Some(UnknownReason::NearTolerance),
            distinct: false,
            collisions: plain_collisions(scan.collisions),
            near_ties: scan.near_ties,
            drift,
            symmetric,
            mode,
            table: Some(table),
        });
    }

    if scan.collisions.is_empty() {
        return Ok(AnalysisVerdict {
            verdict: Verdict::Reconstructive,
            reason: None,
            distinct: true,
            collisions: Vec::new(),
            near_ties: Vec::new(),
            drift,
            symmetric,
            mode,
            table: Some(table),
        });
    }

    // Non-distinct. The dichotomy needs exact arithmetic on a product of
    // distinct primes, all larger than 5.
    if mode == AnalysisMode::Exact {
        let small = group.factors().iter().map(|&(n, _)| n).find(|&n| n <= 5);
        match small {
            None => {
                let collisions = if group.cycle_modulus().is_some() {
                    let elements = group.enumerate()?;
                    scan.collisions
                        .iter()
                        .map(|&(x, y)| {
                            multiplier_of_collision(
                                dist,
                                &elements[x as usize],
                                &elements[y as usize],
                            )
                            .map(|m| Collision { x, y, multiplier: m })
                        })
                        .collect::<Result<Vec<_>>>()?
                } else {
                    plain_collisions(scan.collisions)
                };
                Ok(AnalysisVerdict {
                    verdict: Verdict::NotReconstructive,
                    reason: None,
                    distinct: false,
                    collisions,
                    near_ties: Vec::new(),
                    drift,
                    symmetric,
                    mode,
                    table: Some(table),
                })
            }
            Some(p) => Ok(AnalysisVerdict {
                verdict: Verdict::Unknown,
                reason: Some(UnknownReason::SmallPrime(p)),
                distinct: false,
                collisions: plain_collisions(scan.collisions),
                near_ties: Vec::new(),
                drift,
                symmetric,
                mode,
                table: Some(table),
            }),
        }
    } else {
        let reason = if let Some(m) = exact_path_obstruction(group) {
            if is_prime(m) {
                UnknownReason::SmallPrime(m)
            } else {
                UnknownReason::CompositeFactor(m)
            }
        } else {
            UnknownReason::IrrationalEntries
        };
        Ok(AnalysisVerdict {
            verdict: Verdict::Unknown,
            reason: Some(reason),
            distinct: false,
            collisions: plain_collisions(scan.collisions),
            near_ties: Vec::new(),
            drift,
            symmetric,
            mode,
            table: Some(table),
        })
    }
}

fn plain_collisions(pairs: Vec<(u64, u64)>) -> Vec<Collision> {
    pairs
        .into_iter()
        .map(|(x, y)| Collision { x, y, multiplier: None })
        .collect()
}

/// Fast path for uniform multiset walks on prime cycles larger than 5:
/// nonzero drift certifies reconstructibility without a Fourier table;
/// zero drift defers to the full analysis.
pub fn drift_verdict(multiset: &StepMultiset, precision_bits: u32) -> Result<AnalysisVerdict> {
    let group = multiset.group();
    group
        .cycle_modulus()
        .filter(|&p| p > 5 && is_prime(p))
        .ok_or_else(|| {
            Error::Domain("drift criterion needs a prime cycle larger than 5".into())
        })?;
    let d = multiset.drift();
    if !d.is_zero() {
        return Ok(AnalysisVerdict {
            verdict: Verdict::Reconstructive,
            reason: None,
            distinct: true,
            collisions: Vec::new(),
            near_ties: Vec::new(),
            drift: Some(d),
            symmetric: multiset.is_symmetric(),
            mode: AnalysisMode::Exact,
            table: None,
        });
    }
    analyze(&multiset.to_distribution(), precision_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn walk_124() -> StepDistribution {
        StepDistribution::uniform_cycle(7, &[1, 2, 4]).unwrap()
    }

    #[test]
    fn exact_table_examples() {
        // Uniform on {1,2,4}: coefficients at 1, 2 and 4 agree.
        let table = fourier_transform(&walk_124()).unwrap();
        let FourierTable::Exact { values, .. } = &table else { panic!() };
        assert_eq!(values[1], values[2]);
        assert_eq!(values[2], values[4]);
        assert_ne!(values[1], values[3]);

        // Point mass at 0: all coefficients are 1.
        let stay = StepDistribution::uniform_cycle(7, &[0]).unwrap();
        let FourierTable::Exact { values, .. } = fourier_transform(&stay).unwrap() else {
            panic!()
        };
        let one = CyclotomicNumber::one(&[7]).unwrap();
        assert!(values.iter().all(|v| *v == one));

        // Uniform over the whole group: 1 at zero, 0 elsewhere.
        let all = StepDistribution::uniform_cycle(7, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
        let FourierTable::Exact { values, .. } = fourier_transform(&all).unwrap() else {
            panic!()
        };
        assert_eq!(values[0], one);
        assert!(values[1..].iter().all(|v| v.is_zero()));
    }

    #[test]
    fn normalization_coefficient_at_zero() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let n = [7u64, 11, 13][rng.gen_range(0..3)];
            let steps: Vec<i64> =
                (0..rng.gen_range(1..5)).map(|_| rng.gen_range(0..n as i64)).collect();
            let dist = StepDistribution::uniform_cycle(n, &steps).unwrap();
            let FourierTable::Exact { values, .. } = fourier_transform(&dist).unwrap() else {
                panic!()
            };
            assert_eq!(values[0].as_rational(), Some(rat(1, 1)));
        }
    }

    #[test]
    fn collisions_for_invariant_support_and_simple_walk() {
        let scan = find_collisions(&fourier_transform(&walk_124()).unwrap());
        for pair in [(1, 2), (1, 4), (2, 4)] {
            assert!(scan.collisions.contains(&pair), "missing {pair:?}");
        }

        let simple = StepDistribution::uniform_cycle(7, &[-1, 1]).unwrap();
        let scan = find_collisions(&fourier_transform(&simple).unwrap());
        assert_eq!(scan.collisions, vec![(1, 6), (2, 5), (3, 4)]);
    }

    #[test]
    fn delta_walk_collision_found_numerically() {
        let dist = StepDistribution::irrational_collision_walk_z7(256);
        let table = fourier_transform_float(&dist, 256).unwrap();
        let scan = find_collisions(&table);
        assert_eq!(scan.collisions, vec![(3, 4)]); // -3 = 4 in Z_7
        assert!(scan.near_ties.is_empty());
        // The collision is razor exact: difference under 1e-60 at 256 bits.
        let FourierTable::Float { values, .. } = &table else { panic!() };
        let diff = values[3].sub(&values[4]).max_norm();
        assert!(diff.to_f64() < 1e-60, "diff = {:e}", diff.to_f64());
    }

    #[test]
    fn multiplier_examples() {
        let g = GroupSpec::cycle(7).unwrap();
        let e = |k: i64| g.element_from_ints(&[k]).unwrap();
        // {1,2,4} with collision (1,2): multiplier 2, and 2*support = support.
        assert_eq!(multiplier_of_collision(&walk_124(), &e(1), &e(2)).unwrap(), Some(2));
        // Symmetric walk, collision (3,4): v = 3^-1 * 4 = 6 = -1.
        let sym = StepDistribution::uniform_cycle(7, &[-1, 1]).unwrap();
        assert_eq!(multiplier_of_collision(&sym, &e(3), &e(4)).unwrap(), Some(6));
        // Stay-put walk, degenerate collision with x = 0: no multiplier.
        let stay = StepDistribution::uniform_cycle(7, &[0]).unwrap();
        assert_eq!(multiplier_of_collision(&stay, &e(0), &e(3)).unwrap(), None);
        // Non-stay-put walk with x = 0 contradicts the theory.
        assert!(matches!(
            multiplier_of_collision(&walk_124(), &e(0), &e(3)),
            Err(Error::Inconsistency(_))
        ));
    }

    #[test]
    fn drift_examples() {
        let d = |steps: &[i64]| StepMultiset::from_ints_cycle(7, steps).unwrap().drift();
        assert!(d(&[1, 2, 4]).is_zero());
        assert_eq!(d(&[1, 2]).coords()[0][0], 3);
        let d11 = StepMultiset::from_ints_cycle(11, &[-1, 1]).unwrap().drift();
        assert!(d11.is_zero());
    }

    #[test]
    fn drift_verdict_paths() {
        // Nonzero drift: reconstructive without a table.
        let v = drift_verdict(&StepMultiset::from_ints_cycle(7, &[1, 2]).unwrap(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::Reconstructive);
        assert!(v.table.is_none());
        // Zero drift defers to the collision scan.
        let v =
            drift_verdict(&StepMultiset::from_ints_cycle(7, &[1, 2, 4]).unwrap(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::NotReconstructive);
        // Stay-put on Z_13: zero drift, then not reconstructive.
        let v = drift_verdict(&StepMultiset::from_ints_cycle(13, &[0]).unwrap(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::NotReconstructive);
        // Composite cycle refused.
        assert!(drift_verdict(&StepMultiset::from_ints_cycle(12, &[1]).unwrap(), 256).is_err());
    }

    #[test]
    fn symmetry_examples() {
        assert!(StepDistribution::uniform_cycle(7, &[-1, 1]).unwrap().is_symmetric());
        assert!(!StepDistribution::uniform_cycle(7, &[1, 2]).unwrap().is_symmetric());
        assert!(StepDistribution::uniform_cycle(12, &[-2, -1, 1, 2]).unwrap().is_symmetric());
    }

    #[test]
    fn bounded_support_examples() {
        let r = bounded_support_bound(&[1, 2]).unwrap();
        assert_eq!((r.gcd, r.b, r.n_bound), (1, 2, 8));
        assert!(!r.symmetric);

        let r = bounded_support_bound(&[-1, 1]).unwrap();
        assert!(r.symmetric);

        let r = bounded_support_bound(&[2, 4]).unwrap();
        assert_eq!((r.gcd, r.normalized.clone(), r.b, r.n_bound), (2, vec![1, 2], 2, 8));

        // The gcd itself must stay below n: {5} embeds to the stay-put walk
        // on Z_5, so the bound has to exceed 5.
        let r = bounded_support_bound(&[5]).unwrap();
        assert!(r.n_bound >= 5);

        assert!(bounded_support_bound(&[]).is_err());
    }

    #[test]
    fn embed_examples() {
        let d = embed_mod_n(&[1, 2], 7).unwrap();
        assert_eq!(d.exact_entries().unwrap()[&1], rat(1, 2));
        let d = embed_mod_n(&[1, 8], 7).unwrap();
        assert_eq!(d.exact_entries().unwrap()[&1], rat(1, 1));
        let d = embed_mod_n(&[-1, 1], 5).unwrap();
        assert_eq!(d.exact_entries().unwrap()[&4], rat(1, 2));
        assert_eq!(d.exact_entries().unwrap()[&1], rat(1, 2));
    }

    #[test]
    fn analyze_verdicts() {
        // {1,2} on Z_7: distinct coefficients, reconstructive.
        let v = analyze(&StepDistribution::uniform_cycle(7, &[1, 2]).unwrap(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::Reconstructive);
        assert!(v.distinct && v.collisions.is_empty());

        // {1,2,4} on Z_7: collision (1,2) with multiplier 2.
        let v = analyze(&walk_124(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::NotReconstructive);
        assert!(v
            .collisions
            .iter()
            .any(|c| (c.x, c.y) == (1, 2) && c.multiplier == Some(2)));
        assert!(v.drift.as_ref().unwrap().is_zero());

        // Delta walk: unknown by irrationality, collision (3,-3) listed.
        let v = analyze(&StepDistribution::irrational_collision_walk_z7(256), 256).unwrap();
        assert_eq!(v.verdict, Verdict::Unknown);
        assert_eq!(v.reason, Some(UnknownReason::IrrationalEntries));
        assert!(v.collisions.iter().any(|c| (c.x, c.y) == (3, 4)));

        // Symmetric walk on a composite cycle: unknown, composite factor.
        let v =
            analyze(&StepDistribution::uniform_cycle(12, &[-2, -1, 1, 2]).unwrap(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::Unknown);
        assert_eq!(v.reason, Some(UnknownReason::CompositeFactor(12)));
        assert!(v.symmetric);

        // Simple walk on Z_5: collision but small prime, unknown.
        let v = analyze(&StepDistribution::uniform_cycle(5, &[-1, 1]).unwrap(), 256).unwrap();
        assert_eq!(v.verdict, Verdict::Unknown);
        assert_eq!(v.reason, Some(UnknownReason::SmallPrime(5)));
    }

    #[test]
    fn symmetric_walks_collide_conjugate_pairs() {
        for n in [7u64, 11, 13] {
            let dist = StepDistribution::uniform_cycle(n, &[-2, 2, -1, 1]).unwrap();
            let scan = find_collisions(&fourier_transform(&dist).unwrap());
            for k in 1..n {
                let pair = (k.min(n - k), k.max(n - k));
                if pair.0 != pair.1 {
                    assert!(scan.collisions.contains(&pair), "n={n} missing {pair:?}");
                }
            }
        }
    }

    #[test]
    fn exact_and_float_collision_sets_agree() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..60 {
            let n = [7u64, 11, 13][rng.gen_range(0..3)];
            let size = rng.gen_range(1..5);
            let steps: Vec<i64> = (0..size).map(|_| rng.gen_range(0..n as i64)).collect();
            let dist = StepDistribution::uniform_cycle(n, &steps).unwrap();
            let exact = find_collisions(&fourier_transform(&dist).unwrap());
            let float = find_collisions(&fourier_transform_float(&dist, 256).unwrap());
            assert_eq!(exact.collisions, float.collisions, "walk {steps:?} on Z_{n}");
            assert!(float.near_ties.is_empty());
        }
    }

    #[test]
    fn multiplier_closure_property() {
        let mut rng = StdRng::seed_from_u64(29);
        let g = GroupSpec::cycle(11).unwrap();
        for _ in 0..50 {
            let size = rng.gen_range(1..5);
            let steps: Vec<i64> = (0..size).map(|_| rng.gen_range(0..11)).collect();
            let dist = StepDistribution::uniform_cycle(11, &steps).unwrap();
            let scan = find_collisions(&fourier_transform(&dist).unwrap());
            for &(x, y) in &scan.collisions {
                if x == 0 || y == 0 {
                    continue;
                }
                let v =
                    multiplier_of_collision(&dist, &g.element_at(x), &g.element_at(y)).unwrap();
                // multiplier_of_collision verifies closure internally; a
                // returned value means the permutation fixes the walk.
                assert!(v.is_some());
            }
        }
    }

    #[test]
    fn near_tolerance_gap_poisons_the_verdict() {
        // Perturb the irrational walk so the (3,4) coefficient gap lands in
        // (tol, 10 tol]: the verdict must refuse to classify.
        let base = StepDistribution::irrational_collision_walk_z7(256);
        let scale = crate::numeric::working_scale(256);
        let entries = base.entries_as_reals(scale);
        let bump = BigReal::from_f64(1e-31, scale);
        let perturbed: Vec<(u64, BigReal)> = entries
            .iter()
            .map(|(k, p)| {
                if *k == 1 {
                    (*k, p.add(&bump))
                } else {
                    (*k, p.sub(&bump))
                }
            })
            .collect();
        let dist = StepDistribution::float_from_indices(
            GroupSpec::cycle(7).unwrap(),
            perturbed,
            1e-31,
        )
        .unwrap();
        let v = analyze(&dist, 256).unwrap();
        assert_eq!(v.verdict, Verdict::Unknown);
        assert_eq!(v.reason, Some(UnknownReason::NearTolerance));
        assert!(v.near_ties.contains(&(3, 4)));
    }

    #[test]
    fn float_table_values_bounded_by_one() {
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..10 {
            let n = [7u64, 11, 12][rng.gen_range(0..3)];
            let steps: Vec<i64> =
                (0..rng.gen_range(1..5)).map(|_| rng.gen_range(0..n as i64)).collect();
            let dist = StepDistribution::uniform_cycle(n, &steps).unwrap();
            let FourierTable::Float { values, .. } =
                fourier_transform_float(&dist, 128).unwrap()
            else {
                panic!()
            };
            let bound = BigReal::from_f64(1.0 + 1e-20, values[0].re.scale());
            for v in &values {
                assert!(v.max_norm() <= bound);
            }
        }
    }

    #[test]
    fn fourier_on_product_group() {
        // Product walk on Z_7 x Z_11 whose Z_11 component is a point mass:
        // coefficients depend only on the Z_7 coordinate of x.
        let g = GroupSpec::parse("Z7xZ11").unwrap();
        let steps: Vec<GroupElement> = [1i64, 2, 4]
            .iter()
            .map(|&k| g.element_from_ints(&[k, 0]).unwrap())
            .collect();
        let dist = StepDistribution::uniform(g.clone(), &steps).unwrap();
        let FourierTable::Exact { values, .. } = fourier_transform(&dist).unwrap() else {
            panic!()
        };
        let idx = |a: i64, b: i64| g.index_of(&g.element_from_ints(&[a, b]).unwrap()) as usize;
        assert_eq!(values[idx(1, 0)], values[idx(1, 5)]);
        assert_eq!(values[idx(1, 0)], values[idx(2, 3)]);
        assert_ne!(values[idx(1, 0)], values[idx(3, 0)]);
    }
}
