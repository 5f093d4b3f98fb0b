//! Binary sceneries and the explicit indistinguishable-pair constructions.
//!
//! A scenery is a labeling `f: H -> {0,1}`. Every coefficient collision of a
//! rational walk on a product of prime cycles larger than 5 yields a pair of
//! sceneries that are not shifts of each other yet produce identically
//! distributed observations; this module builds the pair for each collision
//! shape and verifies the non-shift claim exhaustively at construction time.

use crate::error::{Error, Result};
use crate::group::{inverse_mod, is_prime, GroupElement, GroupSpec};
use crate::walk::StepDistribution;

/// A binary labeling of a group, stored in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenery {
    group: GroupSpec,
    bits: Vec<u8>,
}

impl Scenery {
    pub fn new(group: GroupSpec, bits: Vec<u8>) -> Result<Self> {
        if bits.len() as u64 != group.order() {
            return Err(Error::Mismatch(format!(
                "{} bits for a group of order {}",
                bits.len(),
                group.order()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Domain("scenery bits must be 0 or 1".into()));
        }
        Ok(Scenery { group, bits })
    }

    pub fn zeros(group: GroupSpec) -> Self {
        let n = group.order() as usize;
        Scenery { group, bits: vec![0; n] }
    }

    pub fn all_ones(group: GroupSpec) -> Self {
        let n = group.order() as usize;
        Scenery { group, bits: vec![1; n] }
    }

    pub fn from_ones(group: GroupSpec, ones: &[u64]) -> Result<Self> {
        let mut s = Self::zeros(group);
        for &i in ones {
            if i >= s.group.order() {
                return Err(Error::Domain(format!("ones position {i} out of range")));
            }
            s.bits[i as usize] = 1;
        }
        Ok(s)
    }

    /// Indicator scenery on a cycle from signed positions.
    pub fn indicator_cycle(n: u64, positions: &[i64]) -> Result<Self> {
        let group = GroupSpec::cycle(n)?;
        let ones: Vec<u64> = positions
            .iter()
            .map(|&p| p.rem_euclid(n as i64) as u64)
            .collect();
        Self::from_ones(group, &ones)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn value_at_index(&self, idx: u64) -> u8 {
        self.bits[idx as usize]
    }

    pub fn value(&self, at: &GroupElement) -> Result<u8> {
        if at.group() != &self.group {
            return Err(Error::Mismatch("element from a different group".into()));
        }
        Ok(self.bits[self.group.index_of(at) as usize])
    }

    pub fn ones_count(&self) -> u64 {
        self.bits.iter().map(|&b| b as u64).sum()
    }

    pub fn ones_indices(&self) -> Vec<u64> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i as u64)
            .collect()
    }

    /// `result(k) = f(k + s)`.
    pub fn shift(&self, s: &GroupElement) -> Result<Self> {
        if s.group() != &self.group {
            return Err(Error::Mismatch("shift element from a different group".into()));
        }
        let si = self.group.index_of(s);
        let bits = (0..self.bits.len() as u64)
            .map(|i| self.bits[self.group.index_add(i, si) as usize])
            .collect();
        Ok(Scenery { group: self.group.clone(), bits })
    }

    /// The smallest `s` (enumeration order) with `self = other.shift(s)`,
    /// if any.
    pub fn is_shift_of(&self, other: &Scenery) -> Option<GroupElement> {
        if self.group != other.group || self.ones_count() != other.ones_count() {
            return None;
        }
        let order = self.group.order();
        's: for s in 0..order {
            for i in 0..order {
                if self.bits[i as usize] != other.bits[self.group.index_add(i, s) as usize] {
                    continue 's;
                }
            }
            return Some(self.group.element_at(s));
        }
        None
    }

    /// `result(k) = f(-k)`.
    pub fn flip(&self) -> Self {
        let bits = (0..self.bits.len() as u64)
            .map(|i| self.bits[self.group.index_neg(i) as usize])
            .collect();
        Scenery { group: self.group.clone(), bits }
    }

    /// On a cycle, the scenery `g` with `g(v k) = f(k)`, i.e.
    /// `g(k) = f(v^-1 k)`. Needs `gcd(v, n) = 1`.
    pub fn multiply_coords(&self, v: i64) -> Result<Self> {
        let n = self
            .group
            .cycle_modulus()
            .ok_or_else(|| Error::Domain("coordinate scaling is defined on cycles".into()))?;
        let vm = v.rem_euclid(n as i64) as u64;
        if num_integer::gcd(vm, n) != 1 {
            return Err(Error::Domain(format!("{v} is not invertible mod {n}")));
        }
        let vinv = mod_inverse_any(vm, n);
        let bits = (0..n).map(|k| self.bits[((vinv * k) % n) as usize]).collect();
        Ok(Scenery { group: self.group.clone(), bits })
    }

    /// Lexicographically smallest bit vector over all shifts; canonical
    /// representative of the shift orbit.
    pub fn canonical_shift_form(&self) -> Vec<u8> {
        let order = self.group.order();
        let mut best: Option<Vec<u8>> = None;
        for s in 0..order {
            let cand: Vec<u8> = (0..order)
                .map(|i| self.bits[self.group.index_add(i, s) as usize])
                .collect();
            if best.as_ref().map(|b| cand < *b).unwrap_or(true) {
                best = Some(cand);
            }
        }
        best.unwrap()
    }
}

impl std::fmt::Display for Scenery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        write!(f, "{}[{}]", self.group, s)
    }
}

/// Inverse mod `n` for any `n` coprime to `v` (not only primes).
fn mod_inverse_any(v: u64, n: u64) -> u64 {
    let (g, u, _) = crate::group::extended_gcd(v as i64, n as i64);
    debug_assert_eq!(g, 1);
    u.rem_euclid(n as i64) as u64
}

/// Which construction produced an indistinguishable pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairCase {
    /// On a cycle: `f2(v k) = f1(k)` for the collision multiplier `v`.
    CycleMultiplier { v: u64 },
    /// On a cycle with `v = -1`: `f2` is the flip of `f1`.
    CycleFlip,
    /// Stay-put walk: any two sceneries with the same number of ones.
    StayPut,
    /// On a torus, `x = ell * y`: both sceneries factor through dot
    /// products with `y`.
    TorusMultiple { ell: u64 },
    /// On a torus with independent `x`, `y`: indicators of the orthogonal
    /// hyperplanes.
    TorusOrthogonal,
    /// On a product: the torus construction on the first factor where the
    /// collision pair differs, lifted to the product.
    ProductFactor { factor: usize, inner: Box<PairCase> },
    /// The hard-coded period-2 / period-6 pair on `Z_12` under the uniform
    /// `{-2,-1,1,2}` walk.
    ParityZ12,
}

/// Two sceneries that no walk exhibiting the witnessed collision can
/// distinguish, though they are not shifts of each other.
#[derive(Debug, Clone)]
pub struct IndistinguishablePair {
    pub f1: Scenery,
    pub f2: Scenery,
    /// The collision (x, y) witnessing indistinguishability, when one exists.
    pub witness: Option<(GroupElement, GroupElement)>,
    pub case: PairCase,
    /// Element-wise transform sending positions of walk 1 to positions of
    /// walk 2.
    pub transform: String,
}

fn ensure_not_shift(f1: &Scenery, f2: &Scenery) -> Result<()> {
    if let Some(s) = f1.is_shift_of(f2) {
        return Err(Error::Inconsistency(format!(
            "constructed pair is shift-related (shift {s})"
        )));
    }
    Ok(())
}

/// The pair forced by a collision with multiplier `v` on the prime cycle
/// `Z_p`, `p > 5`: for `v != -1` the indicators of `{0,1}` and `{0,v}`; for
/// `v = -1` the indicator of `{0,1,3}` and its flip.
pub fn build_pair_cycle(p: u64, v: i64) -> Result<IndistinguishablePair> {
    if p <= 5 || !is_prime(p) {
        return Err(Error::Domain(format!("Z_{p} is not a prime cycle larger than 5")));
    }
    let vm = v.rem_euclid(p as i64) as u64;
    if vm == 0 || vm == 1 {
        return Err(Error::Domain(format!(
            "multiplier {v} admits no pair by this construction"
        )));
    }
    let (f1, f2, case) = if vm == p - 1 {
        let f1 = Scenery::indicator_cycle(p, &[0, 1, 3])?;
        let f2 = f1.flip();
        (f1, f2, PairCase::CycleFlip)
    } else {
        let f1 = Scenery::indicator_cycle(p, &[0, 1])?;
        let f2 = Scenery::indicator_cycle(p, &[0, vm as i64])?;
        (f1, f2, PairCase::CycleMultiplier { v: vm })
    };
    // f1(k) = f2(v k) for all k; the coupling transports positions by v.
    for k in 0..p {
        if f1.bits[k as usize] != f2.bits[((vm * k) % p) as usize] {
            return Err(Error::Inconsistency(format!(
                "pair construction violates f1(k) = f2(v k) at k = {k}"
            )));
        }
    }
    ensure_not_shift(&f1, &f2)?;
    debug_assert_eq!(f2, f1.multiply_coords(vm as i64)?);
    let group = f1.group.clone();
    let x = group.element_from_ints(&[1])?;
    let y = group.element_from_ints(&[vm as i64])?;
    Ok(IndistinguishablePair {
        f1,
        f2,
        witness: Some((x, y)),
        case,
        transform: format!("v2(t) = {vm} * v1(t) mod {p}"),
    })
}

/// A pair with equal ones-count for the stay-put walk (`gamma(0) = 1`),
/// which cannot distinguish any two sceneries with the same number of ones.
pub fn build_pair_stay_put(group: &GroupSpec) -> Result<IndistinguishablePair> {
    let order = group.order();
    if order < 4 {
        return Err(Error::Domain("group too small for a non-shift pair".into()));
    }
    let f1 = Scenery::from_ones(group.clone(), &[0, 1])?;
    // Pick the first partner whose pair {0, w} is not a rotation of {0, 1}.
    for w in 2..order {
        let f2 = Scenery::from_ones(group.clone(), &[0, w])?;
        if f1.is_shift_of(&f2).is_none() {
            return Ok(IndistinguishablePair {
                f1,
                f2,
                witness: None,
                case: PairCase::StayPut,
                transform: "stay-put walk: observations depend only on the start".into(),
            });
        }
    }
    Err(Error::Domain("no non-shift pair with two ones exists in this group".into()))
}

/// The pair for a collision (x, y) on the prime regular torus `Z_p^d`.
/// When `x = ell y` both sceneries read a one-dimensional pattern through
/// dot products; otherwise they are the indicators of the two distinct
/// orthogonal hyperplanes. Zero `x` or `y` degenerates to the stay-put pair.
pub fn build_pair_torus(
    p: u64,
    d: u32,
    x: &GroupElement,
    y: &GroupElement,
) -> Result<IndistinguishablePair> {
    if p <= 5 || !is_prime(p) {
        return Err(Error::Domain(format!("Z_{p}^{d} is not a prime torus larger than 5")));
    }
    let group = GroupSpec::new(&[(p, d)])?;
    if x.group() != &group || y.group() != &group {
        return Err(Error::Mismatch("witness elements not in the torus".into()));
    }
    if x == y {
        return Err(Error::Domain("witness pair must have x != y".into()));
    }
    if x.is_zero() || y.is_zero() {
        // A collision with 0 freezes the dot product with the nonzero
        // witness along the whole walk, so any two equal-ones patterns read
        // through that statistic are indistinguishable. (For d = 1 the walk
        // is the stay-put walk and this reduces to the classic case.)
        let w = if x.is_zero() { y } else { x };
        let elements = group.enumerate()?;
        let g1 = Scenery::indicator_cycle(p, &[0, 1])?;
        let g2 = Scenery::indicator_cycle(p, &[0, 2])?;
        let read = |g: &Scenery| -> Result<Scenery> {
            let bits = elements
                .iter()
                .map(|k| Ok(g.bits[group.dot(w, k, 0)? as usize]))
                .collect::<Result<Vec<u8>>>()?;
            Scenery::new(group.clone(), bits)
        };
        let f1 = read(&g1)?;
        let f2 = read(&g2)?;
        ensure_not_shift(&f1, &f2)?;
        return Ok(IndistinguishablePair {
            f1,
            f2,
            witness: Some((x.clone(), y.clone())),
            case: PairCase::StayPut,
            transform: format!("the statistic {w}.v(t) never changes; both sceneries read it"),
        });
    }

    // Is x a scalar multiple of y?
    let xc = &x.coords()[0];
    let yc = &y.coords()[0];
    let pivot = yc.iter().position(|&c| c != 0).expect("y is nonzero");
    let ell = (xc[pivot] * inverse_mod(yc[pivot], p)?) % p;
    let parallel = ell != 0
        && xc
            .iter()
            .zip(yc)
            .all(|(&xi, &yi)| xi == (ell * yi) % p);

    let elements = group.enumerate()?;
    if parallel {
        let pattern: Vec<i64> = if ell == p - 1 { vec![0, 1, 3] } else { vec![0, 1] };
        let g = Scenery::indicator_cycle(p, &pattern)?;
        let read = |w: &GroupElement| -> Result<Scenery> {
            let bits = elements
                .iter()
                .map(|k| Ok(g.bits[group.dot(w, k, 0)? as usize]))
                .collect::<Result<Vec<u8>>>()?;
            Scenery::new(group.clone(), bits)
        };
        let f1 = read(x)?;
        let f2 = read(y)?;
        ensure_not_shift(&f1, &f2)?;
        Ok(IndistinguishablePair {
            f1,
            f2,
            witness: Some((x.clone(), y.clone())),
            case: PairCase::TorusMultiple { ell },
            transform: format!("v2(t) = {ell} * v1(t) (so that y.v2 = x.v1)"),
        })
    } else {
        let read = |w: &GroupElement| -> Result<Scenery> {
            let bits = elements
                .iter()
                .map(|k| Ok(if group.dot(w, k, 0)? == 0 { 1 } else { 0 }))
                .collect::<Result<Vec<u8>>>()?;
            Scenery::new(group.clone(), bits)
        };
        let f1 = read(x)?;
        let f2 = read(y)?;
        // Hyperplane indicators carry exactly p^(d-1) ones.
        let expected = p.pow(d - 1);
        if f1.ones_count() != expected || f2.ones_count() != expected {
            return Err(Error::Inconsistency("hyperplane indicator has wrong size".into()));
        }
        ensure_not_shift(&f1, &f2)?;
        Ok(IndistinguishablePair {
            f1,
            f2,
            witness: Some((x.clone(), y.clone())),
            case: PairCase::TorusOrthogonal,
            transform: "per-step fiber coupling: y.v2(t) = x.v1(t)".into(),
        })
    }
}

/// The pair for a collision (x, y) on a product of distinct prime tori with
/// all primes larger than 5: the torus construction on the first factor
/// where x and y differ, read through that factor's coordinates only.
pub fn build_pair_product(
    group: &GroupSpec,
    x: &GroupElement,
    y: &GroupElement,
) -> Result<IndistinguishablePair> {
    for &(n, _) in group.factors() {
        if n <= 5 || !is_prime(n) {
            return Err(Error::Domain(format!(
                "factor Z_{n} is not a prime larger than 5"
            )));
        }
    }
    if x.group() != group || y.group() != group {
        return Err(Error::Mismatch("witness elements not in the group".into()));
    }
    if x == y {
        return Err(Error::Domain("witness pair must have x != y".into()));
    }
    let j = x
        .coords()
        .iter()
        .zip(y.coords())
        .position(|(a, b)| a != b)
        .expect("x != y");
    let (p, d) = group.factors()[j];

    let factor_group = GroupSpec::new(&[(p, d)])?;
    let xj = factor_group.element_from_ints(
        &x.coords()[j].iter().map(|&v| v as i64).collect::<Vec<_>>(),
    )?;
    let yj = factor_group.element_from_ints(
        &y.coords()[j].iter().map(|&v| v as i64).collect::<Vec<_>>(),
    )?;
    let inner = build_pair_torus(p, d, &xj, &yj)?;

    // Lift: the scenery depends only on the factor-j coordinates.
    let elements = group.enumerate()?;
    let lift = |f: &Scenery| -> Result<Scenery> {
        let bits = elements
            .iter()
            .map(|k| {
                let kj = factor_group.element_from_ints(
                    &k.coords()[j].iter().map(|&v| v as i64).collect::<Vec<_>>(),
                )?;
                Ok(f.bits[factor_group.index_of(&kj) as usize])
            })
            .collect::<Result<Vec<u8>>>()?;
        Scenery::new(group.clone(), bits)
    };
    let f1 = lift(&inner.f1)?;
    let f2 = lift(&inner.f2)?;
    ensure_not_shift(&f1, &f2)?;
    Ok(IndistinguishablePair {
        f1,
        f2,
        witness: Some((x.clone(), y.clone())),
        case: PairCase::ProductFactor { factor: j, inner: Box::new(inner.case) },
        transform: format!("factor {j}: {}", inner.transform),
    })
}

/// The `Z_12` example: the period-2 scenery (ones on odd positions) and the
/// period-6 scenery (ones at k mod 6 in {3,4,5}) are indistinguishable under
/// the uniform walk on `{-2,-1,1,2}` because both observation streams are
/// i.i.d. uniform bits. Returns the pair together with that walk.
pub fn parity_example_z12() -> (IndistinguishablePair, StepDistribution) {
    let group = GroupSpec::cycle(12).unwrap();
    let f1 = Scenery::indicator_cycle(12, &[1, 3, 5, 7, 9, 11]).unwrap();
    let f2 = Scenery::indicator_cycle(12, &[3, 4, 5, 9, 10, 11]).unwrap();
    debug_assert!(f1.is_shift_of(&f2).is_none());
    let walk = StepDistribution::uniform_cycle(12, &[-2, -1, 1, 2]).unwrap();
    let pair = IndistinguishablePair {
        f1,
        f2,
        witness: None,
        case: PairCase::ParityZ12,
        transform: "both observation streams are i.i.d. uniform bits".into(),
    };
    let _ = &group;
    (pair, walk)
}
