//! Finite abelian groups presented as products of cycles.
//!
//! A group is specified as `Z_{n_1}^{d_1} x ... x Z_{n_m}^{d_m}`; an element
//! is a vector of vectors, entry (i, j) living in `Z_{n_i}`. All arithmetic
//! is componentwise modular. Values are immutable and every operation is pure.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Hard ceiling on the group order accepted at construction time.
pub const MAX_ORDER: u128 = 1 << 40;

/// Default cap on full element enumeration.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 20;

/// A finite abelian group `Z_{n_1}^{d_1} x ... x Z_{n_m}^{d_m}` in canonical
/// form: factors with equal modulus are merged and factors are sorted by
/// modulus, so `Z7 x Z7` and `Z7^2` are one representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupSpec {
    factors: Vec<(u64, u32)>,
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        GroupSpec::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// An element of a [`GroupSpec`]: one coordinate vector per factor, each
/// coordinate reduced to `[0, n_i)`. Elements remember their group so that
/// mixing groups is a structural error rather than silent arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    group: GroupSpec,
    coords: Vec<Vec<u64>>,
}

impl GroupElement {
    /// Per-factor coordinate vectors.
    pub fn coords(&self) -> &[Vec<u64>] {
        &self.coords
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().flatten().all(|&v| v == 0)
    }
}

impl GroupSpec {
    /// Build a group from (modulus, dimension) pairs, canonicalizing the form.
    pub fn new(factors: &[(u64, u32)]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("group needs at least one factor".into()));
        }
        let mut merged: Vec<(u64, u32)> = Vec::new();
        for &(n, d) in factors {
            if n < 2 {
                return Err(Error::Domain(format!("modulus {n} < 2")));
            }
            if d < 1 {
                return Err(Error::Domain("factor dimension must be positive".into()));
            }
            match merged.iter_mut().find(|(m, _)| *m == n) {
                Some((_, dim)) => *dim += d,
                None => merged.push((n, d)),
            }
        }
        merged.sort_by_key(|&(n, _)| n);
        let mut order: u128 = 1;
        for &(n, d) in &merged {
            for _ in 0..d {
                order = order.saturating_mul(n as u128);
                if order > MAX_ORDER {
                    return Err(Error::Capacity(format!(
                        "group order exceeds 2^40 (factors {merged:?})"
                    )));
                }
            }
        }
        Ok(GroupSpec { factors: merged })
    }

    /// A single cycle `Z_n`.
    pub fn cycle(n: u64) -> Result<Self> {
        Self::new(&[(n, 1)])
    }

    /// Parse the text form: `"Z7"`, `"Z7^3"`, `"Z5^2xZ7"`, `"Z12"`.
    /// Case-insensitive; `x` separates factors.
    pub fn parse(text: &str) -> Result<Self> {
        let lowered = text.trim().to_ascii_lowercase();
        let mut factors = Vec::new();
        for part in lowered.split('x') {
            let part = part.trim();
            let rest = part
                .strip_prefix('z')
                .ok_or_else(|| Error::Parse(format!("factor `{part}` must start with Z")))?;
            let (n_str, d_str) = match rest.split_once('^') {
                Some((n, d)) => (n, Some(d)),
                None => (rest, None),
            };
            let n: u64 = n_str
                .parse()
                .map_err(|_| Error::Parse(format!("bad modulus in `{part}`")))?;
            let d: u32 = match d_str {
                Some(d) => d
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in `{part}`")))?,
                None => 1,
            };
            factors.push((n, d));
        }
        Self::new(&factors)
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Number of elements.
    pub fn order(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(n, d)| n.pow(d))
            .product()
    }

    /// True when the group is a single cycle `Z_n`.
    pub fn is_cycle(&self) -> bool {
        self.factors.len() == 1 && self.factors[0].1 == 1
    }

    /// Modulus of the unique factor when the group is a cycle.
    pub fn cycle_modulus(&self) -> Option<u64> {
        if self.is_cycle() {
            Some(self.factors[0].0)
        } else {
            None
        }
    }

    /// True when every factor modulus is an odd prime (the moduli are
    /// distinct by canonical form). This is the gate for exact cyclotomic
    /// Fourier analysis.
    pub fn all_factors_odd_prime(&self) -> bool {
        self.factors.iter().all(|&(n, _)| n > 2 && is_prime(n))
    }

    /// The identity element.
    pub fn zero(&self) -> GroupElement {
        GroupElement {
            group: self.clone(),
            coords: self.factors.iter().map(|&(_, d)| vec![0; d as usize]).collect(),
        }
    }

    fn check_member(&self, a: &GroupElement) -> Result<()> {
        if a.group != *self {
            return Err(Error::Mismatch(format!(
                "element of {} used with {}",
                a.group, self
            )));
        }
        Ok(())
    }

    /// Componentwise sum mod each `n_i`.
    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check_member(a)?;
        self.check_member(b)?;
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .zip(&self.factors)
            .map(|((ca, cb), &(n, _))| {
                ca.iter().zip(cb).map(|(&x, &y)| (x + y) % n).collect()
            })
            .collect();
        Ok(GroupElement { group: self.clone(), coords })
    }

    /// Additive inverse.
    pub fn neg(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check_member(a)?;
        let coords = a
            .coords
            .iter()
            .zip(&self.factors)
            .map(|(c, &(n, _))| c.iter().map(|&x| (n - x) % n).collect())
            .collect();
        Ok(GroupElement { group: self.clone(), coords })
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        let nb = self.neg(b)?;
        self.add(a, &nb)
    }

    /// Multiply every coordinate by the integer `v` (reduced per factor).
    pub fn scalar_mul(&self, v: i64, a: &GroupElement) -> Result<GroupElement> {
        self.check_member(a)?;
        let coords = a
            .coords
            .iter()
            .zip(&self.factors)
            .map(|(c, &(n, _))| {
                let vm = v.rem_euclid(n as i64) as u64;
                c.iter().map(|&x| mul_mod(vm, x, n)).collect()
            })
            .collect();
        Ok(GroupElement { group: self.clone(), coords })
    }

    /// Dot product of the chosen factor: `sum_j a_{i,j} b_{i,j} mod n_i`.
    pub fn dot(&self, a: &GroupElement, b: &GroupElement, factor_index: usize) -> Result<u64> {
        self.check_member(a)?;
        self.check_member(b)?;
        let (n, _) = *self
            .factors
            .get(factor_index)
            .ok_or_else(|| Error::Domain(format!("factor index {factor_index} out of range")))?;
        let mut acc = 0u64;
        for (&x, &y) in a.coords[factor_index].iter().zip(&b.coords[factor_index]) {
            acc = (acc + mul_mod(x, y, n)) % n;
        }
        Ok(acc)
    }

    /// Build an element from one signed integer per coordinate, reducing each.
    pub fn element_from_ints(&self, flat: &[i64]) -> Result<GroupElement> {
        let total: usize = self.factors.iter().map(|&(_, d)| d as usize).sum();
        if flat.len() != total {
            return Err(Error::Parse(format!(
                "expected {total} coordinates for {self}, got {}",
                flat.len()
            )));
        }
        let mut it = flat.iter();
        let coords = self
            .factors
            .iter()
            .map(|&(n, d)| {
                (0..d)
                    .map(|_| it.next().unwrap().rem_euclid(n as i64) as u64)
                    .collect()
            })
            .collect();
        Ok(GroupElement { group: self.clone(), coords })
    }

    /// Flatten an element to one integer per coordinate, factor by factor.
    pub fn flatten(&self, a: &GroupElement) -> Vec<u64> {
        a.coords.iter().flatten().copied().collect()
    }

    /// Deterministic lexicographic enumeration of all elements
    /// (first coordinate most significant).
    pub fn enumerate(&self) -> Result<Vec<GroupElement>> {
        self.enumerate_capped(DEFAULT_ENUM_CAP)
    }

    pub fn enumerate_capped(&self, cap: u64) -> Result<Vec<GroupElement>> {
        let order = self.order();
        if order > cap {
            return Err(Error::Capacity(format!(
                "order {order} exceeds enumeration cap {cap}"
            )));
        }
        Ok((0..order).map(|i| self.element_at(i)).collect())
    }

    /// Element at a given enumeration index (mixed-radix decomposition).
    pub fn element_at(&self, index: u64) -> GroupElement {
        let mut rem = index;
        let mut flat: Vec<u64> = Vec::new();
        // Peel digits from least significant (last coordinate) upward.
        for &(n, d) in self.factors.iter().rev() {
            for _ in 0..d {
                flat.push(rem % n);
                rem /= n;
            }
        }
        flat.reverse();
        let mut it = flat.into_iter();
        let coords = self
            .factors
            .iter()
            .map(|&(_, d)| (0..d).map(|_| it.next().unwrap()).collect())
            .collect();
        GroupElement { group: self.clone(), coords }
    }

    /// Enumeration index of an element.
    pub fn index_of(&self, a: &GroupElement) -> u64 {
        let mut idx = 0u64;
        for (c, &(n, _)) in a.coords.iter().zip(&self.factors) {
            for &x in c {
                idx = idx * n + x;
            }
        }
        idx
    }

    /// Index-level addition; avoids allocating intermediate elements in
    /// inner loops.
    pub fn index_add(&self, a: u64, b: u64) -> u64 {
        let mut a_rem = a;
        let mut b_rem = b;
        let mut out = 0u64;
        let mut place = 1u64;
        for &(n, d) in self.factors.iter().rev() {
            for _ in 0..d {
                let da = a_rem % n;
                let db = b_rem % n;
                a_rem /= n;
                b_rem /= n;
                out += ((da + db) % n) * place;
                place *= n;
            }
        }
        out
    }

    /// Index-level negation.
    pub fn index_neg(&self, a: u64) -> u64 {
        let mut a_rem = a;
        let mut out = 0u64;
        let mut place = 1u64;
        for &(n, d) in self.factors.iter().rev() {
            for _ in 0..d {
                let da = a_rem % n;
                a_rem /= n;
                out += ((n - da) % n) * place;
                place *= n;
            }
        }
        out
    }
}

impl std::fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(n, d)| {
                if d == 1 {
                    format!("Z{n}")
                } else {
                    format!("Z{n}^{d}")
                }
            })
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl std::fmt::Display for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flat: Vec<String> = self
            .coords
            .iter()
            .flatten()
            .map(|v| v.to_string())
            .collect();
        write!(f, "{}", flat.join(","))
    }
}

fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1u64 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all inputs below 2^64 with the
/// standard small-witness set.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Modular inverse in the field `Z_p`: the `u` with `u*x = 1 mod p`.
pub fn inverse_mod(x: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    let xr = x % p;
    if xr == 0 {
        return Err(Error::Domain("0 has no inverse".into()));
    }
    Ok(pow_mod(xr, p - 2, p))
}

/// Extended gcd: returns (g, u, v) with `u*a + v*b = g = gcd(a, b)`.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        let s = if a < 0 { -1 } else { 1 };
        (a.abs(), s, 0)
    } else {
        let (g, u, v) = extended_gcd(b, a % b);
        (g, v, u - (a / b) * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z7() -> GroupSpec {
        GroupSpec::cycle(7).unwrap()
    }

    fn el(g: &GroupSpec, flat: &[i64]) -> GroupElement {
        g.element_from_ints(flat).unwrap()
    }

    #[test]
    fn add_on_cycle() {
        let g = z7();
        assert_eq!(g.add(&el(&g, &[3]), &el(&g, &[5])).unwrap(), el(&g, &[1]));
        for k in 0..7 {
            let a = el(&g, &[k]);
            assert_eq!(g.add(&a, &g.zero()).unwrap(), a);
        }
    }

    #[test]
    fn add_componentwise_on_torus() {
        let g = GroupSpec::parse("Z5^2").unwrap();
        let a = el(&g, &[1, 4]);
        let b = el(&g, &[4, 3]);
        assert_eq!(g.add(&a, &b).unwrap(), el(&g, &[0, 2]));
    }

    #[test]
    fn add_rejects_mismatched_groups() {
        let g = z7();
        let h = GroupSpec::cycle(11).unwrap();
        let a = el(&g, &[3]);
        let b = el(&h, &[3]);
        assert!(matches!(g.add(&a, &b), Err(Error::Mismatch(_))));
    }

    #[test]
    fn scalar_mul_examples() {
        let g = z7();
        assert_eq!(g.scalar_mul(2, &el(&g, &[4])).unwrap(), el(&g, &[1]));
        // The support {1,2,4} is invariant under doubling.
        let mut doubled: Vec<u64> = [1i64, 2, 4]
            .iter()
            .map(|&k| g.scalar_mul(2, &el(&g, &[k])).unwrap().coords[0][0])
            .collect();
        doubled.sort();
        assert_eq!(doubled, vec![1, 2, 4]);
        for k in 0..7 {
            let a = el(&g, &[k]);
            assert_eq!(g.scalar_mul(1, &a).unwrap(), a);
        }
    }

    #[test]
    fn inverse_mod_examples() {
        assert_eq!(inverse_mod(3, 7).unwrap(), 5);
        assert_eq!(inverse_mod(2, 11).unwrap(), 6);
        for p in [3u64, 5, 7, 11, 13] {
            assert_eq!(inverse_mod(1, p).unwrap(), 1);
            for x in 1..p {
                assert_eq!((inverse_mod(x, p).unwrap() * x) % p, 1);
            }
        }
        assert!(inverse_mod(0, 7).is_err());
        assert!(inverse_mod(3, 12).is_err());
    }

    #[test]
    fn dot_examples() {
        let g = GroupSpec::parse("Z5^2").unwrap();
        let a = el(&g, &[1, 2]);
        let b = el(&g, &[3, 4]);
        assert_eq!(g.dot(&a, &b, 0).unwrap(), 1); // 3 + 8 = 11 = 1 mod 5
        assert_eq!(g.dot(&a, &g.zero(), 0).unwrap(), 0);
        let c = z7();
        assert_eq!(c.dot(&el(&c, &[3]), &el(&c, &[5]), 0).unwrap(), 1);
        assert!(c.dot(&el(&c, &[3]), &el(&c, &[5]), 1).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let g3 = GroupSpec::cycle(3).unwrap();
        let elems = g3.enumerate().unwrap();
        assert_eq!(elems.len(), 3);
        assert_eq!(elems[0], g3.zero());
        assert_eq!(elems[2], el(&g3, &[2]));

        let g = GroupSpec::parse("Z2xZ3").unwrap();
        let elems = g.enumerate().unwrap();
        assert_eq!(elems.len(), 6);
        // Lexicographic: (0,0),(0,1),(0,2),(1,0),...
        assert_eq!(g.flatten(&elems[1]), vec![0, 1]);
        assert_eq!(g.flatten(&elems[3]), vec![1, 0]);

        assert_eq!(GroupSpec::parse("Z7^3").unwrap().enumerate().unwrap().len(), 343);
    }

    #[test]
    fn enumeration_cap() {
        let g = GroupSpec::parse("Z2^25").unwrap();
        assert!(matches!(g.enumerate().unwrap_err(), Error::Capacity(_)));
    }

    #[test]
    fn canonical_form_merges_equal_moduli() {
        let a = GroupSpec::parse("Z7xZ7").unwrap();
        let b = GroupSpec::parse("Z7^2").unwrap();
        assert_eq!(a, b);
        let c = GroupSpec::parse("Z7xZ5^2").unwrap();
        assert_eq!(c.factors(), &[(5, 2), (7, 1)]);
        assert_eq!(c.to_string(), "Z5^2xZ7");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(GroupSpec::parse("7").is_err());
        assert!(GroupSpec::parse("Zx").is_err());
        assert!(GroupSpec::parse("Z1").is_err());
    }

    #[test]
    fn index_roundtrip_and_index_ops() {
        let g = GroupSpec::parse("Z3xZ5^2").unwrap();
        for i in 0..g.order() {
            let e = g.element_at(i);
            assert_eq!(g.index_of(&e), i);
        }
        for i in 0..g.order() {
            for j in 0..g.order() {
                let a = g.element_at(i);
                let b = g.element_at(j);
                let sum = g.add(&a, &b).unwrap();
                assert_eq!(g.index_add(i, j), g.index_of(&sum));
            }
            assert_eq!(g.index_neg(i), g.index_of(&g.neg(&g.element_at(i)).unwrap()));
        }
    }

    #[test]
    fn primality_small_table() {
        let primes: Vec<u64> = (2..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(2_147_483_647)); // 2^31 - 1
        assert!(!is_prime(2_147_483_649));
    }

    proptest! {
        #[test]
        fn add_assoc_comm_and_inverse(xs in proptest::collection::vec(0u64..1_000_000, 3)) {
            let g = GroupSpec::parse("Z7xZ5^2xZ11").unwrap();
            let order = g.order();
            let a = g.element_at(xs[0] % order);
            let b = g.element_at(xs[1] % order);
            let c = g.element_at(xs[2] % order);
            let ab_c = g.add(&g.add(&a, &b).unwrap(), &c).unwrap();
            let a_bc = g.add(&a, &g.add(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(&ab_c, &a_bc);
            prop_assert_eq!(g.add(&a, &b).unwrap(), g.add(&b, &a).unwrap());
            let na = g.neg(&a).unwrap();
            prop_assert_eq!(g.add(&a, &na).unwrap(), g.zero());
        }

        #[test]
        fn scalar_mul_bijective_iff_coprime(v in 0i64..30) {
            let g = GroupSpec::parse("Z3xZ5").unwrap();
            let elems = g.enumerate().unwrap();
            let mut images: Vec<u64> = elems
                .iter()
                .map(|e| g.index_of(&g.scalar_mul(v, e).unwrap()))
                .collect();
            images.sort();
            images.dedup();
            let coprime = num_integer::gcd(v.rem_euclid(3), 3) == 1
                && num_integer::gcd(v.rem_euclid(5), 5) == 1;
            prop_assert_eq!(images.len() == elems.len(), coprime);
        }
    }
}
