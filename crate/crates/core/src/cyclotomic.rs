//! Exact arithmetic in `Q(w_{p_1}, ..., w_{p_m})` for distinct odd primes.
//!
//! Each `w_p` is a primitive p-th root of unity with minimal polynomial
//! `1 + t + ... + t^{p-1}`, so every number has a unique representative on
//! the power basis `{w^e : 0 <= e <= p-2}` per prime. Equality is therefore
//! a plain map comparison, which is the hot operation in collision search;
//! nothing is ever decided in floating point here.

use crate::error::{Error, Result};
use crate::group::is_prime;
use crate::numeric::{roots_of_unity, working_scale, BigComplex, BigReal};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// An exact element of `Q(w_{p_1}, ..., w_{p_m})`, fully reduced: every
/// exponent `e_j` lies in `[0, p_j - 2]` and no stored coefficient is zero.
/// Zero is the empty map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CyclotomicNumber {
    context: Vec<u64>,
    coeffs: BTreeMap<Vec<u32>, BigRational>,
}

/// Validate a context: distinct primes, each greater than 2.
pub fn check_context(primes: &[u64]) -> Result<()> {
    if primes.is_empty() {
        return Err(Error::Domain("cyclotomic context needs at least one prime".into()));
    }
    for (i, &p) in primes.iter().enumerate() {
        if p <= 2 || !is_prime(p) {
            return Err(Error::Domain(format!("context entry {p} is not an odd prime")));
        }
        if primes[..i].contains(&p) {
            return Err(Error::Domain(format!("repeated prime {p} in context")));
        }
    }
    Ok(())
}

impl CyclotomicNumber {
    pub fn zero(context: &[u64]) -> Result<Self> {
        check_context(context)?;
        Ok(CyclotomicNumber { context: context.to_vec(), coeffs: BTreeMap::new() })
    }

    pub fn from_rational(context: &[u64], value: BigRational) -> Result<Self> {
        let mut out = Self::zero(context)?;
        if !value.is_zero() {
            out.coeffs.insert(vec![0; context.len()], value);
        }
        Ok(out)
    }

    pub fn one(context: &[u64]) -> Result<Self> {
        Self::from_rational(context, BigRational::one())
    }

    /// Reduce a polynomial given as (exponent vector, coefficient) terms to
    /// canonical form. Exponents may be any integers; they are reduced mod
    /// `p_j` and then the relation `t^{p-1} = -(1 + t + ... + t^{p-2})` is
    /// applied until every exponent is in range.
    pub fn from_terms<I>(context: &[u64], terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, BigRational)>,
    {
        check_context(context)?;
        let m = context.len();
        let mut acc: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        let mut stack: Vec<(Vec<u32>, BigRational)> = Vec::new();
        for (exps, coeff) in terms {
            if exps.len() != m {
                return Err(Error::Mismatch(format!(
                    "term has {} exponents, context has {m} primes",
                    exps.len()
                )));
            }
            if coeff.is_zero() {
                continue;
            }
            let reduced: Vec<u32> = exps
                .iter()
                .zip(context)
                .map(|(&e, &p)| e.rem_euclid(p as i64) as u32)
                .collect();
            stack.push((reduced, coeff));
            while let Some((e, c)) = stack.pop() {
                match e
                    .iter()
                    .zip(context)
                    .position(|(&ej, &p)| ej as u64 == p - 1)
                {
                    None => {
                        let entry = acc.entry(e).or_insert_with(BigRational::zero);
                        *entry += c;
                    }
                    Some(j) => {
                        for i in 0..(context[j] - 1) as u32 {
                            let mut e2 = e.clone();
                            e2[j] = i;
                            stack.push((e2, -c.clone()));
                        }
                    }
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        Ok(CyclotomicNumber { context: context.to_vec(), coeffs: acc })
    }

    pub fn context(&self) -> &[u64] {
        &self.context
    }

    /// The reduced terms, exponent vector and coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The rational value when the number is a constant.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.coeffs.is_empty() {
            return Some(BigRational::zero());
        }
        if self.coeffs.len() == 1 {
            let (e, c) = self.coeffs.iter().next().unwrap();
            if e.iter().all(|&x| x == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    fn check_same(&self, rhs: &Self) -> Result<()> {
        if self.context != rhs.context {
            return Err(Error::Mismatch(format!(
                "cyclotomic contexts differ: {:?} vs {:?}",
                self.context, rhs.context
            )));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        let mut coeffs = self.coeffs.clone();
        for (e, c) in &rhs.coeffs {
            let entry = coeffs.entry(e.clone()).or_insert_with(BigRational::zero);
            *entry += c;
        }
        coeffs.retain(|_, v| !v.is_zero());
        Ok(CyclotomicNumber { context: self.context.clone(), coeffs })
    }

    pub fn neg(&self) -> Self {
        CyclotomicNumber {
            context: self.context.clone(),
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        let terms: Vec<(Vec<i64>, BigRational)> = self
            .coeffs
            .iter()
            .flat_map(|(ea, ca)| {
                rhs.coeffs.iter().map(move |(eb, cb)| {
                    let exps: Vec<i64> = ea
                        .iter()
                        .zip(eb)
                        .map(|(&x, &y)| x as i64 + y as i64)
                        .collect();
                    (exps, ca * cb)
                })
            })
            .collect();
        Self::from_terms(&self.context, terms)
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return CyclotomicNumber { context: self.context.clone(), coeffs: BTreeMap::new() };
        }
        CyclotomicNumber {
            context: self.context.clone(),
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), c * factor)).collect(),
        }
    }

    pub fn pow(&self, mut exp: u64) -> Result<Self> {
        let mut base = self.clone();
        let mut acc = Self::one(&self.context)?;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Multiplicative inverse, computed by solving the linear system of the
    /// multiplication-by-`self` map on the power basis.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        let basis = power_basis(&self.context);
        let dim = basis.len();
        let index_of: BTreeMap<&Vec<u32>, usize> =
            basis.iter().enumerate().map(|(i, e)| (e, i)).collect();
        // Column b of the matrix holds the coordinates of self * basis[b].
        let mut matrix = vec![vec![BigRational::zero(); dim]; dim];
        for (b, e_b) in basis.iter().enumerate() {
            let monomial = CyclotomicNumber {
                context: self.context.clone(),
                coeffs: BTreeMap::from([(e_b.clone(), BigRational::one())]),
            };
            let prod = self.mul(&monomial)?;
            for (e, c) in &prod.coeffs {
                matrix[index_of[e]][b] = c.clone();
            }
        }
        let mut rhs = vec![BigRational::zero(); dim];
        rhs[0] = BigRational::one(); // basis[0] is the constant monomial
        let sol = crate::linalg::solve_rational(matrix, rhs).ok_or_else(|| {
            Error::Inconsistency("multiplication map singular for nonzero element".into())
        })?;
        let coeffs = basis
            .into_iter()
            .zip(sol)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Ok(CyclotomicNumber { context: self.context.clone(), coeffs })
    }

    /// Evaluate at `w_{p_j} = e^{-2 pi i / p_j}`. The absolute error is
    /// bounded by `2^(3 - precision_bits) * (1 + sum |coeff|)`; callers must
    /// request at least 53 bits.
    pub fn numeric_eval(&self, precision_bits: u32) -> BigComplex {
        debug_assert!(precision_bits >= 53, "precision below f64 is not supported");
        let scale = working_scale(precision_bits);
        let tables: Vec<_> = self.context.iter().map(|&p| roots_of_unity(p, scale)).collect();
        let mut acc = BigComplex::zero(scale);
        for (e, c) in &self.coeffs {
            let mut term = BigComplex::from_real(BigReal::from_rational(c, scale));
            for (j, &ej) in e.iter().enumerate() {
                if ej != 0 {
                    term = term.mul(&tables[j][ej as usize]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// The reduced form as (exponent vector, numerator, denominator) triples,
    /// for debug serialization.
    pub fn debug_triples(&self) -> Vec<(Vec<u32>, String, String)> {
        self.coeffs
            .iter()
            .map(|(e, c)| (e.clone(), c.numer().to_string(), c.denom().to_string()))
            .collect()
    }

    /// Sum of absolute coefficient values (used for error bounds).
    pub fn coeff_abs_sum(&self) -> BigRational {
        self.coeffs.values().map(|c| c.abs()).sum()
    }
}

/// All exponent vectors of the power basis, lexicographic, constant first.
fn power_basis(context: &[u64]) -> Vec<Vec<u32>> {
    let mut basis = vec![vec![]];
    for &p in context {
        let mut next = Vec::with_capacity(basis.len() * (p as usize - 1));
        for prefix in &basis {
            for e in 0..(p - 1) as u32 {
                let mut v = prefix.clone();
                v.push(e);
                next.push(v);
            }
        }
        basis = next;
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn arb_number() -> impl Strategy<Value = CyclotomicNumber> {
        proptest::collection::vec(((-12i64..12, -12i64..12), (-6i64..7, 1i64..5)), 1..5).prop_map(
            |terms| {
                CyclotomicNumber::from_terms(
                    &[5, 7],
                    terms
                        .into_iter()
                        .map(|((e1, e2), (n, d))| (vec![e1, e2], rat(n, d)))
                        .collect::<Vec<_>>(),
                )
                .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_number(), b in arb_number(), c in arb_number()) {
            let ab_c = a.add(&b).unwrap().add(&c).unwrap();
            let a_bc = a.add(&b.add(&c).unwrap()).unwrap();
            prop_assert_eq!(&ab_c, &a_bc);
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            let left = a.mul(&b.add(&c).unwrap()).unwrap();
            let right = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
            prop_assert!(a.sub(&a).unwrap().is_zero());
        }
    }

    fn monomial(ctx: &[u64], exps: &[i64], c: BigRational) -> CyclotomicNumber {
        CyclotomicNumber::from_terms(ctx, vec![(exps.to_vec(), c)]).unwrap()
    }

    #[test]
    fn cyclotomic_polynomial_vanishes() {
        // 1 + t + ... + t^6 reduces to zero in Q(w_7).
        let terms: Vec<_> = (0..7).map(|e| (vec![e], rat(1, 1))).collect();
        let q7 = CyclotomicNumber::from_terms(&[7], terms).unwrap();
        assert!(q7.is_zero());
        let eval = q7.numeric_eval(64);
        assert!(eval.max_norm().to_f64() < 1e-12);
    }

    #[test]
    fn seventh_power_is_one() {
        let x = monomial(&[7], &[7], rat(1, 1));
        assert_eq!(x, CyclotomicNumber::one(&[7]).unwrap());
    }

    #[test]
    fn two_prime_reduction() {
        // t1^4 * t2 = -(1 + t1 + t1^2 + t1^3) * t2 in Q(w_5, w_7).
        let x = monomial(&[5, 7], &[4, 1], rat(1, 1));
        let expected = CyclotomicNumber::from_terms(
            &[5, 7],
            (0..4).map(|e| (vec![e, 1], rat(-1, 1))).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(x, expected);
        let diff_norm = x
            .numeric_eval(128)
            .sub(&expected.numeric_eval(128))
            .max_norm();
        assert!(diff_norm.to_f64() < 1e-12);
    }

    #[test]
    fn residue_sum_product() {
        // (t + t^2 + t^4)(t^3 + t^5 + t^6) = 2 in Q(w_7): the product of the
        // two Gauss-sum halves, brute-force multiplied and reduced.
        let a = CyclotomicNumber::from_terms(
            &[7],
            [1i64, 2, 4].iter().map(|&e| (vec![e], rat(1, 1))).collect::<Vec<_>>(),
        )
        .unwrap();
        let b = CyclotomicNumber::from_terms(
            &[7],
            [3i64, 5, 6].iter().map(|&e| (vec![e], rat(1, 1))).collect::<Vec<_>>(),
        )
        .unwrap();
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.as_rational(), Some(rat(2, 1)));
        // Numeric cross-check: |g|^2 = 2 for the quadratic Gauss sum.
        let g = a.numeric_eval(128);
        let norm = g.mul(&g.conj());
        assert!((norm.re.to_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn add_identity_and_root_product() {
        let ctx = [7u64];
        let x = monomial(&ctx, &[3], rat(2, 5));
        assert_eq!(x.add(&CyclotomicNumber::zero(&ctx).unwrap()).unwrap(), x);
        let t = monomial(&ctx, &[1], rat(1, 1));
        let t6 = monomial(&ctx, &[6], rat(1, 1));
        assert_eq!(t.mul(&t6).unwrap(), CyclotomicNumber::one(&ctx).unwrap());
    }

    #[test]
    fn vanishing_difference_needs_reduction() {
        // t + t^6 and -(1 + t^2 + t^3 + t^4 + t^5) are equal only after
        // applying the minimal-polynomial relation.
        let a = CyclotomicNumber::from_terms(&[7], vec![(vec![1], rat(1, 1)), (vec![6], rat(1, 1))])
            .unwrap();
        let b = CyclotomicNumber::from_terms(
            &[7],
            [0i64, 2, 3, 4, 5].iter().map(|&e| (vec![e], rat(-1, 1))).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(a.sub(&b).unwrap().is_zero());
    }

    #[test]
    fn collision_polynomial_of_invariant_support_vanishes() {
        // For the uniform walk on {1,2,4} over Z_7 and the collision pair
        // x=1, y=2: P(t) = sum_k (gamma(k x^-1) - gamma(k y^-1)) t^k = 0.
        let gamma = |k: u64| -> BigRational {
            if [1, 2, 4].contains(&(k % 7)) {
                rat(1, 3)
            } else {
                rat(0, 1)
            }
        };
        // x^-1 = 1, y^-1 = 4 in Z_7.
        let terms: Vec<_> = (0..7u64)
            .map(|k| (vec![k as i64], gamma(k) - gamma(k * 4 % 7)))
            .collect();
        let p = CyclotomicNumber::from_terms(&[7], terms).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn numeric_eval_constants_and_gauss_sum() {
        let one = CyclotomicNumber::one(&[7]).unwrap();
        let (re, im) = one.numeric_eval(64).to_f64_pair();
        assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);

        // t + t^2 + t^4 at w = e^{-2 pi i/7} is (-1 - i sqrt 7)/2; its
        // modulus-squared is 2 (quadratic Gauss sum).
        let g = CyclotomicNumber::from_terms(
            &[7],
            [1i64, 2, 4].iter().map(|&e| (vec![e], rat(1, 1))).collect::<Vec<_>>(),
        )
        .unwrap();
        let (re, im) = g.numeric_eval(128).to_f64_pair();
        assert!((re + 0.5).abs() < 1e-12);
        assert!((im.abs() - 7f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn context_validation() {
        assert!(CyclotomicNumber::zero(&[7, 7]).is_err());
        assert!(CyclotomicNumber::zero(&[2]).is_err());
        assert!(CyclotomicNumber::zero(&[9]).is_err());
        let a = CyclotomicNumber::one(&[5]).unwrap();
        let b = CyclotomicNumber::one(&[7]).unwrap();
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = StdRng::seed_from_u64(7);
        for ctx in [vec![5u64], vec![7], vec![5, 7]] {
            for _ in 0..10 {
                let terms: Vec<_> = (0..4)
                    .map(|_| {
                        let exps: Vec<i64> =
                            ctx.iter().map(|&p| rng.gen_range(0..p as i64)).collect();
                        (exps, rat(rng.gen_range(-4..5), rng.gen_range(1..4)))
                    })
                    .collect();
                let x = CyclotomicNumber::from_terms(&ctx, terms).unwrap();
                if x.is_zero() {
                    continue;
                }
                let inv = x.inverse().unwrap();
                assert_eq!(x.mul(&inv).unwrap(), CyclotomicNumber::one(&ctx).unwrap());
            }
        }
    }

    fn random_terms(rng: &mut StdRng, ctx: &[u64]) -> Vec<(Vec<i64>, BigRational)> {
        (0..rng.gen_range(1..6))
            .map(|_| {
                let exps: Vec<i64> = ctx.iter().map(|_| rng.gen_range(-20..20)).collect();
                (exps, rat(rng.gen_range(-9..10), rng.gen_range(1..7)))
            })
            .collect()
    }

    /// Direct numeric evaluation of unreduced terms; independent of the
    /// reduction path it cross-checks.
    fn eval_unreduced(ctx: &[u64], terms: &[(Vec<i64>, BigRational)], bits: u32) -> BigComplex {
        let scale = working_scale(bits);
        let tables: Vec<_> = ctx.iter().map(|&p| roots_of_unity(p, scale)).collect();
        let mut acc = BigComplex::zero(scale);
        for (exps, c) in terms {
            let mut term = BigComplex::from_real(BigReal::from_rational(c, scale));
            for (j, (&e, &p)) in exps.iter().zip(ctx).enumerate() {
                let ej = e.rem_euclid(p as i64) as usize;
                if ej != 0 {
                    term = term.mul(&tables[j][ej]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    #[test]
    fn reduce_agrees_with_direct_evaluation() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let ctx: Vec<u64> = if rng.gen_bool(0.5) { vec![7] } else { vec![3, 5] };
            let terms = random_terms(&mut rng, &ctx);
            let reduced = CyclotomicNumber::from_terms(&ctx, terms.clone()).unwrap();
            let direct = eval_unreduced(&ctx, &terms, 96);
            let diff = reduced.numeric_eval(96).sub(&direct).max_norm();
            assert!(diff.to_f64() < 1e-9, "diff = {}", diff.to_f64());
        }
    }

    #[test]
    fn zero_test_matches_numeric_agreement() {
        let mut rng = StdRng::seed_from_u64(13);
        let tol = 1e-40;
        for _ in 0..200 {
            let ctx = vec![5u64, 7];
            let x = CyclotomicNumber::from_terms(&ctx, random_terms(&mut rng, &ctx)).unwrap();
            let y = if rng.gen_bool(0.3) {
                // equal by construction, written differently
                x.add(&CyclotomicNumber::from_terms(
                    &ctx,
                    vec![(vec![5, 7], rat(1, 1)), (vec![0, 0], rat(-1, 1))],
                )
                .unwrap())
                .unwrap()
            } else {
                CyclotomicNumber::from_terms(&ctx, random_terms(&mut rng, &ctx)).unwrap()
            };
            let exact_equal = x.sub(&y).unwrap().is_zero();
            let numeric_equal =
                x.numeric_eval(256).sub(&y.numeric_eval(256)).max_norm().to_f64() < tol;
            assert_eq!(exact_equal, numeric_equal);
        }
    }

    #[test]
    fn numeric_eval_error_within_documented_bound() {
        // A 64-bit evaluation must sit within 2^(3-64) * (1 + sum|coeff|) of
        // a much more precise one.
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..50 {
            let ctx = vec![5u64, 7];
            let x = CyclotomicNumber::from_terms(&ctx, random_terms(&mut rng, &ctx)).unwrap();
            let coarse = x.numeric_eval(64);
            let fine = x.numeric_eval(256).rescale_to(coarse.re.scale());
            let diff = coarse.sub(&fine).max_norm().to_f64();
            use num_traits::ToPrimitive;
            let bound = 2f64.powi(3 - 64) * (1.0 + x.coeff_abs_sum().to_f64().unwrap());
            assert!(diff <= bound, "diff {diff:e} above bound {bound:e}");
        }
    }

    #[test]
    fn reduce_idempotent_and_multiplicative() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let ctx = vec![5u64, 7];
            let x = CyclotomicNumber::from_terms(&ctx, random_terms(&mut rng, &ctx)).unwrap();
            let re_reduced = CyclotomicNumber::from_terms(
                &ctx,
                x.terms()
                    .map(|(e, c)| (e.iter().map(|&v| v as i64).collect(), c.clone()))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            assert_eq!(x, re_reduced);

            let y = CyclotomicNumber::from_terms(&ctx, random_terms(&mut rng, &ctx)).unwrap();
            let lhs = x.mul(&y).unwrap().numeric_eval(96);
            let rhs = x.numeric_eval(96).mul(&y.numeric_eval(96));
            assert!(lhs.sub(&rhs).max_norm().to_f64() < 1e-9);
        }
    }
}
