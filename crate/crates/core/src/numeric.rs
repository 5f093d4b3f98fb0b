//! Arbitrary-precision dyadic arithmetic for the numeric (float-mode) path.
//!
//! Values are fixed-point: an integer mantissa scaled by `2^-scale`. All
//! values participating in one computation share the same scale, so addition
//! is exact and every multiplication or division rounds once. This gives the
//! absolute-error control the collision-tolerance rules rely on, and results
//! are bit-identical across platforms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Guard bits carried on top of the requested precision.
const GUARD_BITS: u32 = 64;

/// Environment variable naming a directory for memoized root-of-unity tables.
pub const CACHE_ENV: &str = "SCENERYLAB_CACHE";

/// A real number `mant / 2^scale`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BigReal {
    mant: BigInt,
    scale: u32,
}

impl BigReal {
    pub fn zero(scale: u32) -> Self {
        BigReal { mant: BigInt::zero(), scale }
    }

    pub fn one(scale: u32) -> Self {
        BigReal { mant: BigInt::one() << scale, scale }
    }

    pub fn from_i64(v: i64, scale: u32) -> Self {
        BigReal { mant: BigInt::from(v) << scale, scale }
    }

    /// Exact conversion of an `f64` (dyadic rationals embed exactly as long
    /// as the scale covers the exponent).
    pub fn from_f64(v: f64, scale: u32) -> Self {
        if v == 0.0 {
            return Self::zero(scale);
        }
        let (m, e, s) = Float::integer_decode(v);
        let mut mant = BigInt::from(m);
        if s < 0 {
            mant = -mant;
        }
        let shift = scale as i64 + e as i64;
        if shift >= 0 {
            mant <<= shift as u64;
        } else {
            mant >>= (-shift) as u64;
        }
        BigReal { mant, scale }
    }

    /// Round a rational to the working scale (error at most one ulp).
    pub fn from_rational(r: &BigRational, scale: u32) -> Self {
        let mant = (r.numer() << scale) / r.denom();
        BigReal { mant, scale }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.mant.to_f64().unwrap_or(f64::INFINITY);
        m * 2f64.powi(-(self.scale as i32))
    }

    pub fn mantissa_hex(&self) -> String {
        self.mant.to_str_radix(16)
    }

    pub fn from_mantissa_hex(hex: &str, scale: u32) -> Option<Self> {
        BigInt::parse_bytes(hex.as_bytes(), 16).map(|mant| BigReal { mant, scale })
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.scale, rhs.scale, "mixed scales");
        BigReal { mant: &self.mant + &rhs.mant, scale: self.scale }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.scale, rhs.scale, "mixed scales");
        BigReal { mant: &self.mant - &rhs.mant, scale: self.scale }
    }

    pub fn neg(&self) -> Self {
        BigReal { mant: -&self.mant, scale: self.scale }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.scale, rhs.scale, "mixed scales");
        BigReal { mant: (&self.mant * &rhs.mant) >> self.scale, scale: self.scale }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        assert_eq!(self.scale, rhs.scale, "mixed scales");
        assert!(!rhs.mant.is_zero(), "division by zero");
        BigReal { mant: (&self.mant << self.scale) / &rhs.mant, scale: self.scale }
    }

    pub fn abs(&self) -> Self {
        BigReal { mant: self.mant.abs(), scale: self.scale }
    }

    /// Change scale, rounding toward negative infinity when shrinking.
    pub fn rescale(&self, new_scale: u32) -> Self {
        let mant = if new_scale >= self.scale {
            &self.mant << (new_scale - self.scale)
        } else {
            &self.mant >> (self.scale - new_scale)
        };
        BigReal { mant, scale: new_scale }
    }
}

/// A complex number over [`BigReal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn zero(scale: u32) -> Self {
        BigComplex { re: BigReal::zero(scale), im: BigReal::zero(scale) }
    }

    pub fn one(scale: u32) -> Self {
        BigComplex { re: BigReal::one(scale), im: BigReal::zero(scale) }
    }

    pub fn from_real(re: BigReal) -> Self {
        let scale = re.scale();
        BigComplex { re, im: BigReal::zero(scale) }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        BigComplex { re: self.re.add(&rhs.re), im: self.im.add(&rhs.im) }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        BigComplex { re: self.re.sub(&rhs.re), im: self.im.sub(&rhs.im) }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let re = self.re.mul(&rhs.re).sub(&self.im.mul(&rhs.im));
        let im = self.re.mul(&rhs.im).add(&self.im.mul(&rhs.re));
        BigComplex { re, im }
    }

    pub fn scale_by(&self, s: &BigReal) -> Self {
        BigComplex { re: self.re.mul(s), im: self.im.mul(s) }
    }

    pub fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: self.im.neg() }
    }

    /// Max-norm `max(|re|, |im|)`; bounds the modulus within a factor sqrt(2).
    pub fn max_norm(&self) -> BigReal {
        let ra = self.re.abs();
        let ia = self.im.abs();
        if ra >= ia {
            ra
        } else {
            ia
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn rescale_to(&self, scale: u32) -> Self {
        BigComplex { re: self.re.rescale(scale), im: self.im.rescale(scale) }
    }
}

/// Working scale for a requested precision in bits.
pub fn working_scale(precision_bits: u32) -> u32 {
    precision_bits + GUARD_BITS
}

/// Pi at the given scale (Machin's formula, memoized).
pub fn pi(scale: u32) -> BigReal {
    static CACHE: OnceLock<Mutex<HashMap<u32, BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    let mant = guard
        .entry(scale)
        .or_insert_with(|| {
            let w = scale + 32;
            let m = atan_inv_mant(5, w) * 16u32 - atan_inv_mant(239, w) * 4u32;
            m >> 32
        })
        .clone();
    BigReal { mant, scale }
}

/// Mantissa of `atan(1/x)` at scale `w`.
fn atan_inv_mant(x: u64, w: u32) -> BigInt {
    let x2 = BigInt::from(x) * BigInt::from(x);
    let mut term = (BigInt::one() << w) / BigInt::from(x);
    let mut sum = term.clone();
    let mut j: u64 = 1;
    loop {
        term /= &x2;
        if term.is_zero() {
            break;
        }
        let contrib = &term / BigInt::from(2 * j + 1);
        if contrib.is_zero() {
            break;
        }
        if j % 2 == 1 {
            sum -= contrib;
        } else {
            sum += contrib;
        }
        j += 1;
    }
    sum
}

/// cos and sin of `r` for `0 <= r < pi/2 + ulp`, by Taylor series at scale `w`.
fn cos_sin_reduced(r: &BigInt, w: u32) -> (BigInt, BigInt) {
    let r2 = (r * r) >> w;
    // cosine
    let mut cos_sum = BigInt::one() << w;
    let mut term = BigInt::one() << w;
    let mut j: u64 = 1;
    loop {
        term = (&term * &r2) >> w;
        term /= BigInt::from((2 * j - 1) * (2 * j));
        if term.is_zero() {
            break;
        }
        if j % 2 == 1 {
            cos_sum -= &term;
        } else {
            cos_sum += &term;
        }
        j += 1;
    }
    // sine
    let mut sin_sum = r.clone();
    let mut term = r.clone();
    let mut j: u64 = 1;
    loop {
        term = (&term * &r2) >> w;
        term /= BigInt::from((2 * j) * (2 * j + 1));
        if term.is_zero() {
            break;
        }
        if j % 2 == 1 {
            sin_sum -= &term;
        } else {
            sin_sum += &term;
        }
        j += 1;
    }
    (cos_sum, sin_sum)
}

/// `(cos(2 pi k / n), sin(2 pi k / n))` at the given scale.
pub fn cos_sin_two_pi_frac(k: u64, n: u64, scale: u32) -> (BigReal, BigReal) {
    let w = scale + 32;
    let k = k % n;
    let two_pi = pi(w).mant << 1;
    let theta = (&two_pi * BigInt::from(k)) / BigInt::from(n);
    let half_pi = pi(w).mant >> 1;
    let quotient: BigInt = &theta / &half_pi;
    let mut q = quotient.to_u64().unwrap_or(0);
    if q > 3 {
        q = 3;
    }
    let r = &theta - &half_pi * BigInt::from(q);
    let (c, s) = cos_sin_reduced(&r, w);
    let (cos_m, sin_m) = match q {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    };
    (
        BigReal { mant: cos_m >> 32, scale },
        BigReal { mant: sin_m >> 32, scale },
    )
}

/// The powers `w_n^k = e^{-2 pi i k / n}` for `k = 0..n-1` at the given
/// scale. Tables are memoized in memory and, when `SCENERYLAB_CACHE` names a
/// directory, on disk.
pub fn roots_of_unity(n: u64, scale: u32) -> Arc<Vec<BigComplex>> {
    type RootCache = Mutex<HashMap<(u64, u32), Arc<Vec<BigComplex>>>>;
    static CACHE: OnceLock<RootCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let guard = cache.lock().unwrap();
        if let Some(v) = guard.get(&(n, scale)) {
            return Arc::clone(v);
        }
    }
    let roots = load_cached_roots(n, scale).unwrap_or_else(|| {
        let computed: Vec<BigComplex> = (0..n)
            .map(|k| {
                let (c, s) = cos_sin_two_pi_frac(k, n, scale);
                // e^{-i theta} = cos theta - i sin theta
                BigComplex { re: c, im: s.neg() }
            })
            .collect();
        store_cached_roots(n, scale, &computed);
        computed
    });
    let arc = Arc::new(roots);
    cache.lock().unwrap().insert((n, scale), Arc::clone(&arc));
    arc
}

fn cache_path(n: u64, scale: u32) -> Option<std::path::PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    let dir = std::path::PathBuf::from(dir);
    if !dir.is_dir() {
        return None;
    }
    Some(dir.join(format!("roots_n{n}_s{scale}.json")))
}

fn load_cached_roots(n: u64, scale: u32) -> Option<Vec<BigComplex>> {
    let path = cache_path(n, scale)?;
    let text = std::fs::read_to_string(path).ok()?;
    let rows: Vec<(String, String)> = serde_json::from_str(&text).ok()?;
    if rows.len() != n as usize {
        return None;
    }
    rows.into_iter()
        .map(|(re, im)| {
            Some(BigComplex {
                re: BigReal::from_mantissa_hex(&re, scale)?,
                im: BigReal::from_mantissa_hex(&im, scale)?,
            })
        })
        .collect()
}

fn store_cached_roots(n: u64, scale: u32, roots: &[BigComplex]) {
    if let Some(path) = cache_path(n, scale) {
        let rows: Vec<(String, String)> = roots
            .iter()
            .map(|z| (z.re.mantissa_hex(), z.im.mantissa_hex()))
            .collect();
        if let Ok(text) = serde_json::to_string(&rows) {
            let _ = std::fs::write(path, text);
        }
    }
}
