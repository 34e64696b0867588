//! Exact evaluation of the real-power ceilings the schemes are built on.
//!
//! Sizes like `ceil(x^alpha)` sit exactly on integer boundaries whenever
//! `alpha * log2(x)` is an integer (e.g. `x = 1024`, `alpha = 1.1` gives
//! exactly `2^11`). Plain `f64::powf` rounds either way across that boundary,
//! so the exponent is carried as an exact rational and the ceilings are
//! resolved with big-integer root extraction, falling back to interval
//! refinement of `log2` when the base itself is irrational.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest big-integer power (in bits) the exact paths will materialize.
const EXACT_POW_BIT_CAP: u64 = 8_000_000;

/// An exponent `alpha > 1` kept as an exact reduced rational.
///
/// Parsed from decimal text ("1.1" becomes 11/10), so CLI inputs stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alpha {
    num: u64,
    den: u64,
}

impl Alpha {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("alpha denominator is zero".into()));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        if num <= den {
            return Err(Error::InvalidParameter(format!(
                "alpha must exceed 1, got {num}/{den}"
            )));
        }
        Ok(Alpha { num, den })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// True when the exact big-integer paths are affordable for this exponent.
    fn exact_feasible(&self, base_bits: u64) -> bool {
        self.num.checked_mul(base_bits).map_or(false, |b| b <= EXACT_POW_BIT_CAP) && self.den <= 64
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid alpha {s:?}"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() || frac_part.len() > 9 {
            return Err(bad());
        }
        let int: u64 = int_part.parse().map_err(|_| bad())?;
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Alpha::new(num, den)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

pub fn is_power_of_two(n: &BigUint) -> bool {
    !n.is_zero() && (n & (n - 1u32)).is_zero()
}

/// `ceil(log2(n))` for `n >= 1`, exact.
pub fn ceil_log2(n: &BigUint) -> u64 {
    if is_power_of_two(n) {
        n.bits() - 1
    } else {
        n.bits()
    }
}

/// `floor(log2(n))` for `n >= 1`, exact.
pub fn floor_log2(n: &BigUint) -> u64 {
    n.bits() - 1
}

/// `log2(n)` as a float, usable for arbitrarily wide `n`.
pub fn log2_f64(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 53 {
        return n.to_u64().expect("fits").to_f64().unwrap().log2();
    }
    let top = (n >> (bits - 53)).to_u64().expect("53 bits fit");
    (top as f64).log2() + (bits - 53) as f64
}

/// `ceil(factor * log2(n))` for `n >= 2`, exact via the bit length of `n^factor`.
pub fn ceil_mul_log2(n: &BigUint, factor: u64) -> Result<u64> {
    if *n < BigUint::from(2u32) {
        return Err(Error::InvalidParameter(
            "ceil_mul_log2 requires n >= 2".into(),
        ));
    }
    if factor == 0 {
        return Ok(0);
    }
    if factor.checked_mul(n.bits()).map_or(true, |b| b > EXACT_POW_BIT_CAP) {
        // Too large to materialize; the product is far from an integer boundary
        // for any such n unless n is a power of two, which stays exact below.
        if is_power_of_two(n) {
            return Ok((n.bits() - 1) * factor);
        }
        let v = factor as f64 * log2_f64(n);
        return Ok(v.ceil() as u64);
    }
    let x = n.pow(factor as u32);
    Ok(ceil_log2(&x))
}

/// `ceil(x^alpha)` for an integer base `x >= 1`, exact.
pub fn ceil_pow(x: &BigUint, alpha: Alpha) -> Result<BigUint> {
    pow_int(x, alpha, true)
}

/// `floor(x^alpha)` for an integer base `x >= 1`, exact.
pub fn floor_pow(x: &BigUint, alpha: Alpha) -> Result<BigUint> {
    pow_int(x, alpha, false)
}

fn pow_int(x: &BigUint, alpha: Alpha, ceil: bool) -> Result<BigUint> {
    if x.is_zero() {
        return Err(Error::InvalidParameter("power of zero base".into()));
    }
    if x.is_one() {
        return Ok(BigUint::one());
    }
    if alpha.exact_feasible(x.bits()) {
        let raised = x.pow(alpha.num as u32);
        if alpha.den == 1 {
            return Ok(raised);
        }
        let root = raised.nth_root(alpha.den as u32);
        if root.pow(alpha.den as u32) == raised {
            return Ok(root); // exact power: floor == ceil
        }
        return Ok(if ceil { root + 1u32 } else { root });
    }
    guarded_f64_pow(log2_f64(x).exp2(), alpha, ceil)
}

/// Fallback for exponents outside the exact budget: plain float evaluation,
/// rejected if the result is suspiciously close to an integer boundary.
fn guarded_f64_pow(x: f64, alpha: Alpha, ceil: bool) -> Result<BigUint> {
    let v = x.powf(alpha.as_f64());
    if !v.is_finite() {
        return Err(Error::InvalidParameter(
            "power overflows float range".into(),
        ));
    }
    let nearest = v.round();
    if (v - nearest).abs() < v.abs() * 1e-12 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "cannot resolve ceil/floor of power near integer boundary ({v})"
        )));
    }
    let out = if ceil { v.ceil() } else { v.floor() };
    BigUint::from_f64(out).ok_or_else(|| Error::InvalidParameter("negative power result".into()))
}

use num_traits::FromPrimitive;

/// `ceil((log2 k)^alpha)` for `k >= 2`, exact.
///
/// Powers of two reduce to the integer-base case; otherwise `log2 k` is
/// irrational and an interval refinement decides which side of each integer
/// the power falls on.
pub fn ceil_pow_log2(k: &BigUint, alpha: Alpha) -> Result<BigUint> {
    let two = BigUint::from(2u32);
    if *k < two {
        return Err(Error::InvalidParameter(
            "ceil_pow_log2 requires k >= 2".into(),
        ));
    }
    if is_power_of_two(k) {
        let j = k.bits() - 1;
        return ceil_pow(&BigUint::from(j), alpha);
    }
    if alpha.den > 64 || alpha.num > 4096 {
        return guarded_f64_pow(log2_f64(k), alpha, true);
    }

    // Seed from f64, then certify t-1 < (log2 k)^alpha <= t exactly.
    let est = log2_f64(k).powf(alpha.as_f64());
    let mut t = BigUint::from_f64(est.ceil().max(1.0)).expect("positive");
    loop {
        match pow_exceeds_log2pow(&t, k, alpha)? {
            true => {
                let below = &t - 1u32;
                if below.is_zero() || !pow_exceeds_log2pow(&below, k, alpha)? {
                    return Ok(t);
                }
                t = below;
            }
            false => t += 1u32,
        }
    }
}

/// Decides `t^den >= (log2 k)^num` exactly (k not a power of two, so equality
/// is impossible and the interval refinement always terminates in practice).
fn pow_exceeds_log2pow(t: &BigUint, k: &BigUint, alpha: Alpha) -> Result<bool> {
    if t.is_zero() {
        return Ok(false);
    }
    let t_pow = t.pow(alpha.den as u32);
    let mut prec: u32 = 96;
    while prec <= 24_576 {
        let (lo, hi) = log2_interval(k, prec);
        // (log2 k)^num in [lo^num, hi^num] / 2^(prec*num)
        let lo_pow = lo.pow(alpha.num as u32);
        let hi_pow = hi.pow(alpha.num as u32);
        let scaled_t = &t_pow << (prec as u64 * alpha.num);
        if scaled_t >= hi_pow {
            return Ok(true);
        }
        if scaled_t < lo_pow {
            return Ok(false);
        }
        prec *= 2;
    }
    Err(Error::InvalidParameter(
        "log2-power comparison did not resolve at maximum precision".into(),
    ))
}

/// Scaled bounds `lo <= log2(k) * 2^prec <= hi` with `hi - lo` a few ulps,
/// via bit extraction by repeated squaring on the mantissa.
fn log2_interval(k: &BigUint, prec: u32) -> (BigUint, BigUint) {
    let int_part = k.bits() - 1;
    let work = prec as u64 + 64;
    // mantissa in [1,2) as a fixed-point value scaled by 2^work
    let mantissa = if int_part >= work {
        k >> (int_part - work)
    } else {
        k << (work - int_part)
    };
    let lo = log2_frac_bits(mantissa.clone(), work, prec, false);
    let hi = log2_frac_bits(mantissa, work, prec, true);
    let base = BigUint::from(int_part) << prec;
    (&base + lo, base + hi + 1u32)
}

/// Extracts `prec` fractional bits of `log2(m / 2^work)` with directed
/// rounding; `round_up` selects whether the returned value bounds from above.
fn log2_frac_bits(mut m: BigUint, work: u64, prec: u32, round_up: bool) -> BigUint {
    let one = BigUint::one() << work;
    let two = &one << 1u32;
    let mut out = BigUint::zero();
    for _ in 0..prec {
        let sq = &m * &m;
        m = if round_up {
            (sq + (&one - 1u32)) >> work
        } else {
            sq >> work
        };
        out <<= 1u32;
        if m >= two {
            m >>= 1u32;
            out += 1u32;
        }
    }
    out
}
