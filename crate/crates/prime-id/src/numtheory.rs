//! Exact and probabilistic number-theoretic primitives: trial-division
//! primality, Miller-Rabin, sieving, prime counting, distinct-factor counts,
//! primorials. Everything here is pure given its inputs plus an injected
//! random source.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default cap for sieve sizes, overridable via `PRIME_ID_SIEVE_LIMIT`.
pub const DEFAULT_SIEVE_LIMIT: u64 = 100_000_000;
/// Default cap for trial-division factorization, overridable via
/// `PRIME_ID_FACTOR_LIMIT`.
pub const DEFAULT_FACTOR_LIMIT: u64 = 1_000_000_000_000;

fn env_limit(var: &str, default: u64) -> u64 {
    std::env::var(var)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

/// Memory budget for sieving; callers beyond it get [`Error::Budget`] and can
/// fall back to the analytic bounds.
pub fn sieve_limit() -> u64 {
    static LIMIT: OnceLock<u64> = OnceLock::new();
    *LIMIT.get_or_init(|| env_limit("PRIME_ID_SIEVE_LIMIT", DEFAULT_SIEVE_LIMIT))
}

/// Work budget for trial-division factorization and deterministic primality.
pub fn factor_limit() -> u64 {
    static LIMIT: OnceLock<u64> = OnceLock::new();
    *LIMIT.get_or_init(|| env_limit("PRIME_ID_FACTOR_LIMIT", DEFAULT_FACTOR_LIMIT))
}

fn budget_err(resource: &'static str, requested: impl ToString, limit: u64) -> Error {
    Error::Budget {
        resource,
        requested: requested.to_string(),
        limit: limit.to_string(),
    }
}

/// Outcome of a randomized primality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    ProbablePrime,
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimalityVerdict {
    pub verdict: Verdict,
    /// Number of witness rounds actually sampled.
    pub rounds_used: u32,
}

impl PrimalityVerdict {
    pub fn is_probable_prime(&self) -> bool {
        self.verdict == Verdict::ProbablePrime
    }
}

/// Deterministic primality by trial division up to `sqrt(n)`.
///
/// The exact oracle backing every probabilistic path; intended for inputs up
/// to the factorization budget. 0 and 1 are not prime.
pub fn is_prime_det(n: &BigUint) -> bool {
    match n.to_u64() {
        Some(v) => is_prime_det_u64(v),
        None => is_prime_det_big(n),
    }
}

/// `u64` fast path of [`is_prime_det`].
pub fn is_prime_det_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

fn is_prime_det_big(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    let three = BigUint::from(3u32);
    if (n % &two).is_zero() || (n % &three).is_zero() {
        return false;
    }
    let mut d = BigUint::from(5u32);
    while &d * &d <= *n {
        if (n % &d).is_zero() || (n % (&d + &two)).is_zero() {
            return false;
        }
        d += 6u32;
    }
    true
}

/// Miller-Rabin with `rounds` independent uniform witnesses from `[2, n-2]`.
///
/// Primes are never rejected; a composite survives with probability at most
/// `4^-rounds`. Inputs 0, 1 and even numbers above 2 are rejected and 2, 3
/// accepted without sampling.
pub fn miller_rabin<R: Rng + ?Sized>(n: &BigUint, rounds: u32, rng: &mut R) -> PrimalityVerdict {
    assert!(rounds >= 1, "miller_rabin requires at least one round");
    let fixed = |verdict| PrimalityVerdict {
        verdict,
        rounds_used: 0,
    };
    if let Some(v) = n.to_u64() {
        match v {
            0 | 1 => return fixed(Verdict::Composite),
            2 | 3 => return fixed(Verdict::ProbablePrime),
            _ if v % 2 == 0 => return fixed(Verdict::Composite),
            _ => return miller_rabin_u64(v, rounds, rng),
        }
    }
    if (n % 2u32).is_zero() {
        return fixed(Verdict::Composite);
    }
    miller_rabin_big(n, rounds, rng)
}

fn miller_rabin_u64<R: Rng + ?Sized>(n: u64, rounds: u32, rng: &mut R) -> PrimalityVerdict {
    let d_shift = (n - 1).trailing_zeros();
    let d = (n - 1) >> d_shift;
    for round in 0..rounds {
        let a = rng.gen_range(2..=n - 2);
        if !strong_probable_prime_u64(n, a, d, d_shift) {
            return PrimalityVerdict {
                verdict: Verdict::Composite,
                rounds_used: round + 1,
            };
        }
    }
    PrimalityVerdict {
        verdict: Verdict::ProbablePrime,
        rounds_used: rounds,
    }
}

fn strong_probable_prime_u64(n: u64, a: u64, d: u64, d_shift: u32) -> bool {
    let mut x = pow_mod_u64(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..d_shift {
        x = mul_mod_u64(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

fn miller_rabin_big<R: Rng + ?Sized>(n: &BigUint, rounds: u32, rng: &mut R) -> PrimalityVerdict {
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_one = n - &one;
    let d_shift = n_minus_one.trailing_zeros().expect("n > 1");
    let d = &n_minus_one >> d_shift;
    for round in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_one); // [2, n-2]
        let mut x = a.modpow(&d, n);
        let mut witness = x != one && x != n_minus_one;
        if witness {
            for _ in 1..d_shift {
                x = x.modpow(&two, n);
                if x == n_minus_one {
                    witness = false;
                    break;
                }
            }
        }
        if witness {
            return PrimalityVerdict {
                verdict: Verdict::Composite,
                rounds_used: round + 1,
            };
        }
    }
    PrimalityVerdict {
        verdict: Verdict::ProbablePrime,
        rounds_used: rounds,
    }
}

/// Bit-packed sieve of Eratosthenes over the odd numbers up to `limit`.
pub struct Sieve {
    limit: u64,
    // bit i represents 2i+3; set bit means composite
    composite: Vec<u64>,
}

impl Sieve {
    pub fn new(limit: u64) -> Result<Self> {
        if limit > sieve_limit() {
            return Err(budget_err("sieve", limit, sieve_limit()));
        }
        let odd_count = if limit < 3 { 0 } else { ((limit - 3) / 2 + 1) as usize };
        let mut composite = vec![0u64; odd_count.div_ceil(64)];
        let mut p = 3u64;
        while p * p <= limit {
            if composite[((p - 3) / 2) as usize / 64] >> (((p - 3) / 2) % 64) & 1 == 0 {
                let mut mult = p * p;
                while mult <= limit {
                    let idx = ((mult - 3) / 2) as usize;
                    composite[idx / 64] |= 1 << (idx % 64);
                    mult += 2 * p;
                }
            }
            p += 2;
        }
        Ok(Sieve { limit, composite })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primality lookup; `n` must not exceed the sieve limit.
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n <= self.limit, "sieve lookup beyond limit");
        if n < 2 {
            return false;
        }
        if n == 2 {
            return true;
        }
        if n % 2 == 0 {
            return false;
        }
        let idx = ((n - 3) / 2) as usize;
        self.composite[idx / 64] >> (idx % 64) & 1 == 0
    }

    /// All primes `<= limit`, strictly increasing.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let two = if self.limit >= 2 { Some(2u64) } else { None };
        two.into_iter().chain(
            (0..self.odd_slots()).filter_map(move |i| {
                if self.composite[i / 64] >> (i % 64) & 1 == 0 {
                    Some(2 * i as u64 + 3)
                } else {
                    None
                }
            }),
        )
    }

    fn odd_slots(&self) -> usize {
        if self.limit < 3 {
            0
        } else {
            ((self.limit - 3) / 2 + 1) as usize
        }
    }
}

/// All primes `<= n`, strictly increasing.
pub fn sieve_upto(n: u64) -> Result<Vec<u64>> {
    Ok(Sieve::new(n)?.primes().collect())
}

/// The prime-counting function `pi(x)`.
pub fn prime_count(x: u64) -> Result<u64> {
    Ok(Sieve::new(x)?.primes().count() as u64)
}

/// Analytic upper bound for the n-th prime, used to size sieves:
/// `p_n <= 12 (n ln n + n ln(12/e))`.
pub fn nth_prime_upper_bound(n: u64) -> u64 {
    let nf = n as f64;
    let bound = 12.0 * (nf * nf.max(2.0).ln() + nf * (12.0 / std::f64::consts::E).ln());
    (bound.ceil() as u64).max(16)
}

/// The `i`-th prime, 1-indexed (`nth_prime(1) == 2`).
pub fn nth_prime(i: u64) -> Result<u64> {
    if i == 0 {
        return Err(Error::InvalidParameter("nth_prime requires i >= 1".into()));
    }
    let bound = nth_prime_upper_bound(i);
    if bound > sieve_limit() {
        return Err(budget_err("sieve", bound, sieve_limit()));
    }
    Sieve::new(bound)?
        .primes()
        .nth(i as usize - 1)
        .ok_or_else(|| Error::InvalidParameter(format!("nth prime bound too small for {i}")))
}

/// Number of distinct prime factors; `omega(1) == 0`.
pub fn omega(n: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::InvalidParameter("omega requires n >= 1".into()));
    }
    if n > factor_limit() {
        return Err(budget_err("factorization", n, factor_limit()));
    }
    let mut n = n;
    let mut count = 0u32;
    if n % 2 == 0 {
        count += 1;
        while n % 2 == 0 {
            n /= 2;
        }
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            count += 1;
            while n % d == 0 {
                n /= d;
            }
        }
        d += 2;
    }
    if n > 1 {
        count += 1;
    }
    Ok(count)
}

/// Primorial `p_r# = p_1 * ... * p_r`.
pub fn primorial(r: u64) -> Result<BigUint> {
    if r == 0 {
        return Err(Error::InvalidParameter("primorial requires r >= 1".into()));
    }
    let bound = nth_prime_upper_bound(r);
    if bound > sieve_limit() {
        return Err(budget_err("sieve", bound, sieve_limit()));
    }
    let sieve = Sieve::new(bound)?;
    let mut product = BigUint::one();
    let mut taken = 0u64;
    for p in sieve.primes() {
        if taken == r {
            break;
        }
        product *= p;
        taken += 1;
    }
    if taken < r {
        return Err(Error::InvalidParameter(format!(
            "nth prime bound too small for primorial({r})"
        )));
    }
    Ok(product)
}
