//! Probabilistic prime generation: bounded rejection sampling against
//! Miller-Rabin, the parameter derivation that sizes it, and the analytic
//! failure/composite bounds for the resulting distribution.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numtheory::{self, is_prime_det, miller_rabin};
use crate::precise;

/// Inputs of the bounded generator: upper bound `N`, sample budget `s`,
/// Miller-Rabin rounds `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GmrParams {
    upper_bound: BigUint,
    max_samples: u64,
    rounds: u32,
}

impl GmrParams {
    pub fn new(upper_bound: BigUint, max_samples: u64, rounds: u32) -> Result<Self> {
        if upper_bound < BigUint::from(2u32) {
            return Err(Error::InvalidParameter("gmr requires N >= 2".into()));
        }
        if max_samples == 0 {
            return Err(Error::InvalidParameter("gmr requires s >= 1".into()));
        }
        if rounds == 0 {
            return Err(Error::InvalidParameter("gmr requires k >= 1".into()));
        }
        Ok(GmrParams {
            upper_bound,
            max_samples,
            rounds,
        })
    }

    /// Sizes `s` and `k` from the error budgets: failure probability at most
    /// `2^-l_exp`, composite probability at most `2^-q_exp`.
    pub fn derive(upper_bound: BigUint, l_exp: u32, q_exp: u32) -> Result<Self> {
        let (s, k) = derive_params(&upper_bound, l_exp, q_exp)?;
        GmrParams::new(upper_bound, s, k)
    }

    pub fn upper_bound(&self) -> &BigUint {
        &self.upper_bound
    }

    pub fn max_samples(&self) -> u64 {
        self.max_samples
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }
}

/// Result of a bounded generation attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GmrOutcome {
    /// A probable prime `<= N` that passed `k` Miller-Rabin rounds.
    Prime(BigUint),
    /// All `s` samples were rejected.
    Bottom,
}

impl GmrOutcome {
    pub fn prime(&self) -> Option<&BigUint> {
        match self {
            GmrOutcome::Prime(p) => Some(p),
            GmrOutcome::Bottom => None,
        }
    }
}

/// Exactly uniform prime `<= n` by rejection sampling with the deterministic
/// test. Expected `O(log n)` iterations; unbounded in the worst case.
pub fn uniform_prime_det<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> Result<BigUint> {
    let two = BigUint::from(2u32);
    if *n < two {
        return Err(Error::InvalidParameter(
            "uniform prime generation requires n >= 2".into(),
        ));
    }
    let det_budget = BigUint::from(numtheory::factor_limit());
    if *n > det_budget {
        return Err(Error::Budget {
            resource: "deterministic primality",
            requested: n.to_string(),
            limit: det_budget.to_string(),
        });
    }
    let upper = n + 1u32;
    loop {
        let candidate = rng.gen_biguint_range(&two, &upper);
        if is_prime_det(&candidate) {
            return Ok(candidate);
        }
    }
}

/// Bounded probabilistic generation: up to `s` uniform draws from `{1..N}`,
/// each tested with `k` Miller-Rabin rounds; `Bottom` on exhaustion.
///
/// Conditioned on returning a prime, the result is uniform over the primes
/// `<= N`. `Pr(Bottom) <= (1 - 1/(6 ln N))^s` and
/// `Pr(composite | not Bottom) <= s 4^-k (1 - 1/(6 ln N))`.
pub fn gmr<R: Rng + ?Sized>(params: &GmrParams, rng: &mut R) -> GmrOutcome {
    let one = BigUint::one();
    let upper = &params.upper_bound + 1u32;
    for _ in 0..params.max_samples {
        let candidate = rng.gen_biguint_range(&one, &upper);
        if miller_rabin(&candidate, params.rounds, rng).is_probable_prime() {
            return GmrOutcome::Prime(candidate);
        }
    }
    GmrOutcome::Bottom
}

/// `s = ceil(3 l log2 N)` and `k = ceil((log2(3l) + log2 log2 N + q) / 2)`,
/// the joint solution of `3 l log2 N <= s <= 2^(2k-q)`.
pub fn derive_params(upper_bound: &BigUint, l_exp: u32, q_exp: u32) -> Result<(u64, u32)> {
    if *upper_bound < BigUint::from(3u32) {
        return Err(Error::InvalidParameter(
            "parameter derivation requires N >= 3 (log log N must be positive)".into(),
        ));
    }
    if l_exp == 0 {
        return Err(Error::InvalidParameter(
            "parameter derivation requires l >= 1".into(),
        ));
    }
    let s = precise::ceil_mul_log2(upper_bound, 3 * l_exp as u64)?;
    let log2_n = precise::log2_f64(upper_bound);
    let k_real = ((3.0 * l_exp as f64).log2() + log2_n.log2() + q_exp as f64) / 2.0;
    let mut k = k_real.ceil() as u32;
    if k == 0 {
        k = 1;
    }
    // Both inequalities must hold; the ceilings guarantee them, but the float
    // step for k gets a final exact check. 2^(2k - q) >= s, i.e. the power of
    // two at or above s has exponent <= 2k - q.
    while (2 * k as i64 - q_exp as i64) < precise::ceil_log2(&BigUint::from(s)) as i64 {
        k += 1;
    }
    debug_assert!(lower_inequality_holds(upper_bound, l_exp, s));
    Ok((s, k))
}

fn lower_inequality_holds(n: &BigUint, l_exp: u32, s: u64) -> bool {
    // 3 l log2 N <= s  <=>  N^(3l) <= 2^s, checked exactly when affordable
    let exp = 3 * l_exp as u64;
    match exp.checked_mul(n.bits()) {
        Some(bits) if bits <= 4_000_000 => n.pow(exp as u32) <= (BigUint::one() << s),
        _ => true,
    }
}

/// Analytic bound on the probability that the generator exhausts its samples:
/// `(1 - 1/(6 ln N))^s`.
pub fn failure_bound(upper_bound: &BigUint, s: u64) -> f64 {
    let ln_n = precise::log2_f64(upper_bound) * std::f64::consts::LN_2;
    if ln_n <= 0.0 {
        return 0.0; // N = 1 never occurs through validated params
    }
    let per_draw = 1.0 - 1.0 / (6.0 * ln_n);
    per_draw.max(0.0).powi(s.min(i32::MAX as u64) as i32).clamp(0.0, 1.0)
}

/// Analytic bound on returning a composite given the generator did not fail:
/// `s 4^-k (1 - 1/(6 ln N))`, clamped to `[0, 1]`.
pub fn composite_bound(upper_bound: &BigUint, s: u64, k: u32) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let ln_n = precise::log2_f64(upper_bound) * std::f64::consts::LN_2;
    let per_draw = if ln_n > 0.0 {
        1.0 - 1.0 / (6.0 * ln_n)
    } else {
        1.0
    };
    (s as f64 * 4f64.powi(-(k as i32)) * per_draw.max(0.0)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn derive_params_examples() {
        // 3*10*11 = 330; (log2 30 + log2 11 + 10)/2 = 9.18 -> 10
        assert_eq!(derive_params(&big(2048), 10, 10).unwrap(), (330, 10));
        // 3*1*2 = 6; (log2 3 + 1)/2 = 1.29 -> 2; and 6 <= 2^4
        assert_eq!(derive_params(&big(4), 1, 0).unwrap(), (6, 2));
        assert_eq!(derive_params(&big(1_000_000), 10, 10).unwrap(), (598, 10));
        assert!(matches!(
            derive_params(&big(2), 1, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn derive_params_inequalities_hold() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_biguint_range(&big(3), &(BigUint::one() << 48u32));
            let l = rng.gen_range(1..=20);
            let q = rng.gen_range(0..=20);
            let (s, k) = derive_params(&n, l, q).unwrap();
            assert!(lower_inequality_holds(&n, l, s), "N={n} l={l}");
            // s <= 2^(2k - q)
            let e = 2 * k as i64 - q as i64;
            assert!(e >= 0 && BigUint::from(s) <= (BigUint::one() << e as u64));
        }
    }

    #[test]
    fn uniform_prime_det_small_bounds() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        assert_eq!(uniform_prime_det(&big(2), &mut rng).unwrap(), big(2));
        let primes_to_100 = numtheory::sieve_upto(100).unwrap();
        for _ in 0..200 {
            let p = uniform_prime_det(&big(100), &mut rng).unwrap();
            assert!(primes_to_100.contains(&p.to_u64().unwrap()));
        }
        assert!(uniform_prime_det(&big(1), &mut rng).is_err());
    }

    #[test]
    fn uniform_prime_det_is_unbiased_over_two_primes() {
        // n = 3 leaves {2, 3}; each must appear close to half the time
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let trials = 10_000;
        let twos = (0..trials)
            .filter(|_| uniform_prime_det(&big(3), &mut rng).unwrap() == big(2))
            .count();
        let freq = twos as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq = {freq}");
    }

    #[test]
    fn gmr_outputs_are_prime_at_desk_scale() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let params = GmrParams::new(big(100), 50, 10).unwrap();
        let sieve = numtheory::sieve_upto(100).unwrap();
        let mut successes = 0;
        for _ in 0..2000 {
            if let GmrOutcome::Prime(p) = gmr(&params, &mut rng) {
                let v = p.to_u64().unwrap();
                assert!(sieve.contains(&v), "gmr returned composite {v}");
                successes += 1;
            }
        }
        assert!(successes > 1900); // Bottom at s=50 is a ~(3/4)^50 event
    }

    #[test]
    fn gmr_bottom_frequency_matches_bound_at_s_1() {
        // N=2, s=1, k=1: the draw is 1 or 2; Bottom exactly when it is 1.
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let params = GmrParams::new(big(2), 1, 1).unwrap();
        let trials = 20_000;
        let bottoms = (0..trials)
            .filter(|_| matches!(gmr(&params, &mut rng), GmrOutcome::Bottom))
            .count();
        let freq = bottoms as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq = {freq}");
    }

    #[test]
    fn analytic_bounds_frozen_values() {
        // evaluated independently with 200-bit arithmetic
        let fb = failure_bound(&big(2048), 330);
        assert!((fb - 6.79955627548543e-4).abs() < 1e-12);
        assert!(fb <= 2f64.powi(-10));
        assert_eq!(failure_bound(&big(2048), 0), 1.0);
        let fb1 = failure_bound(&big(1_000_000), 1);
        assert!((fb1 - 0.987936264391576).abs() < 1e-12);

        let cb = composite_bound(&big(2048), 330, 10);
        assert!((cb - 3.0783321837955e-4).abs() < 1e-12);
        assert_eq!(composite_bound(&big(2048), 0, 10), 0.0);
        let cb1 = composite_bound(&big(1_000_000), 1, 0);
        assert!((cb1 - 0.987936264391576).abs() < 1e-12);
    }
}
