//! The original index-based 3-step scheme, at desk scale: keys are indices
//! into the first `K` primes, which both ends must be able to enumerate.
//! Kept for comparison against the modified scheme.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numtheory::{self, Sieve};
use crate::precise::{self, Alpha};

/// Construction data: `K = ceil((log M)^alpha)` indices into the prime
/// sequence, and `K' = ceil((log p_K)^alpha)` indices for the second stage.
/// `K'` is fixed from `p_K` so the frame does not depend on the drawn key.
#[derive(Debug, Clone)]
pub struct OriginalParams {
    m_max: BigUint,
    alpha: Alpha,
    key_count: u64,
    key_count2: u64,
    /// First `max(K, K')` primes; moduli are `primes[index - 1]`.
    primes: Vec<u64>,
    p_k: u64,
    p_k2: u64,
}

impl OriginalParams {
    pub fn new(m_max: BigUint, alpha: Alpha) -> Result<Self> {
        if m_max < BigUint::from(4u32) {
            return Err(Error::InvalidParameter(
                "original scheme requires M >= 4".into(),
            ));
        }
        let key_count = precise::ceil_pow_log2(&m_max, alpha)?
            .to_u64()
            .ok_or_else(|| Error::Budget {
                resource: "prime enumeration",
                requested: "K beyond u64".into(),
                limit: numtheory::sieve_limit().to_string(),
            })?;
        let bound = numtheory::nth_prime_upper_bound(key_count);
        if bound > numtheory::sieve_limit() {
            return Err(Error::Budget {
                resource: "prime enumeration",
                requested: bound.to_string(),
                limit: numtheory::sieve_limit().to_string(),
            });
        }
        let sieve = Sieve::new(bound)?;
        let primes: Vec<u64> = sieve.primes().take(key_count as usize).collect();
        if primes.len() < key_count as usize {
            return Err(Error::Construction(format!(
                "could not enumerate the first {key_count} primes"
            )));
        }
        let p_k = primes[key_count as usize - 1];
        let key_count2 = precise::ceil_pow_log2(&BigUint::from(p_k), alpha)?
            .to_u64()
            .expect("K' is tiny at desk scale");
        if key_count2 < 1 {
            return Err(Error::Construction("empty second key space".into()));
        }
        let mut primes = primes;
        if key_count2 > key_count {
            primes = Sieve::new(numtheory::nth_prime_upper_bound(key_count2))?
                .primes()
                .take(key_count2 as usize)
                .collect();
        }
        let p_k2 = primes[key_count2 as usize - 1];
        Ok(OriginalParams {
            m_max,
            alpha,
            key_count,
            key_count2,
            primes,
            p_k,
            p_k2,
        })
    }

    pub fn m_max(&self) -> &BigUint {
        &self.m_max
    }

    pub fn key_count(&self) -> u64 {
        self.key_count
    }

    pub fn key_count2(&self) -> u64 {
        self.key_count2
    }

    pub fn p_k(&self) -> u64 {
        self.p_k
    }

    /// Modulus for a key index (1-based).
    pub fn modulus(&self, index: u64) -> u64 {
        self.primes[index as usize - 1]
    }

    /// `n = ceil(log K) + ceil(log K') + ceil(log p_K')`.
    pub fn block_length_bits(&self) -> u32 {
        let c = |v: u64| precise::ceil_log2(&BigUint::from(v)) as u32;
        c(self.key_count) + c(self.key_count2) + c(self.p_k2)
    }
}

/// Transmitted indices plus the tag under their prime moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OriginalCodeword {
    pub k_index: u64,
    pub l_index: u64,
    pub tag: u64,
}

fn tag_original(m: &BigUint, params: &OriginalParams, k_index: u64, l_index: u64) -> u64 {
    let pi_k = params.modulus(k_index);
    let pi_l = params.modulus(l_index);
    let inner = (m % pi_k).to_u64().expect("residue fits") + 1;
    inner % pi_l + 1
}

/// Draws uniform indices and computes `phi'_l(phi_k(m))`.
pub fn encode_original<R: Rng + ?Sized>(
    m: &BigUint,
    params: &OriginalParams,
    rng: &mut R,
) -> Result<OriginalCodeword> {
    if m.is_zero() || *m > params.m_max {
        return Err(Error::OutOfDomain(format!(
            "message must lie in [1, {}]",
            params.m_max
        )));
    }
    let k_index = rng.gen_range(1..=params.key_count);
    let l_index = rng.gen_range(1..=params.key_count2);
    Ok(OriginalCodeword {
        k_index,
        l_index,
        tag: tag_original(m, params, k_index, l_index),
    })
}

/// Recomputes the tag for the candidate under the transmitted indices.
pub fn verify_original(
    codeword: &OriginalCodeword,
    candidate: &BigUint,
    params: &OriginalParams,
) -> Result<bool> {
    if codeword.k_index == 0
        || codeword.k_index > params.key_count
        || codeword.l_index == 0
        || codeword.l_index > params.key_count2
    {
        return Err(Error::MalformedCodeword("key index out of range".into()));
    }
    if candidate.is_zero() || *candidate > params.m_max {
        return Err(Error::OutOfDomain("candidate outside message set".into()));
    }
    Ok(tag_original(candidate, params, codeword.k_index, codeword.l_index) == codeword.tag)
}

/// `1/(log M)^(alpha-1) + 1/(log p_K)^(alpha-1)`.
pub fn type2_bound_original(params: &OriginalParams) -> f64 {
    let a = params.alpha.as_f64();
    let log_m = precise::log2_f64(&params.m_max);
    let log_pk = (params.p_k as f64).log2();
    1.0 / log_m.powf(a - 1.0) + 1.0 / log_pk.powf(a - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params_100() -> OriginalParams {
        OriginalParams::new(BigUint::from(100u32), "1.5".parse().unwrap()).unwrap()
    }

    #[test]
    fn construction_example() {
        // M=100, a=1.5: K = ceil(6.644^1.5) = 18, p_18 = 61,
        // K' = ceil((log2 61)^1.5) = 15, p_15 = 47
        let p = params_100();
        assert_eq!(p.key_count(), 18);
        assert_eq!(p.p_k(), 61);
        assert_eq!(p.key_count2(), 15);
        assert_eq!(p.p_k2, 47);
        // n = ceil(log 18) + ceil(log 15) + ceil(log 47) = 5 + 4 + 6
        assert_eq!(p.block_length_bits(), 15);
    }

    #[test]
    fn tag_example() {
        // k=12 (pi_12 = 37), l=7 (pi_7 = 17): phi(71) = 35, tag = (35 mod 17)+1 = 2
        let p = params_100();
        assert_eq!(p.modulus(12), 37);
        assert_eq!(p.modulus(7), 17);
        assert_eq!(tag_original(&BigUint::from(71u32), &p, 12, 7), 2);
    }

    #[test]
    fn encode_verify_round() {
        let p = params_100();
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        for m in 1u32..=100 {
            let m = BigUint::from(m);
            let c = encode_original(&m, &p, &mut rng).unwrap();
            assert!(verify_original(&c, &m, &p).unwrap());
            assert!(c.k_index >= 1 && c.k_index <= 18);
            assert!(c.l_index >= 1 && c.l_index <= 15);
        }
    }

    #[test]
    fn bound_example() {
        // 1/6.644^0.5 + 1/(log2 61)^0.5, evaluated independently
        let b = type2_bound_original(&params_100());
        assert!((b - 0.798587877622878).abs() < 1e-12, "b = {b}");
    }

    #[test]
    fn bound_shrinks_with_alpha() {
        let loose = type2_bound_original(&params_100());
        let tight = type2_bound_original(
            &OriginalParams::new(BigUint::from(100u32), "3".parse().unwrap()).unwrap(),
        );
        assert!(tight < loose);
    }

    #[test]
    fn domain_checks() {
        let p = params_100();
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        assert!(encode_original(&BigUint::from(101u32), &p, &mut rng).is_err());
        assert!(encode_original(&BigUint::zero(), &p, &mut rng).is_err());
        let c = OriginalCodeword {
            k_index: 99,
            l_index: 1,
            tag: 1,
        };
        assert!(verify_original(&c, &BigUint::from(5u32), &p).is_err());
    }
}
