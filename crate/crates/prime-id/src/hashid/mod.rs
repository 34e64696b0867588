//! Almost-universal hash families: the mod-prime construction, composition,
//! the generic hash-based identification round, and universality
//! certificates. Families are immutable after construction and their
//! evaluators pure, so shared use across threads is safe.

mod code;

pub use code::{code_to_hash, hash_to_code, LinearCodeSpec};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numtheory;
use crate::precise::{self, Alpha};

/// Evaluation budget for exhaustive universality certificates.
const CERTIFY_EVAL_BUDGET: u64 = 500_000_000;

type Evaluator = Arc<dyn Fn(u64, &BigUint) -> BigUint + Send + Sync>;

/// An indexed family `h_a : {1..domain} -> {1..range}`, `a in [0, I)`, with a
/// certified pairwise collision bound: for distinct x, y at most
/// `epsilon * I` indices collide.
#[derive(Clone)]
pub struct HashFamily {
    label: String,
    index_count: u64,
    domain_size: BigUint,
    range_size: BigUint,
    epsilon_raw: f64,
    eval: Evaluator,
}

impl fmt::Debug for HashFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HashFamily")
            .field("label", &self.label)
            .field("index_count", &self.index_count)
            .field("domain_size", &self.domain_size)
            .field("range_size", &self.range_size)
            .field("epsilon_raw", &self.epsilon_raw)
            .finish()
    }
}

impl HashFamily {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn index_count(&self) -> u64 {
        self.index_count
    }

    pub fn domain_size(&self) -> &BigUint {
        &self.domain_size
    }

    pub fn range_size(&self) -> &BigUint {
        &self.range_size
    }

    /// Certified collision bound, clamped to a probability.
    pub fn epsilon(&self) -> f64 {
        self.epsilon_raw.min(1.0)
    }

    /// The analytic form before clamping; kept for reports.
    pub fn epsilon_raw(&self) -> f64 {
        self.epsilon_raw
    }

    /// `h_a(x)`; the index and input must be in range.
    pub fn evaluate(&self, index: u64, input: &BigUint) -> Result<BigUint> {
        if index >= self.index_count {
            return Err(Error::OutOfDomain(format!(
                "index {index} not below {}",
                self.index_count
            )));
        }
        if input.is_zero() || *input > self.domain_size {
            return Err(Error::OutOfDomain(format!(
                "input outside [1, {}]",
                self.domain_size
            )));
        }
        Ok((self.eval)(index, input))
    }

    /// Identification block length `log2 I + log2 |Y|` in (real) bits.
    pub fn block_length_bits(&self) -> f64 {
        (self.index_count as f64).log2() + precise::log2_f64(&self.range_size)
    }
}

/// The mod-prime family over `{1..2^n}`: one hash per prime `p <= n^alpha`,
/// `h_p(x) = (x mod p) + 1`. It is `alpha / n^(alpha-1)`-almost universal.
pub fn mod_family(n_param: u32, alpha: Alpha) -> Result<HashFamily> {
    if n_param < 2 {
        return Err(Error::InvalidParameter("mod family requires n >= 2".into()));
    }
    let n_big = BigUint::from(n_param);
    let prime_bound = precise::floor_pow(&n_big, alpha)?;
    let bound = prime_bound.to_u64().ok_or_else(|| Error::Budget {
        resource: "sieve",
        requested: prime_bound.to_string(),
        limit: numtheory::sieve_limit().to_string(),
    })?;
    let primes: Arc<Vec<u64>> = Arc::new(numtheory::sieve_upto(bound)?);
    if primes.is_empty() {
        return Err(Error::Construction("empty prime index set".into()));
    }
    let index_count = primes.len() as u64;
    let a = alpha.as_f64();
    let eval_primes = Arc::clone(&primes);
    Ok(HashFamily {
        label: format!("mod({n_param},{alpha})"),
        index_count,
        domain_size: BigUint::one() << n_param,
        range_size: precise::ceil_pow(&n_big, alpha)?,
        epsilon_raw: a / (n_param as f64).powf(a - 1.0),
        eval: Arc::new(move |index, input| input % eval_primes[index as usize] + 1u32),
    })
}

/// The one-element identity family on `{1..domain_size}`; 0-almost universal.
pub fn identity_family(domain_size: BigUint) -> HashFamily {
    HashFamily {
        label: "identity".into(),
        index_count: 1,
        range_size: domain_size.clone(),
        domain_size,
        epsilon_raw: 0.0,
        eval: Arc::new(|_, input| input.clone()),
    }
}

/// Composition `outer . inner` (inner applied first). The index set is the
/// product, `a = a_inner * I_outer + a_outer`, and the certified bound is the
/// additive `epsilon_inner + epsilon_outer`.
pub fn compose(outer: &HashFamily, inner: &HashFamily) -> Result<HashFamily> {
    if inner.range_size > outer.domain_size {
        return Err(Error::DomainMismatch(format!(
            "inner range {} exceeds outer domain {}",
            inner.range_size, outer.domain_size
        )));
    }
    let index_count = inner
        .index_count
        .checked_mul(outer.index_count)
        .ok_or_else(|| Error::Construction("composed index set overflows u64".into()))?;
    let outer_count = outer.index_count;
    let inner_eval = Arc::clone(&inner.eval);
    let outer_eval = Arc::clone(&outer.eval);
    Ok(HashFamily {
        label: format!("{} . {}", outer.label, inner.label),
        index_count,
        domain_size: inner.domain_size.clone(),
        range_size: outer.range_size.clone(),
        epsilon_raw: inner.epsilon_raw + outer.epsilon_raw,
        eval: Arc::new(move |index, input| {
            let inner_index = index / outer_count;
            let outer_index = index % outer_count;
            outer_eval(outer_index, &inner_eval(inner_index, input))
        }),
    })
}

/// Exactly uniform index draw by rejection from a power-of-two random word.
pub fn uniform_index<R: RngCore + ?Sized>(bound: u64, rng: &mut R) -> u64 {
    assert!(bound >= 1);
    let mask = if bound.is_power_of_two() {
        bound - 1
    } else {
        bound.next_power_of_two() - 1
    };
    loop {
        let v = rng.next_u64() & mask;
        if v < bound {
            return v;
        }
    }
}

/// One round of the hash identification scheme: a uniform index plus the tag.
pub fn id_encode_hash<R: Rng + ?Sized>(
    m: &BigUint,
    family: &HashFamily,
    rng: &mut R,
) -> Result<(u64, BigUint)> {
    if m.is_zero() || *m > family.domain_size {
        return Err(Error::OutOfDomain(format!(
            "message outside [1, {}]",
            family.domain_size
        )));
    }
    let index = uniform_index(family.index_count, rng);
    let tag = family.evaluate(index, m)?;
    Ok((index, tag))
}

/// The receiver's test: `h_a(candidate) == tag`.
pub fn id_verify_hash(
    code: &(u64, BigUint),
    candidate: &BigUint,
    family: &HashFamily,
) -> Result<bool> {
    Ok(family.evaluate(code.0, candidate)? == code.1)
}

/// Result of a universality check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Certificate {
    /// The family's certified bound (clamped).
    pub epsilon: f64,
    /// Worst observed pair-collision ratio (exhaustive) or overall collision
    /// rate (sampled).
    pub max_ratio: f64,
    pub pairs_checked: u64,
    pub exhaustive: bool,
    /// Whether the observation stayed within the certified bound.
    pub holds: bool,
}

/// Checks every distinct pair in the domain against every index.
pub fn certify_exhaustive(family: &HashFamily) -> Result<Certificate> {
    let domain = family.domain_size.to_u64().ok_or_else(|| Error::Budget {
        resource: "exhaustive certificate",
        requested: family.domain_size.to_string(),
        limit: CERTIFY_EVAL_BUDGET.to_string(),
    })?;
    let pairs = domain * (domain - 1) / 2;
    let evals = pairs.checked_mul(family.index_count);
    if evals.map_or(true, |e| e > CERTIFY_EVAL_BUDGET) {
        return Err(Error::Budget {
            resource: "exhaustive certificate",
            requested: format!("{domain} domain x {} indices", family.index_count),
            limit: CERTIFY_EVAL_BUDGET.to_string(),
        });
    }
    // value table: one row per domain element
    let rows: Vec<Vec<BigUint>> = (1..=domain)
        .map(|x| {
            let x = BigUint::from(x);
            (0..family.index_count)
                .map(|a| (family.eval)(a, &x))
                .collect()
        })
        .collect();
    let mut max_collisions = 0u64;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let collisions = rows[i]
                .iter()
                .zip(&rows[j])
                .filter(|(a, b)| a == b)
                .count() as u64;
            max_collisions = max_collisions.max(collisions);
        }
    }
    let max_ratio = max_collisions as f64 / family.index_count as f64;
    Ok(Certificate {
        epsilon: family.epsilon(),
        max_ratio,
        pairs_checked: pairs,
        exhaustive: true,
        holds: max_ratio <= family.epsilon() + 1e-12,
    })
}

/// Estimates the collision rate over random distinct pairs and a fresh
/// uniform index per pair.
pub fn certify_sampled<R: Rng + ?Sized>(
    family: &HashFamily,
    pairs: u64,
    rng: &mut R,
) -> Result<Certificate> {
    use num_bigint::RandBigInt;
    if pairs == 0 {
        return Err(Error::InvalidParameter("pair sample count is zero".into()));
    }
    if family.domain_size < BigUint::from(2u32) {
        return Err(Error::InvalidParameter("domain too small to sample pairs".into()));
    }
    let one = BigUint::one();
    let upper = &family.domain_size + 1u32;
    let mut collisions = 0u64;
    for _ in 0..pairs {
        let x = rng.gen_biguint_range(&one, &upper);
        let y = loop {
            let y = rng.gen_biguint_range(&one, &upper);
            if y != x {
                break y;
            }
        };
        let a = uniform_index(family.index_count, rng);
        if (family.eval)(a, &x) == (family.eval)(a, &y) {
            collisions += 1;
        }
    }
    let rate = collisions as f64 / pairs as f64;
    Ok(Certificate {
        epsilon: family.epsilon(),
        max_ratio: rate,
        pairs_checked: pairs,
        exhaustive: false,
        holds: rate <= family.epsilon() + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn alpha(s: &str) -> Alpha {
        s.parse().unwrap()
    }

    #[test]
    fn mod_family_shape() {
        let h = mod_family(4, alpha("2")).unwrap();
        // primes <= 16
        assert_eq!(h.index_count(), 6);
        assert_eq!(h.domain_size(), &big(16));
        assert_eq!(h.range_size(), &big(16));
        assert!((h.epsilon() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mod_family_evaluation() {
        // primes <= 10^2: h_7 has index 3 (2, 3, 5, 7, ...)
        let h = mod_family(10, alpha("2")).unwrap();
        assert_eq!(h.index_count(), 25);
        assert_eq!(h.evaluate(3, &big(100)).unwrap(), big(3));
        assert!(h.evaluate(25, &big(1)).is_err());
        assert!(h.evaluate(0, &BigUint::zero()).is_err());
        assert!(h.evaluate(0, &big(1025)).is_err());
    }

    #[test]
    fn mod_family_exhaustive_certificates() {
        // worst pair over {1..16} shares 2 of 6 primes
        let c = certify_exhaustive(&mod_family(4, alpha("2")).unwrap()).unwrap();
        assert!((c.max_ratio - 2.0 / 6.0).abs() < 1e-15);
        assert!(c.holds);

        // worst difference below 1024 has 4 prime factors <= 100 (e.g. 210)
        let c = certify_exhaustive(&mod_family(10, alpha("2")).unwrap()).unwrap();
        assert!((c.max_ratio - 4.0 / 25.0).abs() < 1e-15);
        assert!(c.max_ratio <= 0.2);
        assert!(c.holds);
    }

    #[test]
    fn compose_matches_spec_example() {
        // outer mod(4,2) has eps 0.5, inner mod(2,2) has eps 1.0; clamped sum
        let outer = mod_family(4, alpha("2")).unwrap();
        let inner = mod_family(2, alpha("2")).unwrap();
        assert!((inner.epsilon_raw() - 1.0).abs() < 1e-15);
        let c = compose(&outer, &inner).unwrap();
        assert!((c.epsilon_raw() - 1.5).abs() < 1e-15);
        assert_eq!(c.epsilon(), 1.0);
        assert_eq!(c.index_count(), 6 * 2);
        assert_eq!(c.domain_size(), &big(4));
    }

    #[test]
    fn compose_with_identity_keeps_epsilon() {
        let h = mod_family(4, alpha("2")).unwrap();
        let id = identity_family(h.domain_size().clone());
        let c = compose(&h, &id).unwrap();
        assert_eq!(c.epsilon_raw(), h.epsilon_raw());
        // same values too
        for x in 1..=16u64 {
            for a in 0..h.index_count() {
                assert_eq!(
                    c.evaluate(a, &big(x)).unwrap(),
                    h.evaluate(a, &big(x)).unwrap()
                );
            }
        }
    }

    #[test]
    fn compose_rejects_domain_mismatch() {
        // inner range 16 exceeds outer domain 4
        let outer = mod_family(2, alpha("2")).unwrap();
        let inner = mod_family(4, alpha("2")).unwrap();
        assert!(matches!(
            compose(&outer, &inner),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn composed_double_stage_epsilon() {
        // H(8) . H(16): eps = 2/8 + 2/16 = 0.375
        let outer = mod_family(8, alpha("2")).unwrap();
        let inner = mod_family(16, alpha("2")).unwrap();
        let c = compose(&outer, &inner).unwrap();
        assert!((c.epsilon() - 0.375).abs() < 1e-15);
        let mut rng = ChaCha12Rng::seed_from_u64(67);
        let cert = certify_sampled(&c, 50_000, &mut rng).unwrap();
        assert!(cert.holds, "rate {} > eps {}", cert.max_ratio, cert.epsilon);
    }

    #[test]
    fn id_round_trip_and_false_identification() {
        let h = mod_family(4, alpha("2")).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        for m in 1..=16u64 {
            let code = id_encode_hash(&big(m), &h, &mut rng).unwrap();
            assert!(id_verify_hash(&code, &big(m), &h).unwrap());
        }
        // index of prime 3 is 1; h_3(1) = 2 = h_3(13): false identification
        let code = (1u64, h.evaluate(1, &big(1)).unwrap());
        assert_eq!(code.1, big(2));
        assert!(id_verify_hash(&code, &big(13), &h).unwrap());
    }

    #[test]
    fn empirical_type2_below_epsilon() {
        let h = mod_family(10, alpha("2")).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(73);
        let trials = 20_000;
        let mut false_ids = 0;
        use num_bigint::RandBigInt;
        let upper = h.domain_size() + 1u32;
        for _ in 0..trials {
            let m = rng.gen_biguint_range(&BigUint::one(), &upper);
            let m_hat = loop {
                let c = rng.gen_biguint_range(&BigUint::one(), &upper);
                if c != m {
                    break c;
                }
            };
            let code = id_encode_hash(&m, &h, &mut rng).unwrap();
            if id_verify_hash(&code, &m_hat, &h).unwrap() {
                false_ids += 1;
            }
        }
        let rate = false_ids as f64 / trials as f64;
        assert!(rate <= h.epsilon(), "rate {rate} above eps {}", h.epsilon());
    }

    #[test]
    fn uniform_index_covers_range() {
        let mut rng = ChaCha12Rng::seed_from_u64(79);
        let mut seen = [0u32; 6];
        for _ in 0..6000 {
            seen[uniform_index(6, &mut rng) as usize] += 1;
        }
        for (i, &count) in seen.iter().enumerate() {
            assert!(count > 800, "index {i} badly undersampled: {count}");
        }
        assert_eq!(uniform_index(1, &mut rng), 0);
    }

    #[test]
    fn block_length_formula() {
        let h = mod_family(4, alpha("2")).unwrap();
        let expect = 6f64.log2() + 16f64.log2();
        assert!((h.block_length_bits() - expect).abs() < 1e-12);
    }
}
