//! The modified 3-step identification scheme: probable-prime keys are
//! transmitted directly (not as indices), the tag is the double residue
//! `phi_l(phi_k(m))`, and type-I error is zero by construction.

mod original;
mod wire;

pub use original::{
    encode_original, type2_bound_original, verify_original, OriginalCodeword, OriginalParams,
};
pub use wire::hex_to_bytes;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numtheory;
use crate::precise::{self, Alpha};
use crate::primegen::{gmr, GmrOutcome, GmrParams};

/// Retries on a `Bottom` key draw before giving up; each retry fails with
/// probability at most `2^-l_exp`.
pub const GMR_RETRY_CAP: u32 = 8;

/// Derived key-space bounds: keys `k <= K` and `l <= K'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sizes {
    pub k_bound: BigUint,
    pub l_bound: BigUint,
}

/// Bit widths of the three codeword fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub k_width: usize,
    pub l_width: usize,
    pub tag_width: usize,
}

impl Layout {
    pub fn total_bits(&self) -> usize {
        self.k_width + self.l_width + self.tag_width
    }

    pub fn total_bytes(&self) -> usize {
        self.total_bits().div_ceil(8)
    }
}

/// Scheme parameters: message bit length `logM`, exponent `alpha > 1`, and
/// the key-generation error budgets `epsilon = 2^-l_exp`, `delta = 2^-q_exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeParams {
    log_m: u32,
    alpha: Alpha,
    l_exp: u32,
    q_exp: u32,
    sizes: Sizes,
}

impl SchemeParams {
    /// Validates the construction: `K = ceil((log M)^alpha)` and
    /// `K' = ceil((log K)^alpha)` must both be at least 2.
    pub fn new(log_m: u32, alpha: Alpha, l_exp: u32, q_exp: u32) -> Result<Self> {
        if log_m < 2 {
            return Err(Error::InvalidParameter("logM must be at least 2".into()));
        }
        if l_exp == 0 {
            return Err(Error::InvalidParameter("l_exp must be at least 1".into()));
        }
        let k_bound = precise::ceil_pow(&BigUint::from(log_m), alpha)?;
        let l_bound = precise::ceil_pow_log2(&k_bound, alpha)?;
        let two = BigUint::from(2u32);
        if k_bound < two || l_bound < two {
            return Err(Error::Construction(format!(
                "degenerate key spaces K={k_bound}, K'={l_bound}"
            )));
        }
        Ok(SchemeParams {
            log_m,
            alpha,
            l_exp,
            q_exp,
            sizes: Sizes { k_bound, l_bound },
        })
    }

    pub fn log_m(&self) -> u32 {
        self.log_m
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn l_exp(&self) -> u32 {
        self.l_exp
    }

    pub fn q_exp(&self) -> u32 {
        self.q_exp
    }

    pub fn epsilon(&self) -> f64 {
        2f64.powi(-(self.l_exp as i32))
    }

    /// `M = 2^logM`, the top of the message range.
    pub fn message_bound(&self) -> BigUint {
        BigUint::one() << self.log_m
    }

    /// The derived `(K, K')` pair.
    pub fn sizes(&self) -> &Sizes {
        &self.sizes
    }

    /// Field widths. Key fields take `ceil(log2 K)` / `ceil(log2 K')` bits
    /// and the tag field `ceil(log2 K')` bits (worst case over `l`, so the
    /// frame is key-independent). A key field is never narrower than 2 bits:
    /// key values are at least 2, and in the degenerate `K' = 2` case the
    /// nominal 1-bit field could not carry its only possible key.
    pub fn layout(&self) -> Layout {
        let k_width = precise::ceil_log2(&self.sizes.k_bound).max(2) as usize;
        let nominal = precise::ceil_log2(&self.sizes.l_bound) as usize;
        Layout {
            k_width,
            l_width: nominal.max(2),
            tag_width: nominal.max(1),
        }
    }
}

/// A message in `[1, M]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message(BigUint);

impl Message {
    pub fn new(value: BigUint, params: &SchemeParams) -> Result<Self> {
        if value.is_zero() || value > params.message_bound() {
            return Err(Error::OutOfDomain(format!(
                "message must lie in [1, 2^{}]",
                params.log_m
            )));
        }
        Ok(Message(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

/// How a key was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeySource {
    /// Exact-uniform draw backed by the deterministic test.
    Deterministic,
    /// Probable prime from the bounded Miller-Rabin generator.
    Probable,
}

/// The key pair of one identification round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub k: BigUint,
    pub l: BigUint,
    pub k_source: KeySource,
    pub l_source: KeySource,
}

impl KeyPair {
    /// Test/injection constructor; keys must be at least 2.
    pub fn forced(k: BigUint, l: BigUint) -> Result<Self> {
        let two = BigUint::from(2u32);
        if k < two || l < two {
            return Err(Error::InvalidParameter("keys must be at least 2".into()));
        }
        Ok(KeyPair {
            k,
            l,
            k_source: KeySource::Deterministic,
            l_source: KeySource::Deterministic,
        })
    }
}

/// One transmitted codeword: both keys plus the tag `phi_l(phi_k(m))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    key_k: BigUint,
    key_l: BigUint,
    tag: BigUint,
}

impl Codeword {
    pub fn new(key_k: BigUint, key_l: BigUint, tag: BigUint) -> Result<Self> {
        let two = BigUint::from(2u32);
        if key_k < two || key_l < two {
            return Err(Error::MalformedCodeword("decoded key below 2".into()));
        }
        if tag.is_zero() || tag > key_l {
            return Err(Error::MalformedCodeword(format!(
                "tag {tag} outside [1, {key_l}]"
            )));
        }
        Ok(Codeword { key_k, key_l, tag })
    }

    pub fn key_k(&self) -> &BigUint {
        &self.key_k
    }

    pub fn key_l(&self) -> &BigUint {
        &self.key_l
    }

    /// Tag value in `[1, l]`.
    pub fn tag(&self) -> &BigUint {
        &self.tag
    }
}

/// `phi_l(n) = (n mod l) + 1`, the 1-based residue.
pub fn phi(n: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if modulus.is_zero() {
        return Err(Error::InvalidParameter("phi modulus is zero".into()));
    }
    Ok(n % modulus + 1u32)
}

fn draw_key<R: Rng + ?Sized>(
    bound: &BigUint,
    l_exp: u32,
    q_exp: u32,
    rng: &mut R,
) -> Result<BigUint> {
    let params = GmrParams::derive(bound.clone(), l_exp, q_exp)?;
    for _ in 0..GMR_RETRY_CAP {
        if let GmrOutcome::Prime(p) = gmr(&params, rng) {
            return Ok(p);
        }
    }
    Err(Error::KeyGeneration {
        attempts: GMR_RETRY_CAP,
        bound: bound.to_string(),
    })
}

/// Draws fresh probable-prime keys for one round.
pub fn draw_keys<R: Rng + ?Sized>(params: &SchemeParams, rng: &mut R) -> Result<KeyPair> {
    let sizes = params.sizes();
    let k = draw_key(&sizes.k_bound, params.l_exp, params.q_exp, rng)?;
    let l = draw_key(&sizes.l_bound, params.l_exp, params.q_exp, rng)?;
    Ok(KeyPair {
        k,
        l,
        k_source: KeySource::Probable,
        l_source: KeySource::Probable,
    })
}

/// Computes the tag for a message under a fixed key pair.
pub fn tag_for(m: &BigUint, keys: &KeyPair) -> Result<BigUint> {
    phi(&phi(m, &keys.k)?, &keys.l)
}

/// One full encoding round: fresh keys, then the tag.
pub fn encode<R: Rng + ?Sized>(
    m: &Message,
    params: &SchemeParams,
    rng: &mut R,
) -> Result<(Codeword, KeyPair)> {
    let keys = draw_keys(params, rng)?;
    let codeword = encode_with_keys(m, params, &keys)?;
    Ok((codeword, keys))
}

/// Encoding with an injected key pair (deterministic tests, replay).
pub fn encode_with_keys(m: &Message, _params: &SchemeParams, keys: &KeyPair) -> Result<Codeword> {
    let tag = tag_for(m.value(), keys)?;
    Codeword::new(keys.k.clone(), keys.l.clone(), tag)
}

/// The receiver's test: does the candidate produce the transmitted tag?
///
/// Received key fields are used as moduli without a primality re-check; the
/// channel is noiseless and the encoder honest.
pub fn verify(codeword: &Codeword, candidate: &Message, _params: &SchemeParams) -> Result<bool> {
    let inner = phi(candidate.value(), &codeword.key_k)?;
    let tag = phi(&inner, &codeword.key_l)?;
    Ok(tag == codeword.tag)
}

/// The analytic type-II bound of the modified scheme.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Type2Bound {
    /// `6a/(log M)^(a-1)`, collisions of the first key stage.
    pub term_first_stage: f64,
    /// `6a/(log K)^(a-1)`, collisions of the second key stage.
    pub term_second_stage: f64,
    /// `2 epsilon`, the probable-prime slack.
    pub term_epsilon: f64,
    /// Sum of the three terms; may exceed 1 at desk scale.
    pub raw: f64,
    /// Raw value clamped to `[0, 1]`.
    pub clamped: f64,
    /// The pre-approximation form `log M/(pi(K) log log M) +
    /// log K/(pi(K') log log K) + 2 epsilon`, when `K` is within the sieve
    /// budget.
    pub exact: Option<f64>,
}

/// Evaluates the three-term bound `6a/(log M)^(a-1) + 6a/(log K)^(a-1) + 2e`.
pub fn type2_bound_modified(params: &SchemeParams, epsilon: f64) -> Type2Bound {
    let a = params.alpha.as_f64();
    let log_m = params.log_m as f64;
    let sizes = params.sizes();
    let log_k = precise::log2_f64(&sizes.k_bound);
    let term_first_stage = 6.0 * a / log_m.powf(a - 1.0);
    let term_second_stage = 6.0 * a / log_k.powf(a - 1.0);
    let term_epsilon = 2.0 * epsilon;
    let raw = term_first_stage + term_second_stage + term_epsilon;

    let exact = sizes.k_bound.to_u64().and_then(|k_int| {
        if k_int > numtheory::sieve_limit() {
            return None;
        }
        let pi_k = numtheory::prime_count(k_int).ok()? as f64;
        let l_int = sizes.l_bound.to_u64()?;
        let pi_l = numtheory::prime_count(l_int).ok()? as f64;
        let first = log_m / (pi_k * log_m.log2());
        let second = log_k / (pi_l * log_k.log2());
        Some(first + second + term_epsilon)
    });

    Type2Bound {
        term_first_stage,
        term_second_stage,
        term_epsilon,
        raw,
        clamped: raw.clamp(0.0, 1.0),
        exact,
    }
}

/// Block length and rate for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundReport {
    /// Total frame width `ceil(log K) + 2 ceil(log K')`.
    pub block_length_bits: u32,
    pub type2_bound_raw: f64,
    pub type2_bound_clamped: f64,
    /// `n / (alpha log2 logM)`; tends to 1 from above as `logM` grows.
    pub rate_ratio: f64,
}

/// Frame width with the tag field at its worst case `ceil(log2 K')`, plus the
/// bound at `epsilon = 2^-l_exp` and the rate ratio.
pub fn block_length_modified(params: &SchemeParams) -> BoundReport {
    let layout = params.layout();
    let n = layout.total_bits() as u32;
    let bound = type2_bound_modified(params, params.epsilon());
    let denom = params.alpha.as_f64() * (params.log_m as f64).log2();
    BoundReport {
        block_length_bits: n,
        type2_bound_raw: bound.raw,
        type2_bound_clamped: bound.clamped,
        rate_ratio: n as f64 / denom,
    }
}

/// How to evaluate the collision probability of a key pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionMode {
    /// Enumerate all messages; requires `logM <= 13`.
    Exact,
    /// Estimate over uniformly drawn pairs `x != y`.
    Sampled { pairs: u64 },
}

/// Maximum `logM` the exact collision count will enumerate.
pub const COLLISION_EXACT_MAX_LOG_M: u32 = 13;

/// `P_coll(k, l) = |{{x,y} : phi_l(phi_k(x)) = phi_l(phi_k(y)), x != y}| / M^2`
/// over unordered pairs from `{1..M}`, `M = 2^logM`.
pub fn collision_probability<R: Rng + ?Sized>(
    key_k: &BigUint,
    key_l: &BigUint,
    log_m: u32,
    mode: CollisionMode,
    rng: &mut R,
) -> Result<f64> {
    if key_k.is_zero() || key_l.is_zero() {
        return Err(Error::InvalidParameter("collision keys must be >= 1".into()));
    }
    match mode {
        CollisionMode::Exact => {
            if log_m > COLLISION_EXACT_MAX_LOG_M {
                return Err(Error::Budget {
                    resource: "exact collision enumeration",
                    requested: format!("logM = {log_m}"),
                    limit: format!("logM = {COLLISION_EXACT_MAX_LOG_M}"),
                });
            }
            Ok(collision_exact(key_k, key_l, 1u64 << log_m))
        }
        CollisionMode::Sampled { pairs } => {
            if pairs == 0 {
                return Err(Error::InvalidParameter("pair sample count is zero".into()));
            }
            collision_sampled(key_k, key_l, log_m, pairs, rng)
        }
    }
}

fn collision_exact(key_k: &BigUint, key_l: &BigUint, m_max: u64) -> f64 {
    let mut counts: HashMap<u64, u64> = HashMap::new();
    match (key_k.to_u64(), key_l.to_u64()) {
        (Some(k), Some(l)) => {
            for m in 1..=m_max {
                let tag = (m % k + 1) % l + 1;
                *counts.entry(tag).or_insert(0) += 1;
            }
        }
        _ => {
            // keys wider than u64 cannot reduce any m <= 2^13; every message
            // is its own tag through the first stage
            for m in 1..=m_max {
                let tag = (phi(&phi(&BigUint::from(m), key_k).unwrap(), key_l).unwrap())
                    .to_u64()
                    .unwrap_or(u64::MAX);
                *counts.entry(tag).or_insert(0) += 1;
            }
        }
    }
    let colliding: u128 = counts
        .values()
        .map(|&c| (c as u128) * (c as u128 - 1) / 2)
        .sum();
    colliding as f64 / (m_max as f64 * m_max as f64)
}

fn collision_sampled<R: Rng + ?Sized>(
    key_k: &BigUint,
    key_l: &BigUint,
    log_m: u32,
    pairs: u64,
    rng: &mut R,
) -> Result<f64> {
    use num_bigint::RandBigInt;
    let one = BigUint::one();
    let upper = (BigUint::one() << log_m) + 1u32;
    let mut hits = 0u64;
    for _ in 0..pairs {
        let x = rng.gen_biguint_range(&one, &upper);
        let y = loop {
            let y = rng.gen_biguint_range(&one, &upper);
            if y != x {
                break y;
            }
        };
        let tx = phi(&phi(&x, key_k)?, key_l)?;
        let ty = phi(&phi(&y, key_k)?, key_l)?;
        if tx == ty {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs as f64)
}
