//! Linear codes over prime fields and the code <-> hash-family transform:
//! an `[n, k, d]_q` code yields a `(1 - d/n)`-almost universal family of
//! coordinate functionals, and conversely a linear family of that shape
//! recovers a code with distance at least `n (1 - epsilon)`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use std::sync::Arc;

use super::HashFamily;
use crate::error::{Error, Result};
use crate::numtheory::is_prime_det_u64;

/// Largest codebook (`q^k`) the exhaustive verifications will enumerate.
const CODEBOOK_BUDGET: u64 = 1 << 16;

/// An `[n, k, d]_q` linear code given by a generator matrix, verified
/// exhaustively on construction: full rank and minimum span weight exactly
/// `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCodeSpec {
    n: usize,
    k: usize,
    d: usize,
    q: u64,
    generator: Vec<Vec<u64>>,
}

impl LinearCodeSpec {
    pub fn new(n: usize, k: usize, d: usize, q: u64, generator: Vec<Vec<u64>>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidCodeSpec("zero length or dimension".into()));
        }
        if d > n {
            return Err(Error::InvalidCodeSpec(format!("d = {d} exceeds n = {n}")));
        }
        if !is_prime_det_u64(q) {
            return Err(Error::InvalidCodeSpec(format!("field size {q} is not prime")));
        }
        if generator.len() != k || generator.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidCodeSpec("generator is not k x n".into()));
        }
        if generator.iter().flatten().any(|&v| v >= q) {
            return Err(Error::InvalidCodeSpec("entry outside the field".into()));
        }
        let codebook = codebook_size(q, k)?;
        let spec = LinearCodeSpec {
            n,
            k,
            d,
            q,
            generator,
        };
        if spec.rank() != k {
            return Err(Error::InvalidCodeSpec("generator rank below k".into()));
        }
        let min_weight = spec.min_span_weight(codebook);
        if min_weight != d {
            return Err(Error::InvalidCodeSpec(format!(
                "declared distance {d} but the span has minimum weight {min_weight}"
            )));
        }
        Ok(spec)
    }

    pub fn length(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn field_size(&self) -> u64 {
        self.q
    }

    pub fn generator(&self) -> &[Vec<u64>] {
        &self.generator
    }

    /// Codeword of a message vector (`k` digits in `[0, q)`).
    pub fn encode_vector(&self, message: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.n];
        for (digit, row) in message.iter().zip(&self.generator) {
            if *digit == 0 {
                continue;
            }
            for (acc, &g) in out.iter_mut().zip(row) {
                *acc = (*acc + digit * g) % self.q;
            }
        }
        out
    }

    fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = self.generator.clone();
        let q = self.q;
        let mut rank = 0;
        for col in 0..self.n {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let inv = mod_inverse(rows[rank][col], q);
            for v in rows[rank].iter_mut() {
                *v = *v * inv % q;
            }
            for r in 0..rows.len() {
                if r != rank && rows[r][col] != 0 {
                    let factor = rows[r][col];
                    for c in 0..self.n {
                        let sub = factor * rows[rank][c] % q;
                        rows[r][c] = (rows[r][c] + q * q - sub) % q;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }

    fn min_span_weight(&self, codebook: u64) -> usize {
        let mut min_weight = self.n;
        let mut message = vec![0u64; self.k];
        for x in 1..codebook {
            digits(x, self.q, &mut message);
            let weight = self
                .encode_vector(&message)
                .iter()
                .filter(|&&v| v != 0)
                .count();
            min_weight = min_weight.min(weight);
        }
        min_weight
    }

    /// Parses the plain-text matrix format: a header line `n k d q`, then
    /// `k` rows of `n` digits (whitespace-separated, or one contiguous token
    /// when `q <= 10`). Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty code spec".into()))?;
        let head: Vec<u64> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        let [n, k, d, q] = head[..] else {
            return Err(Error::Parse("header must be `n k d q`".into()));
        };
        let (n, k, d) = (n as usize, k as usize, d as usize);
        let mut generator = Vec::with_capacity(k);
        for _ in 0..k {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse("missing generator row".into()))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let row: Vec<u64> = if tokens.len() == n {
                tokens
                    .iter()
                    .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad entry {t:?}"))))
                    .collect::<Result<_>>()?
            } else if tokens.len() == 1 && tokens[0].len() == n {
                tokens[0]
                    .chars()
                    .map(|c| {
                        c.to_digit(10)
                            .map(u64::from)
                            .ok_or_else(|| Error::Parse(format!("bad digit {c:?}")))
                    })
                    .collect::<Result<_>>()?
            } else {
                return Err(Error::Parse(format!(
                    "row has {} entries, expected {n}",
                    tokens.len()
                )));
            };
            generator.push(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing content after generator rows".into()));
        }
        LinearCodeSpec::new(n, k, d, q, generator)
    }
}

fn codebook_size(q: u64, k: usize) -> Result<u64> {
    let mut size = 1u64;
    for _ in 0..k {
        size = size.checked_mul(q).unwrap_or(u64::MAX);
        if size > CODEBOOK_BUDGET {
            return Err(Error::Budget {
                resource: "codebook enumeration",
                requested: format!("{q}^{k}"),
                limit: CODEBOOK_BUDGET.to_string(),
            });
        }
    }
    Ok(size)
}

fn digits(mut x: u64, q: u64, out: &mut [u64]) {
    for slot in out.iter_mut() {
        *slot = x % q;
        x /= q;
    }
}

fn mod_inverse(a: u64, q: u64) -> u64 {
    // q prime: a^(q-2) mod q
    let mut base = a % q;
    let mut exp = q - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        exp >>= 1;
    }
    acc
}

/// The coordinate-functional family of a code: `h_a(x)` is coordinate `a` of
/// the codeword of `x`, shifted to `{1..q}`. It is `(1 - d/n)`-almost
/// universal, exactly because distinct messages agree on at most `n - d`
/// coordinates.
pub fn code_to_hash(spec: &LinearCodeSpec) -> HashFamily {
    let q = spec.field_size();
    let k = spec.dimension();
    let domain = BigUint::from(q).pow(k as u32);
    let spec = Arc::new(spec.clone());
    let eval_spec = Arc::clone(&spec);
    HashFamily {
        label: format!(
            "code[{},{},{}]_{}",
            spec.length(),
            spec.dimension(),
            spec.distance(),
            q
        ),
        index_count: spec.length() as u64,
        domain_size: domain,
        range_size: BigUint::from(q),
        epsilon_raw: 1.0 - spec.distance() as f64 / spec.length() as f64,
        eval: Arc::new(move |index, input| {
            // natural x in [1, q^k] <-> message digits of x - 1
            let x = (input - 1u32).to_u64().expect("domain within codebook budget");
            let mut message = vec![0u64; eval_spec.dimension()];
            digits(x, eval_spec.field_size(), &mut message);
            BigUint::from(eval_spec.encode_vector(&message)[index as usize] + 1)
        }),
    }
}

/// Rebuilds a code from a linear family `{h_a : F_q^k -> F_q}` with `n`
/// indices: the codeword of `x` is `(h_a(x))_a`. Verifies exhaustively that
/// the pairwise minimum distance is at least `n (1 - epsilon)` and that the
/// family is linear, then returns the reconstructed `[n, k, D]_q` spec with
/// the measured distance.
pub fn hash_to_code(family: &HashFamily) -> Result<LinearCodeSpec> {
    let q = family
        .range_size()
        .to_u64()
        .filter(|&q| is_prime_det_u64(q))
        .ok_or_else(|| Error::IncompatibleFamily("range size is not a prime field".into()))?;
    // domain must be q^k
    let mut k = 0usize;
    let mut power = BigUint::one();
    while power < *family.domain_size() {
        power *= q;
        k += 1;
    }
    if power != *family.domain_size() || k == 0 {
        return Err(Error::IncompatibleFamily(format!(
            "domain size {} is not a power of the field size {q}",
            family.domain_size()
        )));
    }
    let n = family.index_count() as usize;
    let codebook = codebook_size(q, k)?;

    let mut rows: Vec<Vec<u64>> = Vec::with_capacity(codebook as usize);
    for x in 0..codebook {
        let input = BigUint::from(x + 1);
        let mut row = Vec::with_capacity(n);
        for a in 0..n as u64 {
            let value = (family.eval)(a, &input);
            let v = value
                .to_u64()
                .filter(|&v| v >= 1 && v <= q)
                .ok_or_else(|| {
                    Error::IncompatibleFamily(format!("value {value} outside {{1..{q}}}"))
                })?;
            row.push(v - 1);
        }
        rows.push(row);
    }

    // exhaustive pairwise minimum distance
    let mut min_distance = n;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let distance = rows[i]
                .iter()
                .zip(&rows[j])
                .filter(|(a, b)| a != b)
                .count();
            min_distance = min_distance.min(distance);
        }
    }
    let required = n as f64 * (1.0 - family.epsilon());
    if (min_distance as f64) < required - 1e-9 {
        return Err(Error::IncompatibleFamily(format!(
            "measured distance {min_distance} below n(1 - eps) = {required}"
        )));
    }

    // linearity: rows of basis messages must span the whole codebook
    let mut generator = Vec::with_capacity(k);
    let mut basis_index = 1u64;
    for _ in 0..k {
        generator.push(rows[basis_index as usize].clone());
        basis_index *= q;
    }
    let mut message = vec![0u64; k];
    for (x, row) in rows.iter().enumerate() {
        digits(x as u64, q, &mut message);
        let mut expected = vec![0u64; n];
        for (digit, g_row) in message.iter().zip(&generator) {
            for (acc, &g) in expected.iter_mut().zip(g_row) {
                *acc = (*acc + digit * g) % q;
            }
        }
        if expected != *row {
            return Err(Error::IncompatibleFamily(
                "family is not linear over the field".into(),
            ));
        }
    }

    LinearCodeSpec::new(n, k, min_distance, q, generator)
}

#[cfg(test)]
mod tests {
    use super::super::certify_exhaustive;
    use super::*;

    pub(crate) fn hamming_7_4() -> LinearCodeSpec {
        LinearCodeSpec::new(
            7,
            4,
            3,
            2,
            vec![
                vec![1, 0, 0, 0, 1, 1, 0],
                vec![0, 1, 0, 0, 1, 0, 1],
                vec![0, 0, 1, 0, 0, 1, 1],
                vec![0, 0, 0, 1, 1, 1, 1],
            ],
        )
        .unwrap()
    }

    #[test]
    fn hamming_is_valid_and_wrong_distance_rejected() {
        let spec = hamming_7_4();
        assert_eq!(spec.distance(), 3);
        let err = LinearCodeSpec::new(7, 4, 4, 2, spec.generator().to_vec());
        assert!(matches!(err, Err(Error::InvalidCodeSpec(_))));
    }

    #[test]
    fn rank_deficiency_rejected() {
        let dup = vec![vec![1, 0, 1], vec![1, 0, 1]];
        assert!(matches!(
            LinearCodeSpec::new(3, 2, 1, 2, dup),
            Err(Error::InvalidCodeSpec(_))
        ));
    }

    #[test]
    fn non_prime_field_rejected() {
        assert!(matches!(
            LinearCodeSpec::new(3, 1, 3, 4, vec![vec![1, 1, 1]]),
            Err(Error::InvalidCodeSpec(_))
        ));
    }

    #[test]
    fn hamming_family_epsilon() {
        let family = code_to_hash(&hamming_7_4());
        assert!((family.epsilon() - 4.0 / 7.0).abs() < 1e-15);
        let cert = certify_exhaustive(&family).unwrap();
        // two distinct messages collide on at most n - d = 4 coordinates,
        // and some pair attains it
        assert!((cert.max_ratio - 4.0 / 7.0).abs() < 1e-15);
        assert!(cert.holds);
    }

    #[test]
    fn repetition_code_family_never_collides() {
        let rep = LinearCodeSpec::new(3, 1, 3, 2, vec![vec![1, 1, 1]]).unwrap();
        let family = code_to_hash(&rep);
        assert_eq!(family.epsilon(), 0.0);
        let cert = certify_exhaustive(&family).unwrap();
        assert_eq!(cert.max_ratio, 0.0);
    }

    #[test]
    fn identity_code_family() {
        let id = LinearCodeSpec::new(
            4,
            4,
            1,
            2,
            vec![
                vec![1, 0, 0, 0],
                vec![0, 1, 0, 0],
                vec![0, 0, 1, 0],
                vec![0, 0, 0, 1],
            ],
        )
        .unwrap();
        let family = code_to_hash(&id);
        assert!((family.epsilon() - 0.75).abs() < 1e-15);
        let cert = certify_exhaustive(&family).unwrap();
        assert!((cert.max_ratio - 0.75).abs() < 1e-15);
    }

    #[test]
    fn round_trip_preserves_code() {
        let spec = hamming_7_4();
        let back = hash_to_code(&code_to_hash(&spec)).unwrap();
        assert_eq!(back.length(), 7);
        assert_eq!(back.dimension(), 4);
        assert_eq!(back.distance(), 3);
        assert!(back.distance() as f64 >= 7.0 * (1.0 - 4.0 / 7.0) - 1e-9);
    }

    #[test]
    fn epsilon_zero_family_gives_full_distance() {
        let rep = LinearCodeSpec::new(3, 1, 3, 2, vec![vec![1, 1, 1]]).unwrap();
        let back = hash_to_code(&code_to_hash(&rep)).unwrap();
        assert_eq!(back.distance(), 3);
    }

    #[test]
    fn violated_epsilon_fails_verification() {
        // claim the Hamming family is 0.1-universal; the measured distance
        // 3 < 7 * 0.9 exposes it
        let mut family = code_to_hash(&hamming_7_4());
        family.epsilon_raw = 0.1;
        assert!(matches!(
            hash_to_code(&family),
            Err(Error::IncompatibleFamily(_))
        ));
    }

    #[test]
    fn nonlinear_family_rejected() {
        let mut family = code_to_hash(&hamming_7_4());
        let inner = Arc::clone(&family.eval);
        family.eval = Arc::new(move |a, x| {
            // break linearity on one input without changing distances much
            if a == 0 && *x == BigUint::from(7u32) {
                let v = inner(a, x);
                BigUint::from(if v == BigUint::one() { 2u32 } else { 1u32 })
            } else {
                inner(a, x)
            }
        });
        assert!(matches!(
            hash_to_code(&family),
            Err(Error::IncompatibleFamily(_))
        ));
    }

    #[test]
    fn parse_matrix_format() {
        let text = "# Hamming [7,4,3] over F_2\n7 4 3 2\n1000110\n0100101\n0010011\n0001111\n";
        let spec = LinearCodeSpec::parse(text).unwrap();
        assert_eq!(spec.length(), 7);
        assert_eq!(spec.distance(), 3);

        let spaced = "3 1 3 2\n1 1 1\n";
        assert_eq!(LinearCodeSpec::parse(spaced).unwrap().distance(), 3);

        assert!(LinearCodeSpec::parse("").is_err());
        assert!(LinearCodeSpec::parse("7 4 3\n").is_err());
        assert!(LinearCodeSpec::parse("3 1 3 2\n1 1\n").is_err());
    }
}
