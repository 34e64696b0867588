//! Parameter sweeps over the modified scheme: block length, the analytic
//! type-II bound, empirical type-II rates with Wilson intervals, sampled
//! collision probability, and per-round wall-clock timing, all reproducible
//! from one 64-bit seed. Rounds run in parallel; every round derives its own
//! random stream, so aggregation is order-independent.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::idscheme::{draw_keys, tag_for, KeyPair, SchemeParams};
use crate::precise::Alpha;

/// 95% normal quantile for Wilson intervals.
const WILSON_Z: f64 = 1.959963984540054;

/// Derives the random stream for round `round` of grid point `point` under
/// a master seed: ChaCha12 keyed with the three values little-endian plus a
/// fixed tail constant.
pub fn derive_stream(seed: u64, point: u64, round: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&round.to_le_bytes());
    key[24..32].copy_from_slice(&0x9E37_79B9_7F4A_7C15u64.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Wilson score interval for `successes` out of `trials` at confidence `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Empirical type-II rate with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Estimate {
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
    pub collisions: u64,
    pub rounds: u64,
}

fn distinct_pair<R: Rng + ?Sized>(upper: &BigUint, rng: &mut R) -> (BigUint, BigUint) {
    let one = BigUint::one();
    let x = rng.gen_biguint_range(&one, upper);
    let y = loop {
        let y = rng.gen_biguint_range(&one, upper);
        if y != x {
            break y;
        }
    };
    (x, y)
}

fn round_collides<R: Rng + ?Sized>(
    params: &SchemeParams,
    keys: &KeyPair,
    rng: &mut R,
) -> Result<bool> {
    let upper = params.message_bound() + 1u32;
    let (m, m_hat) = distinct_pair(&upper, rng);
    Ok(tag_for(&m, keys)? == tag_for(&m_hat, keys)?)
}

/// Estimates `P_e2` over `rounds` rounds with fresh keys per round and a
/// uniformly drawn pair `m != m_hat`, as in the error definition.
pub fn estimate_type2<R: Rng + ?Sized>(
    params: &SchemeParams,
    rounds: u64,
    rng: &mut R,
) -> Result<P2Estimate> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("round count is zero".into()));
    }
    let mut collisions = 0u64;
    for _ in 0..rounds {
        let keys = draw_keys(params, rng)?;
        if round_collides(params, &keys, rng)? {
            collisions += 1;
        }
    }
    Ok(finish_estimate(collisions, rounds))
}

/// Same estimate with one injected key pair held fixed across rounds.
pub fn estimate_type2_with_keys<R: Rng + ?Sized>(
    params: &SchemeParams,
    keys: &KeyPair,
    rounds: u64,
    rng: &mut R,
) -> Result<P2Estimate> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("round count is zero".into()));
    }
    let mut collisions = 0u64;
    for _ in 0..rounds {
        if round_collides(params, keys, rng)? {
            collisions += 1;
        }
    }
    Ok(finish_estimate(collisions, rounds))
}

fn finish_estimate(collisions: u64, rounds: u64) -> P2Estimate {
    let (lo, hi) = wilson_interval(collisions, rounds, WILSON_Z);
    P2Estimate {
        rate: collisions as f64 / rounds as f64,
        lo,
        hi,
        collisions,
        rounds,
    }
}

/// Sweep inputs: one grid of message bit lengths under a fixed exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub alpha: Alpha,
    pub rounds: u64,
    pub log_m_grid: Vec<u32>,
    pub l_exp: u32,
    pub q_exp: u32,
    pub seed: u64,
    pub pair_samples: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if self.log_m_grid.is_empty() {
            return Err(Error::InvalidParameter("empty logM grid".into()));
        }
        if self.log_m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "logM grid must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// One row of sweep output. Field names match the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "logM")]
    pub log_m: u32,
    pub alpha: f64,
    pub n_bits: u32,
    /// Analytic type-II bound, unclamped; exceeds 1 at desk scale.
    pub bound_raw: f64,
    pub emp_p2: f64,
    pub emp_p2_lo: f64,
    pub emp_p2_hi: f64,
    /// Mean sampled collision probability under the per-round keys.
    pub p_coll: f64,
    /// The fitted curve `12 (alpha log2 logM)^-alpha`.
    pub p_coll_model: f64,
    /// Mean wall-clock per round; machine-specific, exempt from determinism.
    pub time_ms: f64,
    /// The fitted curve `0.018 (alpha log2 logM)^4`.
    pub time_model: f64,
    pub seed: u64,
}

/// A grid point that failed scheme construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub log_m: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub skipped: Vec<SkippedPoint>,
}

/// Runs the full grid. Per round: fresh keys, one type-II trial, and a slice
/// of the collision pair budget under the same keys. Deterministic given the
/// seed except for `time_ms`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let coll_pairs_per_round = config.pair_samples.div_ceil(config.rounds).max(1);

    for (point, &log_m) in config.log_m_grid.iter().enumerate() {
        let params = match SchemeParams::new(log_m, config.alpha, config.l_exp, config.q_exp) {
            Ok(p) => p,
            Err(e) => {
                skipped.push(SkippedPoint {
                    log_m,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let record = sweep_point(&params, config, point as u64, coll_pairs_per_round)?;
        records.push(record);
    }
    Ok(SweepOutcome { records, skipped })
}

struct RoundOutput {
    p2_collision: bool,
    coll_hits: u64,
    elapsed_secs: f64,
}

fn sweep_point(
    params: &SchemeParams,
    config: &SweepConfig,
    point: u64,
    coll_pairs_per_round: u64,
) -> Result<SweepRecord> {
    let upper = params.message_bound() + 1u32;
    let outputs: Vec<Result<RoundOutput>> = (0..config.rounds)
        .into_par_iter()
        .map(|round| {
            let mut rng = derive_stream(config.seed, point, round);
            let start = Instant::now();
            let keys = draw_keys(params, &mut rng)?;
            let p2_collision = round_collides(params, &keys, &mut rng)?;
            let mut coll_hits = 0u64;
            for _ in 0..coll_pairs_per_round {
                let (x, y) = distinct_pair(&upper, &mut rng);
                if tag_for(&x, &keys)? == tag_for(&y, &keys)? {
                    coll_hits += 1;
                }
            }
            Ok(RoundOutput {
                p2_collision,
                coll_hits,
                elapsed_secs: start.elapsed().as_secs_f64(),
            })
        })
        .collect();

    let mut p2_collisions = 0u64;
    let mut coll_hits = 0u64;
    let mut elapsed = 0.0;
    for out in outputs {
        let out = out?;
        p2_collisions += out.p2_collision as u64;
        coll_hits += out.coll_hits;
        elapsed += out.elapsed_secs;
    }

    let p2 = finish_estimate(p2_collisions, config.rounds);
    let report = crate::idscheme::block_length_modified(params);
    let a = config.alpha.as_f64();
    let log_log_m = (params.log_m() as f64).log2();
    Ok(SweepRecord {
        log_m: params.log_m(),
        alpha: a,
        n_bits: report.block_length_bits,
        bound_raw: report.type2_bound_raw,
        emp_p2: p2.rate,
        emp_p2_lo: p2.lo,
        emp_p2_hi: p2.hi,
        p_coll: coll_hits as f64 / (config.rounds * coll_pairs_per_round) as f64,
        p_coll_model: 12.0 * (a * log_log_m).powf(-a),
        time_ms: elapsed * 1000.0 / config.rounds as f64,
        time_model: 0.018 * (a * log_log_m).powi(4),
        seed: config.seed,
    })
}

/// Output encodings for sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str =
    "logM,alpha,n_bits,bound_raw,emp_p2,emp_p2_lo,emp_p2_hi,p_coll,p_coll_model,time_ms,time_model,seed";

/// Renders a float with 12 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes records as CSV (fixed header, 12-significant-digit floats) or as a
/// JSON array that mirrors the same fields.
pub fn write_records(
    records: &[SweepRecord],
    format: OutputFormat,
    dest: &mut dyn Write,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(dest, "{CSV_HEADER}")?;
            for r in records {
                writeln!(
                    dest,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.log_m,
                    fmt_float(r.alpha),
                    r.n_bits,
                    fmt_float(r.bound_raw),
                    fmt_float(r.emp_p2),
                    fmt_float(r.emp_p2_lo),
                    fmt_float(r.emp_p2_hi),
                    fmt_float(r.p_coll),
                    fmt_float(r.p_coll_model),
                    fmt_float(r.time_ms),
                    fmt_float(r.time_model),
                    r.seed,
                )?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *dest, records)
                .map_err(|e| Error::Parse(format!("json encoding failed: {e}")))?;
            writeln!(dest)?;
        }
    }
    Ok(())
}

/// Sidecar describing a run: the configuration echo plus tool and host info.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub alpha: f64,
    pub rounds: u64,
    pub log_m_grid: Vec<u32>,
    pub l_exp: u32,
    pub q_exp: u32,
    pub seed: u64,
    pub pair_samples: u64,
    pub tool_version: String,
    pub host: String,
}

impl RunMetadata {
    pub fn for_config(config: &SweepConfig) -> Self {
        RunMetadata {
            alpha: config.alpha.as_f64(),
            rounds: config.rounds,
            log_m_grid: config.log_m_grid.clone(),
            l_exp: config.l_exp,
            q_exp: config.q_exp,
            seed: config.seed,
            pair_samples: config.pair_samples,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            host: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn alpha(s: &str) -> Alpha {
        s.parse().unwrap()
    }

    fn small_config() -> SweepConfig {
        SweepConfig {
            alpha: alpha("1.1"),
            rounds: 50,
            log_m_grid: vec![1024],
            l_exp: 10,
            q_exp: 10,
            seed: 7,
            pair_samples: 200,
        }
    }

    #[test]
    fn forced_l_one_always_collides() {
        let params = SchemeParams::new(1024, alpha("1.5"), 10, 10).unwrap();
        let keys = KeyPair {
            k: BigUint::from(37u32),
            l: BigUint::one(),
            k_source: crate::idscheme::KeySource::Deterministic,
            l_source: crate::idscheme::KeySource::Deterministic,
        };
        let mut rng = derive_stream(1, 0, 0);
        let est = estimate_type2_with_keys(&params, &keys, 200, &mut rng).unwrap();
        assert_eq!(est.rate, 1.0);
    }

    #[test]
    fn estimate_respects_bound_and_seed() {
        let params = SchemeParams::new(1024, alpha("1.5"), 10, 10).unwrap();
        let bound = crate::idscheme::type2_bound_modified(&params, params.epsilon()).raw;
        let mut rng = derive_stream(42, 0, 0);
        let est = estimate_type2(&params, 500, &mut rng).unwrap();
        assert!(est.rate <= bound, "rate {} above bound {bound}", est.rate);
        let mut rng = derive_stream(42, 0, 0);
        let again = estimate_type2(&params, 500, &mut rng).unwrap();
        assert_eq!(est.rate, again.rate);
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z);
        assert!(lo >= 0.0 && lo < 1e-12);
        assert!(hi > 0.0 && hi < 0.05); // valid at zero observed events
        let (lo, hi) = wilson_interval(50, 100, WILSON_Z);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!((hi - lo) < 0.2);
    }

    #[test]
    fn sweep_single_point_matches_scheme() {
        let out = run_sweep(&small_config()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.skipped.is_empty());
        let r = &out.records[0];
        assert_eq!(r.log_m, 1024);
        assert_eq!(r.n_bits, 19);
        assert!(r.emp_p2 <= r.bound_raw);
        assert!(r.time_ms >= 0.0);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let mut c = small_config();
        c.log_m_grid = vec![];
        assert!(run_sweep(&c).is_err());
        c.log_m_grid = vec![1024, 1024];
        assert!(run_sweep(&c).is_err());
        c.log_m_grid = vec![2048, 1024];
        assert!(run_sweep(&c).is_err());
    }

    #[test]
    fn sweep_is_deterministic_modulo_timing() {
        let config = small_config();
        let a = run_sweep(&config).unwrap();
        let b = run_sweep(&config).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            let mut x = x.clone();
            let mut y = y.clone();
            x.time_ms = 0.0;
            y.time_ms = 0.0;
            assert_eq!(x, y);
        }
    }

    #[test]
    fn bound_monotone_nonincreasing_in_log_m() {
        let mut config = small_config();
        config.log_m_grid = vec![1 << 10, 1 << 12, 1 << 14, 1 << 16];
        config.rounds = 5;
        config.pair_samples = 5;
        let out = run_sweep(&config).unwrap();
        let bounds: Vec<f64> = out.records.iter().map(|r| r.bound_raw).collect();
        assert!(bounds.windows(2).all(|w| w[0] >= w[1]), "{bounds:?}");
    }

    #[test]
    fn csv_and_json_round_trip() {
        let out = run_sweep(&small_config()).unwrap();
        let mut csv = Vec::new();
        write_records(&out.records, OutputFormat::Csv, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1].split(',').count(),
            CSV_HEADER.split(',').count()
        );

        let mut json = Vec::new();
        write_records(&out.records, OutputFormat::Json, &mut json).unwrap();
        let parsed: Vec<SweepRecord> = serde_json::from_slice(&json).unwrap();
        assert_eq!(parsed, out.records);
    }

    #[test]
    fn float_formatting_has_12_significant_digits() {
        assert_eq!(fmt_float(0.0087890625), "8.78906250000e-3");
        assert_eq!(fmt_float(1.1), "1.10000000000e0");
    }
}
