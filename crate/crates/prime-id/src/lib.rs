//! Prime-number identification codes for noiseless binary channels.
//!
//! The receiver of an identification code answers one question: was a
//! specific target message sent? Randomized tagging makes the answer cheap.
//! A round transmits two probable-prime keys `k <= K`, `l <= K'` and the tag
//! `phi_l(phi_k(m))` with `phi_l(n) = (n mod l) + 1`; the hypothesis `m_hat`
//! is accepted exactly when its tag matches, so a true message is never
//! rejected and a false one is accepted only when the keys divide the
//! difference. With `K = ceil((log M)^alpha)` and `K' = ceil((log K)^alpha)`
//! the block length grows like `alpha log log M`, doubly exponential in the
//! message count.
//!
//! Modules:
//! - [`numtheory`]: primality (deterministic and Miller-Rabin), sieves,
//!   prime counting, factor counts.
//! - [`primegen`]: the bounded probabilistic prime generator, its parameter
//!   derivation, and its analytic failure/composite bounds.
//! - [`idscheme`]: the modified scheme (keys sent directly) with a bit-exact
//!   wire format, plus the original index-based variant at desk scale.
//! - [`hashid`]: almost-universal hash families generalizing the scheme, and
//!   the linear-code equivalence.
//! - [`simharness`]: seeded, reproducible parameter sweeps with CSV/JSON
//!   output.

pub mod error;
pub mod hashid;
pub mod idscheme;
pub mod numtheory;
pub mod precise;
pub mod primegen;
pub mod simharness;

pub use error::{Error, Result};
pub use precise::Alpha;
