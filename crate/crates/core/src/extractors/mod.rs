//! Strong seeded extractors and somewhere-random-source extractors.
//!
//! Every pipeline role takes an [`ExtRef`], so Toeplitz hashing, seed-indexed
//! Toeplitz families and brute-force lookup tables are interchangeable.

use std::fmt::Debug;
use std::sync::Arc;

use crate::bits::BitString;
use crate::error::{domain, guard, Result};

mod badset;
mod basicext;
mod family;
mod lookup;
pub(crate) mod search;
mod toeplitz;

pub use badset::{verify_bad_set_bound, BadSetReport};
pub use basicext::{
    basicext_substitute, check_basicext_feasible, search_best_basicext, search_ideal_basicext, verify_ideal_basicext,
    BasicExtKind, FoldBasicExt, IdealBasicExt, SRExtractor, SrExtRef,
};
pub use family::ToeplitzFamily;
pub use lookup::LookupExtractor;
pub use search::{
    check_search_feasible, flat_subset_count, search_best_extractor, search_ideal_extractor,
    search_ideal_extractor_with, worst_flat_strong_distance, FlatWorstCase, SearchOptions,
};
pub use toeplitz::{lhl_bound, toeplitz_extractor, ToeplitzExtractor};

/// Default cap on extractor evaluations for exhaustive work.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

pub trait StrongSeededExtractor: Debug + Send + Sync {
    fn n(&self) -> usize;
    fn d(&self) -> usize;
    fn m(&self) -> usize;
    /// Min-entropy the error claim refers to.
    fn claimed_k(&self) -> f64;
    fn claimed_eps(&self) -> f64;
    /// Short human-readable description used in traces.
    fn describe(&self) -> String;

    fn eval(&self, x: &BitString, seed: &BitString) -> Result<BitString>;

    /// Integer form of [`eval`](Self::eval) for shapes that fit in 64 bits.
    fn eval_u64(&self, x: u64, seed: u64) -> Result<u64> {
        let out = self.eval(&BitString::from_u64(x, self.n()), &BitString::from_u64(seed, self.d()))?;
        Ok(out.to_u64())
    }
}

pub type ExtRef = Arc<dyn StrongSeededExtractor>;

pub(crate) fn check_inputs(ext: &(impl StrongSeededExtractor + ?Sized), x: &BitString, seed: &BitString) -> Result<()> {
    if x.len() != ext.n() {
        return domain(format!(
            "{}: source has {} bits, expected {}",
            ext.describe(),
            x.len(),
            ext.n()
        ));
    }
    if seed.len() != ext.d() {
        return domain(format!(
            "{}: seed has {} bits, expected {}",
            ext.describe(),
            seed.len(),
            ext.d()
        ));
    }
    Ok(())
}

/// The full function table, indexed `(x << d) | seed`.
pub fn full_table(ext: &dyn StrongSeededExtractor, budget: u128) -> Result<Vec<u64>> {
    let (n, d, m) = (ext.n(), ext.d(), ext.m());
    if n + d > 40 || m > 64 {
        return domain(format!(
            "{}: table of 2^{} entries is not addressable",
            ext.describe(),
            n + d
        ));
    }
    guard("full extractor table", 1u128 << (n + d), budget)?;
    let mut table = Vec::with_capacity(1 << (n + d));
    for x in 0..1u64 << n {
        for s in 0..1u64 << d {
            table.push(ext.eval_u64(x, s)?);
        }
    }
    Ok(table)
}

/// Checks that `ext` has shape `(n, d, m)`; `None` leaves a dimension free.
pub fn check_shape(
    role: &str,
    ext: &dyn StrongSeededExtractor,
    n: Option<usize>,
    d: Option<usize>,
    m: Option<usize>,
) -> Result<()> {
    for (name, want, got) in [("n", n, ext.n()), ("d", d, ext.d()), ("m", m, ext.m())] {
        if let Some(w) = want {
            if w != got {
                return domain(format!("{role} ({}) has {name} = {got}, expected {w}", ext.describe()));
            }
        }
    }
    Ok(())
}
