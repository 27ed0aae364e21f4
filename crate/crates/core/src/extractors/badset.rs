use serde::Serialize;

use crate::error::{guard, Error, Result};

use super::{full_table, StrongSeededExtractor, DEFAULT_BUDGET};

/// Outcome of counting, for every test set `T` of outputs, the inputs that
/// land in `T` noticeably more often than a uniform output would.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BadSetReport {
    pub k: usize,
    pub eps: f64,
    /// Largest `|Bad_T|` over all `T`.
    pub max_count: u64,
    /// The first `T` (as a bitmask over outputs) attaining `max_count`.
    pub worst_set: u64,
    pub bound: u64,
    pub pass: bool,
}

/// For every `T` of `m`-bit outputs, counts the `x` with
/// `Pr_r[ext(x, r) in T] > |T| / 2^m + eps` and checks the maximum against `2^k`.
pub fn verify_bad_set_bound(ext: &dyn StrongSeededExtractor, k: usize, eps: f64) -> Result<BadSetReport> {
    let (n, d, m) = (ext.n(), ext.d(), ext.m());
    if m > 3 || n > 10 {
        return Err(Error::Guard {
            what: format!("bad-set enumeration at n={n}, m={m} (limits n <= 10, m <= 3)"),
            needed: (1u128 << (n + d).min(100)).saturating_mul(1u128 << (1usize << m.min(6))),
            budget: DEFAULT_BUDGET,
        });
    }
    let work = (1u128 << (n + d)) << (1usize << m);
    guard("bad-set enumeration", work, DEFAULT_BUDGET * 16)?;
    let table = full_table(ext, DEFAULT_BUDGET)?;
    let seeds = 1u64 << d;
    let outputs = 1usize << m;

    // Output histogram per x, shared by every T.
    let hist: Vec<Vec<u64>> = (0..1usize << n)
        .map(|x| {
            let mut h = vec![0u64; outputs];
            for s in 0..seeds as usize {
                h[table[(x << d) | s] as usize] += 1;
            }
            h
        })
        .collect();

    let mut max_count = 0u64;
    let mut worst_set = 0u64;
    for t in 0..1u64 << outputs {
        let size = t.count_ones() as f64;
        let rho = size / outputs as f64;
        let count = hist
            .iter()
            .filter(|h| {
                let hits: u64 = (0..outputs).filter(|&o| t >> o & 1 == 1).map(|o| h[o]).sum();
                hits as f64 / seeds as f64 > rho + eps
            })
            .count() as u64;
        if count > max_count {
            max_count = count;
            worst_set = t;
        }
    }
    let bound = 1u64 << k;
    Ok(BadSetReport {
        k,
        eps,
        max_count,
        worst_set,
        bound,
        pass: max_count <= bound,
    })
}
