//! Exhaustive worst-case verification over flat sources and the
//! brute-force ideal-extractor search.
//!
//! Statistical distance is convex in the source distribution and every
//! `(n, k)`-source with integer `k` is a convex combination of flat sources
//! on `2^k` points, so the maximum over flat sources is the worst case over
//! all `(n, k)`-sources.
//!
//! For a flat source `S` with `K = 2^k` points, write `c(s, o)` for the
//! number of `x` in `S` with `Ext(x, s) = o`. The strong distance is
//! `sum_{s, o} |c(s, o) 2^m - K| / (2 * 2^d * K * 2^m)`; the numerator is an
//! integer, so every value here is exact.

use rand::Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{domain, guard, Error, Result};
use crate::rng::{child_seeds, rng_from_seed, ExperimentRng};
use crate::sources::FlatSource;

use super::{full_table, LookupExtractor, StrongSeededExtractor, DEFAULT_BUDGET};

/// `C(2^n, 2^k)`, saturating.
pub fn flat_subset_count(n: usize, k: usize) -> u128 {
    if k > n || n >= 64 {
        return if k > n { 0 } else { u128::MAX };
    }
    binomial(1u128 << n, 1u128 << k)
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `f` on every `size`-subset of `lo..hi` in lexicographic order.
pub(crate) fn for_each_combination(lo: usize, hi: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size == 0 {
        f(&[]);
        return;
    }
    if hi < lo || hi - lo < size {
        return;
    }
    let mut idx: Vec<usize> = (lo..lo + size).collect();
    loop {
        f(&idx);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < hi - size + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatWorstCase {
    pub eps: f64,
    pub numerator: u128,
    pub denominator: u128,
    pub witness: FlatSource,
}

/// Exact worst-case strong distance of `ext` over every flat `(n, k)` source.
pub fn worst_flat_strong_distance(ext: &dyn StrongSeededExtractor, k: usize, budget: u128) -> Result<FlatWorstCase> {
    let (n, d, m) = (ext.n(), ext.d(), ext.m());
    if k > n {
        return domain(format!("no flat source with 2^{k} points in {n} bits"));
    }
    if m > 64 {
        return domain("output longer than 64 bits");
    }
    let subsets = flat_subset_count(n, k);
    let kk = 1usize << k;
    let work = subsets.saturating_mul(1u128 << d.min(100)).saturating_mul(kk as u128);
    guard("flat-source verification", work, budget)?;
    let table = full_table(ext, budget)?;
    let universe = 1usize << n;
    let seeds = 1usize << d;

    let numerator_of = |combo: &[usize], outs: &mut Vec<u64>| -> u128 {
        let mut num: u128 = 0;
        for s in 0..seeds {
            outs.clear();
            outs.extend(combo.iter().map(|&x| table[(x << d) | s]));
            num += spread_numerator(outs, m, kk);
        }
        num
    };

    let best = (0..=universe - kk)
        .into_par_iter()
        .map(|first| {
            let mut outs = Vec::with_capacity(kk);
            let mut combo = vec![first; kk];
            let mut best: Option<(u128, Vec<usize>)> = None;
            for_each_combination(first + 1, universe, kk - 1, |rest| {
                combo[1..].copy_from_slice(rest);
                let num = numerator_of(&combo, &mut outs);
                if best.as_ref().is_none_or(|(b, _)| num > *b) {
                    best = Some((num, combo.clone()));
                }
            });
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
                (a, None) => a,
                (None, b) => b,
            },
        )
        .expect("at least one flat source");

    let denominator = 2u128 * (1u128 << d) * (kk as u128) * (1u128 << m);
    let witness = FlatSource::new(n, best.1.iter().map(|&x| BitString::from_u64(x as u64, n)))?;
    Ok(FlatWorstCase {
        eps: best.0 as f64 / denominator as f64,
        numerator: best.0,
        denominator,
        witness,
    })
}

/// `sum_o |c(o) 2^m - K|` for one seed, given the `K` outputs.
fn spread_numerator(outs: &mut [u64], m: usize, kk: usize) -> u128 {
    outs.sort_unstable();
    let scale = 1u128 << m;
    let kk = kk as u128;
    let mut num = 0u128;
    let mut runs = 0u128;
    let mut i = 0;
    while i < outs.len() {
        let mut j = i;
        while j < outs.len() && outs[j] == outs[i] {
            j += 1;
        }
        num += ((j - i) as u128 * scale).abs_diff(kk);
        runs += 1;
        i = j;
    }
    num + (scale - runs) * kk
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Local-search proposals per trial after the random start.
    pub steps_per_trial: usize,
    pub budget: u128,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            steps_per_trial: 4000,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Searches for a table whose worst-case strong distance over all flat
/// `(n, k)` sources is at most `target_eps`.
///
/// Each trial starts from a uniformly random table and runs a hill climb
/// that flips single entries, keeping a flip unless it raises the objective
/// (worst numerator, number of flat sources attaining it). Trials get
/// independent child seeds and the lowest-index success is returned, so
/// the result does not depend on the worker count.
pub fn search_ideal_extractor(
    n: usize,
    d: usize,
    m: usize,
    k: usize,
    target_eps: f64,
    trials: usize,
    rng: &mut ExperimentRng,
) -> Result<LookupExtractor> {
    search_ideal_extractor_with(n, d, m, k, target_eps, trials, rng, &SearchOptions::default())
}

/// The shape and budget checks [`search_ideal_extractor_with`] runs before
/// any search work.
pub fn check_search_feasible(n: usize, d: usize, m: usize, k: usize, budget: u128) -> Result<()> {
    if k > n || m == 0 {
        return domain(format!("search shape (n={n}, d={d}, m={m}, k={k}) is empty"));
    }
    if n > 6 || k > 3 || m > 4 || d > 8 {
        return Err(Error::Guard {
            what: format!("ideal search at n={n}, d={d}, m={m}, k={k} (limits n<=6, k<=3, m<=4, d<=8)"),
            needed: flat_subset_count(n, k).saturating_mul(1 << (d + m)),
            budget,
        });
    }
    guard("ideal search objective", flat_subset_count(n, k) << (d + m), budget)
}

#[allow(clippy::too_many_arguments)]
pub fn search_ideal_extractor_with(
    n: usize,
    d: usize,
    m: usize,
    k: usize,
    target_eps: f64,
    trials: usize,
    rng: &mut ExperimentRng,
    opts: &SearchOptions,
) -> Result<LookupExtractor> {
    check_search_feasible(n, d, m, k, opts.budget)?;
    let subsets = flat_masks(n, k);
    let target_num = target_eps * (2u128 << (d + k + m)) as f64;
    let seeds = child_seeds(rng, trials);
    let chunk = rayon::current_num_threads().max(1);
    let mut best: Option<Objective> = None;
    for block in seeds.chunks(chunk) {
        let results: Vec<(Objective, Vec<u64>)> = block
            .par_iter()
            .map(|&seed| {
                let mut state = ClimbState::new(n, d, m, k, &subsets, &mut rng_from_seed(seed));
                state.climb(target_num, opts.steps_per_trial, &mut rng_from_seed(seed ^ CLIMB_SALT));
                (state.objective, state.table)
            })
            .collect();
        // The lowest-index success wins, whatever the chunk size.
        for (obj, table) in results {
            if obj.worst as f64 <= target_num {
                let eps = obj.worst as f64 / (2u128 << (d + k + m)) as f64;
                return Ok(LookupExtractor::new(n, d, m, table)?.with_claims(k as f64, Some(eps)));
            }
            if best.as_ref().is_none_or(|b| obj < *b) {
                best = Some(obj);
            }
        }
    }
    let best_eps = best
        .map(|o| o.worst as f64 / (2u128 << (d + k + m)) as f64)
        .unwrap_or(1.0);
    Err(Error::SearchFailure { trials, best_eps })
}

/// The best table `trials` climbs reach: a first pass with target zero
/// finds the best error, and a second pass from the same generator state
/// stops at the first trial that attains it.
#[allow(clippy::too_many_arguments)]
pub fn search_best_extractor(
    n: usize,
    d: usize,
    m: usize,
    k: usize,
    trials: usize,
    rng: &mut ExperimentRng,
    opts: &SearchOptions,
) -> Result<LookupExtractor> {
    let start = rng.clone();
    match search_ideal_extractor_with(n, d, m, k, 0.0, trials, rng, opts) {
        Err(Error::SearchFailure { best_eps, .. }) => {
            *rng = start;
            search_ideal_extractor_with(n, d, m, k, best_eps, trials, rng, opts)
        }
        other => other,
    }
}

const CLIMB_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Bitmasks of every `2^k`-subset of `{0,1}^n`; bit `x` marks membership.
pub(crate) fn flat_masks(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_combination(0, 1 << n, 1 << k, |c| {
        out.push(c.iter().fold(0u64, |acc, &x| acc | 1 << x));
    });
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Objective {
    worst: u64,
    at_worst: u64,
}

struct ClimbState<'a> {
    n: usize,
    d: usize,
    m: usize,
    kk: u64,
    subsets: &'a [u64],
    table: Vec<u64>,
    /// `masks[(s << m) | o]` marks the `x` with `table[x, s] = o`.
    masks: Vec<u64>,
    objective: Objective,
}

impl<'a> ClimbState<'a> {
    fn new(n: usize, d: usize, m: usize, k: usize, subsets: &'a [u64], rng: &mut ExperimentRng) -> Self {
        let table: Vec<u64> = (0..1usize << (n + d)).map(|_| rng.random_range(0..1u64 << m)).collect();
        let mut masks = vec![0u64; 1 << (d + m)];
        for x in 0..1usize << n {
            for s in 0..1usize << d {
                masks[(s << m) | table[(x << d) | s] as usize] |= 1 << x;
            }
        }
        let mut st = ClimbState {
            n,
            d,
            m,
            kk: 1 << k,
            subsets,
            table,
            masks,
            objective: Objective { worst: 0, at_worst: 0 },
        };
        st.objective = st.evaluate(None).expect("unbounded evaluation");
        st
    }

    /// Objective of the current table; `None` once it provably exceeds `cap`.
    fn evaluate(&self, cap: Option<Objective>) -> Option<Objective> {
        let scale = 1u64 << self.m;
        let mut obj = Objective { worst: 0, at_worst: 0 };
        for &set in self.subsets {
            let mut num = 0u64;
            for mask in &self.masks {
                num += ((set & mask).count_ones() as u64 * scale).abs_diff(self.kk);
            }
            if num > obj.worst {
                obj = Objective {
                    worst: num,
                    at_worst: 1,
                };
            } else if num == obj.worst {
                obj.at_worst += 1;
            }
            if let Some(c) = cap {
                if obj > c {
                    return None;
                }
            }
        }
        Some(obj)
    }

    fn set(&mut self, x: usize, s: usize, o: u64) {
        let i = (x << self.d) | s;
        let old = self.table[i] as usize;
        self.masks[(s << self.m) | old] &= !(1 << x);
        self.masks[(s << self.m) | o as usize] |= 1 << x;
        self.table[i] = o;
    }

    fn climb(&mut self, target_num: f64, steps: usize, rng: &mut ExperimentRng) {
        if self.m == 0 {
            return;
        }
        for _ in 0..steps {
            if self.objective.worst as f64 <= target_num {
                return;
            }
            let x = rng.random_range(0..1usize << self.n);
            let s = rng.random_range(0..1usize << self.d);
            let old = self.table[(x << self.d) | s];
            let mut o = rng.random_range(0..(1u64 << self.m) - 1);
            if o >= old {
                o += 1;
            }
            self.set(x, s, o);
            match self.evaluate(Some(self.objective)) {
                Some(obj) => self.objective = obj,
                None => self.set(x, s, old),
            }
        }
    }
}
