//! Extractors for one weak source plus a somewhere-random matrix with few rows.
//!
//! Two desk-scale substitutes sit behind [`SRExtractor`]: an exhaustively
//! verified lookup table ([`IdealBasicExt`]) and the heuristic XOR fold
//! ([`FoldBasicExt`]), which has no soundness guarantee and is only meant
//! for structural smoke runs.

use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::error::{domain, guard, Error, Result};
use crate::rng::{child_seeds, rng_from_seed, ExperimentRng};
use crate::srgen::SRMatrix;

use super::search::flat_masks;
use super::{ExtRef, SearchOptions};

pub trait SRExtractor: Debug + Send + Sync {
    fn n(&self) -> usize;
    fn rows(&self) -> usize;
    fn row_len(&self) -> usize;
    fn m(&self) -> usize;
    fn claimed_eps(&self) -> f64;
    /// False for substitutes that carry no extraction guarantee.
    fn sound(&self) -> bool;
    fn describe(&self) -> String;
    fn eval(&self, x: &BitString, sr: &SRMatrix) -> Result<BitString>;
}

pub type SrExtRef = Arc<dyn SRExtractor>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasicExtKind {
    Ideal,
    Fold,
}

/// `V = XOR_j ext(x, row_j)`. Accepts any number of rows of `ext.d()` bits.
#[derive(Clone, Debug)]
pub struct FoldBasicExt {
    ext: ExtRef,
    rows: usize,
}

impl FoldBasicExt {
    pub fn new(ext: ExtRef, rows: usize) -> Self {
        FoldBasicExt { ext, rows }
    }
}

impl SRExtractor for FoldBasicExt {
    fn n(&self) -> usize {
        self.ext.n()
    }

    fn rows(&self) -> usize {
        self.rows
    }

    fn row_len(&self) -> usize {
        self.ext.d()
    }

    fn m(&self) -> usize {
        self.ext.m()
    }

    fn claimed_eps(&self) -> f64 {
        1.0
    }

    fn sound(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("fold[{}] (NO-SOUNDNESS)", self.ext.describe())
    }

    fn eval(&self, x: &BitString, sr: &SRMatrix) -> Result<BitString> {
        if sr.row_len() != self.ext.d() {
            return domain(format!(
                "fold expects rows of {} bits, got {}",
                self.ext.d(),
                sr.row_len()
            ));
        }
        let mut acc = BitString::zeros(self.ext.m());
        for row in sr.rows() {
            acc = acc.xor(&self.ext.eval(x, row)?)?;
        }
        Ok(acc)
    }
}

/// Lookup table over `(x, rows concatenated)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealBasicExt {
    n: usize,
    rows: usize,
    row_len: usize,
    m: usize,
    table: Vec<u64>,
    claimed_k: f64,
    measured_eps: f64,
}

impl IdealBasicExt {
    pub fn new(n: usize, rows: usize, row_len: usize, m: usize, table: Vec<u64>, k: f64, eps: f64) -> Result<Self> {
        let w = rows * row_len;
        if n + w > 24 || m == 0 || m > 63 {
            return domain(format!(
                "ideal BasicExt shape ({n}, {rows}x{row_len}, {m}) is out of range"
            ));
        }
        if table.len() != 1 << (n + w) || table.iter().any(|&v| v >> m != 0) {
            return domain("ideal BasicExt table does not match its shape");
        }
        Ok(IdealBasicExt {
            n,
            rows,
            row_len,
            m,
            table,
            claimed_k: k,
            measured_eps: eps,
        })
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn claimed_k(&self) -> f64 {
        self.claimed_k
    }
}

impl SRExtractor for IdealBasicExt {
    fn n(&self) -> usize {
        self.n
    }

    fn rows(&self) -> usize {
        self.rows
    }

    fn row_len(&self) -> usize {
        self.row_len
    }

    fn m(&self) -> usize {
        self.m
    }

    fn claimed_eps(&self) -> f64 {
        self.measured_eps
    }

    fn sound(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("ideal-basicext({}, {}x{}->{})", self.n, self.rows, self.row_len, self.m)
    }

    fn eval(&self, x: &BitString, sr: &SRMatrix) -> Result<BitString> {
        if x.len() != self.n || sr.n_rows() != self.rows || sr.row_len() != self.row_len {
            return domain(format!(
                "{} got source of {} bits and a {}x{} matrix",
                self.describe(),
                x.len(),
                sr.n_rows(),
                sr.row_len()
            ));
        }
        let w = self.rows * self.row_len;
        let v = sr.concat().to_u64();
        Ok(BitString::from_u64(
            self.table[((x.to_u64() << w) | v) as usize],
            self.m,
        ))
    }
}

/// Builds a substitute: `Ideal` runs [`search_ideal_basicext`] with the
/// given shape; `Fold` wraps `fold_ext` and ignores the search arguments.
#[allow(clippy::too_many_arguments)]
pub fn basicext_substitute(
    kind: BasicExtKind,
    n: usize,
    rows: usize,
    row_len: usize,
    m: usize,
    k: usize,
    target_eps: f64,
    trials: usize,
    fold_ext: Option<ExtRef>,
    rng: &mut ExperimentRng,
) -> Result<SrExtRef> {
    match kind {
        BasicExtKind::Ideal => Ok(Arc::new(search_ideal_basicext(
            n,
            rows,
            row_len,
            m,
            k,
            target_eps,
            trials,
            rng,
            &SearchOptions::default(),
        )?)),
        BasicExtKind::Fold => {
            let ext = fold_ext.ok_or_else(|| Error::Domain("fold BasicExt needs an extractor".into()))?;
            if ext.n() != n || ext.d() != row_len || ext.m() != m {
                return domain("fold extractor shape does not match the requested BasicExt shape");
            }
            Ok(Arc::new(FoldBasicExt::new(ext, rows)))
        }
    }
}

/// The shape and budget checks [`search_ideal_basicext`] runs before any
/// search work.
pub fn check_basicext_feasible(n: usize, rows: usize, row_len: usize, m: usize, k: usize, budget: u128) -> Result<()> {
    let w = rows * row_len;
    if k > n || rows == 0 || row_len == 0 || m == 0 {
        return domain("empty ideal BasicExt shape");
    }
    if n > 6 || k > 3 || w > 8 || m > 2 {
        return Err(Error::Guard {
            what: format!("ideal BasicExt search at n={n}, k={k}, {rows}x{row_len}, m={m} (limits n<=6, k<=3, rows*row_len<=8, m<=2)"),
            needed: super::flat_subset_count(n, k).saturating_mul(1 << (w + m)),
            budget,
        });
    }
    guard(
        "ideal BasicExt objective",
        super::flat_subset_count(n, k) << (w + m),
        budget,
    )
}

/// Searches for a lookup BasicExt whose worst case over flat `(n, k)`
/// sources `X` and SR matrices with a uniform good row is at most
/// `target_eps`.
///
/// For a fixed test set `T` of outputs, `Pr[V in T]` is linear in the
/// conditional law of the other rows given the good row, so it is maximized
/// by letting them be a deterministic function of the good row that picks,
/// for each good-row value `a`, the completion `b` maximizing
/// `Pr_x[V in T]`. The verified quantity is therefore
/// `max_{X, g, T} avg_a max_b Pr_x[E(x, a, b) in T] - |T|/2^m`, which is the
/// exact supremum of `|V - U_m|` over that class of inputs.
#[allow(clippy::too_many_arguments)]
pub fn search_ideal_basicext(
    n: usize,
    rows: usize,
    row_len: usize,
    m: usize,
    k: usize,
    target_eps: f64,
    trials: usize,
    rng: &mut ExperimentRng,
    opts: &SearchOptions,
) -> Result<IdealBasicExt> {
    check_basicext_feasible(n, rows, row_len, m, k, opts.budget)?;
    let masks = flat_masks(n, k);
    let shape = Shape::new(n, rows, row_len, m, k);
    let den = shape.denominator();
    let target_num = target_eps * den as f64;
    let seeds = child_seeds(rng, trials);
    let chunk = rayon::current_num_threads().max(1);
    let mut best: Option<(Objective, Vec<u64>)> = None;
    for block in seeds.chunks(chunk) {
        let results: Vec<(Objective, Vec<u64>)> = block
            .par_iter()
            .map(|&seed| {
                let mut st = Climb::new(&shape, &masks, &mut rng_from_seed(seed));
                st.climb(
                    target_num,
                    opts.steps_per_trial,
                    &mut rng_from_seed(seed.rotate_left(17)),
                );
                (st.objective, st.table)
            })
            .collect();
        // The lowest-index success wins, whatever the chunk size.
        for (obj, table) in results {
            if obj.worst as f64 <= target_num {
                let eps = obj.worst as f64 / den as f64;
                return IdealBasicExt::new(n, rows, row_len, m, table, k as f64, eps);
            }
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, table));
            }
        }
    }
    Err(Error::SearchFailure {
        trials,
        best_eps: best.map(|(o, _)| o.worst as f64 / den as f64).unwrap_or(1.0),
    })
}

/// The best table `trials` climbs reach, found as for
/// [`super::search_best_extractor`].
#[allow(clippy::too_many_arguments)]
pub fn search_best_basicext(
    n: usize,
    rows: usize,
    row_len: usize,
    m: usize,
    k: usize,
    trials: usize,
    rng: &mut ExperimentRng,
    opts: &SearchOptions,
) -> Result<IdealBasicExt> {
    let start = rng.clone();
    match search_ideal_basicext(n, rows, row_len, m, k, 0.0, trials, rng, opts) {
        Err(Error::SearchFailure { best_eps, .. }) => {
            *rng = start;
            search_ideal_basicext(n, rows, row_len, m, k, best_eps, trials, rng, opts)
        }
        other => other,
    }
}

/// Exact worst-case error of any lookup BasicExt table, as defined for
/// [`search_ideal_basicext`].
pub fn verify_ideal_basicext(ext: &IdealBasicExt, k: usize) -> Result<f64> {
    let shape = Shape::new(ext.n, ext.rows, ext.row_len, ext.m, k);
    let masks = flat_masks(ext.n, k);
    let st = Climb::from_table(&shape, &masks, ext.table.clone());
    Ok(st.objective.worst as f64 / shape.denominator() as f64)
}

struct Shape {
    n: usize,
    w: usize,
    row_len: usize,
    m: usize,
    kk: u64,
    /// `groups[g][a]` lists the matrix values whose row `g` equals `a`.
    groups: Vec<Vec<Vec<usize>>>,
    /// Proper nonempty test sets as bitmasks over outputs.
    tests: Vec<u64>,
}

impl Shape {
    fn new(n: usize, rows: usize, row_len: usize, m: usize, k: usize) -> Self {
        let w = rows * row_len;
        let groups = (0..rows)
            .map(|g| {
                let shift = (rows - 1 - g) * row_len;
                let mut by_a = vec![Vec::new(); 1 << row_len];
                for v in 0..1usize << w {
                    by_a[(v >> shift) & ((1 << row_len) - 1)].push(v);
                }
                by_a
            })
            .collect();
        let outputs = 1u64 << m;
        Shape {
            n,
            w,
            row_len,
            m,
            kk: 1 << k,
            groups,
            tests: (1..(1u64 << outputs) - 1).collect(),
        }
    }

    /// Scale turning numerators into distances: `2^row_len * K * 2^m`.
    fn denominator(&self) -> u64 {
        (1u64 << self.row_len) * self.kk * (1u64 << self.m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Objective {
    worst: u64,
    at_worst: u64,
}

struct Climb<'a> {
    shape: &'a Shape,
    sets: &'a [u64],
    table: Vec<u64>,
    /// `masks[(v << m) | o]` marks the `x` with `table[x, v] = o`.
    masks: Vec<u64>,
    objective: Objective,
}

impl<'a> Climb<'a> {
    fn new(shape: &'a Shape, sets: &'a [u64], rng: &mut ExperimentRng) -> Self {
        let table = (0..1usize << (shape.n + shape.w))
            .map(|_| rng.random_range(0..1u64 << shape.m))
            .collect();
        Climb::from_table(shape, sets, table)
    }

    fn from_table(shape: &'a Shape, sets: &'a [u64], table: Vec<u64>) -> Self {
        let mut masks = vec![0u64; 1 << (shape.w + shape.m)];
        for x in 0..1usize << shape.n {
            for v in 0..1usize << shape.w {
                masks[(v << shape.m) | table[(x << shape.w) | v] as usize] |= 1 << x;
            }
        }
        let mut st = Climb {
            shape,
            sets,
            table,
            masks,
            objective: Objective { worst: 0, at_worst: 0 },
        };
        st.objective = st.evaluate(None).expect("unbounded evaluation");
        st
    }

    fn evaluate(&self, cap: Option<Objective>) -> Option<Objective> {
        let sh = self.shape;
        let outputs = 1usize << sh.m;
        let values = 1usize << sh.w;
        let mut counts = vec![0u64; values * outputs];
        let mut obj = Objective { worst: 0, at_worst: 0 };
        for &set in self.sets {
            for (c, mask) in counts.iter_mut().zip(&self.masks) {
                *c = (set & mask).count_ones() as u64;
            }
            for &t in &sh.tests {
                let rho = t.count_ones() as u64 * sh.kk * (1u64 << sh.row_len);
                for by_a in &sh.groups {
                    let mut hi = 0u64;
                    for vs in by_a {
                        let best = vs
                            .iter()
                            .map(|&v| {
                                (0..outputs)
                                    .filter(|&o| t >> o & 1 == 1)
                                    .map(|o| counts[v * outputs + o])
                                    .sum::<u64>()
                            })
                            .max()
                            .unwrap_or(0);
                        hi += best;
                    }
                    let num = (hi << sh.m).saturating_sub(rho);
                    if num > obj.worst {
                        obj = Objective {
                            worst: num,
                            at_worst: 1,
                        };
                    } else if num == obj.worst {
                        obj.at_worst += 1;
                    }
                }
            }
            if let Some(c) = cap {
                if obj > c {
                    return None;
                }
            }
        }
        Some(obj)
    }

    fn set(&mut self, x: usize, v: usize, o: u64) {
        let sh = self.shape;
        let i = (x << sh.w) | v;
        let old = self.table[i] as usize;
        self.masks[(v << sh.m) | old] &= !(1 << x);
        self.masks[(v << sh.m) | o as usize] |= 1 << x;
        self.table[i] = o;
    }

    fn climb(&mut self, target_num: f64, steps: usize, rng: &mut ExperimentRng) {
        let sh = self.shape;
        for _ in 0..steps {
            if self.objective.worst as f64 <= target_num {
                return;
            }
            let x = rng.random_range(0..1usize << sh.n);
            let v = rng.random_range(0..1usize << sh.w);
            let old = self.table[(x << sh.w) | v];
            let mut o = rng.random_range(0..(1u64 << sh.m) - 1);
            if o >= old {
                o += 1;
            }
            self.set(x, v, o);
            match self.evaluate(Some(self.objective)) {
                Some(obj) => self.objective = obj,
                None => self.set(x, v, old),
            }
        }
    }
}
