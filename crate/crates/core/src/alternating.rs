//! Alternating extraction between a `Q` side and an `X` side, and the
//! look-ahead extractor built from its transcript.

use std::sync::Arc;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Result};
use crate::eval::{distance_from_uniform_given, push_forward};
use crate::extractors::ExtRef;
use crate::scalar::Probability;
use crate::sources::DiscreteSource;

#[derive(Clone, Debug)]
pub struct AltExtConfig {
    /// Extracts from the `Q` side, seeded by `R_i`.
    pub ext_q: ExtRef,
    /// Extracts from `X`, seeded by `S_i`.
    pub ext_w: ExtRef,
    pub ell: usize,
    pub t: usize,
}

impl AltExtConfig {
    pub fn new(ext_q: ExtRef, ext_w: ExtRef, ell: usize, t: usize) -> Result<Self> {
        if ell == 0 || t == 0 {
            return domain("round width and round count must be positive");
        }
        for (role, e) in [("ext_q", &ext_q), ("ext_w", &ext_w)] {
            if e.d() != ell || e.m() != ell {
                return domain(format!(
                    "{role} ({}) must map {ell}-bit seeds to {ell} bits",
                    e.describe()
                ));
            }
        }
        Ok(AltExtConfig { ext_q, ext_w, ell, t })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub s: Vec<BitString>,
    pub r: Vec<BitString>,
}

/// `R_i = ext_w(x, S_i)`, `S_{i+1} = ext_q(q, R_i)` for `i = 1..t`.
pub fn alternating_extraction(cfg: &AltExtConfig, x: &BitString, q: &BitString, s1: &BitString) -> Result<Transcript> {
    if s1.len() != cfg.ell {
        return domain(format!("S_1 has {} bits, expected {}", s1.len(), cfg.ell));
    }
    let mut s = Vec::with_capacity(cfg.t);
    let mut r = Vec::with_capacity(cfg.t);
    let mut si = s1.clone();
    for i in 0..cfg.t {
        let ri = cfg.ext_w.eval(x, &si)?;
        s.push(si);
        if i + 1 < cfg.t {
            si = cfg.ext_q.eval(q, &ri)?;
        } else {
            si = BitString::empty();
        }
        r.push(ri);
    }
    Ok(Transcript { s, r })
}

/// `laExt(x, y) = (R_1, ..., R_t)` with `Q = y` and `S_1` the first `ell`
/// bits of `y`. A `y` shorter than `ext_q.n()` is zero-padded on the right.
pub fn la_ext(cfg: &AltExtConfig, x: &BitString, y: &BitString) -> Result<Vec<BitString>> {
    if y.len() < cfg.ell {
        return domain(format!(
            "look-ahead seed has {} bits, fewer than ell = {}",
            y.len(),
            cfg.ell
        ));
    }
    let q = y.pad_right(cfg.ext_q.n())?;
    Ok(alternating_extraction(cfg, x, &q, &y.prefix(cfg.ell)?)?.r)
}

pub type SeedMap = Arc<dyn Fn(&BitString) -> BitString + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LookaheadReport {
    pub j: usize,
    pub h: usize,
    pub distance: f64,
}

/// Exact look-ahead distance at round `j` (0-based, `j < t`).
///
/// `maps[0]` produces `Y = (Q, S_1)` and `maps[1..]` the correlated
/// `Y_2..Y_h`, all from one draw of `seed_source`. The reported quantity is
/// the distance between `(Y, Y_2..Y_h, {R_i1..R_ij : i >= 2}, R_{j+1})` and
/// the same tuple with `R_{j+1}` replaced by a fresh uniform string, where
/// `R_{i.}` is the look-ahead output on `Y_i`.
pub fn laext_lookahead_test<P: Probability>(
    cfg: &AltExtConfig,
    source_x: &DiscreteSource<P>,
    seed_source: &DiscreteSource<P>,
    maps: &[SeedMap],
    j: usize,
    budget: u128,
) -> Result<LookaheadReport> {
    if maps.is_empty() {
        return domain("at least one seed map is required");
    }
    if j >= cfg.t {
        return domain(format!("round {j} is not below t = {}", cfg.t));
    }
    let h = maps.len();
    let table = push_forward(
        &[seed_source, source_x],
        |a| {
            let (sigma, x) = (a[0], a[1]);
            let ys: Vec<BitString> = maps.iter().map(|f| f(sigma)).collect();
            let mut vars = ys.clone();
            let mut others = BitString::empty();
            for y in &ys[1..] {
                let rs = la_ext(cfg, x, y)?;
                others = others.concat(&BitString::concat_all(&rs[..j]));
            }
            vars.push(others);
            vars.push(la_ext(cfg, x, &ys[0])?[j].clone());
            Ok(vars)
        },
        budget,
    )?;
    let target = table.var_lens().len() - 1;
    Ok(LookaheadReport {
        j,
        h,
        distance: distance_from_uniform_given(&table, target)?.to_f64_lossy(),
    })
}
