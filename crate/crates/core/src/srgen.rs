//! Somewhere-random source generation: the SSR row transform and the
//! two-source SR construction that feeds it.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::alternating::{la_ext, AltExtConfig};
use crate::bits::{decompose_index, BitString};
use crate::error::{domain, guard, Error, Result};
use crate::eval::{choose_subsets, distance_from_uniform, push_forward, SubsetPlan};
use crate::extractors::{check_shape, ExtRef};
use crate::rng::ExperimentRng;
use crate::scalar::Probability;
use crate::sources::DiscreteSource;

/// A realized matrix of `N` rows, each `row_len` bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SRMatrix {
    row_len: usize,
    rows: Vec<BitString>,
}

impl SRMatrix {
    pub fn new(row_len: usize, rows: Vec<BitString>) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != row_len) {
            return domain(format!("row {} has {} bits, expected {row_len}", i + 1, r.len()));
        }
        Ok(SRMatrix { row_len, rows })
    }

    pub fn zeros(n_rows: usize, row_len: usize) -> Self {
        SRMatrix {
            row_len,
            rows: vec![BitString::zeros(row_len); n_rows],
        }
    }

    /// Cuts `bits` into consecutive rows of `row_len` bits.
    pub fn from_concat(bits: &BitString, row_len: usize) -> Result<Self> {
        if row_len == 0 || !bits.len().is_multiple_of(row_len) {
            return domain(format!("{} bits do not split into rows of {row_len}", bits.len()));
        }
        let rows = (0..bits.len() / row_len)
            .map(|i| bits.slice(i * row_len, row_len))
            .collect::<Result<_>>()?;
        Ok(SRMatrix { row_len, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    pub fn rows(&self) -> &[BitString] {
        &self.rows
    }

    /// Row `i`, 1-based.
    pub fn row(&self, i: usize) -> Result<&BitString> {
        if i == 0 || i > self.rows.len() {
            return domain(format!("row {i} outside [1, {}]", self.rows.len()));
        }
        Ok(&self.rows[i - 1])
    }

    pub fn concat(&self) -> BitString {
        BitString::concat_all(&self.rows)
    }

    /// The rows at the given 1-based indices, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.row(i).cloned()).collect::<Result<_>>()?;
        Ok(SRMatrix {
            row_len: self.row_len,
            rows,
        })
    }

    /// Appends all-zero rows up to `n_rows`.
    pub fn pad_to(&self, n_rows: usize) -> Result<Self> {
        if self.rows.len() > n_rows {
            return domain(format!("cannot pad {} rows down to {n_rows}", self.rows.len()));
        }
        let mut rows = self.rows.clone();
        rows.resize(n_rows, BitString::zeros(self.row_len));
        Ok(SRMatrix {
            row_len: self.row_len,
            rows,
        })
    }

    /// `N = ..`, `row_len = ..`, then one hexadecimal row per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("N = {}\nrow_len = {}\n", self.rows.len(), self.row_len);
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.to_hex());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<usize> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(0, format!("missing `{key}` header")))?;
            let value = line
                .split_once('=')
                .filter(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim())
                .ok_or_else(|| parse_err(no + 1, format!("expected `{key} = <int>`")))?;
            value
                .parse()
                .map_err(|_| parse_err(no + 1, format!("bad integer `{value}`")))
        };
        let n = header("N")?;
        let row_len = header("row_len")?;
        let mut rows = Vec::with_capacity(n);
        for (no, line) in lines {
            let row = BitString::from_hex(line.trim(), row_len).map_err(|e| parse_err(no + 1, e.to_string()))?;
            rows.push(row);
        }
        if rows.len() != n {
            return Err(parse_err(0, format!("header says {n} rows, found {}", rows.len())));
        }
        SRMatrix::new(row_len, rows)
    }
}

fn parse_err(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

/// Shape and extractor roles of the SSR transform.
#[derive(Clone, Debug)]
pub struct SSRConfig {
    pub h: usize,
    pub ell: usize,
    /// Index bits; `N = 2^d`.
    pub d: usize,
    /// `log2 h`.
    pub l: usize,
    /// Index blocks, `ceil(d / l)`.
    pub b: usize,
    pub laext: AltExtConfig,
    /// Maps a full input row and an `ell`-bit seed to the next slice.
    pub bridge: ExtRef,
    pub first_slice_len: usize,
    pub slice_len: usize,
}

impl SSRConfig {
    /// Slice lengths default to `(h + 12) ell` and `(h^2 + 12) ell`.
    pub fn new(h: usize, ell: usize, d: usize, laext: AltExtConfig, bridge: ExtRef) -> Result<Self> {
        Self::with_slices(h, ell, d, laext, bridge, (h + 12) * ell, (h * h + 12) * ell)
    }

    pub fn with_slices(
        h: usize,
        ell: usize,
        d: usize,
        laext: AltExtConfig,
        bridge: ExtRef,
        first_slice_len: usize,
        slice_len: usize,
    ) -> Result<Self> {
        if h < 2 || !h.is_power_of_two() {
            return domain(format!("h = {h} must be a power of two, at least 2"));
        }
        if d == 0 || d > 30 {
            return domain(format!("index bits d = {d} must be in 1..=30"));
        }
        if laext.ell != ell || laext.t != h {
            return domain(format!(
                "look-ahead extractor has ell = {}, t = {}; expected ell = {ell}, t = h = {h}",
                laext.ell, laext.t
            ));
        }
        if first_slice_len < ell || slice_len < ell {
            return domain("slices must hold at least ell bits");
        }
        let q_len = first_slice_len.max(slice_len);
        if laext.ext_q.n() < q_len {
            return domain(format!("ext_q reads {} bits but slices reach {q_len}", laext.ext_q.n()));
        }
        check_shape("bridge", bridge.as_ref(), None, Some(ell), Some(slice_len))?;
        if bridge.n() < first_slice_len {
            return domain(format!(
                "bridge rows of {} bits are shorter than the first slice ({first_slice_len})",
                bridge.n()
            ));
        }
        let l = h.trailing_zeros() as usize;
        Ok(SSRConfig {
            h,
            ell,
            d,
            l,
            b: d.div_ceil(l),
            laext,
            bridge,
            first_slice_len,
            slice_len,
        })
    }

    pub fn n_rows(&self) -> usize {
        1 << self.d
    }

    /// Length of the input rows, fixed by the bridge extractor.
    pub fn row_len(&self) -> usize {
        self.bridge.n()
    }
}

/// Per-row record of one SSR evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowTrace {
    /// 1-based block indices `Ind_{i1..ib}`.
    pub inds: Vec<u64>,
    /// `Y^{i1} .. Y^{ib}`.
    pub slices: Vec<BitString>,
    /// `R^{ij}_{Ind_ij}` for `j = 1..b`; the last one is `Z^i`.
    pub selected: Vec<BitString>,
}

fn ssr_row(cfg: &SSRConfig, x: &BitString, i: usize, row: &BitString) -> Result<RowTrace> {
    let bi = decompose_index(i as u64, cfg.d as u32, cfg.l as u32)?;
    let mut slice = row.prefix(cfg.first_slice_len)?;
    let mut slices = Vec::with_capacity(cfg.b);
    let mut selected = Vec::with_capacity(cfg.b);
    for (j, &ind) in bi.inds.iter().enumerate() {
        let rs = la_ext(&cfg.laext, x, &slice)?;
        let r = rs[(ind - 1) as usize].clone();
        slices.push(slice);
        if j + 1 < cfg.b {
            slice = cfg.bridge.eval(row, &r)?;
        } else {
            slice = BitString::empty();
        }
        selected.push(r);
    }
    Ok(RowTrace {
        inds: bi.inds,
        slices,
        selected,
    })
}

fn check_ssr_inputs(cfg: &SSRConfig, y_rows: &SRMatrix) -> Result<()> {
    if y_rows.n_rows() != cfg.n_rows() {
        return domain(format!("SSR expects {} rows, got {}", cfg.n_rows(), y_rows.n_rows()));
    }
    if y_rows.row_len() != cfg.row_len() {
        return domain(format!(
            "SSR expects rows of {} bits, got {}",
            cfg.row_len(),
            y_rows.row_len()
        ));
    }
    Ok(())
}

/// Computes `Z` row by row; row `i` only reads `y_rows` row `i`.
pub fn ssr(cfg: &SSRConfig, x: &BitString, y_rows: &SRMatrix) -> Result<SRMatrix> {
    Ok(ssr_traced(cfg, x, y_rows)?.0)
}

pub fn ssr_traced(cfg: &SSRConfig, x: &BitString, y_rows: &SRMatrix) -> Result<(SRMatrix, Vec<RowTrace>)> {
    check_ssr_inputs(cfg, y_rows)?;
    let traces: Vec<RowTrace> = y_rows
        .rows()
        .par_iter()
        .enumerate()
        .map(|(i, row)| ssr_row(cfg, x, i + 1, row))
        .collect::<Result<_>>()?;
    let z = traces.iter().map(|t| t.selected[cfg.b - 1].clone()).collect();
    Ok((SRMatrix::new(cfg.ell, z)?, traces))
}

/// The three extractors of the two-source SR construction.
#[derive(Clone, Debug)]
pub struct SrSuite {
    /// `Y` with a `d`-bit index seed to an `ell`-bit seed for `ext2`.
    pub ext1: ExtRef,
    /// `X` to the `ell`-bit `W_i`.
    pub ext2: ExtRef,
    /// `Y` seeded by `W_i` to the SSR input row.
    pub ext3: ExtRef,
}

impl SrSuite {
    pub fn check(&self, cfg: &SSRConfig, x_len: usize, y_len: usize) -> Result<()> {
        check_shape("ext1", self.ext1.as_ref(), Some(y_len), Some(cfg.d), Some(cfg.ell))?;
        check_shape("ext2", self.ext2.as_ref(), Some(x_len), Some(cfg.ell), Some(cfg.ell))?;
        check_shape(
            "ext3",
            self.ext3.as_ref(),
            Some(y_len),
            Some(cfg.ell),
            Some(cfg.row_len()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SrOutput {
    pub w: SRMatrix,
    pub ybar: SRMatrix,
    pub z: SRMatrix,
}

/// `W_i = ext2(x, ext1(y, r_i))`, `Ybar_i = ext3(y, W_i)`, `Z = SSR(x, Ybar)`
/// with `r_i` the `d`-bit expression of `i - 1`.
pub fn sr(cfg: &SSRConfig, suite: &SrSuite, x: &BitString, y: &BitString) -> Result<SrOutput> {
    let (w, ybar) = sr_rows(cfg, suite, x, y)?;
    let z = ssr(cfg, x, &ybar)?;
    Ok(SrOutput { w, ybar, z })
}

fn sr_rows(cfg: &SSRConfig, suite: &SrSuite, x: &BitString, y: &BitString) -> Result<(SRMatrix, SRMatrix)> {
    suite.check(cfg, x.len(), y.len())?;
    let mut w = Vec::with_capacity(cfg.n_rows());
    let mut ybar = Vec::with_capacity(cfg.n_rows());
    for i in 0..cfg.n_rows() as u64 {
        let r = BitString::from_u64(i, cfg.d);
        let wi = suite.ext2.eval(x, &suite.ext1.eval(y, &r)?)?;
        ybar.push(suite.ext3.eval(y, &wi)?);
        w.push(wi);
    }
    Ok((SRMatrix::new(cfg.ell, w)?, SRMatrix::new(cfg.row_len(), ybar)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SrQualityEntry {
    pub y: BitString,
    pub prob: f64,
    /// 1-based rows whose `W_i` is within `tau_row` of uniform.
    pub good_rows: Vec<usize>,
    pub subsets_tested: usize,
    pub worst_joint: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SrQualityReport {
    pub tau_row: f64,
    pub tau_joint: f64,
    pub entries: Vec<SrQualityEntry>,
    /// Mass of `y` with at least `2N/3` good rows and every tested
    /// `h`-subset of them within `tau_joint` of uniform.
    pub good_mass: f64,
}

/// Exact quality of the SR construction, one conditional evaluation per `y`.
///
/// Subsets of the good rows are tested exhaustively when there are at most
/// six good rows (or when `plan` is `All`), otherwise `plan` is sampled.
#[allow(clippy::too_many_arguments)]
pub fn sr_quality_test<P: Probability>(
    cfg: &SSRConfig,
    suite: &SrSuite,
    source_x: &DiscreteSource<P>,
    source_y: &DiscreteSource<P>,
    tau_row: f64,
    tau_joint: f64,
    plan: SubsetPlan,
    rng: &mut ExperimentRng,
    budget: u128,
) -> Result<SrQualityReport> {
    let (sx, sy) = (source_x.support_size()? as u128, source_y.support_size()? as u128);
    let per_eval = (cfg.n_rows() * cfg.b * cfg.h) as u128;
    guard("SR quality enumeration", sx * sy * per_eval, budget)?;
    let n = cfg.n_rows();
    let mut entries = Vec::new();
    let mut good_mass = 0.0;
    for (y, py) in source_y.table()? {
        let table = push_forward(
            &[source_x],
            |a| {
                let out = sr(cfg, suite, a[0], y)?;
                Ok(out.w.rows().iter().chain(out.z.rows()).cloned().collect())
            },
            budget,
        )?;
        let mut good_rows = Vec::new();
        for i in 0..n {
            if distance_from_uniform(&table.marginal(&[i])?).to_f64_lossy() <= tau_row {
                good_rows.push(i + 1);
            }
        }
        let mut worst_joint: f64 = 0.0;
        let mut subsets_tested = 0;
        if good_rows.len() >= cfg.h {
            let plan = if good_rows.len() <= 6 { SubsetPlan::All } else { plan };
            for pick in choose_subsets(good_rows.len(), cfg.h, plan, rng) {
                let vars: Vec<usize> = pick.iter().map(|&p| n + good_rows[p] - 1).collect();
                let dist = distance_from_uniform(&table.marginal(&vars)?).to_f64_lossy();
                worst_joint = worst_joint.max(dist);
                subsets_tested += 1;
            }
        }
        let pass = 3 * good_rows.len() >= 2 * n && worst_joint <= tau_joint;
        let prob = py.to_f64_lossy();
        if pass {
            good_mass += prob;
        }
        entries.push(SrQualityEntry {
            y: y.clone(),
            prob,
            good_rows,
            subsets_tested,
            worst_joint,
            pass,
        });
    }
    Ok(SrQualityReport {
        tau_row,
        tau_joint,
        entries,
        good_mass,
    })
}
