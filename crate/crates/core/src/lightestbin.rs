//! The lightest-bin protocol used to shrink the row count of an SR source.

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BinOutcome {
    /// 1-based.
    pub chosen_bin: usize,
    /// 1-based player indices, ascending.
    pub survivors: Vec<usize>,
    pub bin_counts: Vec<usize>,
}

/// Player `i` reads the first `log2 r` bits of its row as the binary
/// expression of `bin - 1`. The winning bin is the least occupied nonempty
/// bin, lowest index on ties; its players survive.
pub fn lightest_bin(rows: &[BitString], r: usize) -> Result<BinOutcome> {
    if !r.is_power_of_two() {
        return domain(format!("bin count {r} is not a power of two"));
    }
    if rows.is_empty() {
        return domain("lightest bin needs at least one player");
    }
    let bits = r.trailing_zeros() as usize;
    let mut bins = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() < bits {
            return domain(format!(
                "row {} has {} bits, fewer than log2 r = {bits}",
                i + 1,
                row.len()
            ));
        }
        bins.push(row.prefix(bits)?.to_u64() as usize);
    }
    let mut bin_counts = vec![0usize; r];
    for &b in &bins {
        bin_counts[b] += 1;
    }
    let chosen = (0..r)
        .filter(|&b| bin_counts[b] > 0)
        .min_by_key(|&b| (bin_counts[b], b))
        .expect("some bin is occupied");
    let survivors = bins
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == chosen)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(BinOutcome {
        chosen_bin: chosen + 1,
        survivors,
        bin_counts,
    })
}

/// `gamma^2 / (16 h) * N^(1 - 2 / sqrt(h))`, rounded by [`round_bins`].
pub fn bin_count_from_params(n_rows: usize, h: usize, gamma: f64) -> usize {
    let raw = gamma * gamma / (16.0 * h as f64) * (n_rows as f64).powf(1.0 - 2.0 / (h as f64).sqrt());
    round_bins(raw, n_rows)
}

/// Rounds `raw` up to a power of two (so the result stays below `2 raw`)
/// and clamps it to `[1, N]`, taking the largest power of two not above `N`.
pub fn round_bins(raw: f64, n_rows: usize) -> usize {
    if raw.is_nan() || raw <= 1.0 || n_rows <= 1 {
        return 1;
    }
    let cap = 1usize << (usize::BITS - 1 - n_rows.leading_zeros());
    // Exact powers of two computed through powf may land a few ulps high.
    let exp = (raw.log2() - 1e-9).ceil();
    if exp >= (usize::BITS - 1) as f64 {
        return cap;
    }
    (1usize << exp as u32).min(cap)
}
