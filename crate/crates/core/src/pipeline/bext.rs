use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Error, Result};
use crate::extractors::{check_shape, ExtRef, SRExtractor};
use crate::lightestbin::{bin_count_from_params, lightest_bin};
use crate::rng::ExperimentRng;
use crate::srgen::{sr, SRMatrix, SSRConfig, SrOutput, SrSuite};

use super::iext::matrix_section;
use super::suite::{build_sr_stage, RoleSpecs};
use super::{check_basicext, ParamSet};

/// Extractors of the block-source pipeline. `X` and `Y` blocks share one
/// length, so a single extractor serves both sides in each role.
#[derive(Clone, Debug)]
pub struct BExtSuite {
    pub ssr: SSRConfig,
    pub sr: SrSuite,
    /// A fresh block seeded by a surviving row, giving `ell` bits.
    pub ext_round: ExtRef,
    /// The last block of one side seeded by a final row, giving `m2` bits.
    pub ext_final: ExtRef,
}

impl BExtSuite {
    pub fn build(params: &ParamSet, roles: &RoleSpecs, block_len: usize, rng: &mut ExperimentRng) -> Result<Self> {
        let (ssr, sr) = build_sr_stage(params, roles, block_len, block_len, rng)?;
        Ok(BExtSuite {
            ssr,
            sr,
            ext_round: roles.build("ext_round", block_len, params.ell, params.ell, rng)?,
            ext_final: roles.build("ext_final", block_len, params.ell, params.m2, rng)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlockSide {
    X,
    Y,
}

impl BlockSide {
    fn name(self) -> &'static str {
        match self {
            BlockSide::X => "X",
            BlockSide::Y => "Y",
        }
    }
}

impl fmt::Display for BlockSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BExtRound {
    /// 1-based loop counter `t`.
    pub t: usize,
    pub rows_in: usize,
    pub r: usize,
    pub chosen_bin: usize,
    pub bin_counts: Vec<usize>,
    pub survivors: Vec<usize>,
    pub side: BlockSide,
    /// 1-based index of the fresh block within its side.
    pub block: usize,
    pub z_next: SRMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BExtTrace {
    pub sr: SrOutput,
    pub rounds: Vec<BExtRound>,
    /// The final step ran with `X` and `Y` exchanged because `v_y = 1`.
    pub swapped: bool,
    /// 1-based indices of the last `X` and `Y` blocks used.
    pub last_x: usize,
    pub last_y: usize,
    /// Zero rows added to reach `floor(16 h^3 / gamma^2)`.
    pub padded_rows: usize,
    pub z_prime: SRMatrix,
    pub w: BitString,
}

impl BExtTrace {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[initial SR]\n");
        matrix_section(&mut out, "Z_1", &self.sr.z);
        for r in &self.rounds {
            let _ = writeln!(out, "[round {}]", r.t);
            let _ = writeln!(out, "rows_in = {}", r.rows_in);
            let _ = writeln!(out, "r = {}", r.r);
            let _ = writeln!(out, "bin_counts = {:?}", r.bin_counts);
            let _ = writeln!(out, "chosen_bin = {}", r.chosen_bin);
            let _ = writeln!(out, "survivors = {:?}", r.survivors);
            let _ = writeln!(out, "block = {}{}", r.side, r.block);
            matrix_section(&mut out, &format!("Z_{}", r.t + 1), &r.z_next);
        }
        out.push_str("[final]\n");
        let _ = writeln!(out, "swapped = {}", self.swapped);
        let _ = writeln!(out, "last_x = X{}\nlast_y = Y{}", self.last_x, self.last_y);
        let _ = writeln!(out, "padded_rows = {}", self.padded_rows);
        matrix_section(&mut out, "Z'", &self.z_prime);
        let _ = writeln!(out, "W = {} ({} bits)", self.w.to_hex(), self.w.len());
        out
    }
}

/// The block-source extractor.
///
/// After `SR(X_1, Y_1)` the loop runs lightest bin on the current rows and
/// extracts the next rows from a fresh `Y` block, then a fresh `X` block,
/// and so on, until at most `16 h^3 / gamma^2` rows remain. A round that
/// keeps every row is an error, since the loop could not terminate.
pub fn bext(
    params: &ParamSet,
    suite: &BExtSuite,
    basicext: &dyn SRExtractor,
    x_blocks: &[BitString],
    y_blocks: &[BitString],
) -> Result<(BitString, BExtTrace)> {
    check_basicext(params.mode, basicext)?;
    let (x1, y1) = match (x_blocks.first(), y_blocks.first()) {
        (Some(x), Some(y)) => (x, y),
        _ => return domain("each source needs at least one block"),
    };
    let n = x1.len();
    if let Some(b) = x_blocks.iter().chain(y_blocks).find(|b| b.len() != n) {
        return domain(format!("blocks must all have {n} bits, found one of {}", b.len()));
    }
    check_shape(
        "ext_round",
        suite.ext_round.as_ref(),
        Some(n),
        Some(params.ell),
        Some(params.ell),
    )?;
    check_shape(
        "ext_final",
        suite.ext_final.as_ref(),
        Some(n),
        Some(params.ell),
        Some(params.m2),
    )?;

    let first = sr(&suite.ssr, &suite.sr, x1, y1)?;
    let mut z = first.z.clone();
    let mut v_y = true;
    let (mut last_x, mut last_y) = (1usize, 1usize);
    let mut rounds = Vec::new();
    while z.n_rows() as f64 > params.loop_threshold {
        let t = rounds.len() + 1;
        let rows_in = z.n_rows();
        let r = params
            .bins_override
            .unwrap_or_else(|| bin_count_from_params(rows_in, params.h, params.gamma));
        let bins = lightest_bin(z.rows(), r)?;
        if bins.survivors.len() == rows_in {
            return domain(format!(
                "lightest bin made no progress in round {t}: {r} bins kept all {rows_in} rows"
            ));
        }
        let (side, blocks, last) = if v_y {
            (BlockSide::Y, y_blocks, &mut last_y)
        } else {
            (BlockSide::X, x_blocks, &mut last_x)
        };
        let block = blocks.get(*last).ok_or(Error::InsufficientBlocks {
            round: t,
            source_name: side.name(),
        })?;
        *last += 1;
        let rows = bins
            .survivors
            .iter()
            .map(|&i| suite.ext_round.eval(block, z.row(i)?))
            .collect::<Result<_>>()?;
        z = SRMatrix::new(params.ell, rows)?;
        rounds.push(BExtRound {
            t,
            rows_in,
            r,
            chosen_bin: bins.chosen_bin,
            bin_counts: bins.bin_counts,
            survivors: bins.survivors,
            side,
            block: *last,
            z_next: z.clone(),
        });
        v_y = !v_y;
    }

    let target_rows = params.loop_threshold.floor() as usize;
    let padded_rows = target_rows.saturating_sub(z.n_rows());
    let z = z.pad_to(z.n_rows() + padded_rows)?;
    // With v_y = 1 the roles of X and Y are exchanged.
    let swapped = v_y;
    let (seed_side, basic_side) = if swapped {
        (&y_blocks[last_y - 1], &x_blocks[last_x - 1])
    } else {
        (&x_blocks[last_x - 1], &y_blocks[last_y - 1])
    };
    let z_prime = SRMatrix::new(
        params.m2,
        z.rows()
            .iter()
            .map(|s| suite.ext_final.eval(seed_side, s))
            .collect::<Result<_>>()?,
    )?;
    let w = basicext.eval(basic_side, &z_prime)?;
    let trace = BExtTrace {
        sr: first,
        rounds,
        swapped,
        last_x,
        last_y,
        padded_rows,
        z_prime,
        w: w.clone(),
    };
    Ok((w, trace))
}
