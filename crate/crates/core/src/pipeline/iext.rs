use std::fmt::Write as _;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{domain, Result};
use crate::extractors::{check_shape, ExtRef, SRExtractor};
use crate::lightestbin::{lightest_bin, BinOutcome};
use crate::rng::ExperimentRng;
use crate::srgen::{sr, SRMatrix, SSRConfig, SrOutput, SrSuite};

use super::suite::{build_sr_stage, RoleSpecs};
use super::{check_basicext, ParamSet};

/// Extractors of the three-source pipeline.
#[derive(Clone, Debug)]
pub struct IExtSuite {
    pub ssr: SSRConfig,
    pub sr: SrSuite,
    /// `Y2` seeded by a row of `Z1`, giving `m2` bits.
    pub ext_z2: ExtRef,
    /// `X` seeded by a row of `Z2`, giving `m3` bits.
    pub ext_z3: ExtRef,
}

impl IExtSuite {
    /// Fills every role for `x_len`-bit `X` and `y_len`-bit blocks of `Y`.
    pub fn build(
        params: &ParamSet,
        roles: &RoleSpecs,
        x_len: usize,
        y_len: usize,
        rng: &mut ExperimentRng,
    ) -> Result<Self> {
        let (ssr, sr) = build_sr_stage(params, roles, x_len, y_len, rng)?;
        Ok(IExtSuite {
            ssr,
            sr,
            ext_z2: roles.build("ext_z2", y_len, params.ell, params.m2, rng)?,
            ext_z3: roles.build("ext_z3", x_len, params.m2, params.m3, rng)?,
        })
    }

    fn check(
        &self,
        params: &ParamSet,
        basicext: &dyn SRExtractor,
        x: &BitString,
        y1: &BitString,
        y2: &BitString,
    ) -> Result<()> {
        if (self.ssr.h, self.ssr.ell, self.ssr.d) != (params.h, params.ell, params.d) {
            return domain(format!(
                "suite built for (h, ell, d) = ({}, {}, {}), parameters say ({}, {}, {})",
                self.ssr.h, self.ssr.ell, self.ssr.d, params.h, params.ell, params.d
            ));
        }
        self.sr.check(&self.ssr, x.len(), y1.len())?;
        check_shape(
            "ext_z2",
            self.ext_z2.as_ref(),
            Some(y2.len()),
            Some(params.ell),
            Some(params.m2),
        )?;
        check_shape(
            "ext_z3",
            self.ext_z3.as_ref(),
            Some(x.len()),
            Some(params.m2),
            Some(params.m3),
        )?;
        let n1 = params.n1().unwrap_or(usize::MAX);
        if (basicext.n(), basicext.row_len(), basicext.m()) != (y2.len(), params.m3, params.m_out)
            || (basicext.sound() && basicext.rows() != n1)
        {
            return domain(format!(
                "{} does not take a {}-bit source and {n1} rows of {} bits to {} bits",
                basicext.describe(),
                y2.len(),
                params.m3,
                params.m_out
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IExtTrace {
    /// Stage 1: `SR(X, Y1)`.
    pub sr: SrOutput,
    /// Stage 2.
    pub r: usize,
    pub bins: BinOutcome,
    /// Survivors beyond `floor(N / r)` dropped before padding; nonzero only
    /// when some bin is empty.
    pub truncated: usize,
    /// Stage 3: surviving rows padded with zero rows to `floor(N / r)`.
    pub z1: SRMatrix,
    /// Stage 4.
    pub z2: SRMatrix,
    /// Stage 5.
    pub z3: SRMatrix,
    /// Stage 6.
    pub v: BitString,
}

pub(crate) fn matrix_section(out: &mut String, title: &str, m: &SRMatrix) {
    let _ = writeln!(out, "{title}: {} x {}", m.n_rows(), m.row_len());
    for r in m.rows() {
        let _ = writeln!(out, "  {}", r.to_hex());
    }
}

impl IExtTrace {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[stage 1: SR]\n");
        matrix_section(&mut out, "W", &self.sr.w);
        matrix_section(&mut out, "Ybar", &self.sr.ybar);
        matrix_section(&mut out, "Z", &self.sr.z);
        out.push_str("[stage 2: lightest bin]\n");
        let _ = writeln!(out, "r = {}", self.r);
        let _ = writeln!(out, "bin_counts = {:?}", self.bins.bin_counts);
        let _ = writeln!(out, "chosen_bin = {}", self.bins.chosen_bin);
        let _ = writeln!(out, "survivors = {:?}", self.bins.survivors);
        out.push_str("[stage 3: Z1]\n");
        let _ = writeln!(out, "truncated = {}", self.truncated);
        matrix_section(&mut out, "Z1", &self.z1);
        out.push_str("[stage 4: Z2]\n");
        matrix_section(&mut out, "Z2", &self.z2);
        out.push_str("[stage 5: Z3]\n");
        matrix_section(&mut out, "Z3", &self.z3);
        out.push_str("[stage 6: V]\n");
        let _ = writeln!(out, "V = {} ({} bits)", self.v.to_hex(), self.v.len());
        out
    }
}

/// The three-source extractor on one input `(x, (y1, y2))`.
pub fn iext(
    params: &ParamSet,
    suite: &IExtSuite,
    basicext: &dyn SRExtractor,
    x: &BitString,
    y1: &BitString,
    y2: &BitString,
) -> Result<(BitString, IExtTrace)> {
    check_basicext(params.mode, basicext)?;
    suite.check(params, basicext, x, y1, y2)?;
    let (r, n1) = match (params.r(), params.n1()) {
        (Some(r), Some(n1)) => (r, n1),
        _ => return domain(format!("2^{} rows cannot be materialized", params.d)),
    };

    let out = sr(&suite.ssr, &suite.sr, x, y1)?;
    let bins = lightest_bin(out.z.rows(), r)?;
    let kept = &bins.survivors[..bins.survivors.len().min(n1)];
    let truncated = bins.survivors.len() - kept.len();
    let z1 = out.z.select(kept)?.pad_to(n1)?;
    let z2 = SRMatrix::new(
        params.m2,
        z1.rows()
            .iter()
            .map(|s| suite.ext_z2.eval(y2, s))
            .collect::<Result<_>>()?,
    )?;
    let z3 = SRMatrix::new(
        params.m3,
        z2.rows()
            .iter()
            .map(|s| suite.ext_z3.eval(x, s))
            .collect::<Result<_>>()?,
    )?;
    let v = basicext.eval(y2, &z3)?;
    if v.len() != params.m_out {
        return domain(format!("BasicExt produced {} bits, expected {}", v.len(), params.m_out));
    }
    let trace = IExtTrace {
        sr: out,
        r,
        bins,
        truncated,
        z1,
        z2,
        z3,
        v: v.clone(),
    };
    Ok((v, trace))
}
