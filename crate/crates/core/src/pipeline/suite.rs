use std::collections::BTreeMap;
use std::sync::Arc;

use crate::alternating::AltExtConfig;
use crate::error::Result;
use crate::extractors::{
    check_shape, search_best_extractor, search_ideal_extractor_with, toeplitz_extractor, ExtRef, LookupExtractor,
    SearchOptions, ToeplitzFamily, DEFAULT_BUDGET,
};
use crate::rng::ExperimentRng;
use crate::srgen::{SSRConfig, SrSuite};

use super::ParamSet;

/// How to fill one extractor role of a pipeline.
#[derive(Clone, Debug)]
pub enum RoleSpec {
    /// Toeplitz hashing; a seed-indexed family of random Toeplitz matrices
    /// when the role's seed is shorter than `n + m - 1`.
    Toeplitz,
    /// A uniformly random table. No extraction guarantee.
    RandomLookup,
    /// Hill-climbing search over flat `(min(k, n), n)` sources for a table
    /// with worst-case error at most `target_eps`, or for the best table
    /// the trials reach when no target is given.
    Search {
        k: usize,
        target_eps: Option<f64>,
        trials: usize,
        steps: usize,
    },
    /// A fixed table, typically loaded from disk.
    Table(LookupExtractor),
}

pub fn build_role(
    role: &str,
    spec: &RoleSpec,
    n: usize,
    d: usize,
    m: usize,
    rng: &mut ExperimentRng,
) -> Result<ExtRef> {
    let ext: ExtRef = match spec {
        RoleSpec::Toeplitz if d + 1 == n + m && m <= n => Arc::new(toeplitz_extractor(n, m)?),
        RoleSpec::Toeplitz => Arc::new(ToeplitzFamily::random(n, d, m, rng)?),
        RoleSpec::RandomLookup => Arc::new(LookupExtractor::random(n, d, m, rng)?),
        RoleSpec::Search {
            k,
            target_eps,
            trials,
            steps,
        } => {
            let opts = SearchOptions {
                steps_per_trial: *steps,
                budget: DEFAULT_BUDGET,
            };
            let k = (*k).min(n);
            Arc::new(match target_eps {
                Some(t) => search_ideal_extractor_with(n, d, m, k, *t, *trials, rng, &opts)?,
                None => search_best_extractor(n, d, m, k, *trials, rng, &opts)?,
            })
        }
        RoleSpec::Table(t) => Arc::new(t.clone()),
    };
    check_shape(role, ext.as_ref(), Some(n), Some(d), Some(m))?;
    Ok(ext)
}

/// A default [`RoleSpec`] with per-role exceptions, keyed by role name.
///
/// Role names: `ext_q`, `ext_w`, `bridge`, `ext1`, `ext2`, `ext3`, and the
/// pipeline-specific `ext_z2`, `ext_z3` (three-source) or `ext_round`,
/// `ext_final` (block-source).
#[derive(Clone, Debug)]
pub struct RoleSpecs {
    pub default: RoleSpec,
    pub overrides: BTreeMap<String, RoleSpec>,
}

impl RoleSpecs {
    pub fn all(spec: RoleSpec) -> Self {
        RoleSpecs {
            default: spec,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with(mut self, role: &str, spec: RoleSpec) -> Self {
        self.overrides.insert(role.to_string(), spec);
        self
    }

    pub fn get(&self, role: &str) -> &RoleSpec {
        self.overrides.get(role).unwrap_or(&self.default)
    }

    pub fn build(&self, role: &str, n: usize, d: usize, m: usize, rng: &mut ExperimentRng) -> Result<ExtRef> {
        build_role(role, self.get(role), n, d, m, rng)
    }
}

/// Builds the SSR configuration and the SR extractors for sources of
/// `x_len` and `y_len` bits, in a fixed role order.
pub fn build_sr_stage(
    params: &ParamSet,
    roles: &RoleSpecs,
    x_len: usize,
    y_len: usize,
    rng: &mut ExperimentRng,
) -> Result<(SSRConfig, SrSuite)> {
    let ell = params.ell;
    let q_len = params.first_slice_len.max(params.slice_len);
    let ext_q = roles.build("ext_q", q_len, ell, ell, rng)?;
    let ext_w = roles.build("ext_w", x_len, ell, ell, rng)?;
    let bridge = roles.build("bridge", params.ybar_len, ell, params.slice_len, rng)?;
    let laext = AltExtConfig::new(ext_q, ext_w, ell, params.h)?;
    let ssr = SSRConfig::with_slices(
        params.h,
        ell,
        params.d,
        laext,
        bridge,
        params.first_slice_len,
        params.slice_len,
    )?;
    let suite = SrSuite {
        ext1: roles.build("ext1", y_len, params.d, ell, rng)?,
        ext2: roles.build("ext2", x_len, ell, ell, rng)?,
        ext3: roles.build("ext3", y_len, ell, params.ybar_len, rng)?,
    };
    Ok((ssr, suite))
}
