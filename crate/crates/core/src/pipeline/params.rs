//! Parameter derivation and the constraint checklist.
//!
//! Every non-integer quantity (`k^alpha`, `k^beta`, `sqrt k`, `1.9k`, ...) is
//! rounded up, except `h`, which becomes the smallest power of two at least
//! `k^alpha`. Logarithms are base two.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Relaxed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Relaxed => "relaxed",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Mode::Strict),
            "relaxed" => Ok(Mode::Relaxed),
            _ => domain(format!("unknown mode `{s}` (strict | relaxed)")),
        }
    }
}

/// Constants the construction leaves unspecified.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constants {
    /// `C` in `ell >= C h log n`.
    pub c_ell: f64,
    /// Smallest admissible `h` for the lightest-bin step.
    pub c1: f64,
    /// `d = ceil(seed_factor * log n)` index bits unless overridden.
    pub seed_factor: f64,
    /// Multiplier on `t * eps` in the look-ahead check.
    pub lookahead_c: f64,
    /// Row length of the SSR input as a fraction of `k`.
    pub ybar_frac: f64,
    /// Row length of the last SR matrix as a fraction of `k`.
    pub m3_frac: f64,
    /// Output length as a fraction of `k`.
    pub out_frac: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_ell: 8.0,
            c1: 2.0,
            seed_factor: 2.0,
            lookahead_c: 4.0,
            ybar_frac: 0.9,
            m3_frac: 1.9,
            out_frac: 1.8,
        }
    }
}

/// Explicit values that replace derived ones, for toy runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub h: Option<usize>,
    pub ell: Option<usize>,
    pub d: Option<usize>,
    pub bins: Option<usize>,
    pub gamma: Option<f64>,
    pub first_slice_len: Option<usize>,
    pub slice_len: Option<usize>,
    pub ybar_len: Option<usize>,
    pub m2: Option<usize>,
    pub m3: Option<usize>,
    pub m_out: Option<usize>,
    pub log_inv_eps_prime: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamInputs {
    /// Bits per source block. A float so that symbolic-scale lengths
    /// such as `2^300` can be checked.
    pub n: f64,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mode: Mode,
    pub constants: Constants,
    pub overrides: Overrides,
}

impl ParamInputs {
    /// Three-source defaults: `alpha = 1/6`, `beta = 1/3`, `gamma = 1/4`.
    pub fn iext(n: f64, k: f64, mode: Mode) -> Self {
        ParamInputs {
            n,
            k,
            alpha: 1.0 / 6.0,
            beta: 1.0 / 3.0,
            gamma: 0.25,
            mode,
            constants: Constants::default(),
            overrides: Overrides::default(),
        }
    }

    /// Block-source exponents for a given `eta`: `mu = 0.95 eta`,
    /// `alpha = mu / (6 (2 + mu))`, `beta = (6 + 2 mu) / (6 (2 + mu))`,
    /// `gamma = eta / 70`.
    pub fn bext(n: f64, k: f64, eta: f64, mode: Mode) -> Self {
        let mu = 0.95 * eta;
        ParamInputs {
            n,
            k,
            alpha: mu / (6.0 * (2.0 + mu)),
            beta: (6.0 + 2.0 * mu) / (6.0 * (2.0 + mu)),
            gamma: eta / 70.0,
            mode,
            constants: Constants::default(),
            overrides: Overrides::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintItem {
    pub name: String,
    pub formula: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// `lhs - rhs`, oriented so that a positive margin passes.
    pub margin: f64,
    /// Reported only; never fails strict mode.
    pub advisory: bool,
}

impl ConstraintItem {
    fn at_least(name: &str, formula: &str, lhs: f64, rhs: f64) -> Self {
        ConstraintItem {
            name: name.into(),
            formula: formula.into(),
            lhs,
            rhs,
            pass: lhs >= rhs,
            margin: lhs - rhs,
            advisory: false,
        }
    }

    fn greater(name: &str, formula: &str, lhs: f64, rhs: f64) -> Self {
        ConstraintItem {
            pass: lhs > rhs,
            ..Self::at_least(name, formula, lhs, rhs)
        }
    }

    fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub items: Vec<ConstraintItem>,
}

impl ConstraintReport {
    /// Names of the failing, non-advisory items.
    pub fn violations(&self) -> Vec<String> {
        self.items
            .iter()
            .filter(|c| !c.pass && !c.advisory)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintItem> {
        self.items.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.items {
            let status = match (c.pass, c.advisory) {
                (true, _) => "pass",
                (false, true) => "advisory-fail",
                (false, false) => "FAIL",
            };
            let _ = writeln!(
                out,
                "{:<16} {:<14} {}  lhs={:.6e} rhs={:.6e} margin={:.6e}",
                c.name, status, c.formula, c.lhs, c.rhs, c.margin
            );
        }
        out
    }
}

/// Nominal stage errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    /// Error of the index extractor of the SR step.
    pub eps1: f64,
    /// `2^-ell`-type error of the remaining seeded extractors.
    pub eps2: f64,
    /// `h`-wise error handed to the lightest-bin step.
    pub eps_prime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSet {
    pub n: f64,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Set for block-source parameter sets.
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    pub mode: Mode,
    pub h: usize,
    pub ell: usize,
    /// `log2 h`.
    pub l: usize,
    /// Index bits; `N = 2^d`.
    pub d: usize,
    /// Index blocks, `ceil(d / l)`.
    pub b: usize,
    /// `log2 r` for the first lightest-bin round.
    pub log2_r: usize,
    /// Rows kept after the first lightest-bin round, `floor(N / r)`, as a
    /// base-two logarithm.
    pub log2_n1: usize,
    /// Look-ahead rounds, equal to `h`.
    pub t: usize,
    pub first_slice_len: usize,
    pub slice_len: usize,
    pub ybar_len: usize,
    pub m2: usize,
    pub m3: usize,
    pub m_out: usize,
    pub log_inv_eps_prime: f64,
    /// Explicit per-round bin count, when overridden.
    pub bins_override: Option<usize>,
    /// Block-source loop stops once the row count is at most this.
    pub loop_threshold: f64,
    /// Blocks per source the block-source theorem asks for.
    pub blocks: Option<usize>,
    pub error_budget: ErrorBudget,
    pub constants: Constants,
    pub report: ConstraintReport,
}

impl ParamSet {
    /// `N`, when it fits a machine word.
    pub fn n_rows(&self) -> Option<usize> {
        (self.d < usize::BITS as usize - 1).then(|| 1usize << self.d)
    }

    pub fn r(&self) -> Option<usize> {
        (self.log2_r < usize::BITS as usize - 1).then(|| 1usize << self.log2_r)
    }

    pub fn n1(&self) -> Option<usize> {
        (self.log2_n1 < usize::BITS as usize - 1).then(|| 1usize << self.log2_n1)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v}"));
        let _ = writeln!(out, "mode = {}", self.mode);
        let _ = writeln!(out, "n = {}\nk = {}", self.n, self.k);
        let _ = writeln!(
            out,
            "alpha = {}\nbeta = {}\ngamma = {}",
            self.alpha, self.beta, self.gamma
        );
        let _ = writeln!(out, "eta = {}\nmu = {}", opt(self.eta), opt(self.mu));
        let _ = writeln!(
            out,
            "h = {}\nell = {}\nl = {}\nd = {}\nb = {}",
            self.h, self.ell, self.l, self.d, self.b
        );
        let _ = writeln!(
            out,
            "log2_r = {}\nlog2_n1 = {}\nt = {}",
            self.log2_r, self.log2_n1, self.t
        );
        let _ = writeln!(
            out,
            "first_slice_len = {}\nslice_len = {}\nybar_len = {}",
            self.first_slice_len, self.slice_len, self.ybar_len
        );
        let _ = writeln!(out, "m2 = {}\nm3 = {}\nm_out = {}", self.m2, self.m3, self.m_out);
        let _ = writeln!(out, "log_inv_eps_prime = {}", self.log_inv_eps_prime);
        let _ = writeln!(out, "loop_threshold = {}", self.loop_threshold);
        if let Some(b) = self.blocks {
            let _ = writeln!(out, "blocks = {b}");
        }
        let e = &self.error_budget;
        let _ = writeln!(
            out,
            "eps1 = {}\neps2 = {:e}\neps_prime = {:e}",
            e.eps1, e.eps2, e.eps_prime
        );
        out
    }
}

/// Lengths beyond `usize` saturate: at symbolic scale they are only
/// reported, never materialized.
fn ceil_usize(v: f64, what: &str) -> Result<usize> {
    if !v.is_finite() || v < 0.0 {
        return domain(format!("{what} = {v} is out of range"));
    }
    Ok(v.ceil() as usize)
}

/// `log2 r` for `N = 2^d` rows: the bin-count formula rounded up to a power
/// of two and clamped to `[1, N]`, computed in the log domain.
pub fn log2_bins(d: usize, h: usize, gamma: f64) -> usize {
    let raw = 2.0 * gamma.log2() - (16.0 * h as f64).log2() + d as f64 * (1.0 - 2.0 / (h as f64).sqrt());
    if raw <= 0.0 {
        return 0;
    }
    ((raw - 1e-9).ceil() as usize).min(d)
}

/// Both inequalities closing the three-source parameter argument:
/// `k >= 24 k^(3 alpha + beta) log n` and `k^beta >= C k^alpha log n`.
/// Compared in the log domain so that symbolic-scale `k` stays finite.
pub fn theorem_inequalities(k: f64, log_n: f64, alpha: f64, beta: f64, c: f64) -> [ConstraintItem; 2] {
    let lk = k.log2();
    let ll = log_n.log2();
    [
        ConstraintItem::at_least(
            "thm_ineq1",
            "k >= 24 k^(3a+b) log n",
            lk,
            24f64.log2() + (3.0 * alpha + beta) * lk + ll,
        ),
        ConstraintItem::at_least("thm_ineq2", "k^b >= C k^a log n", beta * lk, c.log2() + alpha * lk + ll),
    ]
}

pub fn derive_params(inputs: &ParamInputs) -> Result<ParamSet> {
    derive(inputs, None)
}

/// Block-source parameters for `eta`; `inputs` supplies `n`, `k`, mode,
/// constants and overrides, its exponents are recomputed from `eta`.
pub fn bext_params(inputs: &ParamInputs, eta: f64) -> Result<ParamSet> {
    if eta.is_nan() || eta <= 0.0 {
        return domain(format!("eta = {eta} must be positive"));
    }
    let mut i = ParamInputs::bext(inputs.n, inputs.k, eta, inputs.mode);
    i.constants = inputs.constants.clone();
    i.overrides = inputs.overrides.clone();
    derive(&i, Some(eta))
}

fn derive(inputs: &ParamInputs, eta: Option<f64>) -> Result<ParamSet> {
    let ParamInputs {
        n,
        k,
        alpha,
        beta,
        mode,
        ..
    } = *inputs;
    let c = &inputs.constants;
    let o = &inputs.overrides;
    let gamma = o.gamma.unwrap_or(inputs.gamma);
    if !(0.0 < alpha && alpha < beta && beta < 1.0) {
        return domain(format!("need 0 < alpha < beta < 1, got alpha = {alpha}, beta = {beta}"));
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return domain(format!("need 0 < gamma < 1, got {gamma}"));
    }
    if n.is_nan() || k.is_nan() || n < 2.0 || k < 1.0 {
        return domain(format!("need n >= 2 and k >= 1, got n = {n}, k = {k}"));
    }
    let log_n = n.log2();
    let k_alpha = k.powf(alpha);

    let h = match o.h {
        Some(h) => h,
        None => {
            let lg = k_alpha.log2().ceil().max(1.0);
            if lg > 40.0 {
                return domain(format!("h = 2^{lg} is out of range"));
            }
            1usize << lg as u32
        }
    };
    if h < 2 || !h.is_power_of_two() {
        return domain(format!("h = {h} must be a power of two, at least 2"));
    }
    let ell = match o.ell {
        Some(v) => v,
        None => ceil_usize(k.powf(beta), "ell")?,
    };
    let d = match o.d {
        Some(v) => v,
        None => ceil_usize(c.seed_factor * log_n, "d")?,
    };
    if ell == 0 || d == 0 {
        return domain("ell and d must be positive");
    }
    let l = h.trailing_zeros() as usize;
    let b = d.div_ceil(l);
    let log2_r = match o.bins {
        Some(r) if r.is_power_of_two() => r.trailing_zeros() as usize,
        Some(r) => return domain(format!("bin count {r} is not a power of two")),
        None => log2_bins(d, h, gamma),
    };
    if log2_r > d {
        return domain(format!("2^{log2_r} bins exceed 2^{d} rows"));
    }
    // By default eps' is the largest error the lightest-bin step accepts,
    // one bit below N^(-6h), so its own check holds with unit slack and
    // the length checks that depend on it are as weak as possible.
    let log_inv_eps_prime = o.log_inv_eps_prime.unwrap_or(6.0 * (h * d) as f64 + 1.0);
    let hf = h as f64;
    let ellf = ell as f64;
    let df = d as f64;

    let mut items = vec![
        ConstraintItem::at_least(
            "lemma10_entropy",
            "k >= 2(bh+2)(h^2+12)ell",
            k,
            2.0 * (b as f64 * hf + 2.0) * (hf * hf + 12.0) * ellf,
        ),
        ConstraintItem::at_least("ell_vs_h_log_n", "ell >= C h log n", ellf, c.c_ell * hf * log_n),
        ConstraintItem::at_least("sr_entropy", "k >= (h+1) ell", k, (hf + 1.0) * ellf),
        ConstraintItem::greater("lemma13_eps", "eps' < N^(-6h)", log_inv_eps_prime, 6.0 * hf * df),
        ConstraintItem::greater(
            "lemma13_k",
            "k > 20h(log n + log 1/eps')",
            k,
            20.0 * hf * (log_n + log_inv_eps_prime),
        ),
        ConstraintItem::greater(
            "lemma13_m",
            "ell > 10(log n + log 1/eps')",
            ellf,
            10.0 * (log_n + log_inv_eps_prime),
        ),
        ConstraintItem::at_least("h_min", "h >= C1", hf, c.c1),
        ConstraintItem::at_least("h_lower", "h >= k^a", hf, k_alpha),
        ConstraintItem::greater("h_upper", "h < 2 k^a", 2.0 * k_alpha, hf),
    ];
    items.extend(theorem_inequalities(k, log_n, alpha, beta, c.c_ell));
    // Look-ahead entropy requirement with eps = 2^-ell; its constants are
    // proof artifacts.
    items.push(
        ConstraintItem::greater(
            "lemma7_entropy",
            "k > h t ell + 10 ell + 2 log 1/eps",
            k,
            hf * hf * ellf + 10.0 * ellf + 2.0 * ellf,
        )
        .advisory(),
    );
    let loop_threshold = 16.0 * hf.powi(3) / (gamma * gamma);
    let blocks = eta.map(|e| (7.0 / e).ceil() as usize + 1);
    if eta.is_some() {
        items.push(ConstraintItem::at_least(
            "bext_round_output",
            "k >= 2 h ell",
            k,
            2.0 * hf * ellf,
        ));
    }
    let report = ConstraintReport { items };

    let set = ParamSet {
        n,
        k,
        alpha,
        beta,
        gamma,
        eta,
        mu: eta.map(|e| 0.95 * e),
        mode,
        h,
        ell,
        l,
        d,
        b,
        log2_r,
        log2_n1: d - log2_r,
        t: h,
        first_slice_len: o.first_slice_len.unwrap_or((h + 12).saturating_mul(ell)),
        slice_len: o
            .slice_len
            .unwrap_or(h.saturating_mul(h).saturating_add(12).saturating_mul(ell)),
        ybar_len: match o.ybar_len {
            Some(v) => v,
            None => ceil_usize(c.ybar_frac * k, "ybar_len")?,
        },
        m2: match o.m2 {
            Some(v) => v,
            None if eta.is_some() => ceil_usize(c.m3_frac * k, "m2")?,
            None => ceil_usize(k.sqrt(), "m2")?,
        },
        m3: match o.m3 {
            Some(v) => v,
            None => ceil_usize(c.m3_frac * k, "m3")?,
        },
        m_out: match o.m_out {
            Some(v) => v,
            None => ceil_usize(c.out_frac * k, "m_out")?,
        },
        log_inv_eps_prime,
        bins_override: o.bins,
        loop_threshold,
        blocks,
        error_budget: ErrorBudget {
            eps1: 0.25,
            eps2: (-ellf).exp2(),
            eps_prime: (-log_inv_eps_prime).exp2(),
        },
        constants: c.clone(),
        report,
    };
    if mode == Mode::Strict && !set.report.all_pass() {
        return Err(Error::Constraint(Box::new(set.report)));
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C0Point {
    pub log_n: u32,
    pub k: f64,
    pub ineq1: bool,
    pub ineq2: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C0Report {
    /// Smallest `log2 n` from which both inequalities hold on the whole
    /// scanned grid, if any.
    pub c0_log_n: Option<u32>,
    pub grid: Vec<C0Point>,
}

/// Scans `log2 n = 1..=max_log_n` with `k = k_of_log_n(log2 n)` and reports
/// where both theorem inequalities hold from some point on.
pub fn solve_c0(alpha: f64, beta: f64, c: f64, k_of_log_n: impl Fn(f64) -> f64, max_log_n: u32) -> C0Report {
    let grid: Vec<C0Point> = (1..=max_log_n)
        .map(|ln| {
            let k = k_of_log_n(ln as f64);
            let [a, b] = theorem_inequalities(k, ln as f64, alpha, beta, c);
            C0Point {
                log_n: ln,
                k,
                ineq1: a.pass,
                ineq2: b.pass,
            }
        })
        .collect();
    let mut c0 = None;
    for p in grid.iter().rev() {
        if p.ineq1 && p.ineq2 {
            c0 = Some(p.log_n);
        } else {
            break;
        }
    }
    C0Report { c0_log_n: c0, grid }
}
