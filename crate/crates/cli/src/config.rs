//! Experiment configuration: plain `key = value` lines grouped into
//! `[params]`, `[extractors]`, `[sources]`, `[eval]` and `[output]`
//! sections. `#` starts a comment. Serialization is canonical, so
//! parse, serialize, parse returns the same value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mse_core::pipeline::{bext_params, derive_params, Constants, Mode, Overrides, ParamInputs, ParamSet};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    IExt,
    BExt,
}

impl Pipeline {
    fn name(self) -> &'static str {
        match self {
            Pipeline::IExt => "iext",
            Pipeline::BExt => "bext",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamsBlock {
    pub pipeline: Pipeline,
    pub n: f64,
    pub k: f64,
    pub mode: Mode,
    /// Block-source rate; the block pipeline derives its exponents from it.
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub constants: Constants,
    pub overrides: Overrides,
}

/// Settings of one hill-climbing search. `target = None` asks for the
/// best table the trials reach.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpec {
    pub k: usize,
    pub target: Option<f64>,
    pub trials: usize,
    pub steps: usize,
}

pub const DEFAULT_TRIALS: usize = 8;
pub const DEFAULT_STEPS: usize = 4000;

#[derive(Clone, Debug, PartialEq)]
pub enum RoleKind {
    Toeplitz,
    Random,
    LookupFile(PathBuf),
    Search(SearchSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasicExtKind {
    /// XOR fold of a role extractor; structural runs only.
    Fold,
    Search(SearchSpec),
}

/// A standalone table search for the `search` command.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchJob {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub spec: SearchSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractorsBlock {
    pub default: RoleKind,
    pub roles: BTreeMap<String, RoleKind>,
    pub basicext: BasicExtKind,
    pub jobs: BTreeMap<String, SearchJob>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Uniform,
    /// A random flat source with `2^k` support points, drawn per fixture.
    Flat {
        k: usize,
    },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourcesBlock {
    pub specs: BTreeMap<String, SourceSpec>,
    /// Blocks per source for the block pipeline.
    pub blocks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Subsets {
    All,
    Sample(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalBlock {
    pub seed: u64,
    pub budget: u128,
    pub fixtures: usize,
    pub subsets: Subsets,
    pub max_v: f64,
    pub max_strong: f64,
    pub max_hwise: f64,
    /// Entropy for table evaluation; defaults to each table's claim.
    pub table_k: Option<usize>,
    /// Bound on a table's worst flat error; defaults to its recorded error.
    pub max_table_eps: Option<f64>,
    pub min_source_k: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: ParamsBlock,
    pub extractors: ExtractorsBlock,
    pub sources: SourcesBlock,
    pub eval: EvalBlock,
    pub output: OutputBlock,
}

pub const ROLES: [&str; 11] = [
    "ext_q",
    "ext_w",
    "bridge",
    "ext1",
    "ext2",
    "ext3",
    "ext_z2",
    "ext_z3",
    "ext_round",
    "ext_final",
    "fold",
];
const SOURCE_NAMES: [&str; 4] = ["x", "y", "y1", "y2"];

struct Entry {
    line: usize,
    key: String,
    value: String,
}

/// Entries of one section; keys are taken as they are interpreted and
/// anything left over is reported as unknown.
struct Fields<'a> {
    path: &'a Path,
    section: &'static str,
    end: usize,
    entries: Vec<Entry>,
}

impl<'a> Fields<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        let e = self.entries.remove(i);
        Some((e.line, e.value))
    }

    fn take_prefixed(&mut self, prefix: &str) -> Vec<(usize, String, String)> {
        let (hit, rest): (Vec<Entry>, Vec<Entry>) = std::mem::take(&mut self.entries)
            .into_iter()
            .partition(|e| e.key.starts_with(prefix));
        self.entries = rest;
        hit.into_iter()
            .map(|e| (e.line, e.key[prefix.len()..].to_string(), e.value))
            .collect()
    }

    fn parse<T>(&mut self, key: &str, f: impl Fn(&str) -> Option<T>, what: &str) -> CliResult<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => f(&v)
                .map(Some)
                .ok_or_else(|| self.err(line, format!("{key} = {v:?} is not {what}"))),
        }
    }

    fn required<T>(&mut self, key: &str, f: impl Fn(&str) -> Option<T>, what: &str) -> CliResult<T> {
        let end = self.end;
        let section = self.section;
        self.parse(key, f, what)?
            .ok_or_else(|| self.err(end, format!("[{section}] needs {key}")))
    }

    fn finish(self) -> CliResult<()> {
        match self.entries.first() {
            Some(e) => Err(self.err(e.line, format!("unknown key {} in [{}]", e.key, self.section))),
            None => Ok(()),
        }
    }
}

/// `a/b` or a decimal.
fn num(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => s.parse().ok().filter(|v: &f64| !v.is_nan()),
    }
}

fn int<T: std::str::FromStr>(s: &str) -> Option<T> {
    s.parse().ok()
}

/// `word key=value ...`
fn words(v: &str) -> (&str, Vec<(&str, &str)>, Vec<&str>) {
    let mut it = v.split_whitespace();
    let head = it.next().unwrap_or("");
    let mut kv = Vec::new();
    let mut bare = Vec::new();
    for w in it {
        match w.split_once('=') {
            Some((k, v)) => kv.push((k, v)),
            None => bare.push(w),
        }
    }
    (head, kv, bare)
}

fn parse_kv(kv: &[(&str, &str)], allowed: &[&str]) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (k, v) in kv {
        if !allowed.contains(k) {
            return Err(format!("unknown setting {k}"));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("{k} given twice"));
        }
    }
    Ok(out)
}

fn parse_search(kv: &BTreeMap<String, String>) -> Result<SearchSpec, String> {
    let get_int = |key: &str, default: Option<usize>| -> Result<usize, String> {
        match kv.get(key) {
            Some(v) => v.parse().map_err(|_| format!("{key}={v} is not an integer")),
            None => default.ok_or_else(|| format!("search needs {key}=")),
        }
    };
    let target = match kv.get("target").map(String::as_str) {
        None | Some("best") => None,
        Some(v) => Some(
            num(v)
                .filter(|t| *t >= 0.0)
                .ok_or_else(|| format!("target={v} is not a non-negative number"))?,
        ),
    };
    Ok(SearchSpec {
        k: get_int("k", None)?,
        target,
        trials: get_int("trials", Some(DEFAULT_TRIALS))?,
        steps: get_int("steps", Some(DEFAULT_STEPS))?,
    })
}

fn fmt_search(s: &SearchSpec) -> String {
    let target = s.target.map_or("best".to_string(), |t| t.to_string());
    format!("k={} target={target} trials={} steps={}", s.k, s.trials, s.steps)
}

fn parse_role(v: &str) -> Result<RoleKind, String> {
    let (head, kv, bare) = words(v);
    match head {
        "toeplitz" | "random" if !kv.is_empty() || !bare.is_empty() => Err(format!("{head} takes no settings")),
        "toeplitz" => Ok(RoleKind::Toeplitz),
        "random" => Ok(RoleKind::Random),
        "lookup-file" => {
            let path = v["lookup-file".len()..].trim();
            if path.is_empty() {
                return Err("lookup-file needs a path".into());
            }
            Ok(RoleKind::LookupFile(PathBuf::from(path)))
        }
        "search" if bare.is_empty() => Ok(RoleKind::Search(parse_search(&parse_kv(
            &kv,
            &["k", "target", "trials", "steps"],
        )?)?)),
        _ => Err(format!(
            "{v:?} is not toeplitz, random, lookup-file PATH or search k=.."
        )),
    }
}

fn fmt_role(r: &RoleKind) -> String {
    match r {
        RoleKind::Toeplitz => "toeplitz".into(),
        RoleKind::Random => "random".into(),
        RoleKind::LookupFile(p) => format!("lookup-file {}", p.display()),
        RoleKind::Search(s) => format!("search {}", fmt_search(s)),
    }
}

fn parse_source(v: &str) -> Result<SourceSpec, String> {
    let (head, kv, bare) = words(v);
    match head {
        "uniform" if kv.is_empty() && bare.is_empty() => Ok(SourceSpec::Uniform),
        "flat" if bare.is_empty() => {
            let kv = parse_kv(&kv, &["k"])?;
            let k = kv.get("k").ok_or("flat needs k=")?;
            Ok(SourceSpec::Flat {
                k: k.parse().map_err(|_| format!("k={k} is not an integer"))?,
            })
        }
        "file" => {
            let path = v["file".len()..].trim();
            if path.is_empty() {
                return Err("file needs a path".into());
            }
            Ok(SourceSpec::File(PathBuf::from(path)))
        }
        _ => Err(format!("{v:?} is not uniform, flat k=.. or file PATH")),
    }
}

fn fmt_source(s: &SourceSpec) -> String {
    match s {
        SourceSpec::Uniform => "uniform".into(),
        SourceSpec::Flat { k } => format!("flat k={k}"),
        SourceSpec::File(p) => format!("file {}", p.display()),
    }
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses `text`; `path` only labels diagnostics.
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let perr = |line: usize, msg: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let end = text.lines().count().max(1);
        let mut sections: BTreeMap<&'static str, Vec<Entry>> = BTreeMap::new();
        let mut current: Option<&'static str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = match raw.find(" #").or_else(|| raw.find("\t#")) {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                let name = ["params", "extractors", "sources", "eval", "output"]
                    .into_iter()
                    .find(|s| *s == name.trim())
                    .ok_or_else(|| perr(line, format!("unknown section [{}]", name.trim())))?;
                if sections.contains_key(name) {
                    return Err(perr(line, format!("section [{name}] appears twice")));
                }
                sections.insert(name, Vec::new());
                current = Some(name);
                continue;
            }
            let section = current.ok_or_else(|| perr(line, "key outside any section".into()))?;
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| perr(line, format!("expected key = value, got {body:?}")))?;
            let key = k.trim().to_string();
            let entries = sections.get_mut(section).expect("section registered");
            if entries.iter().any(|e| e.key == key) {
                return Err(perr(line, format!("{key} appears twice in [{section}]")));
            }
            entries.push(Entry {
                line,
                key,
                value: v.trim().to_string(),
            });
        }
        let mut fields = |section: &'static str| Fields {
            path,
            section,
            end,
            entries: sections.remove(section).unwrap_or_default(),
        };

        // [params]
        let mut f = fields("params");
        let pipeline = f
            .parse(
                "pipeline",
                |v| match v {
                    "iext" => Some(Pipeline::IExt),
                    "bext" => Some(Pipeline::BExt),
                    _ => None,
                },
                "iext or bext",
            )?
            .unwrap_or(Pipeline::IExt);
        let n = f.required("n", num, "a number")?;
        let k = f.required("k", num, "a number")?;
        let mode = f
            .parse("mode", |v| v.parse().ok(), "strict or relaxed")?
            .unwrap_or(Mode::Relaxed);
        let eta = f.parse("eta", num, "a number")?;
        let alpha = f.parse("alpha", num, "a number")?;
        let beta = f.parse("beta", num, "a number")?;
        let mut constants = Constants::default();
        for (key, slot) in [
            ("c_ell", &mut constants.c_ell),
            ("c1", &mut constants.c1),
            ("seed_factor", &mut constants.seed_factor),
            ("lookahead_c", &mut constants.lookahead_c),
            ("ybar_frac", &mut constants.ybar_frac),
            ("m3_frac", &mut constants.m3_frac),
            ("out_frac", &mut constants.out_frac),
        ] {
            if let Some(v) = f.parse(key, num, "a number")? {
                *slot = v;
            }
        }
        let mut o = Overrides::default();
        for (key, slot) in [
            ("h", &mut o.h),
            ("ell", &mut o.ell),
            ("d", &mut o.d),
            ("bins", &mut o.bins),
            ("first_slice_len", &mut o.first_slice_len),
            ("slice_len", &mut o.slice_len),
            ("ybar_len", &mut o.ybar_len),
            ("m2", &mut o.m2),
            ("m3", &mut o.m3),
            ("m_out", &mut o.m_out),
        ] {
            *slot = f.parse(key, int, "an integer")?;
        }
        o.gamma = f.parse("gamma", num, "a number")?;
        o.log_inv_eps_prime = f.parse("log_inv_eps_prime", num, "a number")?;
        if pipeline == Pipeline::BExt {
            for key in ["alpha", "beta"] {
                if let Some(e) = header_line(text, "params", key) {
                    return Err(perr(e, format!("{key} is derived from eta for the block pipeline")));
                }
            }
        }
        f.finish()?;
        let params = ParamsBlock {
            pipeline,
            n,
            k,
            mode,
            eta,
            alpha,
            beta,
            constants,
            overrides: o,
        };

        // [extractors]
        let mut f = fields("extractors");
        let role_err = |line: usize, key: &str, msg: String| perr(line, format!("{key}: {msg}"));
        let default = match f.take("default") {
            Some((line, v)) => parse_role(&v).map_err(|m| role_err(line, "default", m))?,
            None => RoleKind::Toeplitz,
        };
        let mut roles = BTreeMap::new();
        for role in ROLES {
            if let Some((line, v)) = f.take(role) {
                roles.insert(role.to_string(), parse_role(&v).map_err(|m| role_err(line, role, m))?);
            }
        }
        let basicext = match f.take("basicext") {
            None => BasicExtKind::Fold,
            Some((line, v)) => {
                let (head, kv, bare) = words(&v);
                match head {
                    "fold" if kv.is_empty() && bare.is_empty() => BasicExtKind::Fold,
                    "search" if bare.is_empty() => BasicExtKind::Search(
                        parse_kv(&kv, &["k", "target", "trials", "steps"])
                            .and_then(|kv| parse_search(&kv))
                            .map_err(|m| role_err(line, "basicext", m))?,
                    ),
                    _ => return Err(role_err(line, "basicext", format!("{v:?} is not fold or search k=.."))),
                }
            }
        };
        let mut jobs = BTreeMap::new();
        for (line, name, v) in f.take_prefixed("search.") {
            let job = (|| {
                let (head, kv, bare) = words(&v);
                // The first word is a setting too.
                let mut all = kv;
                match head.split_once('=') {
                    Some(p) => all.push(p),
                    None => return Err(format!("expected n=.. d=.. m=.. k=.., got {v:?}")),
                }
                if !bare.is_empty() {
                    return Err(format!("stray words {bare:?}"));
                }
                let kv = parse_kv(&all, &["n", "d", "m", "k", "target", "trials", "steps"])?;
                let dim = |key: &str| -> Result<usize, String> {
                    let v = kv.get(key).ok_or_else(|| format!("needs {key}="))?;
                    v.parse().map_err(|_| format!("{key}={v} is not an integer"))
                };
                Ok(SearchJob {
                    n: dim("n")?,
                    d: dim("d")?,
                    m: dim("m")?,
                    spec: parse_search(&kv)?,
                })
            })()
            .map_err(|m| perr(line, format!("search.{name}: {m}")))?;
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(perr(line, format!("search job name {name:?} must be alphanumeric")));
            }
            jobs.insert(name, job);
        }
        f.finish()?;
        let extractors = ExtractorsBlock {
            default,
            roles,
            basicext,
            jobs,
        };

        // [sources]
        let mut f = fields("sources");
        let mut specs = BTreeMap::new();
        for name in SOURCE_NAMES {
            if let Some((line, v)) = f.take(name) {
                specs.insert(
                    name.to_string(),
                    parse_source(&v).map_err(|m| perr(line, format!("{name}: {m}")))?,
                );
            }
        }
        let blocks = f.parse("blocks", int, "an integer")?.unwrap_or(8);
        f.finish()?;
        let sources = SourcesBlock { specs, blocks };

        // [eval]
        let mut f = fields("eval");
        let seed = f.required("seed", int, "an unsigned 64-bit integer")?;
        let budget = f.parse("budget", int, "an integer")?.unwrap_or(1 << 20);
        let fixtures = f.parse("fixtures", int, "an integer")?.unwrap_or(4);
        let subsets = f
            .parse(
                "subsets",
                |v| match words(v) {
                    ("all", kv, bare) if kv.is_empty() && bare.is_empty() => Some(Subsets::All),
                    ("sample", kv, bare) if kv.is_empty() && bare.len() == 1 => {
                        bare[0].parse().ok().map(Subsets::Sample)
                    }
                    _ => None,
                },
                "all or sample COUNT",
            )?
            .unwrap_or(Subsets::All);
        let max_v = f.parse("max_v", num, "a number")?.unwrap_or(0.25);
        let max_strong = f.parse("max_strong", num, "a number")?.unwrap_or(0.25);
        let max_hwise = f.parse("max_hwise", num, "a number")?.unwrap_or(0.5);
        let table_k = f.parse("table_k", int, "an integer")?;
        let max_table_eps = f.parse("max_table_eps", num, "a number")?;
        let min_source_k = f.parse("min_source_k", num, "a number")?.unwrap_or(0.0);
        f.finish()?;
        let eval = EvalBlock {
            seed,
            budget,
            fixtures,
            subsets,
            max_v,
            max_strong,
            max_hwise,
            table_k,
            max_table_eps,
            min_source_k,
        };

        // [output]
        let mut f = fields("output");
        let dir = f
            .take("dir")
            .map_or_else(|| PathBuf::from("out"), |(_, v)| PathBuf::from(v));
        let (mut csv, mut json) = (true, true);
        if let Some((line, v)) = f.take("formats") {
            (csv, json) = (false, false);
            for w in v.split_whitespace() {
                match w {
                    "csv" => csv = true,
                    "json" => json = true,
                    _ => return Err(perr(line, format!("unknown format {w} (csv, json)"))),
                }
            }
        }
        f.finish()?;

        Ok(ExperimentConfig {
            params,
            extractors,
            sources,
            eval,
            output: OutputBlock { dir, csv, json },
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        out.push_str("[params]\n");
        let _ = writeln!(out, "pipeline = {}", p.pipeline.name());
        let _ = writeln!(out, "n = {}\nk = {}\nmode = {}", p.n, p.k, p.mode);
        for (key, v) in [("eta", p.eta), ("alpha", p.alpha), ("beta", p.beta)] {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        let c = &p.constants;
        let d = Constants::default();
        for (key, v, dv) in [
            ("c_ell", c.c_ell, d.c_ell),
            ("c1", c.c1, d.c1),
            ("seed_factor", c.seed_factor, d.seed_factor),
            ("lookahead_c", c.lookahead_c, d.lookahead_c),
            ("ybar_frac", c.ybar_frac, d.ybar_frac),
            ("m3_frac", c.m3_frac, d.m3_frac),
            ("out_frac", c.out_frac, d.out_frac),
        ] {
            if v != dv {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        let o = &p.overrides;
        for (key, v) in [
            ("h", o.h),
            ("ell", o.ell),
            ("d", o.d),
            ("bins", o.bins),
            ("first_slice_len", o.first_slice_len),
            ("slice_len", o.slice_len),
            ("ybar_len", o.ybar_len),
            ("m2", o.m2),
            ("m3", o.m3),
            ("m_out", o.m_out),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        if let Some(v) = o.gamma {
            let _ = writeln!(out, "gamma = {v}");
        }
        if let Some(v) = o.log_inv_eps_prime {
            let _ = writeln!(out, "log_inv_eps_prime = {v}");
        }

        let e = &self.extractors;
        out.push_str("\n[extractors]\n");
        let _ = writeln!(out, "default = {}", fmt_role(&e.default));
        for role in ROLES {
            if let Some(r) = e.roles.get(role) {
                let _ = writeln!(out, "{role} = {}", fmt_role(r));
            }
        }
        match &e.basicext {
            BasicExtKind::Fold => out.push_str("basicext = fold\n"),
            BasicExtKind::Search(s) => {
                let _ = writeln!(out, "basicext = search {}", fmt_search(s));
            }
        }
        for (name, j) in &e.jobs {
            let _ = writeln!(
                out,
                "search.{name} = n={} d={} m={} {}",
                j.n,
                j.d,
                j.m,
                fmt_search(&j.spec)
            );
        }

        out.push_str("\n[sources]\n");
        for name in SOURCE_NAMES {
            if let Some(s) = self.sources.specs.get(name) {
                let _ = writeln!(out, "{name} = {}", fmt_source(s));
            }
        }
        let _ = writeln!(out, "blocks = {}", self.sources.blocks);

        let v = &self.eval;
        out.push_str("\n[eval]\n");
        let _ = writeln!(
            out,
            "seed = {}\nbudget = {}\nfixtures = {}",
            v.seed, v.budget, v.fixtures
        );
        match v.subsets {
            Subsets::All => out.push_str("subsets = all\n"),
            Subsets::Sample(c) => {
                let _ = writeln!(out, "subsets = sample {c}");
            }
        }
        let _ = writeln!(
            out,
            "max_v = {}\nmax_strong = {}\nmax_hwise = {}",
            v.max_v, v.max_strong, v.max_hwise
        );
        if let Some(k) = v.table_k {
            let _ = writeln!(out, "table_k = {k}");
        }
        if let Some(e) = v.max_table_eps {
            let _ = writeln!(out, "max_table_eps = {e}");
        }
        let _ = writeln!(out, "min_source_k = {}", v.min_source_k);

        let o = &self.output;
        out.push_str("\n[output]\n");
        let _ = writeln!(out, "dir = {}", o.dir.display());
        let formats: Vec<&str> = [(o.csv, "csv"), (o.json, "json")]
            .into_iter()
            .filter_map(|(on, f)| on.then_some(f))
            .collect();
        let _ = writeln!(out, "formats = {}", formats.join(" "));
        out
    }

    pub fn param_inputs(&self) -> ParamInputs {
        let p = &self.params;
        let mut i = ParamInputs::iext(p.n, p.k, p.mode);
        if let Some(a) = p.alpha {
            i.alpha = a;
        }
        if let Some(b) = p.beta {
            i.beta = b;
        }
        i.constants = p.constants.clone();
        i.overrides = p.overrides.clone();
        i
    }

    pub fn derive(&self) -> mse_core::Result<ParamSet> {
        match self.params.pipeline {
            Pipeline::IExt => derive_params(&self.param_inputs()),
            Pipeline::BExt => bext_params(&self.param_inputs(), self.params.eta.unwrap_or(1.0)),
        }
    }

    /// Bits per source block, when the run materializes sources.
    pub fn block_len(&self) -> CliResult<usize> {
        let n = self.params.n;
        if n.fract() != 0.0 || !(1.0..=62.0).contains(&n) {
            return Err(CliError::Config(format!(
                "n = {n} cannot be materialized (runs need an integer n <= 62)"
            )));
        }
        Ok(n as usize)
    }
}

/// Line of `key` inside `[section]`, for diagnostics raised after parsing.
fn header_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut inside = false;
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            inside = name.trim() == section;
        } else if inside && l.split_once('=').is_some_and(|(k, _)| k.trim() == key) {
            return Some(i + 1);
        }
    }
    None
}
