mod eval;
mod run;
mod search;

use std::fmt::Write as _;

use mse_core::extractors::LookupExtractor;
use mse_core::pipeline::{RoleSpec, RoleSpecs};
use mse_core::rng::ExperimentRng;
use mse_core::sources::{adversarial_flat_battery, DiscreteSource, SourceFile};
use mse_core::Source;

use crate::config::{ExperimentConfig, RoleKind, SourceSpec};
use crate::error::{CliError, CliResult};
use crate::output::{Artifacts, Context};

pub use eval::eval;
pub use run::run;
pub use search::search;

pub fn params(cfg: &ExperimentConfig, ctx: &Context) -> CliResult<()> {
    let set = match cfg.derive() {
        Ok(set) => set,
        Err(mse_core::Error::Constraint(report)) => {
            print!("[checklist]\n{}", report.to_text());
            return Err(CliError::Constraint(report));
        }
        Err(e) => return Err(e.into()),
    };
    let mut text = String::new();
    let _ = write!(text, "[params]\n{}[checklist]\n{}", set.to_text(), set.report.to_text());
    let violations = set.report.violations();
    if !violations.is_empty() {
        let _ = writeln!(text, "violations = {}", violations.join(", "));
    }
    print!("{text}");
    let mut out = Artifacts::new("params");
    out.add("params.txt", text);
    out.write(cfg, ctx)
}

fn role_specs(cfg: &ExperimentConfig, ctx: &Context) -> CliResult<RoleSpecs> {
    let convert = |kind: &RoleKind| -> CliResult<RoleSpec> {
        Ok(match kind {
            RoleKind::Toeplitz => RoleSpec::Toeplitz,
            RoleKind::Random => RoleSpec::RandomLookup,
            RoleKind::LookupFile(p) => {
                let path = ctx.resolve(p);
                RoleSpec::Table(LookupExtractor::read(&path).map_err(|e| CliError::at(&path, e))?)
            }
            RoleKind::Search(s) => RoleSpec::Search {
                k: s.k,
                target_eps: s.target,
                trials: s.trials,
                steps: s.steps,
            },
        })
    };
    let mut specs = RoleSpecs::all(convert(&cfg.extractors.default)?);
    for (name, kind) in &cfg.extractors.roles {
        specs = specs.with(name, convert(kind)?);
    }
    Ok(specs)
}

/// A configured source, with files read up front so that a bad path fails
/// before any computation.
enum Loaded {
    Uniform,
    Flat(usize),
    File(SourceFile<f64>),
}

fn load_source(cfg: &ExperimentConfig, ctx: &Context, name: &str, n: usize) -> CliResult<Loaded> {
    let spec = cfg
        .sources
        .specs
        .get(name)
        .ok_or_else(|| CliError::Config(format!("[sources] needs {name}")))?;
    Ok(match spec {
        SourceSpec::Uniform => Loaded::Uniform,
        SourceSpec::Flat { k } if *k > n => {
            return Err(CliError::Config(format!("{name}: flat k={k} exceeds n = {n}")));
        }
        SourceSpec::Flat { k } => Loaded::Flat(*k),
        SourceSpec::File(p) => {
            let path = ctx.resolve(p);
            let file = SourceFile::<f64>::read(&path).map_err(|e| CliError::at(&path, e))?;
            let ok = match &file {
                SourceFile::Block(b) => b.block_lens().iter().all(|&l| l == n),
                other => other.n() == n,
            };
            if !ok {
                return Err(CliError::Config(format!(
                    "{}: a {}-bit {} source does not fit {n}-bit blocks",
                    path.display(),
                    file.n(),
                    file.kind()
                )));
            }
            Loaded::File(file)
        }
    })
}

impl Loaded {
    /// `count` fixtures for one source; random flat sources come from `rng`.
    fn fixtures(&self, n: usize, count: usize, rng: &mut ExperimentRng) -> CliResult<Vec<Source>> {
        Ok(match self {
            Loaded::Uniform => vec![DiscreteSource::uniform(n); count],
            Loaded::Flat(k) => adversarial_flat_battery(n, *k, count, rng)?
                .iter()
                .map(|f| f.to_source())
                .collect(),
            Loaded::File(SourceFile::Block(b)) => {
                // Fixtures see the first block; later blocks are conditioned away.
                let first = b.joint().map(n, |s| s.prefix(n).expect("block fits"))?;
                vec![first; count]
            }
            Loaded::File(f) => vec![f.joint(); count],
        })
    }
}
