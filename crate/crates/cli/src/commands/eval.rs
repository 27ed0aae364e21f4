use std::fmt::Write as _;

use mse_core::eval::{MetricRow, MetricsReport};
use mse_core::extractors::StrongSeededExtractor as _;
use mse_core::extractors::{verify_bad_set_bound, worst_flat_strong_distance, LookupExtractor, DEFAULT_BUDGET};
use mse_core::sources::{min_entropy, SourceFile};

use crate::config::{ExperimentConfig, RoleKind, SourceSpec};
use crate::error::{CliError, CliResult};
use crate::output::{Artifacts, Context};

/// Checks every lookup-file role against all flat sources and every source
/// file's min-entropy.
pub fn eval(cfg: &ExperimentConfig, ctx: &Context) -> CliResult<()> {
    let mut tables: Vec<(String, &RoleKind)> = vec![("default".to_string(), &cfg.extractors.default)];
    tables.extend(cfg.extractors.roles.iter().map(|(n, k)| (n.clone(), k)));
    let mut metrics = MetricsReport::default();
    let mut log = String::new();
    for (role, kind) in tables {
        let RoleKind::LookupFile(p) = kind else { continue };
        let path = ctx.resolve(p);
        let table = LookupExtractor::read(&path).map_err(|e| CliError::at(&path, e))?;
        let k = cfg
            .eval
            .table_k
            .unwrap_or(table.claimed_k().floor().max(0.0) as usize)
            .min(table.n());
        let worst = worst_flat_strong_distance(&table, k, DEFAULT_BUDGET)?;
        let bound = cfg.eval.max_table_eps.or(table.measured_eps()).unwrap_or(1.0);
        let bad = verify_bad_set_bound(&table, k, worst.eps)?;
        metrics.push(MetricRow::at_most("worst_flat_eps", &role, worst.eps, bound));
        metrics.push(MetricRow::at_most(
            "bad_set_max",
            &role,
            bad.max_count as f64,
            bad.bound as f64,
        ));
        let _ = writeln!(
            log,
            "{role} = {} k={k} worst_flat_eps={} bad_set_max={} bound={}",
            path.display(),
            worst.eps,
            bad.max_count,
            bad.bound
        );
    }
    for (name, spec) in &cfg.sources.specs {
        let SourceSpec::File(p) = spec else { continue };
        let path = ctx.resolve(p);
        let file = SourceFile::<f64>::read(&path).map_err(|e| CliError::at(&path, e))?;
        let h = min_entropy(&file.joint())?;
        metrics.push(MetricRow::at_least("min_entropy", name, h, cfg.eval.min_source_k));
        let _ = writeln!(
            log,
            "{name} = {} kind={} n={} min_entropy={h}",
            path.display(),
            file.kind(),
            file.n()
        );
    }
    if metrics.rows.is_empty() {
        return Err(CliError::Config(
            "nothing to evaluate: no lookup-file extractors or file sources".into(),
        ));
    }
    print!("{log}");
    let all_pass = metrics.all_pass();
    let mut out = Artifacts::new("eval");
    out.add("trace.txt", log);
    out.add_metrics(cfg, &metrics);
    out.write(cfg, ctx)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Failed("evaluation thresholds not met (see metrics)".into()))
    }
}
