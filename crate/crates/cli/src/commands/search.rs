use std::fmt::Write as _;

use mse_core::eval::{MetricRow, MetricsReport};
use mse_core::extractors::{
    check_search_feasible, search_best_extractor, search_ideal_extractor_with, worst_flat_strong_distance,
    SearchOptions,
};
use mse_core::rng::{child_seeds, rng_from_seed};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{Artifacts, Context};

/// Runs every `search.NAME` job and writes `tables/NAME.txt`. All jobs are
/// checked against the enumeration guards before any of them starts.
pub fn search(cfg: &ExperimentConfig, ctx: &Context) -> CliResult<()> {
    let jobs = &cfg.extractors.jobs;
    if jobs.is_empty() {
        return Err(CliError::Config("no search.NAME entries in [extractors]".into()));
    }
    let budget = SearchOptions::default().budget;
    for (name, j) in jobs {
        check_search_feasible(j.n, j.d, j.m, j.spec.k, budget).map_err(|e| match CliError::from(e) {
            CliError::Guard(msg) => CliError::Guard(format!("search.{name}: {msg}")),
            other => other,
        })?;
    }

    // Job seeds depend only on the job's position in name order.
    let seeds = child_seeds(&mut rng_from_seed(cfg.eval.seed), jobs.len());
    let mut out = Artifacts::new("search");
    let mut metrics = MetricsReport::default();
    let mut log = String::new();
    for ((name, j), seed) in jobs.iter().zip(seeds) {
        let opts = SearchOptions {
            steps_per_trial: j.spec.steps,
            budget,
        };
        let mut rng = rng_from_seed(seed);
        let found = match j.spec.target {
            Some(t) => search_ideal_extractor_with(j.n, j.d, j.m, j.spec.k, t, j.spec.trials, &mut rng, &opts),
            None => search_best_extractor(j.n, j.d, j.m, j.spec.k, j.spec.trials, &mut rng, &opts),
        };
        let table = match found {
            Ok(t) => t,
            Err(mse_core::Error::SearchFailure { trials, best_eps }) => {
                return Err(CliError::Failed(format!(
                    "search.{name}: no table within target {} after {trials} trials; best worst-case error {best_eps}",
                    j.spec.target.unwrap_or(0.0)
                )));
            }
            Err(e) => return Err(e.into()),
        };
        let eps = table.measured_eps().unwrap_or(1.0);
        // Independent recheck over every flat source.
        let verified = worst_flat_strong_distance(&table, j.spec.k, budget)?.eps;
        let target = j.spec.target.unwrap_or(eps);
        metrics.push(MetricRow::at_most("search_eps", name, eps, target));
        metrics.push(MetricRow::at_most("verified_eps", name, verified, target));
        let _ = writeln!(
            log,
            "search.{name} = n={} d={} m={} k={} eps={eps} verified={verified} file=tables/{name}.txt",
            j.n, j.d, j.m, j.spec.k
        );
        out.add(format!("tables/{name}.txt"), table.to_text());
    }
    print!("{log}");
    out.add("trace.txt", log);
    out.add_metrics(cfg, &metrics);
    out.write(cfg, ctx)
}
