use std::fmt::Write as _;
use std::sync::Arc;

use mse_core::eval::{
    distance_from_uniform, distance_from_uniform_given, hwise_report, push_forward, MetricRow, MetricsReport,
    SubsetPlan,
};
use mse_core::extractors::{search_best_basicext, search_ideal_basicext, FoldBasicExt, SRExtractor, SearchOptions};
use mse_core::pipeline::{bext, iext, BExtSuite, IExtSuite, ParamSet, RoleSpecs};
use mse_core::rng::{child_seeds, rng_from_seed, ExperimentRng};
use mse_core::sources::{sample, SourceFile};
use mse_core::BitString;

use super::{load_source, role_specs, Loaded};
use crate::config::{BasicExtKind, ExperimentConfig, Pipeline, Subsets};
use crate::error::{CliError, CliResult};
use crate::output::{Artifacts, Context};

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> CliResult<()> {
    let params = cfg.derive()?;
    let n = cfg.block_len()?;
    let names: &[&str] = match cfg.params.pipeline {
        Pipeline::IExt => &["x", "y1", "y2"],
        Pipeline::BExt => &["x", "y"],
    };
    let sources = names
        .iter()
        .map(|name| load_source(cfg, ctx, name, n))
        .collect::<CliResult<Vec<_>>>()?;
    let roles = role_specs(cfg, ctx)?;
    let seeds = child_seeds(&mut rng_from_seed(cfg.eval.seed), 4);
    let [role_seed, source_seed, sample_seed, eval_seed] = [seeds[0], seeds[1], seeds[2], seeds[3]];

    let mut trace = String::new();
    let _ = writeln!(
        trace,
        "[run]\npipeline = {}\nseed = {}",
        names_of(cfg.params.pipeline),
        cfg.eval.seed
    );
    let _ = write!(
        trace,
        "[params]\n{}[checklist]\n{}",
        params.to_text(),
        params.report.to_text()
    );
    let mut metrics = MetricsReport::default();
    let mut rngs = Rngs {
        role: rng_from_seed(role_seed),
        source: rng_from_seed(source_seed),
        sample: rng_from_seed(sample_seed),
        eval: rng_from_seed(eval_seed),
    };
    match cfg.params.pipeline {
        Pipeline::IExt => run_iext(cfg, &params, &roles, &sources, n, &mut rngs, &mut trace, &mut metrics)?,
        Pipeline::BExt => run_bext(cfg, &params, &roles, &sources, n, &mut rngs, &mut trace, &mut metrics)?,
    }
    let mut out = Artifacts::new("run");
    out.add("trace.txt", trace);
    out.add_metrics(cfg, &metrics);
    out.write(cfg, ctx)?;
    for r in &metrics.rows {
        println!(
            "{:<5} {} [{}] measured {} threshold {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.metric,
            r.fixture,
            r.measured,
            r.threshold
        );
    }
    Ok(())
}

fn names_of(p: Pipeline) -> &'static str {
    match p {
        Pipeline::IExt => "iext",
        Pipeline::BExt => "bext",
    }
}

struct Rngs {
    role: ExperimentRng,
    source: ExperimentRng,
    sample: ExperimentRng,
    eval: ExperimentRng,
}

fn search_opts(steps: usize) -> SearchOptions {
    SearchOptions {
        steps_per_trial: steps,
        ..SearchOptions::default()
    }
}

fn build_basicext(
    cfg: &ExperimentConfig,
    roles: &RoleSpecs,
    n: usize,
    rows: usize,
    row_len: usize,
    m: usize,
    rng: &mut ExperimentRng,
) -> CliResult<Arc<dyn SRExtractor>> {
    Ok(match &cfg.extractors.basicext {
        BasicExtKind::Fold => Arc::new(FoldBasicExt::new(roles.build("fold", n, row_len, m, rng)?, rows)),
        BasicExtKind::Search(s) => {
            let k = s.k.min(n);
            let opts = search_opts(s.steps);
            Arc::new(match s.target {
                Some(t) => search_ideal_basicext(n, rows, row_len, m, k, t, s.trials, rng, &opts)?,
                None => search_best_basicext(n, rows, row_len, m, k, s.trials, rng, &opts)?,
            })
        }
    })
}

fn describe_roles(trace: &mut String, parts: &[(&str, String)]) {
    trace.push_str("[extractors]\n");
    for (name, d) in parts {
        let _ = writeln!(trace, "{name} = {d}");
    }
}

#[allow(clippy::too_many_arguments)]
fn run_iext(
    cfg: &ExperimentConfig,
    params: &ParamSet,
    roles: &RoleSpecs,
    sources: &[Loaded],
    n: usize,
    rngs: &mut Rngs,
    trace: &mut String,
    metrics: &mut MetricsReport,
) -> CliResult<()> {
    let n1 = params
        .n1()
        .ok_or_else(|| CliError::Guard(format!("2^{} rows cannot be materialized", params.log2_n1)))?;
    let suite = IExtSuite::build(params, roles, n, n, &mut rngs.role)?;
    let basic = build_basicext(cfg, roles, n, n1, params.m3, params.m_out, &mut rngs.role)?;
    describe_roles(
        trace,
        &[
            ("ext_q", suite.ssr.laext.ext_q.describe()),
            ("ext_w", suite.ssr.laext.ext_w.describe()),
            ("bridge", suite.ssr.bridge.describe()),
            ("ext1", suite.sr.ext1.describe()),
            ("ext2", suite.sr.ext2.describe()),
            ("ext3", suite.sr.ext3.describe()),
            ("ext_z2", suite.ext_z2.describe()),
            ("ext_z3", suite.ext_z3.describe()),
            ("basicext", basic.describe()),
        ],
    );

    let fixtures = cfg.eval.fixtures.max(1);
    let per_source = sources
        .iter()
        .map(|s| s.fixtures(n, fixtures, &mut rngs.source))
        .collect::<CliResult<Vec<_>>>()?;

    // One sampled input through every stage.
    let (x, y1, y2) = (
        sample(&per_source[0][0], &mut rngs.sample),
        sample(&per_source[1][0], &mut rngs.sample),
        sample(&per_source[2][0], &mut rngs.sample),
    );
    let (_, stages) = iext(params, &suite, basic.as_ref(), &x, &y1, &y2)?;
    let _ = writeln!(
        trace,
        "[input]\nx = {}\ny1 = {}\ny2 = {}",
        x.to_hex(),
        y1.to_hex(),
        y2.to_hex()
    );
    trace.push_str(&stages.to_text());

    let rows = stages.sr.z.n_rows();
    let plan = match cfg.eval.subsets {
        Subsets::All => SubsetPlan::All,
        Subsets::Sample(c) => SubsetPlan::Sampled(c),
    };
    let inputs = per_source[0].iter().zip(&per_source[1]).zip(&per_source[2]);
    for (i, ((xs, y1s), y2s)) in inputs.enumerate() {
        // Variables: V, X, Y = Y1 Y2, then the rows of Z.
        let joint = push_forward(
            &[xs, y1s, y2s],
            |a| {
                let (v, t) = iext(params, &suite, basic.as_ref(), a[0], a[1], a[2])?;
                let mut out = vec![v, a[0].clone(), a[1].concat(a[2])];
                out.extend(t.sr.z.rows().iter().cloned());
                Ok(out)
            },
            cfg.eval.budget,
        )?;
        let fixture = format!("fixture-{i}");
        let v = distance_from_uniform(&joint.marginal(&[0])?);
        let sx = distance_from_uniform_given(&joint.marginal(&[1, 0])?, 1)?;
        let sy = distance_from_uniform_given(&joint.marginal(&[2, 0])?, 1)?;
        metrics.push(MetricRow::at_most("v_distance", &fixture, v, cfg.eval.max_v));
        metrics.push(MetricRow::at_most("strong_in_x", &fixture, sx, cfg.eval.max_strong));
        metrics.push(MetricRow::at_most("strong_in_y", &fixture, sy, cfg.eval.max_strong));
        if params.h <= rows {
            let z_vars: Vec<usize> = (3..3 + rows).collect();
            let report = hwise_report(&joint.marginal(&z_vars)?, params.h, plan, &mut rngs.eval)?;
            metrics.push(MetricRow::at_most(
                "hwise_z",
                &fixture,
                report.worst,
                cfg.eval.max_hwise,
            ));
        }
    }
    Ok(())
}

/// `count` blocks from one configured source.
fn draw_blocks(
    source: &Loaded,
    n: usize,
    count: usize,
    fixture: &mse_core::Source,
    rng: &mut ExperimentRng,
) -> Vec<BitString> {
    match source {
        Loaded::File(SourceFile::Block(b)) => {
            let joint = sample(b.joint(), rng);
            let mut blocks: Vec<BitString> = (0..b.block_lens().len())
                .map(|i| joint.slice(i * n, n).expect("block fits"))
                .collect();
            while blocks.len() < count {
                let more = sample(b.joint(), rng);
                blocks.extend((0..b.block_lens().len()).map(|i| more.slice(i * n, n).expect("block fits")));
            }
            blocks.truncate(count);
            blocks
        }
        _ => (0..count).map(|_| sample(fixture, rng)).collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_bext(
    cfg: &ExperimentConfig,
    params: &ParamSet,
    roles: &RoleSpecs,
    sources: &[Loaded],
    n: usize,
    rngs: &mut Rngs,
    trace: &mut String,
    metrics: &mut MetricsReport,
) -> CliResult<()> {
    let suite = BExtSuite::build(params, roles, n, &mut rngs.role)?;
    let final_rows = params.loop_threshold.floor() as usize;
    let basic = build_basicext(cfg, roles, n, final_rows, params.m2, params.m_out, &mut rngs.role)?;
    describe_roles(
        trace,
        &[
            ("ext_q", suite.ssr.laext.ext_q.describe()),
            ("ext_w", suite.ssr.laext.ext_w.describe()),
            ("bridge", suite.ssr.bridge.describe()),
            ("ext1", suite.sr.ext1.describe()),
            ("ext2", suite.sr.ext2.describe()),
            ("ext3", suite.sr.ext3.describe()),
            ("ext_round", suite.ext_round.describe()),
            ("ext_final", suite.ext_final.describe()),
            ("basicext", basic.describe()),
        ],
    );
    let fixtures = cfg.eval.fixtures.max(1);
    let per_source = sources
        .iter()
        .map(|s| s.fixtures(n, fixtures, &mut rngs.source))
        .collect::<CliResult<Vec<_>>>()?;
    let blocks = cfg.sources.blocks.max(1);
    for (i, (xs, ys)) in per_source[0].iter().zip(&per_source[1]).enumerate() {
        let fixture = format!("fixture-{i}");
        let x = draw_blocks(&sources[0], n, blocks, xs, &mut rngs.sample);
        let y = draw_blocks(&sources[1], n, blocks, ys, &mut rngs.sample);
        let _ = writeln!(trace, "[fixture {i}]");
        let hex = |v: &[BitString]| v.iter().map(|b| b.to_hex()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(trace, "x = {}\ny = {}", hex(&x), hex(&y));
        match bext(params, &suite, basic.as_ref(), &x, &y) {
            Ok((w, t)) => {
                trace.push_str(&t.to_text());
                let replay = bext(params, &suite, basic.as_ref(), &x, &y)?;
                let rows_left = t.rounds.last().map_or(t.sr.z.n_rows(), |r| r.z_next.n_rows());
                let alternates = t.rounds.windows(2).all(|p| p[0].side != p[1].side);
                metrics.push(MetricRow::at_least("completed", &fixture, 1.0, 1.0));
                metrics.push(MetricRow::at_least("rounds", &fixture, t.rounds.len() as f64, 0.0));
                metrics.push(MetricRow::at_most(
                    "final_rows",
                    &fixture,
                    rows_left as f64,
                    params.loop_threshold,
                ));
                metrics.push(MetricRow::at_least(
                    "alternates",
                    &fixture,
                    alternates as u8 as f64,
                    1.0,
                ));
                metrics.push(MetricRow::at_least(
                    "replays",
                    &fixture,
                    (replay == (w, t)) as u8 as f64,
                    1.0,
                ));
            }
            Err(e @ (mse_core::Error::Domain(_) | mse_core::Error::InsufficientBlocks { .. })) => {
                let _ = writeln!(trace, "error = {e}");
                metrics.push(MetricRow::at_least("completed", &fixture, 0.0, 1.0));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
