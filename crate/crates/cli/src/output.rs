use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mse_core::eval::{MetricRow, MetricsReport};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{write_file, CliError, CliResult};

pub struct Context {
    /// Directory relative config paths resolve against.
    pub base: PathBuf,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    command: &'a str,
    seed: u64,
    all_pass: bool,
    rows: &'a [MetricRow],
}

/// Files one command produces. Everything here is a function of the
/// config and seed, so the same inputs give byte-identical files.
pub struct Artifacts {
    command: &'static str,
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(command: &'static str) -> Self {
        Artifacts {
            command,
            files: Vec::new(),
        }
    }

    /// Adds a file at `name`, relative to the output directory.
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn add_metrics(&mut self, cfg: &ExperimentConfig, metrics: &MetricsReport) {
        if cfg.output.csv {
            self.add("metrics.csv", metrics.to_csv());
        }
        if cfg.output.json {
            let doc = MetricsJson {
                command: self.command,
                seed: cfg.eval.seed,
                all_pass: metrics.all_pass(),
                rows: &metrics.rows,
            };
            let mut json = serde_json::to_string_pretty(&doc).expect("metrics serialize");
            json.push('\n');
            self.add("metrics.json", json);
        }
    }

    /// Writes every file, then `manifest.txt` with the effective config,
    /// its hash, the seed, versions and a hash per file.
    pub fn write(self, cfg: &ExperimentConfig, ctx: &Context) -> CliResult<()> {
        let mk = |dir: &Path| {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
                path: dir.to_path_buf(),
                source,
            })
        };
        mk(&ctx.out_dir)?;
        let config_text = cfg.to_text();
        let mut manifest = String::new();
        let _ = writeln!(manifest, "command = {}", self.command);
        let _ = writeln!(manifest, "seed = {}", cfg.eval.seed);
        let _ = writeln!(manifest, "config_sha256 = {}", sha256_hex(config_text.as_bytes()));
        let _ = writeln!(manifest, "mse = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(manifest, "mse-core = {}", mse_core::VERSION);
        manifest.push_str("[files]\n");
        for (name, contents) in &self.files {
            let path = ctx.out_dir.join(name);
            if let Some(parent) = path.parent() {
                mk(parent)?;
            }
            write_file(&path, contents)?;
            let _ = writeln!(manifest, "{}  {name}", sha256_hex(contents.as_bytes()));
        }
        manifest.push_str("[config]\n");
        manifest.push_str(&config_text);
        write_file(&ctx.out_dir.join("manifest.txt"), &manifest)
    }
}
