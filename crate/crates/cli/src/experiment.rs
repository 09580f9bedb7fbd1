//! Experiment configs, bundled presets, and the resumable size/power
//! experiment runner.
//!
//! Config files are flat TOML:
//!
//! ```toml
//! kind = "size"                  # "size" or "power"
//! patterns = ["csr"]             # pattern grammar strings
//! sizes = [[10, 10], [30, 30]]
//! replicates = 1000
//! seed = 20080807
//! alpha = 0.05                   # optional
//! critical = "asymptotic"        # optional: "asymptotic" | "monte-carlo"
//! ```
//!
//! Results stream to a CSV file whose first line is a JSON metadata header
//! (seed, replicate count, the config itself, and its hash). Rows are
//! written and flushed one at a time, keyed by `(pattern, sizes)` in config
//! order, so an interrupted run resumes by recomputing only the missing
//! rows and the final file is byte-identical to an uninterrupted one.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use segpoint_core::mc::{
    run_power_experiment, run_size_experiment, CriticalSource, McConfig, SizePowerRow,
};
use segpoint_core::pattern::PatternKind;
use segpoint_core::stat_tests::TestKind;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: String,
    pub patterns: Vec<String>,
    pub sizes: Vec<Vec<usize>>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_critical")]
    pub critical: String,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_critical() -> String {
    "asymptotic".into()
}

/// Parsed and validated form of a config.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub patterns: Vec<PatternKind>,
    pub critical: CriticalSource,
    pub is_size: bool,
    pub num_classes: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Stable hash of the canonical config: reruns with the same settings
    /// produce the same hash regardless of worker count.
    pub fn spec_hash(&self) -> String {
        let canon = format!(
            "{}|{}|{:?}|{}|{}|{}|{}",
            self.kind,
            self.patterns.join(";"),
            self.sizes,
            self.replicates,
            self.seed,
            self.alpha,
            self.critical
        );
        let digest = Sha256::digest(canon.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(self) -> Result<Experiment, CliError> {
        let is_size = match self.kind.as_str() {
            "size" => true,
            "power" => false,
            other => {
                return Err(CliError::input(format!(
                    "kind must be `size` or `power`, got `{other}`"
                )))
            }
        };
        if self.patterns.is_empty() || self.sizes.is_empty() {
            return Err(CliError::input(
                "config needs at least one pattern and one sizes tuple".into(),
            ));
        }
        let num_classes = self.sizes[0].len();
        if num_classes < 2 {
            return Err(CliError::input("sizes tuples need at least 2 classes".into()));
        }
        if self.sizes.iter().any(|s| s.len() != num_classes) {
            return Err(CliError::input(
                "all sizes tuples must have the same number of classes".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(CliError::input("replicates must be positive".into()));
        }
        let critical = match self.critical.as_str() {
            "asymptotic" => CriticalSource::Asymptotic,
            "monte-carlo" => CriticalSource::MonteCarlo,
            other => {
                return Err(CliError::input(format!(
                    "critical must be `asymptotic` or `monte-carlo`, got `{other}`"
                )))
            }
        };
        let mut patterns = Vec::with_capacity(self.patterns.len());
        for text in &self.patterns {
            let kind: PatternKind = text
                .parse()
                .map_err(|e| CliError::input(format!("patterns: {e}")))?;
            if kind.is_null() != is_size {
                return Err(CliError::input(format!(
                    "pattern `{text}` does not fit a {} experiment",
                    self.kind
                )));
            }
            if let Some(q) = kind.num_classes() {
                if q != num_classes {
                    return Err(CliError::input(format!(
                        "pattern `{text}` is a {q}-class family but sizes have {num_classes} classes"
                    )));
                }
            }
            patterns.push(kind);
        }
        Ok(Experiment {
            config: self,
            patterns,
            critical,
            is_size,
            num_classes,
        })
    }
}

/// The bundled preset configurations. Desk-scale replicate counts by
/// default; `full` switches to the 10000-replicate versions.
pub fn preset(name: &str, full: bool) -> Result<ExperimentConfig, CliError> {
    let replicates = if full { 10_000 } else { 1_000 };
    let sizes_2cl = vec![
        vec![10, 10],
        vec![10, 30],
        vec![10, 50],
        vec![30, 30],
        vec![30, 50],
        vec![50, 50],
        vec![50, 100],
        vec![100, 100],
    ];
    let sizes_3cl = vec![
        vec![10, 10, 10],
        vec![10, 10, 30],
        vec![10, 10, 50],
        vec![10, 30, 30],
        vec![10, 30, 50],
        vec![10, 50, 50],
        vec![30, 30, 30],
        vec![30, 30, 50],
        vec![30, 50, 50],
        vec![50, 50, 50],
        vec![50, 50, 100],
        vec![50, 100, 100],
        vec![100, 100, 100],
    ];
    let cfg = |kind: &str, patterns: Vec<&str>, sizes: Vec<Vec<usize>>, critical: &str| {
        ExperimentConfig {
            kind: kind.into(),
            patterns: patterns.into_iter().map(String::from).collect(),
            sizes,
            replicates,
            seed: 20080807,
            alpha: 0.05,
            critical: critical.into(),
        }
    };
    match name {
        "table2" => Ok(cfg("size", vec!["csr"], sizes_2cl, "asymptotic")),
        "table3" => Ok(cfg(
            "size",
            vec!["rl1", "rl2", "rl3"],
            sizes_2cl,
            "asymptotic",
        )),
        "table-3cl-sizes" => Ok(cfg("size", vec!["csr"], sizes_3cl, "asymptotic")),
        "power-seg-2cl" => Ok(cfg(
            "power",
            vec![
                "segregation2:s=0.16666666666666666",
                "segregation2:s=0.25",
                "segregation2:s=0.3333333333333333",
            ],
            sizes_2cl,
            "asymptotic",
        )),
        "power-assoc-2cl" => Ok(cfg(
            "power",
            vec![
                "association2:r=0.25",
                "association2:r=0.14285714285714285",
                "association2:r=0.1",
            ],
            sizes_2cl,
            "asymptotic",
        )),
        "power-3cl" => Ok(cfg(
            "power",
            vec![
                "segregation3:s=0.08333333333333333",
                "segregation3:s=0.125",
                "segregation3:s=0.16666666666666666",
                "association3:ry=0.14285714285714285,rz=0.1",
                "association3:ry=0.1,rz=0.05",
                "association3:ry=0.07692307692307693,rz=0.03333333333333333",
            ],
            sizes_3cl,
            "asymptotic",
        )),
        other => Err(CliError::input(format!(
            "unknown preset `{other}` (expected table2, table3, table-3cl-sizes, power-seg-2cl, power-assoc-2cl, power-3cl)"
        ))),
    }
}

fn test_labels(num_classes: usize) -> Vec<String> {
    let mut labels = Vec::new();
    for i in 0..num_classes {
        labels.push(format!("base{i}"));
    }
    for j in 0..num_classes {
        labels.push(format!("nn{j}"));
    }
    labels.push("overall".into());
    labels
}

fn csv_header(num_classes: usize) -> String {
    let mut cols = vec![
        "pattern".to_string(),
        "sizes".to_string(),
        "replicates".to_string(),
        "critical".to_string(),
    ];
    for label in test_labels(num_classes) {
        cols.push(format!("rate_{label}"));
        cols.push(format!("se_{label}"));
        cols.push(format!("flag_{label}"));
    }
    cols.join(",")
}

fn row_key(pattern: &str, sizes: &[usize]) -> String {
    format!(
        "{pattern},{}",
        sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("x")
    )
}

fn render_row(pattern: &str, row: &SizePowerRow, num_classes: usize) -> String {
    let mut cols = vec![
        pattern.to_string(),
        row.sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("x"),
        row.replicates.to_string(),
        row.critical_source.to_string(),
    ];
    let ordered: Vec<TestKind> = {
        let mut v = Vec::new();
        for i in 0..num_classes {
            v.push(TestKind::Base(i));
        }
        for j in 0..num_classes {
            v.push(TestKind::NnClass(j));
        }
        v.push(TestKind::Overall);
        v
    };
    for kind in ordered {
        let rate = row
            .rates
            .iter()
            .find(|t| t.kind == kind)
            .expect("all tests present");
        cols.push(format!("{:.6}", rate.rate));
        cols.push(format!("{:.6}", rate.se));
        cols.push(rate.flag.map_or(String::new(), |f| f.to_string()));
    }
    cols.join(",")
}

/// Master seed for one pattern within a config: decorrelates the pattern
/// families while staying independent of row order.
fn pattern_seed(master: u64, pattern: &str) -> u64 {
    let digest = Sha256::digest(pattern.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    master ^ u64::from_le_bytes(bytes)
}

fn row_master(pattern_seed: u64, row_idx: u64) -> u64 {
    pattern_seed ^ (row_idx + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub struct RunSummary {
    pub rows_total: usize,
    pub rows_computed: usize,
    pub rows_skipped: usize,
    pub spec_hash: String,
}

/// Runs (or resumes) an experiment, streaming rows to `out_path`.
pub fn run_experiment(
    experiment: &Experiment,
    out_path: &Path,
    workers: Option<usize>,
) -> Result<RunSummary, CliError> {
    let cfg = &experiment.config;
    let spec_hash = cfg.spec_hash();
    let metadata = serde_json::json!({
        "tool": "segpoint",
        "version": env!("CARGO_PKG_VERSION"),
        "spec_hash": spec_hash,
        "seed": cfg.seed,
        "replicates": cfg.replicates,
        "config": cfg,
    });
    let header = format!("# {metadata}\n{}\n", csv_header(experiment.num_classes));

    // Planned rows in config order.
    let mut plan: Vec<(usize, usize)> = Vec::new();
    for p in 0..experiment.patterns.len() {
        for s in 0..cfg.sizes.len() {
            plan.push((p, s));
        }
    }

    // Resume: keep the intact prefix of a previous run with the same hash.
    let mut completed = 0usize;
    let mut file_body = header.clone();
    if out_path.exists() {
        let existing = std::fs::read_to_string(out_path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", out_path.display())))?;
        let mut lines = existing.split_inclusive('\n');
        let meta_line = lines.next().unwrap_or("");
        let meta_ok = meta_line
            .strip_prefix("# ")
            .and_then(|json| serde_json::from_str::<serde_json::Value>(json.trim()).ok())
            .map(|v| v["spec_hash"] == serde_json::json!(spec_hash))
            .unwrap_or(false);
        if !meta_ok {
            return Err(CliError::input(format!(
                "{} exists with a different configuration; remove it or use another --out",
                out_path.display()
            )));
        }
        let _ = lines.next(); // csv header
        for line in lines {
            if !line.ends_with('\n') {
                break; // partial row from an interrupted run
            }
            let (p, s) = plan
                .get(completed)
                .ok_or_else(|| CliError::input("output has more rows than the config".into()))?;
            let expected_key = row_key(&cfg.patterns[*p], &cfg.sizes[*s]);
            if !line.starts_with(&expected_key) {
                return Err(CliError::input(format!(
                    "{} row {} does not match the config order",
                    out_path.display(),
                    completed + 1
                )));
            }
            file_body.push_str(line);
            completed += 1;
        }
    }
    std::fs::write(out_path, &file_body)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", out_path.display())))?;
    let mut file = std::fs::OpenOptions::new()
        .append(true)
        .open(out_path)
        .map_err(|e| CliError::input(format!("cannot append {}: {e}", out_path.display())))?;

    for &(p, s) in plan.iter().skip(completed) {
        let kind = &experiment.patterns[p];
        let sizes = &cfg.sizes[s];
        let mc = McConfig {
            replicates: cfg.replicates,
            master_seed: row_master(pattern_seed(cfg.seed, &cfg.patterns[p]), s as u64),
            alpha: cfg.alpha,
            critical_value_quantile: 0.95,
            worker_hint: workers,
        };
        let rows = if experiment.is_size {
            run_size_experiment(kind, std::slice::from_ref(sizes), &mc)
        } else {
            run_power_experiment(kind, std::slice::from_ref(sizes), &mc, experiment.critical)
        }
        .map_err(CliError::from_core)?;
        let line = render_row(&cfg.patterns[p], &rows[0], experiment.num_classes);
        file.write_all(line.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.flush())
            .map_err(|e| CliError::input(format!("write failed: {e}")))?;
        log::info!("completed {}", row_key(&cfg.patterns[p], sizes));
    }
    Ok(RunSummary {
        rows_total: plan.len(),
        rows_computed: plan.len() - completed,
        rows_skipped: completed,
        spec_hash,
    })
}
