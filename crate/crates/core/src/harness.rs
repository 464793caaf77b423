//! Experiment orchestration: config files, the policy × seed matrix, report
//! files and the cross-policy summary.
//!
//! # Config file grammar
//!
//! Config files are TOML. Sections and keys mirror the rows of the defaults
//! table (`simrun --print-defaults`); any key may be omitted and takes its
//! default. Unknown keys and duplicate keys are errors.
//!
//! ```toml
//! [workload]
//! n_slots = 200
//!
//! [cache]
//! capacity_gb = 2048
//!
//! [experiment]
//! policies = ["laot", "fifo"]
//! seeds = [1, 2, 3]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::PolicyKind;
use crate::config::{
    AccuracyParams, AotParams, CacheConfig, CatalogParams, CostWeights, PolicySection, SimConfig,
    WorkloadConfig,
};
use crate::cost::CostBreakdown;
use crate::defaults::defaults_tree;
use crate::engine::{run, RunReport};
use crate::error::{Result, SimError};

/// Environment variable consulted when a config does not list seeds.
pub const SEED_ENV: &str = "SIMRUN_SEED";

pub const CSV_HEADER: &str =
    "slot,policy,total,acc_loss,switch_cost,edge_cost,edge_latency,cloud_cost";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Json,
    Both,
}

impl Emit {
    pub fn csv(self) -> bool {
        matches!(self, Emit::Csv | Emit::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Emit::Json | Emit::Both)
    }
}

impl std::str::FromStr for Emit {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Emit::Csv),
            "json" => Ok(Emit::Json),
            "both" => Ok(Emit::Both),
            other => Err(SimError::InvalidArgument(format!(
                "unknown format `{other}` (expected csv, json or both)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    policies: Vec<PolicyKind>,
    seeds: Vec<u64>,
    output_dir: String,
    emit: Emit,
    jobs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    workload: WorkloadConfig,
    catalog: CatalogParams,
    policy: PolicySection,
    aot: AotParams,
    accuracy: AccuracyParams,
    weights: CostWeights,
    cache: CacheConfig,
    experiment: ExperimentSection,
}

/// A policy × seed experiment over one base configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub emit: Emit,
    /// Worker threads; 0 means available parallelism.
    pub jobs: usize,
}

impl ExperimentSpec {
    /// Builds a spec from a complete configuration tree.
    pub fn from_tree(tree: toml::Table) -> Result<Self> {
        let file: ConfigFile =
            toml::Value::Table(tree)
                .try_into()
                .map_err(|e: toml::de::Error| {
                    SimError::Validation(vec![e.message().trim().to_string()])
                })?;
        let spec = ExperimentSpec {
            base: SimConfig {
                workload: file.workload,
                catalog: file.catalog,
                policy: file.policy,
                aot: file.aot,
                accuracy: file.accuracy,
                weights: file.weights,
                cache: file.cache,
            },
            policies: file.experiment.policies,
            seeds: file.experiment.seeds,
            output_dir: PathBuf::from(file.experiment.output_dir),
            emit: file.experiment.emit,
            jobs: file.experiment.jobs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        self.base.collect_violations(&mut errs);
        if self.policies.is_empty() {
            errs.push("experiment.policies must be non-empty".into());
        }
        let distinct: BTreeSet<_> = self.policies.iter().collect();
        if distinct.len() != self.policies.len() {
            errs.push("experiment.policies must be distinct".into());
        }
        if self.seeds.is_empty() {
            errs.push("experiment.seeds must be non-empty".into());
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            errs.push("experiment.seeds must be distinct".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SimError::Validation(errs))
        }
    }

    /// The configuration of one run in the matrix.
    pub fn run_config(&self, policy: PolicyKind, seed: u64) -> SimConfig {
        self.base.clone().with_policy(policy).with_seed(seed)
    }

    fn worker_count(&self) -> usize {
        if self.jobs > 0 {
            self.jobs
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |nl| before.len() - nl - 1)
        + 1;
    (line, col)
}

/// Best-effort location of a key for error messages.
fn locate_key(text: &str, key: &str) -> (usize, usize) {
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix(key) {
            let rest = rest.trim_start();
            if rest.starts_with('=') || rest.starts_with('.') {
                return (i + 1, line.len() - trimmed.len() + 1);
            }
        }
        if trimmed.trim_end() == format!("[{key}]") {
            return (i + 1, line.len() - trimmed.len() + 1);
        }
    }
    (1, 1)
}

fn merge(
    defaults: &mut toml::Table,
    user: toml::Table,
    prefix: &str,
    text: &str,
    origin: &Path,
) -> Result<()> {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        let unknown = || {
            let (line, column) = locate_key(text, &key);
            SimError::Parse {
                path: origin.to_path_buf(),
                line,
                column,
                message: format!("unknown key `{path}`"),
            }
        };
        match (defaults.get_mut(&key), value) {
            (None, _) => return Err(unknown()),
            (Some(toml::Value::Table(d)), toml::Value::Table(u)) => {
                merge(d, u, &path, text, origin)?
            }
            (Some(toml::Value::Table(_)), _) => {
                let (line, column) = locate_key(text, &key);
                return Err(SimError::Parse {
                    path: origin.to_path_buf(),
                    line,
                    column,
                    message: format!("`{path}` must be a table"),
                });
            }
            (Some(slot), value) => *slot = value,
        }
    }
    Ok(())
}

/// Parses config text; `env_seed` replaces the default seed list when the
/// text does not set `experiment.seeds`.
pub fn parse_config_str(
    text: &str,
    origin: &Path,
    env_seed: Option<u64>,
) -> Result<ExperimentSpec> {
    let user: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        SimError::Parse {
            path: origin.to_path_buf(),
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let seeds_given = user
        .get("experiment")
        .and_then(|e| e.as_table())
        .is_some_and(|e| e.contains_key("seeds"));
    let mut tree = defaults_tree();
    merge(&mut tree, user, "", text, origin)?;
    if let (false, Some(seed)) = (seeds_given, env_seed) {
        let exp = tree
            .get_mut("experiment")
            .and_then(|e| e.as_table_mut())
            .expect("defaults tree has an experiment section");
        let seed = i64::try_from(seed).map_err(|_| {
            SimError::Validation(vec![format!(
                "{SEED_ENV}={seed} does not fit in a signed 64-bit integer"
            )])
        })?;
        exp.insert(
            "seeds".into(),
            toml::Value::Array(vec![toml::Value::Integer(seed)]),
        );
    }
    ExperimentSpec::from_tree(tree)
}

/// Reads `SIMRUN_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            SimError::Validation(vec![format!(
                "{SEED_ENV} must be an unsigned integer, got `{v}`"
            )])
        }),
        Err(_) => Ok(None),
    }
}

/// Reads and parses a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| SimError::io(format!("reading config {}", path.display()), e))?;
    parse_config_str(&text, path, env_seed()?)
}

/// Per-policy statistics across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub mean_total_per_slot: f64,
    /// Sample standard deviation over seeds; 0 for a single seed.
    pub stddev_total_per_slot: f64,
    /// Mean over seeds of each component's per-slot average.
    pub mean_breakdown: CostBreakdown,
    /// Fraction of seeds on which this policy is strictly cheaper, keyed by
    /// the other policy's name.
    pub win_rate: BTreeMap<String, f64>,
    pub per_seed: Vec<SeedResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub mean_total_per_slot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub n_slots: u64,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicySummary>,
}

impl ComparisonSummary {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == kind)
    }

    /// Builds the summary from reports in `(policy, seed)` order.
    pub fn from_reports(policies: &[PolicyKind], seeds: &[u64], reports: &[RunReport]) -> Self {
        let n_slots = reports.first().map_or(0, |r| r.per_slot.len() as u64);
        let by_policy: Vec<(PolicyKind, Vec<&RunReport>)> = policies
            .iter()
            .map(|&p| (p, reports.iter().filter(|r| r.policy == p).collect()))
            .collect();

        let mut summaries: Vec<PolicySummary> = by_policy
            .iter()
            .map(|(policy, runs)| {
                let per_seed: Vec<SeedResult> = runs
                    .iter()
                    .map(|r| SeedResult {
                        seed: r.seed,
                        mean_total_per_slot: r.mean_total_per_slot,
                    })
                    .collect();
                let k = per_seed.len() as f64;
                let mean = per_seed.iter().map(|s| s.mean_total_per_slot).sum::<f64>() / k;
                let stddev = if per_seed.len() > 1 {
                    (per_seed
                        .iter()
                        .map(|s| (s.mean_total_per_slot - mean).powi(2))
                        .sum::<f64>()
                        / (k - 1.0))
                        .sqrt()
                } else {
                    0.0
                };
                let mut mean_breakdown = CostBreakdown::default();
                for r in runs {
                    let per = |x: f64| {
                        if n_slots == 0 {
                            0.0
                        } else {
                            x / n_slots as f64 / k
                        }
                    };
                    mean_breakdown += &CostBreakdown {
                        acc_loss: per(r.totals.acc_loss),
                        switch_cost: per(r.totals.switch_cost),
                        edge_cost: per(r.totals.edge_cost),
                        edge_latency: per(r.totals.edge_latency),
                        cloud_cost: per(r.totals.cloud_cost),
                        total: per(r.totals.total),
                    };
                }
                PolicySummary {
                    policy: *policy,
                    mean_total_per_slot: mean,
                    stddev_total_per_slot: stddev,
                    mean_breakdown,
                    win_rate: BTreeMap::new(),
                    per_seed,
                }
            })
            .collect();

        for i in 0..summaries.len() {
            for j in 0..summaries.len() {
                if i == j {
                    continue;
                }
                let wins = seeds
                    .iter()
                    .filter(|&&seed| {
                        let mine = summaries[i].per_seed.iter().find(|s| s.seed == seed);
                        let theirs = summaries[j].per_seed.iter().find(|s| s.seed == seed);
                        matches!((mine, theirs), (Some(a), Some(b)) if a.mean_total_per_slot < b.mean_total_per_slot)
                    })
                    .count();
                let rate = wins as f64 / seeds.len() as f64;
                let other = summaries[j].policy.name().to_string();
                summaries[i].win_rate.insert(other, rate);
            }
        }

        ComparisonSummary {
            n_slots,
            seeds: seeds.to_vec(),
            policies: summaries,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<11} {:>14} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "policy", "total/slot", "stddev", "acc_loss", "switch", "edge", "latency", "cloud"
        );
        for p in &self.policies {
            let b = &p.mean_breakdown;
            let _ = writeln!(
                out,
                "{:<11} {:>14.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                p.policy.name(),
                p.mean_total_per_slot,
                p.stddev_total_per_slot,
                b.acc_loss,
                b.switch_cost,
                b.edge_cost,
                b.edge_latency,
                b.cloud_cost
            );
        }
        out
    }
}

/// Seed-averaged per-slot breakdowns of one policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicySeries {
    pub policy: PolicyKind,
    pub slots: Vec<CostBreakdown>,
}

impl PolicySeries {
    pub fn seed_average(policy: PolicyKind, runs: &[&RunReport]) -> Self {
        let n = runs.first().map_or(0, |r| r.per_slot.len());
        let k = runs.len().max(1) as f64;
        let slots = (0..n)
            .map(|t| {
                let mut sum = CostBreakdown::default();
                for r in runs {
                    sum += &r.per_slot[t].breakdown;
                }
                CostBreakdown {
                    acc_loss: sum.acc_loss / k,
                    switch_cost: sum.switch_cost / k,
                    edge_cost: sum.edge_cost / k,
                    edge_latency: sum.edge_latency / k,
                    cloud_cost: sum.cloud_cost / k,
                    total: sum.total / k,
                }
            })
            .collect();
        Self { policy, slots }
    }
}

/// Renders the plot-ready CSV. Rows are ordered by slot, then policy name.
pub fn render_csv(series: &[PolicySeries]) -> Result<String> {
    let n = series.first().map_or(0, |s| s.slots.len());
    if series.iter().any(|s| s.slots.len() != n) {
        return Err(SimError::InvalidArgument(
            "all policy series must share the same length".into(),
        ));
    }
    let mut ordered: Vec<&PolicySeries> = series.iter().collect();
    ordered.sort_by_key(|s| s.policy.name());
    let mut out = String::with_capacity(64 * (n * series.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for t in 0..n {
        for s in &ordered {
            let b = &s.slots[t];
            let _ = writeln!(
                out,
                "{t},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                s.policy.name(),
                b.total,
                b.acc_loss,
                b.switch_cost,
                b.edge_cost,
                b.edge_latency,
                b.cloud_cost
            );
        }
    }
    Ok(out)
}

pub fn emit_csv(series: &[PolicySeries], path: &Path) -> Result<()> {
    let body = render_csv(series)?;
    fs::write(path, body).map_err(|e| SimError::io(format!("writing {}", path.display()), e))
}

pub fn report_file_name(policy: PolicyKind, seed: u64) -> String {
    format!("report_{}_seed{seed}.json", policy.name())
}

pub const CSV_FILE: &str = "per_slot.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub summary: ComparisonSummary,
    /// Reports in `(policy, seed)` order.
    pub reports: Vec<RunReport>,
    pub files: Vec<PathBuf>,
}

fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| SimError::io(format!("creating output dir {}", dir.display()), e))?;
    let probe = dir.join(".simrun-write-probe");
    fs::write(&probe, b"")
        .map_err(|e| SimError::io(format!("output dir {} is not writable", dir.display()), e))?;
    fs::remove_file(&probe).map_err(|e| SimError::io(format!("cleaning up {}", probe.display()), e))
}

/// Executes every `(policy, seed)` run without touching the filesystem.
pub fn run_matrix(spec: &ExperimentSpec) -> Result<Vec<RunReport>> {
    spec.validate()?;
    let matrix: Vec<SimConfig> = spec
        .policies
        .iter()
        .flat_map(|&p| spec.seeds.iter().map(move |&s| (p, s)))
        .map(|(p, s)| spec.run_config(p, s))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.worker_count())
        .build()
        .map_err(|e| SimError::Invariant(format!("building worker pool: {e}")))?;
    pool.install(|| matrix.par_iter().map(run).collect())
}

/// Runs the experiment and writes its report files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    ensure_writable(&spec.output_dir)?;
    let reports = run_matrix(spec)?;
    let summary = ComparisonSummary::from_reports(&spec.policies, &spec.seeds, &reports);

    let mut files = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = spec.output_dir.join(name);
        fs::write(&path, body)
            .map_err(|e| SimError::io(format!("writing {}", path.display()), e))?;
        files.push(path);
        Ok(())
    };
    if spec.emit.json() {
        for r in &reports {
            write(report_file_name(r.policy, r.seed), to_json(r)?)?;
        }
    }
    if spec.emit.csv() {
        let series: Vec<PolicySeries> = spec
            .policies
            .iter()
            .map(|&p| {
                let runs: Vec<&RunReport> = reports.iter().filter(|r| r.policy == p).collect();
                PolicySeries::seed_average(p, &runs)
            })
            .collect();
        write(CSV_FILE.to_string(), render_csv(&series)?)?;
    }
    write(SUMMARY_FILE.to_string(), to_json(&summary)?)?;

    Ok(ExperimentOutcome {
        summary,
        reports,
        files,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| SimError::Invariant(format!("serializing report: {e}")))
}
