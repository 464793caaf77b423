//! The authoritative table of default parameters.
//!
//! Every configuration field has exactly one row. Rows are tagged with where
//! the value comes from: the published experimental setup, or a modeling
//! decision of this simulator. Rows under `info.` describe the reference
//! hardware and do not feed any formula.

use std::fmt;

use serde::Serialize;

use crate::config::SimConfig;
use crate::harness::ExperimentSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Stated in the published experimental setup.
    Published,
    /// Chosen for this simulator.
    Decision,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Published => "published",
            Provenance::Decision => "decision",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DefaultValue {
    Int(i64),
    Float(f64),
    Text(&'static str),
    Ints(Vec<i64>),
    Floats(Vec<f64>),
    Texts(Vec<&'static str>),
}

impl DefaultValue {
    pub fn to_toml(&self) -> toml::Value {
        use toml::Value;
        match self {
            DefaultValue::Int(v) => Value::Integer(*v),
            DefaultValue::Float(v) => Value::Float(*v),
            DefaultValue::Text(v) => Value::String((*v).to_string()),
            DefaultValue::Ints(v) => Value::Array(v.iter().map(|x| Value::Integer(*x)).collect()),
            DefaultValue::Floats(v) => Value::Array(v.iter().map(|x| Value::Float(*x)).collect()),
            DefaultValue::Texts(v) => {
                Value::Array(v.iter().map(|x| Value::String((*x).to_string())).collect())
            }
        }
    }
}

impl fmt::Display for DefaultValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
            let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            write!(f, "[{}]", parts.join(", "))
        }
        match self {
            DefaultValue::Int(v) => write!(f, "{v}"),
            DefaultValue::Float(v) => write!(f, "{v:?}"),
            DefaultValue::Text(v) => write!(f, "{v:?}"),
            DefaultValue::Ints(v) => list(f, v),
            DefaultValue::Floats(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            DefaultValue::Texts(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefaultsEntry {
    pub key: &'static str,
    pub value: DefaultValue,
    pub provenance: Provenance,
    pub note: &'static str,
}

/// Prefix of rows that are informational only.
pub const INFO_PREFIX: &str = "info.";

pub fn defaults() -> Vec<DefaultsEntry> {
    use DefaultValue::*;
    use Provenance::*;
    let row = |key, value, provenance, note| DefaultsEntry {
        key,
        value,
        provenance,
        note,
    };
    vec![
        row(
            "workload.n_services",
            Int(30),
            Published,
            "30 service types",
        ),
        row(
            "workload.n_agents",
            Int(10),
            Published,
            "10 LLM agents issuing requests",
        ),
        row(
            "workload.zipf_exponent",
            Float(1.0),
            Decision,
            "classic Zipf popularity",
        ),
        row(
            "workload.arrivals_per_slot_mean",
            Float(5.0),
            Decision,
            "Poisson arrivals per slot",
        ),
        row(
            "workload.seed",
            Int(1),
            Decision,
            "overridden per run by experiment.seeds",
        ),
        row(
            "workload.n_slots",
            Int(500),
            Decision,
            "horizon long enough to reach steady state",
        ),
        row(
            "workload.req_tokens_min",
            Int(64),
            Decision,
            "smallest offloaded perception payload",
        ),
        row(
            "workload.req_tokens_max",
            Int(512),
            Decision,
            "below the smallest context window",
        ),
        row(
            "catalog.n_models",
            Int(0),
            Decision,
            "0 = one model per service",
        ),
        row(
            "catalog.context_windows",
            Ints(vec![4096, 16384, 32768]),
            Published,
            "4K (LLaMA), 16K (GPT-3.5-turbo), 32K (GPT-4) token windows",
        ),
        row(
            "catalog.mem_gb_tiers",
            Floats(vec![60.0, 180.0, 360.0]),
            Decision,
            "small/medium/large global-model footprints; 30 models need 6000 GB",
        ),
        row(
            "catalog.base_loss",
            Float(0.3),
            Decision,
            "edge accuracy loss with no thoughts",
        ),
        row(
            "catalog.edge_rate",
            Float(2.0),
            Decision,
            "edge cost per 1K tokens",
        ),
        row(
            "catalog.edge_tok_per_slot",
            Float(8000.0),
            Decision,
            "edge throughput for latency",
        ),
        row(
            "catalog.cloud_rate",
            Float(6.0),
            Decision,
            "cloud cost per 1K tokens, 3x edge",
        ),
        row(
            "catalog.cloud_latency_slots",
            Float(0.8),
            Decision,
            "fixed WAN latency",
        ),
        row(
            "catalog.switch_rate",
            Float(0.05),
            Decision,
            "switching cost per GB loaded",
        ),
        row(
            "catalog.load_gb_per_slot",
            Float(10.0),
            Decision,
            "load bandwidth; a load adds mem/bw latency",
        ),
        row(
            "catalog.cot_steps",
            Ints(vec![3, 4]),
            Decision,
            "CoT steps per edge-served request, cycled over services",
        ),
        row(
            "catalog.tokens_per_step",
            Int(200),
            Published,
            "200 tokens per CoT step",
        ),
        row(
            "policy.kind",
            Text("laot"),
            Decision,
            "least age-of-thought eviction",
        ),
        row(
            "aot.gamma",
            Float(0.9),
            Decision,
            "per-slot decay of thought value",
        ),
        row(
            "aot.tokens_per_step",
            Float(200.0),
            Published,
            "200 tokens per CoT step",
        ),
        row(
            "accuracy.beta",
            Float(0.5),
            Decision,
            "loss sensitivity to thought value",
        ),
        row(
            "weights.acc",
            Float(10.0),
            Decision,
            "emphasizes edge accuracy loss",
        ),
        row(
            "weights.switch",
            Float(1.0),
            Decision,
            "model switching cost",
        ),
        row("weights.edge", Float(1.0), Decision, "edge inference cost"),
        row("weights.lat", Float(1.0), Decision, "inference latency"),
        row(
            "weights.cloud",
            Float(1.0),
            Decision,
            "cloud inference cost",
        ),
        row(
            "cache.capacity_gb",
            Float(5120.0),
            Published,
            "64 GPUs x 80 GB",
        ),
        row(
            "cache.overflow_policy",
            Text("evict_model"),
            Decision,
            "context overflow evicts the model",
        ),
        row(
            "experiment.policies",
            Texts(vec!["laot", "fifo", "lfu", "cloud_only"]),
            Decision,
            "proposed policy and the three baselines",
        ),
        row(
            "experiment.seeds",
            Ints((1..=10).collect()),
            Decision,
            "ten seeds; SIMRUN_SEED replaces the list when set",
        ),
        row(
            "experiment.output_dir",
            Text("out"),
            Decision,
            "relative to the working directory",
        ),
        row(
            "experiment.emit",
            Text("both"),
            Decision,
            "csv, json or both",
        ),
        row(
            "experiment.jobs",
            Int(0),
            Decision,
            "0 = available parallelism",
        ),
        row("info.n_gpus", Int(64), Published, "GPUs on the edge server"),
        row("info.gpu_mem_gb", Int(80), Published, "memory per GPU"),
        row(
            "info.gpu_tflops",
            Int(312),
            Published,
            "peak throughput per GPU; not modeled",
        ),
        row(
            "info.gpu_tdp_watts",
            Int(300),
            Published,
            "max thermal design power; not modeled",
        ),
    ]
}

/// Looks up one row by dotted key.
pub fn lookup(key: &str) -> Option<DefaultsEntry> {
    defaults().into_iter().find(|e| e.key == key)
}

/// The defaults as a nested TOML table, informational rows excluded.
pub fn defaults_tree() -> toml::Table {
    let mut root = toml::Table::new();
    for entry in defaults() {
        if entry.key.starts_with(INFO_PREFIX) {
            continue;
        }
        let mut table = &mut root;
        let mut parts = entry.key.split('.').peekable();
        while let Some(part) = parts.next() {
            if parts.peek().is_none() {
                table.insert(part.to_string(), entry.value.to_toml());
            } else {
                table = table
                    .entry(part.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .expect("defaults keys form a tree");
            }
        }
    }
    root
}

/// Experiment built purely from the table.
pub fn default_experiment() -> ExperimentSpec {
    ExperimentSpec::from_tree(defaults_tree()).expect("defaults table is complete and valid")
}

/// The default run configuration.
pub fn default_sim_config() -> SimConfig {
    default_experiment().base
}

/// Aligned plain-text rendering for `--print-defaults`.
pub fn render_text() -> String {
    let rows = defaults();
    let key_w = rows.iter().map(|r| r.key.len()).max().unwrap_or(0);
    let vals: Vec<String> = rows.iter().map(|r| r.value.to_string()).collect();
    let val_w = vals.iter().map(|v| v.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (r, v) in rows.iter().zip(&vals) {
        out.push_str(&format!(
            "{:<key_w$}  {:<val_w$}  {:<9}  {}\n",
            r.key, v, r.provenance, r.note
        ));
    }
    out
}

pub fn render_json() -> String {
    serde_json::to_string_pretty(&defaults()).expect("defaults serialize") + "\n"
}
