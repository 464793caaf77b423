//! Simulation configuration types and validation.
//!
//! Every field here has exactly one row in [`crate::defaults::defaults`];
//! `Default` impls are derived from that table rather than restated.

use serde::{Deserialize, Serialize};

use crate::cache::{Policy, PolicyKind};
use crate::error::{Result, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub n_services: usize,
    pub n_agents: usize,
    pub zipf_exponent: f64,
    /// Poisson mean of request arrivals per slot.
    pub arrivals_per_slot_mean: f64,
    pub seed: u64,
    pub n_slots: u64,
    /// Offloaded request size is uniform on `[req_tokens_min, req_tokens_max]`.
    pub req_tokens_min: u64,
    pub req_tokens_max: u64,
}

/// Parameters from which the model and service catalog is generated.
///
/// List-valued fields are cycled: model `m` gets `context_windows[m % len]`
/// and `mem_gb_tiers[m % len]`, service `k` gets `cot_steps[k % len]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    /// Number of distinct models; 0 means one model per service.
    pub n_models: usize,
    pub context_windows: Vec<u64>,
    pub mem_gb_tiers: Vec<f64>,
    pub base_loss: f64,
    /// Edge inference cost per 1K tokens.
    pub edge_rate: f64,
    pub edge_tok_per_slot: f64,
    /// Cloud inference cost per 1K tokens.
    pub cloud_rate: f64,
    pub cloud_latency_slots: f64,
    /// Switching cost per GB loaded.
    pub switch_rate: f64,
    /// Load bandwidth; a load adds `mem_gb / load_gb_per_slot` to latency.
    pub load_gb_per_slot: f64,
    pub cot_steps: Vec<u64>,
    pub tokens_per_step: u64,
}

/// Age-of-thought valuation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AotParams {
    /// Per-slot decay of a thought's value.
    pub gamma: f64,
    /// Normalization: a thought of this many tokens is worth 1 when fresh.
    pub tokens_per_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyParams {
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub acc: f64,
    pub switch: f64,
    pub edge: f64,
    pub lat: f64,
    pub cloud: f64,
}

/// What happens when a model's thoughts outgrow its context window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    EvictModel,
    TrimOldest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    pub capacity_gb: f64,
    pub overflow_policy: OverflowPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: PolicyKind,
}

/// Full configuration of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub workload: WorkloadConfig,
    pub catalog: CatalogParams,
    pub policy: PolicySection,
    pub aot: AotParams,
    pub accuracy: AccuracyParams,
    pub weights: CostWeights,
    pub cache: CacheConfig,
}

impl SimConfig {
    pub fn policy(&self) -> Policy {
        Policy {
            kind: self.policy.kind,
            aot: self.aot,
        }
    }

    pub fn with_policy(mut self, kind: PolicyKind) -> Self {
        self.policy.kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.workload.seed = seed;
        self
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        self.collect_violations(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SimError::Validation(errs))
        }
    }

    pub(crate) fn collect_violations(&self, errs: &mut Vec<String>) {
        let w = &self.workload;
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        check(w.n_services >= 1, "workload.n_services must be >= 1");
        check(w.n_agents >= 1, "workload.n_agents must be >= 1");
        check(
            w.zipf_exponent.is_finite() && w.zipf_exponent >= 0.0,
            "workload.zipf_exponent must be finite and >= 0",
        );
        check(
            w.arrivals_per_slot_mean.is_finite() && w.arrivals_per_slot_mean >= 0.0,
            "workload.arrivals_per_slot_mean must be finite and >= 0",
        );
        check(
            w.req_tokens_min >= 1,
            "workload.req_tokens_min must be >= 1",
        );
        check(
            w.req_tokens_min <= w.req_tokens_max,
            "workload.req_tokens_min must not exceed workload.req_tokens_max",
        );

        let c = &self.catalog;
        check(
            !c.context_windows.is_empty(),
            "catalog.context_windows must be non-empty",
        );
        check(
            c.context_windows.iter().all(|&w| w > 0),
            "catalog.context_windows entries must be > 0",
        );
        check(
            !c.mem_gb_tiers.is_empty(),
            "catalog.mem_gb_tiers must be non-empty",
        );
        check(
            c.mem_gb_tiers.iter().all(|&m| m.is_finite() && m > 0.0),
            "catalog.mem_gb_tiers entries must be > 0",
        );
        check(
            (0.0..=1.0).contains(&c.base_loss),
            "catalog.base_loss must be in [0, 1]",
        );
        for (name, v) in [
            ("catalog.edge_rate", c.edge_rate),
            ("catalog.cloud_rate", c.cloud_rate),
            ("catalog.cloud_latency_slots", c.cloud_latency_slots),
            ("catalog.switch_rate", c.switch_rate),
        ] {
            check(
                v.is_finite() && v >= 0.0,
                &format!("{name} must be finite and >= 0"),
            );
        }
        check(
            c.edge_tok_per_slot.is_finite() && c.edge_tok_per_slot > 0.0,
            "catalog.edge_tok_per_slot must be > 0",
        );
        check(
            c.load_gb_per_slot.is_finite() && c.load_gb_per_slot > 0.0,
            "catalog.load_gb_per_slot must be > 0",
        );
        check(
            !c.cot_steps.is_empty(),
            "catalog.cot_steps must be non-empty",
        );
        check(c.tokens_per_step > 0, "catalog.tokens_per_step must be > 0");

        check(
            self.aot.gamma > 0.0 && self.aot.gamma <= 1.0,
            "aot.gamma must be in (0, 1]",
        );
        check(
            self.aot.tokens_per_step.is_finite() && self.aot.tokens_per_step > 0.0,
            "aot.tokens_per_step must be > 0",
        );
        check(
            self.accuracy.beta.is_finite() && self.accuracy.beta > 0.0,
            "accuracy.beta must be > 0",
        );

        let ws = self.weights;
        let all = [ws.acc, ws.switch, ws.edge, ws.lat, ws.cloud];
        check(
            all.iter().all(|v| v.is_finite() && *v >= 0.0),
            "weights.* must be finite and >= 0",
        );
        check(
            all.iter().any(|v| *v > 0.0),
            "at least one of weights.* must be > 0",
        );

        check(
            self.cache.capacity_gb.is_finite() && self.cache.capacity_gb > 0.0,
            "cache.capacity_gb must be > 0",
        );
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        crate::defaults::default_experiment().base
    }
}
