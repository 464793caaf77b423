//! The time-slotted simulation engine.
//!
//! Each slot: draw the slot's requests, serve them in arrival order against
//! the cache (or the cloud), record the generated thoughts, apply the context
//! window, and total the weighted cost.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{Admission, CacheState, Policy, PolicyKind};
use crate::config::SimConfig;
use crate::cost::{
    accuracy_loss, cloud_serve_cost, edge_serve_cost, slot_total, switching_cost, CostBreakdown,
};
use crate::error::{Result, SimError};
use crate::thought::WindowCheck;
use crate::workload::{build_catalog, Catalog, Request, RequestSampler, Slot};

pub const REPORT_SCHEMA_VERSION: &str = "v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    EdgeHit,
    EdgeLoad,
    Cloud,
}

/// Outcome of serving a single request.
#[derive(Clone, Debug, PartialEq)]
pub struct Served {
    pub decision: Decision,
    /// Unweighted components; `total` is left at zero.
    pub parts: CostBreakdown,
    pub evicted_by_policy: usize,
    pub evicted_by_context: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: Slot,
    pub breakdown: CostBreakdown,
    pub requests: u64,
    pub hits: u64,
    pub misses: u64,
    pub cloud_served: u64,
    pub loads: u64,
    pub evictions_policy: u64,
    pub evictions_context: u64,
    /// Average accuracy loss per request; cloud-served requests count as 0.
    pub mean_acc_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub config_digest: String,
    pub policy: PolicyKind,
    pub seed: u64,
    pub totals: CostBreakdown,
    pub mean_total_per_slot: f64,
    pub per_slot: Vec<SlotMetrics>,
}

impl RunReport {
    /// Assembles a report; totals are plain sums of the slot breakdowns.
    pub fn from_slots(config: &SimConfig, per_slot: Vec<SlotMetrics>) -> Self {
        let mut totals = CostBreakdown::default();
        for m in &per_slot {
            totals += &m.breakdown;
        }
        let mean_total_per_slot = if per_slot.is_empty() {
            0.0
        } else {
            totals.total / per_slot.len() as f64
        };
        Self {
            schema_version: REPORT_SCHEMA_VERSION.to_string(),
            config_digest: config_digest(config),
            policy: config.policy.kind,
            seed: config.workload.seed,
            totals,
            mean_total_per_slot,
            per_slot,
        }
    }
}

/// Hex SHA-256 prefix of the canonical JSON encoding of the config.
pub fn config_digest(config: &SimConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&json)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Serves one request at slot `now`, mutating the cache.
pub fn serve_request(
    state: &mut CacheState,
    request: &Request,
    catalog: &Catalog,
    config: &SimConfig,
    now: Slot,
) -> Result<Served> {
    if request.slot != now {
        return Err(SimError::InvalidArgument(format!(
            "request for slot {} served at slot {now}",
            request.slot
        )));
    }
    let service = catalog.service(request.service_id)?;
    let model = catalog.model(service.model_id)?;
    let policy = config.policy();

    let mut parts = CostBreakdown::default();
    let mut evicted_by_policy = 0;

    let decision = if state.lookup(model.model_id) {
        state.record_access(model.model_id, now)?;
        Decision::EdgeHit
    } else {
        match state.admit(model, &policy, now)? {
            Admission::RejectedToCloud => {
                let cloud = cloud_serve_cost(request, service, model);
                parts.cloud_cost = cloud.cloud_cost;
                parts.edge_latency = cloud.latency;
                return Ok(Served {
                    decision: Decision::Cloud,
                    parts,
                    evicted_by_policy: 0,
                    evicted_by_context: false,
                });
            }
            Admission::Loaded { evicted } => {
                evicted_by_policy = evicted.len();
                parts.switch_cost = switching_cost(model);
                parts.edge_latency = model.mem_gb / model.load_gb_per_slot;
                Decision::EdgeLoad
            }
        }
    };

    let entry = state.entry_mut(model.model_id).ok_or_else(|| {
        SimError::Invariant(format!("model {} missing after admit", model.model_id))
    })?;
    // the answer benefits only from thoughts recorded before this request
    let value = entry.ledger.value(now, &config.aot)?;
    parts.acc_loss = accuracy_loss(model, value, &config.accuracy)?;
    let edge = edge_serve_cost(request, service, model);
    parts.edge_cost = edge.edge_cost;
    parts.edge_latency += edge.edge_latency;

    entry
        .ledger
        .record(now, service.cot_steps, service.tokens_per_step)?;
    let check = entry
        .ledger
        .enforce_window(model.context_window, config.cache.overflow_policy);
    let evicted_by_context = check == WindowCheck::ModelEvicted;
    if evicted_by_context {
        state.evict(model.model_id)?;
    }

    Ok(Served {
        decision,
        parts,
        evicted_by_policy,
        evicted_by_context,
    })
}

/// A single run's mutable state.
#[derive(Clone, Debug)]
pub struct Simulator {
    config: SimConfig,
    catalog: Catalog,
    sampler: RequestSampler,
    state: CacheState,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let catalog = build_catalog(&config.workload, &config.catalog)?;
        let sampler = RequestSampler::new(&config.workload, &catalog.services)?;
        let state = CacheState::new(config.cache.capacity_gb);
        Ok(Self {
            config,
            catalog,
            sampler,
            state,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn state(&self) -> &CacheState {
        &self.state
    }

    pub fn policy(&self) -> Policy {
        self.config.policy()
    }

    /// Draws and serves the slot's sampled requests.
    pub fn step(&mut self, slot: Slot) -> Result<SlotMetrics> {
        let requests = self.sampler.slot_requests(slot);
        self.step_with(slot, &requests)
    }

    /// Serves an explicit list of requests as slot `slot`.
    pub fn step_with(&mut self, slot: Slot, requests: &[Request]) -> Result<SlotMetrics> {
        let mut m = SlotMetrics {
            slot,
            ..SlotMetrics::default()
        };
        for req in requests {
            let served = serve_request(&mut self.state, req, &self.catalog, &self.config, slot)?;
            m.requests += 1;
            match served.decision {
                Decision::EdgeHit => m.hits += 1,
                Decision::EdgeLoad => {
                    m.misses += 1;
                    m.loads += 1;
                }
                Decision::Cloud => {
                    m.misses += 1;
                    m.cloud_served += 1;
                }
            }
            m.evictions_policy += served.evicted_by_policy as u64;
            m.evictions_context += served.evicted_by_context as u64;
            m.breakdown += &served.parts;
            self.check_invariants(slot)?;
        }
        m.breakdown.total = slot_total(&m.breakdown, &self.config.weights);
        m.mean_acc_loss = if m.requests == 0 {
            0.0
        } else {
            m.breakdown.acc_loss / m.requests as f64
        };
        Ok(m)
    }

    fn check_invariants(&self, now: Slot) -> Result<()> {
        self.state.check_invariants(now)?;
        for (id, entry) in self.state.entries() {
            let window = self.catalog.model(*id)?.context_window;
            if entry.ledger.token_total() > window {
                return Err(SimError::Invariant(format!(
                    "model {id} holds {} tokens over its {window}-token window",
                    entry.ledger.token_total()
                )));
            }
        }
        if self.config.policy.kind == PolicyKind::CloudOnly && !self.state.is_empty() {
            return Err(SimError::Invariant("cloud-only run cached a model".into()));
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<RunReport> {
        let n = self.config.workload.n_slots;
        let per_slot = (0..n).map(|t| self.step(t)).collect::<Result<Vec<_>>>()?;
        Ok(RunReport::from_slots(&self.config, per_slot))
    }

    /// Runs over a caller-supplied trace instead of the sampled workload.
    pub fn run_trace<F>(mut self, mut trace: F) -> Result<RunReport>
    where
        F: FnMut(Slot) -> Vec<Request>,
    {
        let n = self.config.workload.n_slots;
        let mut per_slot = Vec::with_capacity(n as usize);
        for t in 0..n {
            let requests = trace(t);
            per_slot.push(self.step_with(t, &requests)?);
        }
        Ok(RunReport::from_slots(&self.config, per_slot))
    }
}

/// Runs the configured simulation from a cold cache.
pub fn run(config: &SimConfig) -> Result<RunReport> {
    Simulator::new(config.clone())?.run()
}
