//! Model/service catalog and the per-slot request stream.
//!
//! Requests arrive as a Poisson process per slot. Each arrival picks a
//! service by Zipf popularity, an agent uniformly, and a request size
//! uniformly. Within a slot the draw order is: arrival count, then for each
//! arrival `(service, agent, req_tokens)`. See [`crate::rng`] for the
//! generator and per-slot stream derivation.

use serde::{Deserialize, Serialize};

use crate::config::{CatalogParams, WorkloadConfig};
use crate::error::{Result, SimError};
use crate::rng::SimRng;

pub type ModelId = usize;
pub type ServiceId = usize;
pub type Slot = u64;

/// A cacheable global model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_id: ModelId,
    pub mem_gb: f64,
    pub context_window: u64,
    pub base_loss: f64,
    pub edge_rate: f64,
    pub edge_tok_per_slot: f64,
    pub cloud_rate: f64,
    pub cloud_latency_slots: f64,
    pub switch_rate: f64,
    pub load_gb_per_slot: f64,
}

/// A service type bound to one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub service_id: ServiceId,
    pub model_id: ModelId,
    /// 1-based; rank `r` has Zipf weight proportional to `1 / r^s`.
    pub popularity_rank: usize,
    pub cot_steps: u64,
    pub tokens_per_step: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub slot: Slot,
    pub agent_id: usize,
    pub service_id: ServiceId,
    pub req_tokens: u64,
}

/// Normalized Zipf weights `w[k] ∝ 1/(k+1)^s`.
pub fn zipf_weights(n: usize, s: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(SimError::InvalidArgument(
            "zipf_weights: n must be >= 1".into(),
        ));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "zipf_weights: exponent must be finite and >= 0, got {s}"
        )));
    }
    let raw: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-s)).collect();
    let norm: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / norm).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Catalog {
    pub models: Vec<ModelSpec>,
    pub services: Vec<ServiceSpec>,
}

impl Catalog {
    pub fn service(&self, id: ServiceId) -> Result<&ServiceSpec> {
        self.services
            .get(id)
            .ok_or_else(|| SimError::InvalidArgument(format!("unknown service id {id}")))
    }

    pub fn model(&self, id: ModelId) -> Result<&ModelSpec> {
        self.models
            .get(id)
            .ok_or_else(|| SimError::InvalidArgument(format!("unknown model id {id}")))
    }
}

/// Builds models and services. Service `k` has popularity rank `k + 1` and is
/// bound to model `k % n_models`.
pub fn build_catalog(workload: &WorkloadConfig, params: &CatalogParams) -> Result<Catalog> {
    if workload.n_services == 0 {
        return Err(SimError::Validation(vec![
            "workload.n_services must be >= 1".into(),
        ]));
    }
    if params.context_windows.is_empty()
        || params.mem_gb_tiers.is_empty()
        || params.cot_steps.is_empty()
    {
        return Err(SimError::Validation(vec![
            "catalog list parameters must be non-empty".into(),
        ]));
    }
    let n_models = if params.n_models == 0 {
        workload.n_services
    } else {
        params.n_models
    };
    let models = (0..n_models)
        .map(|m| ModelSpec {
            model_id: m,
            mem_gb: params.mem_gb_tiers[m % params.mem_gb_tiers.len()],
            context_window: params.context_windows[m % params.context_windows.len()],
            base_loss: params.base_loss,
            edge_rate: params.edge_rate,
            edge_tok_per_slot: params.edge_tok_per_slot,
            cloud_rate: params.cloud_rate,
            cloud_latency_slots: params.cloud_latency_slots,
            switch_rate: params.switch_rate,
            load_gb_per_slot: params.load_gb_per_slot,
        })
        .collect();
    let services = (0..workload.n_services)
        .map(|k| ServiceSpec {
            service_id: k,
            model_id: k % n_models,
            popularity_rank: k + 1,
            cot_steps: params.cot_steps[k % params.cot_steps.len()],
            tokens_per_step: params.tokens_per_step,
        })
        .collect();
    Ok(Catalog { models, services })
}

/// Draws the requests of each slot.
#[derive(Clone, Debug)]
pub struct RequestSampler {
    config: WorkloadConfig,
    /// Cumulative popularity indexed by service id.
    cdf: Vec<f64>,
}

impl RequestSampler {
    pub fn new(config: &WorkloadConfig, services: &[ServiceSpec]) -> Result<Self> {
        let weights = zipf_weights(services.len(), config.zipf_exponent)?;
        let mut by_service = vec![0.0; services.len()];
        for s in services {
            if s.popularity_rank == 0 || s.popularity_rank > services.len() {
                return Err(SimError::InvalidArgument(format!(
                    "service {} has popularity rank {} outside 1..={}",
                    s.service_id,
                    s.popularity_rank,
                    services.len()
                )));
            }
            by_service[s.service_id] = weights[s.popularity_rank - 1];
        }
        let mut acc = 0.0;
        let cdf = by_service
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            cdf,
        })
    }

    /// Requests of `slot`, drawn from that slot's own stream.
    pub fn slot_requests(&self, slot: Slot) -> Vec<Request> {
        let mut rng = SimRng::for_slot(self.config.seed, slot);
        self.sample_requests(slot, &mut rng)
    }

    pub fn sample_requests(&self, slot: Slot, rng: &mut SimRng) -> Vec<Request> {
        let count = rng.poisson(self.config.arrivals_per_slot_mean);
        (0..count)
            .map(|_| {
                let service_id = self.pick_service(rng.next_f64());
                let agent_id = rng.uniform_inclusive(0, self.config.n_agents as u64 - 1) as usize;
                let req_tokens =
                    rng.uniform_inclusive(self.config.req_tokens_min, self.config.req_tokens_max);
                Request {
                    slot,
                    agent_id,
                    service_id,
                    req_tokens,
                }
            })
            .collect()
    }

    fn pick_service(&self, u: f64) -> ServiceId {
        // first index with u < cdf[k]; rounding can leave cdf.last() just below 1
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1)
    }
}
