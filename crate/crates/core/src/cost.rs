//! The five execution-cost components and their weighted total.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::config::{AccuracyParams, CostWeights};
use crate::error::{Result, SimError};
use crate::workload::{ModelSpec, Request, ServiceSpec};

/// Cost components accumulated over some span (a request, a slot, a run).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub acc_loss: f64,
    pub switch_cost: f64,
    pub edge_cost: f64,
    /// Serving latency in slots: edge compute time, model load time, and the
    /// fixed WAN latency of cloud-served requests.
    pub edge_latency: f64,
    pub cloud_cost: f64,
    /// Weighted sum of the five components.
    pub total: f64,
}

impl CostBreakdown {
    pub fn components(&self) -> [f64; 5] {
        [
            self.acc_loss,
            self.switch_cost,
            self.edge_cost,
            self.edge_latency,
            self.cloud_cost,
        ]
    }

    /// Recomputes `total` from the components.
    pub fn weighted(mut self, weights: &CostWeights) -> Self {
        self.total = slot_total(&self, weights);
        self
    }
}

impl AddAssign<&CostBreakdown> for CostBreakdown {
    fn add_assign(&mut self, rhs: &CostBreakdown) {
        self.acc_loss += rhs.acc_loss;
        self.switch_cost += rhs.switch_cost;
        self.edge_cost += rhs.edge_cost;
        self.edge_latency += rhs.edge_latency;
        self.cloud_cost += rhs.cloud_cost;
        self.total += rhs.total;
    }
}

/// `base_loss * exp(-beta * value)`.
pub fn accuracy_loss(
    model: &ModelSpec,
    thought_value: f64,
    params: &AccuracyParams,
) -> Result<f64> {
    if thought_value.is_nan() || thought_value < 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "thought value must be >= 0, got {thought_value}"
        )));
    }
    Ok(model.base_loss * (-params.beta * thought_value).exp())
}

/// Charged once per load event.
pub fn switching_cost(model: &ModelSpec) -> f64 {
    model.switch_rate * model.mem_gb
}

/// Offloaded tokens plus the chain-of-thought tokens the service generates.
pub fn tokens_processed(request: &Request, service: &ServiceSpec) -> u64 {
    request.req_tokens + service.cot_steps * service.tokens_per_step
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeServe {
    pub edge_cost: f64,
    pub edge_latency: f64,
    pub tokens_processed: u64,
}

pub fn edge_serve_cost(request: &Request, service: &ServiceSpec, model: &ModelSpec) -> EdgeServe {
    let tokens = tokens_processed(request, service);
    EdgeServe {
        edge_cost: model.edge_rate * tokens as f64 / 1000.0,
        edge_latency: tokens as f64 / model.edge_tok_per_slot,
        tokens_processed: tokens,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudServe {
    pub cloud_cost: f64,
    /// Fixed WAN penalty, independent of request size.
    pub latency: f64,
}

pub fn cloud_serve_cost(request: &Request, service: &ServiceSpec, model: &ModelSpec) -> CloudServe {
    let tokens = tokens_processed(request, service);
    CloudServe {
        cloud_cost: model.cloud_rate * tokens as f64 / 1000.0,
        latency: model.cloud_latency_slots,
    }
}

pub fn slot_total(parts: &CostBreakdown, weights: &CostWeights) -> f64 {
    weights.acc * parts.acc_loss
        + weights.switch * parts.switch_cost
        + weights.edge * parts.edge_cost
        + weights.lat * parts.edge_latency
        + weights.cloud * parts.cloud_cost
}
