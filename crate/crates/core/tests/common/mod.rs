#![allow(dead_code)]

use laot_sim::config::OverflowPolicy;
use laot_sim::workload::Request;
use laot_sim::{PolicyKind, SimConfig};

/// A small configuration: `n_models` models, all 100 GB, room for
/// `capacity_models` of them.
pub fn small_config(
    n_services: usize,
    n_models: usize,
    capacity_models: usize,
    n_slots: u64,
    seed: u64,
    policy: PolicyKind,
) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.workload.n_services = n_services;
    cfg.workload.n_slots = n_slots;
    cfg.workload.seed = seed;
    cfg.catalog.n_models = n_models;
    cfg.catalog.mem_gb_tiers = vec![100.0];
    cfg.cache.capacity_gb = 100.0 * capacity_models as f64;
    cfg.cache.overflow_policy = OverflowPolicy::EvictModel;
    cfg.policy.kind = policy;
    cfg
}

pub fn req(slot: u64, service_id: usize) -> Request {
    Request {
        slot,
        agent_id: 0,
        service_id,
        req_tokens: 100,
    }
}
