//! Straight-line reference simulator used as a correctness oracle.
//!
//! Shares only the catalog and request sampler with the engine. Cache
//! residency, eviction choice, thought values and costs are all re-derived
//! here with full scans and full sums on every decision.

use crate::cache::PolicyKind;
use crate::config::{OverflowPolicy, SimConfig};
use crate::cost::CostBreakdown;
use crate::engine::{RunReport, SlotMetrics};
use crate::error::Result;
use crate::workload::{build_catalog, Request, RequestSampler, Slot};

struct Resident {
    model: usize,
    mem_gb: f64,
    load_slot: Slot,
    served: u64,
    /// `(created_slot, tokens)`, oldest first.
    thoughts: Vec<(Slot, u64)>,
}

fn value_of(r: &Resident, now: Slot, gamma: f64, tau: f64) -> f64 {
    let mut v = 0.0;
    for &(created, tokens) in &r.thoughts {
        v += tokens as f64 / tau * gamma.powi((now - created) as i32);
    }
    v
}

fn used(residents: &[Resident]) -> f64 {
    let mut sorted: Vec<&Resident> = residents.iter().collect();
    sorted.sort_by_key(|r| r.model);
    sorted.iter().map(|r| r.mem_gb).sum()
}

fn victim(residents: &[Resident], kind: PolicyKind, now: Slot, cfg: &SimConfig) -> usize {
    let key = |r: &Resident| -> f64 {
        match kind {
            PolicyKind::Laot => value_of(r, now, cfg.aot.gamma, cfg.aot.tokens_per_step),
            PolicyKind::Fifo => r.load_slot as f64,
            PolicyKind::Lfu => r.served as f64,
            PolicyKind::CloudOnly => panic!("cloud-only never evicts"),
        }
    };
    let mut best = 0;
    for i in 1..residents.len() {
        let (a, b) = (&residents[i], &residents[best]);
        let (ka, kb) = (key(a), key(b));
        if ka < kb || (ka == kb && (a.load_slot, a.model) < (b.load_slot, b.model)) {
            best = i;
        }
    }
    best
}

/// Same contract as [`crate::engine::run`].
pub fn reference_run(config: &SimConfig) -> Result<RunReport> {
    config.validate()?;
    let catalog = build_catalog(&config.workload, &config.catalog)?;
    let sampler = RequestSampler::new(&config.workload, &catalog.services)?;
    reference_run_trace(config, |t| sampler.slot_requests(t))
}

/// Same contract as [`crate::engine::Simulator::run_trace`].
pub fn reference_run_trace<F>(config: &SimConfig, mut trace: F) -> Result<RunReport>
where
    F: FnMut(Slot) -> Vec<Request>,
{
    config.validate()?;
    let catalog = build_catalog(&config.workload, &config.catalog)?;
    let kind = config.policy.kind;
    let w = config.weights;
    let mut residents: Vec<Resident> = Vec::new();
    let mut per_slot = Vec::new();

    for now in 0..config.workload.n_slots {
        let mut m = SlotMetrics {
            slot: now,
            ..SlotMetrics::default()
        };
        let mut b = CostBreakdown::default();
        for req in trace(now) {
            let svc = &catalog.services[req.service_id];
            let model = &catalog.models[svc.model_id];
            let tokens = req.req_tokens + svc.cot_steps * svc.tokens_per_step;
            m.requests += 1;

            let mut idx = residents.iter().position(|r| r.model == model.model_id);
            let mut load_latency = 0.0;
            match idx {
                Some(i) => {
                    m.hits += 1;
                    residents[i].served += 1;
                }
                None => {
                    m.misses += 1;
                    if kind == PolicyKind::CloudOnly || model.mem_gb > config.cache.capacity_gb {
                        m.cloud_served += 1;
                        b.cloud_cost += model.cloud_rate * tokens as f64 / 1000.0;
                        b.edge_latency += model.cloud_latency_slots;
                        continue;
                    }
                    while used(&residents) + model.mem_gb > config.cache.capacity_gb {
                        let v = victim(&residents, kind, now, config);
                        residents.remove(v);
                        m.evictions_policy += 1;
                    }
                    residents.push(Resident {
                        model: model.model_id,
                        mem_gb: model.mem_gb,
                        load_slot: now,
                        served: 1,
                        thoughts: Vec::new(),
                    });
                    m.loads += 1;
                    b.switch_cost += model.switch_rate * model.mem_gb;
                    load_latency = model.mem_gb / model.load_gb_per_slot;
                    idx = Some(residents.len() - 1);
                }
            }

            let i = idx.expect("resident after hit or load");
            let v = value_of(
                &residents[i],
                now,
                config.aot.gamma,
                config.aot.tokens_per_step,
            );
            b.acc_loss += model.base_loss * (-config.accuracy.beta * v).exp();
            b.edge_cost += model.edge_rate * tokens as f64 / 1000.0;
            b.edge_latency += load_latency + tokens as f64 / model.edge_tok_per_slot;

            for _ in 0..svc.cot_steps {
                residents[i].thoughts.push((now, svc.tokens_per_step));
            }
            let held: u64 = residents[i].thoughts.iter().map(|t| t.1).sum();
            if held > model.context_window {
                match config.cache.overflow_policy {
                    OverflowPolicy::EvictModel => {
                        residents.remove(i);
                        m.evictions_context += 1;
                    }
                    OverflowPolicy::TrimOldest => {
                        while residents[i].thoughts.iter().map(|t| t.1).sum::<u64>()
                            > model.context_window
                        {
                            residents[i].thoughts.remove(0);
                        }
                    }
                }
            }
        }
        b.total = w.acc * b.acc_loss
            + w.switch * b.switch_cost
            + w.edge * b.edge_cost
            + w.lat * b.edge_latency
            + w.cloud * b.cloud_cost;
        m.breakdown = b;
        m.mean_acc_loss = if m.requests == 0 {
            0.0
        } else {
            b.acc_loss / m.requests as f64
        };
        per_slot.push(m);
    }
    Ok(RunReport::from_slots(config, per_slot))
}
