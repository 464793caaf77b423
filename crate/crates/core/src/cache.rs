//! Memory-budgeted model cache and its eviction policies.
//!
//! Victim selection:
//!
//! * `Laot`: smallest age-of-thought ledger value at the current slot.
//! * `Fifo`: earliest load slot.
//! * `Lfu`: fewest served requests since load.
//! * `CloudOnly`: never caches anything.
//!
//! Ties are broken by earlier load slot, then smaller model id.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::AotParams;
use crate::error::{Result, SimError};
use crate::thought::Ledger;
use crate::workload::{ModelId, ModelSpec, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Least age-of-thought. Also accepted as `lc`.
    #[serde(alias = "lc")]
    Laot,
    Fifo,
    Lfu,
    CloudOnly,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Laot,
        PolicyKind::Fifo,
        PolicyKind::Lfu,
        PolicyKind::CloudOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Laot => "laot",
            PolicyKind::Fifo => "fifo",
            PolicyKind::Lfu => "lfu",
            PolicyKind::CloudOnly => "cloud_only",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "laot" | "lc" => Ok(PolicyKind::Laot),
            "fifo" => Ok(PolicyKind::Fifo),
            "lfu" => Ok(PolicyKind::Lfu),
            "cloud_only" | "cloud" => Ok(PolicyKind::CloudOnly),
            other => Err(SimError::InvalidArgument(format!(
                "unknown policy `{other}` (expected laot, fifo, lfu or cloud_only)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Only consulted by `Laot`.
    pub aot: AotParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub mem_gb: f64,
    pub ledger: Ledger,
    pub load_slot: Slot,
    pub access_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Admission {
    /// The model is now resident; `evicted` lists victims in eviction order.
    Loaded {
        evicted: Vec<ModelId>,
    },
    RejectedToCloud,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheState {
    capacity_gb: f64,
    entries: BTreeMap<ModelId, CacheEntry>,
    used_gb: f64,
}

impl CacheState {
    pub fn new(capacity_gb: f64) -> Self {
        Self {
            capacity_gb,
            entries: BTreeMap::new(),
            used_gb: 0.0,
        }
    }

    pub fn capacity_gb(&self) -> f64 {
        self.capacity_gb
    }

    pub fn used_gb(&self) -> f64 {
        self.used_gb
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<ModelId, CacheEntry> {
        &self.entries
    }

    pub fn entry(&self, model_id: ModelId) -> Option<&CacheEntry> {
        self.entries.get(&model_id)
    }

    pub fn entry_mut(&mut self, model_id: ModelId) -> Option<&mut CacheEntry> {
        self.entries.get_mut(&model_id)
    }

    /// `true` on a hit. Never mutates.
    pub fn lookup(&self, model_id: ModelId) -> bool {
        self.entries.contains_key(&model_id)
    }

    /// The entry the policy would evict next.
    pub fn evict_candidate(&self, policy: &Policy, now: Slot) -> Result<ModelId> {
        if policy.kind == PolicyKind::CloudOnly {
            return Err(SimError::InvalidArgument(
                "cloud-only policy has no eviction candidates".into(),
            ));
        }
        if self.entries.is_empty() {
            return Err(SimError::InvalidArgument(
                "evict_candidate called on an empty cache".into(),
            ));
        }
        let mut best: Option<(ModelId, &CacheEntry, f64)> = None;
        for (&id, entry) in &self.entries {
            let score = match policy.kind {
                PolicyKind::Laot => entry.ledger.value(now, &policy.aot)?,
                PolicyKind::Fifo => entry.load_slot as f64,
                PolicyKind::Lfu => entry.access_count as f64,
                PolicyKind::CloudOnly => unreachable!(),
            };
            let better = match best {
                None => true,
                Some((best_id, best_entry, best_score)) => {
                    score
                        .partial_cmp(&best_score)
                        .unwrap_or(Ordering::Equal)
                        .then(entry.load_slot.cmp(&best_entry.load_slot))
                        .then(id.cmp(&best_id))
                        == Ordering::Less
                }
            };
            if better {
                best = Some((id, entry, score));
            }
        }
        Ok(best.map(|(id, _, _)| id).expect("non-empty cache"))
    }

    /// Loads `model`, evicting by policy until it fits.
    pub fn admit(&mut self, model: &ModelSpec, policy: &Policy, now: Slot) -> Result<Admission> {
        if self.lookup(model.model_id) {
            return Err(SimError::InvalidArgument(format!(
                "model {} is already cached",
                model.model_id
            )));
        }
        if policy.kind == PolicyKind::CloudOnly || model.mem_gb > self.capacity_gb {
            return Ok(Admission::RejectedToCloud);
        }
        let mut evicted = Vec::new();
        while self.used_gb + model.mem_gb > self.capacity_gb {
            let victim = self.evict_candidate(policy, now)?;
            self.evict(victim)?;
            evicted.push(victim);
        }
        self.entries.insert(
            model.model_id,
            CacheEntry {
                mem_gb: model.mem_gb,
                ledger: Ledger::new(),
                load_slot: now,
                access_count: 1,
            },
        );
        self.refresh_used();
        Ok(Admission::Loaded { evicted })
    }

    pub fn record_access(&mut self, model_id: ModelId, _now: Slot) -> Result<()> {
        let entry = self.entries.get_mut(&model_id).ok_or_else(|| {
            SimError::InvalidArgument(format!("record_access: model {model_id} is not cached"))
        })?;
        entry.access_count += 1;
        Ok(())
    }

    /// Removes a model together with its thoughts.
    pub fn evict(&mut self, model_id: ModelId) -> Result<CacheEntry> {
        let entry = self.entries.remove(&model_id).ok_or_else(|| {
            SimError::InvalidArgument(format!("evict: model {model_id} is not cached"))
        })?;
        self.refresh_used();
        Ok(entry)
    }

    fn refresh_used(&mut self) {
        self.used_gb = self.entries.values().map(|e| e.mem_gb).sum();
    }

    /// Memory and bookkeeping invariants; `now` bounds every load slot.
    pub fn check_invariants(&self, now: Slot) -> Result<()> {
        let recomputed: f64 = self.entries.values().map(|e| e.mem_gb).sum();
        if recomputed != self.used_gb {
            return Err(SimError::Invariant(format!(
                "used_gb {} differs from recomputed {recomputed}",
                self.used_gb
            )));
        }
        if self.used_gb > self.capacity_gb {
            return Err(SimError::Invariant(format!(
                "used_gb {} exceeds capacity {}",
                self.used_gb, self.capacity_gb
            )));
        }
        for (id, e) in &self.entries {
            if e.load_slot > now || e.access_count == 0 {
                return Err(SimError::Invariant(format!(
                    "entry {id}: load_slot {} access_count {} at slot {now}",
                    e.load_slot, e.access_count
                )));
            }
        }
        Ok(())
    }
}
