//! Per-model chain-of-thought ledgers and age-of-thought valuation.
//!
//! A thought's value is `(tokens / tokens_per_step) * gamma^age`, where age
//! is the number of whole slots since it was recorded. A model's value is the
//! sum over its ledger.

use serde::{Deserialize, Serialize};

use crate::config::{AotParams, OverflowPolicy};
use crate::error::{Result, SimError};
use crate::workload::Slot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thought {
    pub created_slot: Slot,
    pub tokens: u64,
}

/// Age of a thought in slots.
pub fn aot(thought: &Thought, now: Slot) -> Result<u64> {
    now.checked_sub(thought.created_slot).ok_or_else(|| {
        SimError::InvalidArgument(format!(
            "thought created at slot {} is in the future of slot {now}",
            thought.created_slot
        ))
    })
}

pub fn thought_value(thought: &Thought, now: Slot, params: &AotParams) -> Result<f64> {
    let age = aot(thought, now)?;
    Ok(discounted(thought.tokens, age, params))
}

#[inline]
fn discounted(tokens: u64, age: u64, params: &AotParams) -> f64 {
    let decay = match i32::try_from(age) {
        Ok(a) => params.gamma.powi(a),
        Err(_) => params.gamma.powf(age as f64),
    };
    (tokens as f64 / params.tokens_per_step) * decay
}

/// Outcome of checking a ledger against its model's context window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WindowCheck {
    Fits,
    /// The model must be evicted and its ledger dropped.
    ModelEvicted,
    /// Oldest thoughts were dropped; carries how many.
    Trimmed {
        dropped: usize,
    },
}

/// Thoughts held in one cached model's context, oldest first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    thoughts: Vec<Thought>,
    token_total: u64,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn thoughts(&self) -> &[Thought] {
        &self.thoughts
    }

    pub fn token_total(&self) -> u64 {
        self.token_total
    }

    pub fn is_empty(&self) -> bool {
        self.thoughts.is_empty()
    }

    /// Sum of discounted thought values; 0 for an empty ledger.
    pub fn value(&self, now: Slot, params: &AotParams) -> Result<f64> {
        let mut total = 0.0;
        for t in &self.thoughts {
            total += thought_value(t, now, params)?;
        }
        Ok(total)
    }

    /// Appends `steps` thoughts of `tokens_per_step` tokens created at `now`.
    pub fn record(&mut self, now: Slot, steps: u64, tokens_per_step: u64) -> Result<()> {
        if tokens_per_step == 0 && steps > 0 {
            return Err(SimError::InvalidArgument(
                "thoughts must carry tokens".into(),
            ));
        }
        if let Some(last) = self.thoughts.last() {
            if last.created_slot > now {
                return Err(SimError::InvalidArgument(format!(
                    "cannot record at slot {now} after a thought from slot {}",
                    last.created_slot
                )));
            }
        }
        self.thoughts.extend((0..steps).map(|_| Thought {
            created_slot: now,
            tokens: tokens_per_step,
        }));
        self.token_total += steps * tokens_per_step;
        Ok(())
    }

    /// Applies the context-window constraint.
    ///
    /// Under `EvictModel` the ledger is left as is; the caller is expected to
    /// drop the model along with it.
    pub fn enforce_window(&mut self, window: u64, overflow: OverflowPolicy) -> WindowCheck {
        if self.token_total <= window {
            return WindowCheck::Fits;
        }
        match overflow {
            OverflowPolicy::EvictModel => WindowCheck::ModelEvicted,
            OverflowPolicy::TrimOldest => {
                let mut dropped = 0;
                let mut total = self.token_total;
                while total > window {
                    total -= self.thoughts[dropped].tokens;
                    dropped += 1;
                }
                self.thoughts.drain(..dropped);
                self.token_total = total;
                WindowCheck::Trimmed { dropped }
            }
        }
    }
}
