//! Edge model-cache simulator for mobile LLM agents.
//!
//! An edge server keeps a memory-limited set of large models resident. Every
//! request served at the edge leaves chain-of-thought steps in the serving
//! model's context; those thoughts lower the accuracy loss of later requests
//! and lose value as they age. The least age-of-thought (LAoT) policy evicts
//! the model whose thoughts are currently worth the least. FIFO, LFU and
//! cloud-only serving are the baselines.
//!
//! Module map:
//!
//! * [`workload`]: catalog construction and the Zipf/Poisson request stream.
//! * [`thought`]: per-model thought ledgers and age-of-thought valuation.
//! * [`cache`]: the memory-budgeted cache and eviction policies.
//! * [`cost`]: the five cost components and their weighted total.
//! * [`engine`]: the slot loop; [`reference`] is an independent oracle.
//! * [`harness`]: config files, experiment matrix, CSV/JSON output.
//! * [`defaults`]: the table of default parameters.

pub mod cache;
pub mod config;
pub mod cost;
pub mod defaults;
pub mod engine;
pub mod error;
pub mod harness;
pub mod reference;
pub mod rng;
pub mod thought;
pub mod workload;

pub use cache::{Admission, CacheState, Policy, PolicyKind};
pub use config::SimConfig;
pub use cost::CostBreakdown;
pub use engine::{run, RunReport, SlotMetrics};
pub use error::{Result, SimError};
pub use reference::reference_run;
