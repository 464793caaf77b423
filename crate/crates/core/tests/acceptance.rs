//! Acceptance gate. Runs every criterion and prints one PASS/FAIL line each;
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{req, small_config};
use laot_sim::cache::{Admission, CacheState, Policy};
use laot_sim::config::{AotParams, OverflowPolicy};
use laot_sim::defaults::{defaults, DefaultValue, Provenance};
use laot_sim::engine::Simulator;
use laot_sim::harness::{parse_config_str, run_matrix};
use laot_sim::rng::SimRng;
use laot_sim::thought::{Ledger, WindowCheck};
use laot_sim::workload::ModelSpec;
use laot_sim::{reference_run, run, PolicyKind, RunReport, SimConfig};

type Outcome = Result<String, String>;

/// Policy, capacity, `(model, mem_gb)` accesses, expected eviction order.
type Trace = (PolicyKind, f64, Vec<(usize, f64)>, Vec<usize>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn default_matrix() -> Result<Vec<RunReport>, String> {
    let spec = parse_config_str("", Path::new("<defaults>"), None).map_err(|e| e.to_string())?;
    run_matrix(&spec).map_err(|e| e.to_string())
}

fn seed_mean(reports: &[RunReport], kind: PolicyKind) -> f64 {
    let runs: Vec<f64> = reports
        .iter()
        .filter(|r| r.policy == kind)
        .map(|r| r.mean_total_per_slot)
        .collect();
    runs.iter().sum::<f64>() / runs.len() as f64
}

fn ordering(reports: &[RunReport]) -> Outcome {
    let seeds = reports
        .iter()
        .filter(|r| r.policy == PolicyKind::Laot)
        .count();
    ensure(
        seeds == 10 && reports.iter().all(|r| r.per_slot.len() == 500),
        || "default matrix is not 10 seeds x 500 slots".into(),
    )?;
    let means: BTreeMap<PolicyKind, f64> = PolicyKind::ALL
        .iter()
        .map(|&k| (k, seed_mean(reports, k)))
        .collect();
    let laot = means[&PolicyKind::Laot];
    let best_baseline = means[&PolicyKind::Fifo].min(means[&PolicyKind::Lfu]);
    let lowest = means
        .iter()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| *k)
        .unwrap();
    let others_higher = means
        .iter()
        .all(|(&k, &v)| k == PolicyKind::Laot || v > laot);
    let detail = format!(
        "laot {laot:.3} fifo {:.3} lfu {:.3} cloud {:.3}, laot/min(fifo,lfu) = {:.3}",
        means[&PolicyKind::Fifo],
        means[&PolicyKind::Lfu],
        means[&PolicyKind::CloudOnly],
        laot / best_baseline
    );
    ensure(others_higher, || {
        format!("laot not strictly lowest: {detail}")
    })?;
    ensure(lowest != PolicyKind::CloudOnly, || {
        format!("cloud-only lowest: {detail}")
    })?;
    ensure(laot <= 0.95 * best_baseline, || {
        format!("margin too small: {detail}")
    })?;
    Ok(detail)
}

fn decay(reports: &[RunReport]) -> Outcome {
    let window_mean = |r: &RunReport, lo: usize, hi: usize| {
        r.per_slot[lo..hi]
            .iter()
            .map(|m| m.breakdown.total)
            .sum::<f64>()
            / (hi - lo) as f64
    };
    let laot: Vec<&RunReport> = reports
        .iter()
        .filter(|r| r.policy == PolicyKind::Laot)
        .collect();
    let n = laot.len() as f64;
    let early = laot.iter().map(|r| window_mean(r, 0, 100)).sum::<f64>() / n;
    let late = laot.iter().map(|r| window_mean(r, 400, 500)).sum::<f64>() / n;
    let detail = format!(
        "slots 0-99 {early:.3} vs 400-499 {late:.3}, early/late = {:.3}",
        early / late
    );
    ensure(early >= 1.10 * late, || detail.clone())?;
    Ok(detail)
}

fn final_window_acc(report: &RunReport, from: usize) -> f64 {
    let tail = &report.per_slot[from..];
    tail.iter().map(|m| m.mean_acc_loss).sum::<f64>() / tail.len() as f64
}

fn thoughts_effect() -> Outcome {
    // one hot service, one request per slot, a window that never overflows
    let mut cfg = small_config(1, 1, 1, 100, 1, PolicyKind::Laot);
    cfg.catalog.context_windows = vec![32768];
    cfg.catalog.cot_steps = vec![1];
    let hot = Simulator::new(cfg)
        .and_then(|s| s.run_trace(|t| vec![req(t, 0)]))
        .map_err(|e| e.to_string())?;
    let first = hot.per_slot[..50]
        .iter()
        .map(|m| m.mean_acc_loss)
        .sum::<f64>()
        / 50.0;
    let last = final_window_acc(&hot, 50);
    ensure(last < first, || {
        format!("hot trace: last {last:.5} !< first {first:.5}")
    })?;

    // hot service 0 every slot plus cold services 1 and 2 alternating; room
    // for two models. FIFO's load-slot tie sends the hot model out.
    let thrash = |kind: PolicyKind| {
        let mut cfg = small_config(3, 3, 2, 100, 1, kind);
        cfg.catalog.context_windows = vec![32768];
        cfg.catalog.cot_steps = vec![1];
        Simulator::new(cfg)
            .and_then(|s| s.run_trace(|t| vec![req(t, 0), req(t, 1 + (t as usize % 2))]))
            .map_err(|e| e.to_string())
    };
    let laot = final_window_acc(&thrash(PolicyKind::Laot)?, 50);
    let fifo = final_window_acc(&thrash(PolicyKind::Fifo)?, 50);
    ensure(laot < fifo, || {
        format!("thrash trace: laot {laot:.5} !< fifo {fifo:.5}")
    })?;
    Ok(format!(
        "hot trace acc loss {first:.4} -> {last:.4}; thrash final window laot {laot:.4} < fifo {fifo:.4}"
    ))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn equivalent(a: &RunReport, b: &RunReport) -> Result<(), String> {
    ensure(a.per_slot.len() == b.per_slot.len(), || {
        "slot count differs".into()
    })?;
    for (x, y) in a.per_slot.iter().zip(&b.per_slot) {
        let cx = [
            x.requests,
            x.hits,
            x.misses,
            x.cloud_served,
            x.loads,
            x.evictions_policy,
            x.evictions_context,
        ];
        let cy = [
            y.requests,
            y.hits,
            y.misses,
            y.cloud_served,
            y.loads,
            y.evictions_policy,
            y.evictions_context,
        ];
        ensure(cx == cy, || {
            format!("slot {}: counts {cx:?} vs {cy:?}", x.slot)
        })?;
        let mut px = x.breakdown.components().to_vec();
        px.push(x.breakdown.total);
        let mut py = y.breakdown.components().to_vec();
        py.push(y.breakdown.total);
        for (p, q) in px.iter().zip(&py) {
            ensure(close(*p, *q), || {
                format!("slot {}: cost {p} vs {q}", x.slot)
            })?;
        }
    }
    Ok(())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = SimRng::new(0xACCE);
    let windows = [1200u64, 4096, 16384, 32768];
    for i in 0..100 {
        let kind = PolicyKind::ALL[i % 4];
        let n_models = rng.uniform_inclusive(1, 5) as usize;
        let mut cfg = small_config(
            rng.uniform_inclusive(1, 8) as usize,
            n_models,
            rng.uniform_inclusive(1, n_models as u64) as usize,
            rng.uniform_inclusive(1, 100),
            rng.next_u64(),
            kind,
        );
        cfg.catalog.context_windows = vec![windows[rng.uniform_inclusive(0, 3) as usize]];
        cfg.catalog.mem_gb_tiers = vec![60.0, 100.0, 140.0];
        cfg.workload.arrivals_per_slot_mean = 1.0 + rng.next_f64() * 6.0;
        if (i / 4) % 2 == 1 {
            cfg.cache.overflow_policy = OverflowPolicy::TrimOldest;
        }
        let a = run(&cfg).map_err(|e| e.to_string())?;
        let b = reference_run(&cfg).map_err(|e| e.to_string())?;
        equivalent(&a, &b).map_err(|e| format!("config {i} ({kind}): {e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!("100 configs identical, {secs:.2}s"))
}

fn model(id: usize, mem_gb: f64) -> ModelSpec {
    ModelSpec {
        model_id: id,
        mem_gb,
        context_window: 32768,
        base_loss: 0.3,
        edge_rate: 2.0,
        edge_tok_per_slot: 8000.0,
        cloud_rate: 6.0,
        cloud_latency_slots: 0.8,
        switch_rate: 0.05,
        load_gb_per_slot: 10.0,
    }
}

fn policy(kind: PolicyKind) -> Policy {
    Policy {
        kind,
        aot: AotParams {
            gamma: 0.9,
            tokens_per_step: 200.0,
        },
    }
}

fn invariant_fuzz() -> Outcome {
    let mut rng = SimRng::new(5);
    let sizes = [20.0, 60.0, 180.0, 360.0, 45.5];
    let mut ops = 0;
    for kind in PolicyKind::ALL {
        let p = policy(kind);
        let mut cache = CacheState::new(600.0);
        for now in 0..2500u64 {
            let id = rng.uniform_inclusive(0, 9) as usize;
            if rng.uniform_inclusive(0, 4) == 0 {
                if cache.lookup(id) {
                    cache.evict(id).map_err(|e| e.to_string())?;
                }
            } else if cache.lookup(id) {
                cache.record_access(id, now).map_err(|e| e.to_string())?;
                let steps = rng.uniform_inclusive(0, 3);
                let e = cache.entry_mut(id).unwrap();
                e.ledger
                    .record(now, steps, 200)
                    .map_err(|e| e.to_string())?;
            } else {
                cache
                    .admit(&model(id, sizes[id % 5]), &p, now)
                    .map_err(|e| e.to_string())?;
            }
            ops += 1;
            let sum: f64 = cache.entries().values().map(|e| e.mem_gb).sum();
            ensure(
                cache.used_gb() <= cache.capacity_gb() && cache.used_gb() == sum,
                || {
                    format!(
                        "{kind} op {now}: used {} of {}",
                        cache.used_gb(),
                        cache.capacity_gb()
                    )
                },
            )?;
            cache.check_invariants(now).map_err(|e| e.to_string())?;
        }
    }

    let params = AotParams {
        gamma: 0.9,
        tokens_per_step: 200.0,
    };
    let mut worst: f64 = 0.0;
    for i in 0..10_000u64 {
        let mut ledger = Ledger::new();
        let window = [1000u64, 4096, 16384][(i % 3) as usize];
        let overflow = if i % 2 == 0 {
            OverflowPolicy::TrimOldest
        } else {
            OverflowPolicy::EvictModel
        };
        let mut now = 0;
        for _ in 0..rng.uniform_inclusive(1, 12) {
            now += rng.uniform_inclusive(0, 5);
            let before = ledger.clone();
            let steps = rng.uniform_inclusive(0, 6);
            ledger
                .record(now, steps, rng.uniform_inclusive(50, 400))
                .map_err(|e| e.to_string())?;
            let over = ledger.token_total() > window;
            match ledger.enforce_window(window, overflow) {
                WindowCheck::ModelEvicted => {
                    ensure(over, || "eviction without overflow".into())?;
                    // the model leaves with its ledger; keep going from the prior state
                    ledger = before;
                }
                WindowCheck::Fits => ensure(!over, || "overflow reported as fit".into())?,
                WindowCheck::Trimmed { .. } => ensure(over, || "trim without overflow".into())?,
            }
            ensure(ledger.token_total() <= window, || {
                format!("sequence {i}: window exceeded")
            })?;
            let total: u64 = ledger.thoughts().iter().map(|t| t.tokens).sum();
            ensure(total == ledger.token_total(), || {
                "token total drifted".into()
            })?;
        }
        let v0 = ledger.value(now, &params).map_err(|e| e.to_string())?;
        let v1 = ledger.value(now + 1, &params).map_err(|e| e.to_string())?;
        let err = (v1 - params.gamma * v0).abs() / v0.max(1e-300);
        worst = worst.max(if v0 == 0.0 { v1 } else { err });
        ensure(worst <= 1e-12, || {
            format!("sequence {i}: aging error {err:e}")
        })?;
    }
    Ok(format!(
        "{ops} cache ops, 10000 ledger sequences, worst aging error {worst:.1e}"
    ))
}

/// Replays `(model, mem_gb)` accesses one per slot; returns evicted ids in order.
fn replay(
    kind: PolicyKind,
    capacity_gb: f64,
    trace: &[(usize, f64)],
) -> Result<Vec<usize>, String> {
    let p = policy(kind);
    let mut cache = CacheState::new(capacity_gb);
    let mut evicted = Vec::new();
    for (now, &(id, mem)) in trace.iter().enumerate() {
        let now = now as u64;
        if cache.lookup(id) {
            cache.record_access(id, now).map_err(|e| e.to_string())?;
        } else if let Admission::Loaded { evicted: e } = cache
            .admit(&model(id, mem), &p, now)
            .map_err(|e| e.to_string())?
        {
            evicted.extend(e);
        }
    }
    Ok(evicted)
}

fn unit(ids: &[usize]) -> Vec<(usize, f64)> {
    ids.iter().map(|&i| (i, 100.0)).collect()
}

fn conformance() -> Outcome {
    let cases: [Trace; 6] = [
        (PolicyKind::Fifo, 300.0, unit(&[0, 1, 2, 3, 4]), vec![0, 1]),
        // hits do not refresh insertion order
        (
            PolicyKind::Fifo,
            300.0,
            unit(&[0, 1, 2, 0, 3, 0, 4]),
            vec![0, 1, 2],
        ),
        (
            PolicyKind::Fifo,
            300.0,
            vec![(0, 100.0), (1, 200.0), (2, 100.0), (3, 200.0), (0, 100.0)],
            vec![0, 1, 2],
        ),
        (
            PolicyKind::Lfu,
            300.0,
            unit(&[0, 1, 2, 0, 0, 1, 3, 2]),
            vec![2, 3],
        ),
        // equal counts fall back to the oldest load
        (PolicyKind::Lfu, 300.0, unit(&[0, 1, 2, 3, 0]), vec![0, 1]),
        // a reloaded model starts its count afresh
        (
            PolicyKind::Lfu,
            300.0,
            unit(&[0, 0, 0, 1, 1, 2, 3, 2, 4]),
            vec![2, 3, 2],
        ),
    ];
    for (i, (kind, cap, trace, want)) in cases.iter().enumerate() {
        let got = replay(*kind, *cap, trace)?;
        ensure(&got == want, || {
            format!("{kind} trace {i}: evicted {got:?}, expected {want:?}")
        })?;
    }

    let mut rng = SimRng::new(1000);
    let p = policy(PolicyKind::Laot);
    for state in 0..1000 {
        let now = 50;
        let mut cache = CacheState::new(1e9);
        let n = rng.uniform_inclusive(1, 8) as usize;
        for id in 0..n {
            let load = rng.uniform_inclusive(0, now);
            cache
                .admit(&model(id, 10.0), &p, load)
                .map_err(|e| e.to_string())?;
            let e = cache.entry_mut(id).unwrap();
            let mut t = load;
            while t <= now {
                e.ledger
                    .record(t, rng.uniform_inclusive(0, 3), 200)
                    .map_err(|e| e.to_string())?;
                t += rng.uniform_inclusive(1, 10);
            }
        }
        // exhaustive scan: recompute every value from the raw thoughts
        let mut best: Option<(f64, u64, usize)> = None;
        for (&id, e) in cache.entries() {
            let v: f64 = e
                .ledger
                .thoughts()
                .iter()
                .map(|t| t.tokens as f64 / 200.0 * 0.9f64.powi((now - t.created_slot) as i32))
                .sum();
            let key = (v, e.load_slot, id);
            if best.is_none_or(|b| key.partial_cmp(&b) == Some(std::cmp::Ordering::Less)) {
                best = Some(key);
            }
        }
        let want = best.unwrap().2;
        let got = cache.evict_candidate(&p, now).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("state {state}: laot chose {got}, scan chose {want}")
        })?;
    }
    Ok("3 FIFO + 3 LFU traces exact; LAoT argmin = scan on 1000 states".into())
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (name, jobs) in [("a", "4"), ("b", "4"), ("c", "1")] {
        let dir = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_simrun"))
            .args([
                "--slots", "200", "--seeds", "1,2,3,4", "--jobs", jobs, "--out",
            ])
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            format!("simrun failed: {}", String::from_utf8_lossy(&status.stderr))
        })?;
        outputs.push(read_tree(&dir));
    }
    let files = outputs[0].len();
    ensure(files == 4 * 4 + 2, || {
        format!("expected 18 files, got {files}")
    })?;
    ensure(outputs[0] == outputs[1], || {
        "two --jobs 4 runs differ".into()
    })?;
    ensure(outputs[0] == outputs[2], || {
        "--jobs 4 and --jobs 1 differ".into()
    })?;
    Ok(format!(
        "{files} files byte-identical across 3 runs (jobs 4, 4, 1)"
    ))
}

fn constants() -> Outcome {
    let table = defaults();
    let expected = [
        ("catalog.tokens_per_step", DefaultValue::Int(200)),
        ("aot.tokens_per_step", DefaultValue::Float(200.0)),
        (
            "catalog.context_windows",
            DefaultValue::Ints(vec![4096, 16384, 32768]),
        ),
        ("workload.n_services", DefaultValue::Int(30)),
        ("workload.n_agents", DefaultValue::Int(10)),
        ("cache.capacity_gb", DefaultValue::Float(5120.0)),
    ];
    for (key, value) in &expected {
        let row = table
            .iter()
            .find(|e| e.key == *key)
            .ok_or_else(|| format!("{key} missing"))?;
        ensure(
            &row.value == value && row.provenance == Provenance::Published,
            || format!("{key} = {} ({:?})", row.value, row.provenance),
        )?;
    }
    let cfg = SimConfig::default();
    ensure(
        cfg.aot.tokens_per_step == 200.0
            && cfg.catalog.tokens_per_step == 200
            && cfg.catalog.context_windows == [4096, 16384, 32768]
            && cfg.workload.n_services == 30
            && cfg.workload.n_agents == 10
            && cfg.cache.capacity_gb == 5120.0,
        || "default config does not carry the published constants".into(),
    )?;
    Ok(format!(
        "{} published constants present and wired",
        expected.len()
    ))
}

fn guarded(f: impl FnOnce() -> Outcome + panic::UnwindSafe) -> Outcome {
    panic::catch_unwind(f).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let start = Instant::now();
    let matrix = default_matrix();
    let matrix_secs = start.elapsed().as_secs_f64();
    let with_matrix = |f: fn(&[RunReport]) -> Outcome| -> Outcome {
        match &matrix {
            Ok(reports) => guarded(|| f(reports)).map(|d| d + &format!(" ({matrix_secs:.2}s)")),
            Err(e) => Err(e.clone()),
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1 policy ordering", with_matrix(ordering)),
        ("2 cost decay over time", with_matrix(decay)),
        ("3 accuracy from thoughts", guarded(thoughts_effect)),
        ("4 oracle equivalence", guarded(oracle_equivalence)),
        ("5 invariant fuzz", guarded(invariant_fuzz)),
        ("6 policy conformance", guarded(conformance)),
        ("7 determinism", guarded(determinism)),
        ("8 published constants", guarded(constants)),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL  {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
