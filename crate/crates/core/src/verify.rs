//! Oracle and cross-strategy verification suites.
//!
//! Each check returns a [`CheckResult`] naming the invariant it exercised and
//! the seed needed to reproduce it. The command-line `verify` subcommand and
//! the acceptance tests both run these.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::delivery::DeliveryStrategy;
use crate::engine::{EngineError, Raster, Simulation, StrategyConfig};
use crate::graph::{build_topology, compute_pivots, GraphSpec, NeuronId, PaddedAdjacencyList, PivotTable};
use crate::history::{descending_set_bits, naive_set_bits_descending, recent_mask};
use crate::models::constants::ModelConstants;
use crate::models::{BrunelModel, CountingModel, CountingSynapse, Model, StdpSynapse};
use crate::plasticity::{event_schedule, lazy_schedule, PlasticityStrategy, WindowFn, DEFAULT_WINDOW};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seed: u64,
    pub seconds: f64,
}

impl CheckResult {
    fn new(module: &'static str, name: impl Into<String>, seed: u64) -> Self {
        CheckResult { module, name: name.into(), passed: true, detail: String::new(), seed, seconds: 0.0 }
    }

    fn fail(mut self, detail: impl Into<String>) -> Self {
        self.passed = false;
        self.detail = detail.into();
        self
    }

    fn ok(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    fn timed(mut self, start: Instant) -> Self {
        self.seconds = start.elapsed().as_secs_f64();
        self
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}/{}: {} (seed {}, {:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.module,
            self.name,
            self.detail,
            self.seed,
            self.seconds
        )
    }
}

/// Brute-force pivots: count the entries of each chunk with a linear scan
/// and take prefix sums.
pub fn brute_force_pivots(adj: &PaddedAdjacencyList, chunk_size: usize) -> Vec<Vec<u32>> {
    let n = adj.num_neurons();
    let slices = n.div_ceil(chunk_size);
    (0..n as NeuronId)
        .map(|i| {
            let mut counts = vec![0u32; slices];
            for &id in adj.neighbors(i) {
                counts[id as usize / chunk_size] += 1;
            }
            let mut out = vec![0u32];
            let mut acc = 0;
            for c in counts {
                acc += c;
                out.push(acc);
            }
            out
        })
        .collect()
}

fn check_pivots(adj: &PaddedAdjacencyList, piv: &PivotTable, chunk: usize) -> Result<(), String> {
    let oracle = brute_force_pivots(adj, chunk);
    for i in 0..adj.num_neurons() as NeuronId {
        if piv.row(i) != &oracle[i as usize][..] {
            return Err(format!("row {i}: pivots {:?} != oracle {:?}", piv.row(i), oracle[i as usize]));
        }
        let mut joined = Vec::new();
        for k in 0..piv.num_slices() {
            let cols = piv.row_slice(i, k);
            for &id in &adj.row(i)[cols] {
                if id as usize / chunk != k {
                    return Err(format!("row {i}: id {id} in slice {k}"));
                }
                joined.push(id);
            }
        }
        if joined != adj.neighbors(i) {
            return Err(format!("row {i}: slices do not partition the row"));
        }
    }
    Ok(())
}

/// Pivots against the counting oracle on `graphs` random graphs.
pub fn pivot_oracle(graphs: usize, max_neurons: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("pivots", "binary search vs chunk counting", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = [0.01, 0.1, 0.5];
    let chunks = [32usize, 64, 1024];
    let mut synapses = 0usize;
    for g in 0..graphs {
        let n = rng.gen_range(1..=max_neurons);
        let p = probs[g % probs.len()];
        let c = chunks[(g / probs.len()) % chunks.len()];
        let spec = GraphSpec::uniform(n, p, rng.gen());
        let adj = match build_topology(&spec) {
            Ok(a) => a,
            Err(e) => return res.fail(format!("graph {g}: {e}")).timed(start),
        };
        synapses += adj.num_synapses();
        let piv = match compute_pivots(&adj, c) {
            Ok(p) => p,
            Err(e) => return res.fail(format!("graph {g}: {e}")).timed(start),
        };
        if let Err(e) = check_pivots(&adj, &piv, c) {
            return res.fail(format!("graph {g} (N={n}, p={p}, C={c}): {e}")).timed(start);
        }
        if compute_pivots(&adj, c).ok().as_ref() != Some(&piv) {
            return res.fail(format!("graph {g}: pivots not idempotent")).timed(start);
        }
    }
    res.ok(format!("{graphs} graphs, {synapses} synapses")).timed(start)
}

/// Set-bit iteration and window masks against per-bit scans.
pub fn bitops_oracle(words: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("history", "set-bit iteration and window masks", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..words {
        let w: u64 = if rng.gen_bool(0.5) { rng.gen() } else { rng.gen::<u64>() & rng.gen::<u64>() & rng.gen::<u64>() };
        let fast: Vec<u32> = descending_set_bits(w).collect();
        if fast != naive_set_bits_descending(w) {
            return res.fail(format!("descending bits of {w:#x}")).timed(start);
        }
        let age = rng.gen_range(0..=64u32);
        let oracle = (0..age).filter(|&i| (w >> i) & 1 == 1).fold(0u64, |m, i| m | (1 << i));
        if recent_mask(w, age) != oracle {
            return res.fail(format!("window of {w:#x} at age {age}")).timed(start);
        }
    }
    res.ok(format!("{words} words")).timed(start)
}

/// Random replays: steps are conserved, event-driven issues at most
/// popcount + 1 calls, and both schedules agree on an exact counter.
pub fn replay_invariants(replays: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("plasticity", "step conservation and call bounds", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..replays {
        let hist: u64 = match r % 3 {
            0 => rng.gen(),
            1 => rng.gen::<u64>() & rng.gen::<u64>() & rng.gen::<u64>(),
            _ => 0,
        };
        let age = rng.gen_range(0..=64u32);
        let pre = rng.gen_bool(0.9);
        let window = recent_mask(hist, age);
        let lazy = lazy_schedule(window, age, pre);
        let event = event_schedule(window, age, pre);
        let lazy_sum: u32 = lazy.iter().map(|c| c.n_steps).sum();
        let event_sum: u32 = event.iter().map(|c| c.n_steps).sum();
        if lazy_sum != age || event_sum != age {
            return res.fail(format!("replay {r}: steps {lazy_sum}/{event_sum} != age {age}")).timed(start);
        }
        if event.len() as u32 > window.count_ones() + 1 {
            return res.fail(format!("replay {r}: {} calls for {} spikes", event.len(), window.count_ones())).timed(start);
        }
        let run = |calls: &[crate::plasticity::UpdateCall]| {
            let mut s = CountingSynapse::default();
            for c in calls {
                s.advance(c.pre, c.post, c.n_steps);
            }
            s
        };
        if run(&lazy) != run(&event) {
            return res.fail(format!("replay {r}: lazy and event-driven disagree")).timed(start);
        }
    }
    res.ok(format!("{replays} replays")).timed(start)
}

fn config(plasticity: PlasticityStrategy, delivery: DeliveryStrategy, chunk: usize, workers: usize) -> StrategyConfig {
    StrategyConfig { plasticity, delivery, chunk_size: chunk, workers, ..Default::default() }
}

/// Runs `model` for `steps` steps and returns its raster and final,
/// synchronized synapse table.
pub fn run_and_collect<M: Model>(
    model: M,
    cfg: StrategyConfig,
    steps: u64,
    window_fn: WindowFn,
) -> Result<(Raster, Vec<M::Synapse>, Simulation<M>), EngineError> {
    let mut sim = Simulation::new(model, cfg)?;
    sim.set_window_fn(window_fn);
    let mut raster = Raster::default();
    sim.run_steps(steps, Some(&mut raster))?;
    sim.synchronize();
    let syn = sim.synapses().entries().to_vec();
    Ok((raster, syn, sim))
}

/// Counting model used by the exact plasticity check.
pub fn counting_model(n: usize, seed: u64) -> CountingModel {
    let delay = 3;
    CountingModel::new(n, 0.1, delay, 0.02, CountingModel::max_gap_for(64, delay), seed)
        .expect("valid counting model")
}

/// Naive, lazy and event-driven plasticity must leave bit-identical
/// synapse tables on the counting model.
pub fn plasticity_exact(n: usize, steps: u64, seed: u64, window_fn: WindowFn) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("plasticity", format!("exact equivalence, counting model N={n}"), seed);
    let mut tables = Vec::new();
    let mut rasters = Vec::new();
    let mut max_age_seen = 0i64;
    for strategy in PlasticityStrategy::ALL {
        let cfg = config(strategy, DeliveryStrategy::Naive, 64, 1);
        // The fault under test only applies to the replaying strategies.
        let wf = if strategy == PlasticityStrategy::Naive { DEFAULT_WINDOW } else { window_fn };
        match run_and_collect(counting_model(n, seed), cfg, steps, wf) {
            Ok((r, t, sim)) => {
                if strategy != PlasticityStrategy::Naive {
                    max_age_seen = max_age_seen.max(max_raster_gap(&r, n, sim.model().delay_steps(), steps));
                }
                rasters.push(r);
                tables.push(t);
            }
            Err(e) => return res.fail(e.to_string()).timed(start),
        }
    }
    if max_age_seen > 64 {
        return res.fail(format!("a replay age reached {max_age_seen} > 64")).timed(start);
    }
    for (i, name) in ["lazy", "event"].iter().enumerate() {
        let other = &tables[i + 1];
        if let Some(pos) = tables[0].iter().zip(other).position(|(a, b)| a != b) {
            return res
                .fail(format!("{name} differs from naive at synapse cell {pos}: {:?} vs {:?}", other[pos], tables[0][pos]))
                .timed(start);
        }
        if rasters[i + 1] != rasters[0] {
            return res.fail(format!("{name} raster differs from naive")).timed(start);
        }
    }
    res.ok(format!(
        "{} synapse cells identical across naive/lazy/event over {steps} steps, {} spikes, max age {max_age_seen}",
        tables[0].len(),
        rasters[0].len()
    ))
    .timed(start)
}

/// Longest replay age implied by a raster: the gap between consecutive
/// arrivals of a source, the first arrival counted from step -1, and the
/// final flush.
fn max_raster_gap(raster: &Raster, n: usize, delay: u32, steps: u64) -> i64 {
    let mut last = vec![-1i64; n];
    let mut max_gap = 0;
    for &(s, id) in &raster.0 {
        let arrival = s as i64 + delay as i64;
        if arrival >= steps as i64 {
            continue;
        }
        max_gap = max_gap.max(arrival - last[id as usize]);
        last[id as usize] = arrival;
    }
    for l in last {
        max_gap = max_gap.max(steps as i64 - 1 - l);
    }
    max_gap
}

/// Relative difference of two weights; pairs that are both within
/// `floor` of zero count as equal.
pub fn relative_difference(a: f32, b: f32, floor: f32) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale <= floor {
        return 0.0;
    }
    ((a - b).abs() / scale) as f64
}

/// Result of comparing plastic weights between strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatEquivalence {
    pub lazy_vs_naive: f64,
    pub event_vs_lazy: f64,
    pub raster_agreement_lazy: f64,
    pub raster_agreement_event: f64,
    pub plastic_synapses: usize,
    pub spikes: usize,
    pub weight_drift: f64,
}

/// Fraction of `a`'s spikes that also appear in `b`.
pub fn raster_agreement(a: &Raster, b: &Raster) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let set: std::collections::HashSet<_> = b.0.iter().collect();
    let common = a.0.iter().filter(|x| set.contains(x)).count();
    common as f64 / a.len().max(b.len()) as f64
}

/// Brunel+ network for the float equivalence check.
pub fn brunel_plus(recurrent: usize, seed: u64) -> BrunelModel {
    let c = ModelConstants::default();
    BrunelModel::new(recurrent, true, seed, &c.brunel, &c.stdp).expect("valid Brunel+ size")
}

/// Runs Brunel+ under all three plasticity strategies with bounded replay
/// windows and compares the plastic weights.
pub fn plasticity_float(recurrent: usize, steps: u64, seed: u64) -> Result<FloatEquivalence, EngineError> {
    let mut out = Vec::new();
    for strategy in PlasticityStrategy::ALL {
        let cfg = StrategyConfig { exact_window: true, ..config(strategy, DeliveryStrategy::Sliced, 1024, 1) };
        out.push(run_and_collect(brunel_plus(recurrent, seed), cfg, steps, DEFAULT_WINDOW)?);
    }
    let model = &out[0].2;
    let adj = model.adjacency();
    let m = model.model();
    let w_max = m.stdp().w_max;
    let floor = w_max * 1e-6;
    let mut cells = Vec::new();
    for i in 0..adj.num_neurons() as NeuronId {
        if !m.plastic_source(i) {
            continue;
        }
        for (j, &d) in adj.neighbors(i).iter().enumerate() {
            if m.plastic_target(d) {
                cells.push(i as usize * adj.width() + j);
            }
        }
    }
    let w = |k: usize, cell: usize| -> f32 {
        let s: &StdpSynapse = &out[k].1[cell];
        s.w
    };
    let max_diff = |a: usize, b: usize| cells.iter().map(|&c| relative_difference(w(a, c), w(b, c), floor)).fold(0.0, f64::max);
    let init = m.init_synapse(m.num_recurrent() as NeuronId, 0).w;
    let drift = cells.iter().map(|&c| ((w(0, c) - init).abs() / init) as f64).fold(0.0, f64::max);
    Ok(FloatEquivalence {
        lazy_vs_naive: max_diff(1, 0),
        event_vs_lazy: max_diff(2, 1),
        raster_agreement_lazy: raster_agreement(&out[0].0, &out[1].0),
        raster_agreement_event: raster_agreement(&out[1].0, &out[2].0),
        plastic_synapses: cells.len(),
        spikes: out[0].0.len(),
        weight_drift: drift,
    })
}

/// Steps naive and sliced delivery in lockstep on the counting model and
/// compares the input accumulators after every step.
pub fn delivery_lockstep(n: usize, steps: u64, chunk: usize, seed: u64) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("delivery", format!("accumulators naive vs sliced, N={n}, C={chunk}"), seed);
    let model = CountingModel::new(n, 0.05, 2, 0.01, 200, seed).expect("valid model");
    let mk = |d| Simulation::new(model.clone(), config(PlasticityStrategy::EventDriven, d, chunk, 1));
    let (mut a, mut b) = match (mk(DeliveryStrategy::Naive), mk(DeliveryStrategy::Sliced)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return res.fail(e.to_string()).timed(start),
    };
    let mut nonzero_steps = 0;
    for step in 0..steps {
        a.step();
        b.step();
        if a.inputs() != b.inputs() {
            let pos = a.inputs().iter().zip(b.inputs()).position(|(x, y)| x != y).unwrap_or(0);
            return res
                .fail(format!("step {step}: neuron {pos} has {} (naive) vs {} (sliced)", a.inputs()[pos], b.inputs()[pos]))
                .timed(start);
        }
        if a.inputs().iter().any(|&x| x != 0) {
            nonzero_steps += 1;
        }
    }
    if a.metrics().deliver_calls != b.metrics().deliver_calls {
        return res.fail("deliver call counts differ").timed(start);
    }
    res.ok(format!(
        "{steps} steps bit-identical ({nonzero_steps} with deliveries, {} deliver calls)",
        a.metrics().deliver_calls
    ))
    .timed(start)
}

/// Brunel rasters under both delivery strategies.
pub fn delivery_raster(synapses: f64, steps: u64, seed: u64) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("delivery", format!("Brunel raster naive vs sliced, {synapses:.0} synapses"), seed);
    let c = ModelConstants::default();
    let model = match BrunelModel::with_synapses(synapses, false, seed, &c.brunel, &c.stdp) {
        Ok(m) => m,
        Err(e) => return res.fail(e.to_string()).timed(start),
    };
    let mut rasters = Vec::new();
    for d in DeliveryStrategy::ALL {
        match run_and_collect(model.clone(), config(PlasticityStrategy::EventDriven, d, 1024, 1), steps, DEFAULT_WINDOW) {
            Ok((r, _, _)) => rasters.push(r.to_text()),
            Err(e) => return res.fail(e.to_string()).timed(start),
        }
    }
    if rasters[0] != rasters[1] {
        return res.fail("rasters differ").timed(start);
    }
    res.ok(format!("{} raster bytes identical", rasters[0].len())).timed(start)
}

/// Brunel rasters for each worker count.
pub fn thread_invariance(synapses: f64, steps: u64, workers: &[usize], seed: u64) -> CheckResult {
    let start = Instant::now();
    let res = CheckResult::new("engine", format!("raster vs worker count {workers:?}"), seed);
    let c = ModelConstants::default();
    let model = match BrunelModel::with_synapses(synapses, false, seed, &c.brunel, &c.stdp) {
        Ok(m) => m,
        Err(e) => return res.fail(e.to_string()).timed(start),
    };
    let mut first: Option<String> = None;
    for &w in workers {
        let cfg = config(PlasticityStrategy::EventDriven, DeliveryStrategy::Sliced, 1024, w);
        let text = match run_and_collect(model.clone(), cfg, steps, DEFAULT_WINDOW) {
            Ok((r, _, _)) => r.to_text(),
            Err(e) => return res.fail(e.to_string()).timed(start),
        };
        match &first {
            None => first = Some(text),
            Some(f) if *f != text => return res.fail(format!("{w} workers produced a different raster")).timed(start),
            _ => {}
        }
    }
    res.ok(format!("{} raster bytes identical", first.map(|f| f.len()).unwrap_or(0))).timed(start)
}

/// No neuron fires twice within its refractory period.
pub fn refractory_check<M: Model>(model: M, steps: u64, seed: u64) -> CheckResult {
    let start = Instant::now();
    let refr = model.refractory_steps() as i64;
    let n = model.graph_spec().num_neurons();
    let external: Vec<bool> = (0..n as NeuronId).map(|i| model.is_external(i)).collect();
    let res = CheckResult::new("models", format!("{} refractory period", model.name()), seed);
    let mut sim = match Simulation::new(model, config(PlasticityStrategy::EventDriven, DeliveryStrategy::Sliced, 1024, 1)) {
        Ok(s) => s,
        Err(e) => return res.fail(e.to_string()).timed(start),
    };
    let mut raster = Raster::default();
    if let Err(e) = sim.run_steps(steps, Some(&mut raster)) {
        return res.fail(e.to_string()).timed(start);
    }
    let mut last = vec![i64::MIN / 2; n];
    let mut checked = 0usize;
    for &(s, id) in &raster.0 {
        if external[id as usize] {
            continue;
        }
        checked += 1;
        let gap = s as i64 - last[id as usize];
        if gap <= refr {
            return res.fail(format!("neuron {id} fired {gap} steps apart at step {s}")).timed(start);
        }
        last[id as usize] = s as i64;
    }
    if checked == 0 {
        return res.fail("no spikes from neurons with a membrane").timed(start);
    }
    res.ok(format!("{checked} spikes respect {refr}-step refractoriness")).timed(start)
}

/// Brunel+ plastic synapses as a fraction of all synapses.
pub fn plastic_fraction(synapses: f64, seed: u64) -> Result<(f64, usize, usize), EngineError> {
    let c = ModelConstants::default();
    let model = BrunelModel::with_synapses(synapses, true, seed, &c.brunel, &c.stdp)
        .map_err(|e| EngineError::Config(e.to_string()))?;
    let adj = build_topology(model.graph_spec())?;
    let plastic = model.plastic_synapse_count(&adj);
    let total = adj.num_synapses();
    Ok((plastic as f64 / total as f64, plastic, total))
}

/// Introduces an off-by-one into the replay window; used to show that the
/// equivalence suite notices.
pub fn off_by_one_window(hist: u64, age: u32) -> u64 {
    recent_mask(hist, age.saturating_sub(1))
}

/// Which group of checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Pivots,
    History,
    Plasticity,
    Delivery,
    Models,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pivots" | "graph" => Ok(Suite::Pivots),
            "history" | "bitops" => Ok(Suite::History),
            "plasticity" => Ok(Suite::Plasticity),
            "delivery" => Ok(Suite::Delivery),
            "models" => Ok(Suite::Models),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown module `{other}` (pivots|history|plasticity|delivery|models|all)")),
        }
    }
}

/// Runs the selected suites at desk-scale sizes.
pub fn run_suite(suite: Suite, seed: u64, window_fn: WindowFn) -> Vec<CheckResult> {
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut out = Vec::new();
    if want(Suite::Pivots) {
        out.push(pivot_oracle(60, 2048, seed));
    }
    if want(Suite::History) {
        out.push(bitops_oracle(100_000, seed));
    }
    if want(Suite::Plasticity) {
        out.push(replay_invariants(100_000, seed));
        out.push(plasticity_exact(256, 1000, seed, window_fn));
        let start = Instant::now();
        let res = CheckResult::new("plasticity", "float equivalence, Brunel+", seed);
        out.push(match plasticity_float(500, 2000, seed) {
            Ok(f) if f.lazy_vs_naive <= 1e-4 && f.event_vs_lazy <= 1e-5 => res
                .ok(format!("lazy/naive {:.2e}, event/lazy {:.2e}", f.lazy_vs_naive, f.event_vs_lazy))
                .timed(start),
            Ok(f) => res
                .fail(format!("lazy/naive {:.2e} (max 1e-4), event/lazy {:.2e} (max 1e-5)", f.lazy_vs_naive, f.event_vs_lazy))
                .timed(start),
            Err(e) => res.fail(e.to_string()).timed(start),
        });
    }
    if want(Suite::Delivery) {
        for chunk in [64, 1024] {
            out.push(delivery_lockstep(4096, 200, chunk, seed));
        }
        out.push(delivery_raster(2e5, 1000, seed));
    }
    if want(Suite::Models) {
        let c = ModelConstants::default();
        if let Ok(m) = BrunelModel::with_synapses(2e5, false, seed, &c.brunel, &c.stdp) {
            out.push(refractory_check(m, 2000, seed));
        }
        if let Ok(m) = crate::models::VogelsModel::new(1000, seed, &c.vogels) {
            out.push(refractory_check(m, 2000, seed));
        }
        let start = Instant::now();
        let res = CheckResult::new("models", "Brunel+ plastic fraction", seed);
        out.push(match plastic_fraction(1e6, seed) {
            Ok((f, ..)) if (0.35..=0.50).contains(&f) => res.ok(format!("{f:.4}")).timed(start),
            Ok((f, ..)) => res.fail(format!("{f:.4} outside [0.35, 0.50]")).timed(start),
            Err(e) => res.fail(e.to_string()).timed(start),
        });
        out.push(thread_invariance(2e5, 500, &[1, 2], seed));
    }
    out
}
