//! The per-step pipeline.
//!
//! Each step runs four phases:
//!
//! 1. neuron update: every neuron consumes its accumulated input, integrates
//!    and may fire; histories are pushed and the firing list is recorded in
//!    the delay ring;
//! 2. plasticity for the rows whose spikes arrive this step (or, with the
//!    naive strategy, a single-step sweep over every plastic synapse);
//! 3. delivery of the arriving rows into the input accumulators, which the
//!    next step's neuron update consumes;
//! 4. the clock advances.
//!
//! A spike emitted at step `t` therefore first changes its targets'
//! potential during the neuron update of step `t + delay + 1`.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delivery::{deliver_naive, deliver_sliced, DeliveryStrategy};
use crate::graph::{
    build_topology, compute_pivots, GraphError, NeuronId, PaddedAdjacencyList, PivotTable,
    SynapseTable,
};
use crate::history::{clamp_age, AgeTable, FiringHistory, HistoryBits, SpikeRing};
use crate::models::Model;
use crate::plasticity::{naive_row, replay_row, PlasticityStrategy, WindowFn, DEFAULT_WINDOW};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("failed to allocate {bytes} bytes for {what}")]
    Allocation { what: &'static str, bytes: u64 },
    #[error("duration must be positive")]
    Duration,
    #[error("delay of {delay} steps does not fit a {bits}-bit history")]
    DelayTooLong { delay: u32, bits: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub plasticity: PlasticityStrategy,
    pub delivery: DeliveryStrategy,
    /// Neurons per delivery slice; a power of two, at least 32.
    pub chunk_size: usize,
    pub history: HistoryBits,
    /// 0 means one worker per available core.
    pub workers: usize,
    /// Replay rows that reach the window limit without an arrival, so no
    /// lazy or event-driven replay ever has to clamp its age. Makes both
    /// strategies exactly reproduce the naive sweep.
    pub exact_window: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            plasticity: PlasticityStrategy::EventDriven,
            delivery: DeliveryStrategy::Sliced,
            chunk_size: 1024,
            history: HistoryBits::H64,
            workers: 0,
            exact_window: false,
        }
    }
}

impl StrategyConfig {
    pub fn new(plasticity: PlasticityStrategy, delivery: DeliveryStrategy) -> Self {
        StrategyConfig { plasticity, delivery, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.chunk_size < 32 || !self.chunk_size.is_power_of_two() {
            return Err(EngineError::Config(format!(
                "slice width {} must be a power of two >= 32",
                self.chunk_size
            )));
        }
        Ok(())
    }

    pub fn effective_workers(&self) -> usize {
        if self.workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.workers
        }
    }
}

/// Simulation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimClock {
    pub now: u64,
    pub dt_ms: f64,
    pub delay: u32,
}

impl SimClock {
    pub fn biological_seconds(&self) -> f64 {
        self.now as f64 * self.dt_ms * 1e-3
    }

    /// Steps needed to cover `seconds` of biological time.
    pub fn steps_for(seconds: f64, dt_ms: f64) -> u64 {
        (seconds * 1e3 / dt_ms).round() as u64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub steps: u64,
    pub neuron_time: Duration,
    pub plasticity_time: Duration,
    pub delivery_time: Duration,
    pub wall_time: Duration,
    pub setup_time: Duration,
    pub total_spikes: u64,
    pub synapses: u64,
    pub plastic_synapses: u64,
    /// Synapse update callbacks issued by the plasticity phase.
    pub update_calls: u64,
    /// Deliver callbacks issued by the delivery phase.
    pub deliver_calls: u64,
}

/// Receives the spike raster step by step.
pub trait RasterSink {
    fn record(&mut self, step: u64, fired: &[NeuronId]) -> io::Result<()>;
}

/// In-memory raster of `(step, neuron)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Raster(pub Vec<(u64, NeuronId)>);

impl RasterSink for Raster {
    fn record(&mut self, step: u64, fired: &[NeuronId]) -> io::Result<()> {
        self.0.extend(fired.iter().map(|&n| (step, n)));
        Ok(())
    }
}

impl Raster {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Renders in the text raster format.
    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        let mut w = RasterWriter::new(&mut out);
        for &(s, n) in &self.0 {
            let _ = w.record(s, &[n]);
        }
        drop(w);
        String::from_utf8(out).expect("ascii")
    }
}

/// Writes one `step<TAB>neuron` line per spike.
pub struct RasterWriter<W: Write> {
    out: io::BufWriter<W>,
}

impl<W: Write> RasterWriter<W> {
    pub fn new(out: W) -> Self {
        RasterWriter { out: io::BufWriter::new(out) }
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

impl<W: Write> RasterSink for RasterWriter<W> {
    fn record(&mut self, step: u64, fired: &[NeuronId]) -> io::Result<()> {
        for n in fired {
            writeln!(self.out, "{step}\t{n}")?;
        }
        Ok(())
    }
}

/// Parses the text raster format.
pub fn parse_raster(text: &str) -> Result<Raster, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let (s, n) = line
            .split_once('\t')
            .ok_or_else(|| format!("line {}: expected step<TAB>neuron", i + 1))?;
        let s = s.parse().map_err(|e| format!("line {}: {e}", i + 1))?;
        let n = n.parse().map_err(|e| format!("line {}: {e}", i + 1))?;
        out.push((s, n));
    }
    Ok(Raster(out))
}

/// A constructed network plus all simulation state.
pub struct Simulation<M: Model> {
    model: M,
    config: StrategyConfig,
    adj: PaddedAdjacencyList,
    synapses: SynapseTable<M::Synapse>,
    pivots: PivotTable,
    neurons: Vec<M::Neuron>,
    inputs: Vec<M::Input>,
    history: FiringHistory,
    ages: AgeTable,
    ring: SpikeRing,
    now: u64,
    arriving: Vec<bool>,
    plastic_rows: Vec<NeuronId>,
    window_fn: WindowFn,
    pool: rayon::ThreadPool,
    metrics: RunMetrics,
}

/// Constructs the graph, pivots and initial state for `model`.
pub fn setup<M: Model>(model: M, config: StrategyConfig) -> Result<(Simulation<M>, Duration), EngineError> {
    let sim = Simulation::new(model, config)?;
    let t = sim.metrics.setup_time;
    Ok((sim, t))
}

fn try_alloc<T: Clone>(len: usize, value: T, what: &'static str) -> Result<Vec<T>, EngineError> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| EngineError::Allocation {
        what,
        bytes: (len as u64).saturating_mul(std::mem::size_of::<T>() as u64),
    })?;
    v.resize(len, value);
    Ok(v)
}

impl<M: Model> Simulation<M> {
    pub fn new(model: M, config: StrategyConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let delay = model.delay_steps();
        if model.has_plasticity() && delay >= config.history.bits() {
            return Err(EngineError::DelayTooLong { delay, bits: config.history.bits() });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.effective_workers())
            .build()
            .map_err(|e| EngineError::Config(e.to_string()))?;

        let spec = model.graph_spec().clone();
        spec.validate()?;
        // Refuse obviously impossible sizes before touching the allocator.
        let expected = spec.expected_synapses();
        let per_syn = 4 + std::mem::size_of::<M::Synapse>() as u64;
        let estimate = (expected * 1.1) as u64 * per_syn;
        let mut probe: Vec<u8> = Vec::new();
        probe.try_reserve_exact(estimate as usize).map_err(|_| EngineError::Allocation {
            what: "synapse storage",
            bytes: estimate,
        })?;
        drop(probe);

        let start = Instant::now();
        let (adj, synapses, pivots, neurons, inputs) = pool.install(|| -> Result<_, EngineError> {
            let adj = build_topology(&spec)?;
            let synapses = SynapseTable::from_fn(&adj, M::Synapse::default(), |s, d| model.init_synapse(s, d));
            let pivots = compute_pivots(&adj, config.chunk_size)?;
            let n = adj.num_neurons();
            let neurons: Vec<M::Neuron> = (0..n as NeuronId).into_par_iter().map(|i| model.init_neuron(i)).collect();
            let inputs = try_alloc(n, M::Input::default(), "input accumulators")?;
            Ok((adj, synapses, pivots, neurons, inputs))
        })?;
        let n = adj.num_neurons();
        let plastic_rows: Vec<NeuronId> = (0..n as NeuronId).filter(|&i| model.plastic_source(i)).collect();
        let setup_time = start.elapsed();

        let metrics = RunMetrics {
            setup_time,
            synapses: adj.num_synapses() as u64,
            plastic_synapses: model.plastic_synapse_count(&adj) as u64,
            ..Default::default()
        };
        Ok(Simulation {
            history: FiringHistory::new(n, config.history),
            ages: AgeTable::new(n),
            ring: SpikeRing::new(delay),
            now: 0,
            arriving: vec![false; n],
            plastic_rows,
            window_fn: DEFAULT_WINDOW,
            pool,
            metrics,
            model,
            config,
            adj,
            synapses,
            pivots,
            neurons,
            inputs,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn clock(&self) -> SimClock {
        SimClock { now: self.now, dt_ms: self.model.dt_ms(), delay: self.model.delay_steps() }
    }

    pub fn adjacency(&self) -> &PaddedAdjacencyList {
        &self.adj
    }

    pub fn pivots(&self) -> &PivotTable {
        &self.pivots
    }

    pub fn synapses(&self) -> &SynapseTable<M::Synapse> {
        &self.synapses
    }

    pub fn neurons(&self) -> &[M::Neuron] {
        &self.neurons
    }

    /// Accumulators filled by the last delivery phase.
    pub fn inputs(&self) -> &[M::Input] {
        &self.inputs
    }

    pub fn history(&self) -> &FiringHistory {
        &self.history
    }

    pub fn ages(&self) -> &AgeTable {
        &self.ages
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    /// Substitutes the post-synaptic window extraction; mutation tests only.
    pub fn set_window_fn(&mut self, f: WindowFn) {
        self.window_fn = f;
    }

    /// Advances one step, returning the neurons that fired in it.
    pub fn step(&mut self) -> &[NeuronId] {
        let now = self.now;

        let t0 = Instant::now();
        let fired = self.update_neurons(now);
        self.metrics.total_spikes += fired.len() as u64;
        self.ring.record_owned(now, fired);
        let t1 = Instant::now();
        self.metrics.neuron_time += t1 - t0;

        if self.model.has_plasticity() {
            self.update_plasticity(now);
        }
        let t2 = Instant::now();
        self.metrics.plasticity_time += t2 - t1;

        self.deliver(now);
        self.metrics.delivery_time += t2.elapsed();

        self.now += 1;
        self.metrics.steps += 1;
        self.ring.fired_at(now, 0)
    }

    fn update_neurons(&mut self, now: u64) -> Vec<NeuronId> {
        let model = &self.model;
        let mask = self.history.bits().mask();
        let neurons = &mut self.neurons;
        let inputs = &mut self.inputs;
        let hist = self.history.words_mut();
        self.pool.install(|| {
            neurons
                .par_iter_mut()
                .zip(inputs.par_iter_mut())
                .zip(hist.par_iter_mut())
                .enumerate()
                .with_min_len(1024)
                .filter_map(|(i, ((n, input), h))| {
                    let fired = model.update_neuron(i as NeuronId, n, std::mem::take(input), now);
                    *h = ((*h << 1) | fired as u64) & mask;
                    fired.then_some(i as NeuronId)
                })
                .collect()
        })
    }

    fn update_plasticity(&mut self, now: u64) {
        let arrivals = self.ring.arrivals(now);
        let bits = self.config.history;
        let model = &self.model;
        let hist = self.history.words();
        let width = self.synapses.width();
        let decomposable = model.step_decomposable();
        let update = move |s: &mut M::Synapse, pre: bool, post: bool, n: u32| {
            if decomposable {
                model.update_synapse(s, pre, post, n);
            } else {
                for _ in 1..n {
                    model.update_synapse(s, false, false, 1);
                }
                model.update_synapse(s, pre, post, 1);
            }
        };
        let plastic_target = |d: NeuronId| model.plastic_target(d);

        match self.config.plasticity {
            PlasticityStrategy::Naive => {
                for &a in arrivals {
                    self.arriving[a as usize] = true;
                }
                let arriving = &self.arriving;
                let adj = &self.adj;
                let rows = self.synapses.entries_mut();
                let calls: u64 = self.pool.install(|| {
                    rows.par_chunks_mut(width.max(1))
                        .enumerate()
                        .with_min_len(64)
                        .filter(|(i, _)| model.plastic_source(*i as NeuronId))
                        .map(|(i, row)| {
                            let src = i as NeuronId;
                            naive_row(adj.row(src), row, hist, arriving[i], &plastic_target, &update)
                        })
                        .sum()
                });
                self.metrics.update_calls += calls;
                for &a in arrivals {
                    self.arriving[a as usize] = false;
                }
            }
            strategy => {
                let jobs: Vec<(NeuronId, bool)> = if self.config.exact_window {
                    let h = bits.bits() as i64;
                    let mut jobs = Vec::new();
                    let mut a = arrivals.iter().peekable();
                    for &src in &self.plastic_rows {
                        while a.next_if(|&&x| x < src).is_some() {}
                        if a.next_if_eq(&&src).is_some() {
                            jobs.push((src, true));
                        } else if now as i64 - self.ages.last_update(src) >= h {
                            jobs.push((src, false));
                        }
                    }
                    jobs
                } else {
                    arrivals
                        .iter()
                        .filter(|&&s| model.plastic_source(s))
                        .map(|&s| (s, true))
                        .collect()
                };
                let ages = &self.ages;
                let tasks: Vec<(NeuronId, bool, u32, &mut [M::Synapse])> =
                    split_rows(self.synapses.entries_mut(), width, jobs.iter().map(|&(s, _)| s))
                        .into_iter()
                        .zip(&jobs)
                        .map(|(row, &(src, pre))| (src, pre, ages.age(src, now, bits), row))
                        .collect();
                let adj = &self.adj;
                let window_fn = self.window_fn;
                let calls: u64 = self.pool.install(|| {
                    tasks
                        .into_par_iter()
                        .with_min_len(4)
                        .map(|(src, pre, age, row)| {
                            let count = std::cell::Cell::new(0u64);
                            let counted = |s: &mut M::Synapse, a: bool, b: bool, n: u32| {
                                count.set(count.get() + 1);
                                update(s, a, b, n);
                            };
                            replay_row(strategy, window_fn, adj.row(src), row, hist, age, pre, &plastic_target, &counted);
                            count.get()
                        })
                        .sum()
                });
                self.metrics.update_calls += calls;
                for &(src, _) in &jobs {
                    self.ages.touch(src, now);
                }
            }
        }
    }

    fn deliver(&mut self, now: u64) {
        let arrivals = self.ring.arrivals(now);
        if arrivals.is_empty() {
            return;
        }
        let model = &self.model;
        let f = |s: &M::Synapse, src: NeuronId, acc: &mut M::Input| model.deliver(s, src, acc);
        self.metrics.deliver_calls += arrivals.iter().map(|&s| self.adj.out_degree(s) as u64).sum::<u64>();
        match self.config.delivery {
            DeliveryStrategy::Naive => deliver_naive(arrivals, &self.adj, &self.synapses, &mut self.inputs, f),
            DeliveryStrategy::Sliced => {
                let (adj, piv, syn, inputs) = (&self.adj, &self.pivots, &self.synapses, &mut self.inputs);
                self.pool.install(|| deliver_sliced(arrivals, adj, piv, syn, inputs, f));
            }
        }
    }

    /// Brings every stale plastic row up to date through the last completed
    /// step, without a pre-synaptic spike. A no-op for naive plasticity.
    pub fn synchronize(&mut self) {
        if self.now == 0 || self.config.plasticity == PlasticityStrategy::Naive || !self.model.has_plasticity() {
            return;
        }
        let last = self.now - 1;
        let bits = self.config.history;
        let model = &self.model;
        let hist = self.history.words();
        let width = self.synapses.width();
        let jobs: Vec<(NeuronId, u32)> = self
            .plastic_rows
            .iter()
            .map(|&s| (s, clamp_age(last as i64 - self.ages.last_update(s), bits)))
            .filter(|&(_, age)| age > 0)
            .collect();
        let rows = split_rows(self.synapses.entries_mut(), width, jobs.iter().map(|&(s, _)| s));
        let decomposable = model.step_decomposable();
        let update = |s: &mut M::Synapse, pre: bool, post: bool, n: u32| {
            if decomposable {
                model.update_synapse(s, pre, post, n);
            } else {
                for _ in 1..n {
                    model.update_synapse(s, false, false, 1);
                }
                model.update_synapse(s, pre, post, 1);
            }
        };
        let strategy = self.config.plasticity;
        let adj = &self.adj;
        let window_fn = self.window_fn;
        self.pool.install(|| {
            rows.into_par_iter().zip(jobs.par_iter()).for_each(|(row, &(src, age))| {
                replay_row(strategy, window_fn, adj.row(src), row, hist, age, false, &|d| model.plastic_target(d), &update);
            });
        });
        for &(src, _) in &jobs {
            self.ages.touch(src, last);
        }
    }

    /// Runs `steps` steps, streaming spikes to `raster` if given.
    pub fn run_steps(&mut self, steps: u64, mut raster: Option<&mut dyn RasterSink>) -> Result<RunMetrics, EngineError> {
        let start = Instant::now();
        for _ in 0..steps {
            let step = self.now;
            let fired = self.step();
            if let Some(sink) = raster.as_deref_mut() {
                sink.record(step, fired)?;
            }
        }
        self.metrics.wall_time += start.elapsed();
        Ok(self.metrics.clone())
    }

    /// Simulates `seconds` of biological time.
    pub fn run(&mut self, seconds: f64, raster: Option<&mut dyn RasterSink>) -> Result<RunMetrics, EngineError> {
        if !(seconds > 0.0) {
            return Err(EngineError::Duration);
        }
        let steps = SimClock::steps_for(seconds, self.model.dt_ms());
        self.run_steps(steps, raster)
    }
}

/// Splits `entries` into the disjoint mutable rows named by `rows`, which
/// must be strictly ascending.
fn split_rows<S>(entries: &mut [S], width: usize, rows: impl Iterator<Item = NeuronId>) -> Vec<&mut [S]> {
    let mut out = Vec::new();
    let mut rest = entries;
    let mut consumed = 0usize;
    for src in rows {
        let start = src as usize * width;
        debug_assert!(start >= consumed, "rows must be ascending");
        let tail = std::mem::take(&mut rest);
        let (_, tail) = tail.split_at_mut(start - consumed);
        let (row, tail) = tail.split_at_mut(width);
        out.push(row);
        rest = tail;
        consumed = start + width;
    }
    out
}

/// Builds a network and simulates `seconds` of biological time.
pub fn run<M: Model>(
    model: M,
    config: StrategyConfig,
    seconds: f64,
    raster: Option<&mut dyn RasterSink>,
) -> Result<RunMetrics, EngineError> {
    if !(seconds > 0.0) {
        return Err(EngineError::Duration);
    }
    let mut sim = Simulation::new(model, config)?;
    sim.run(seconds, raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;
    use crate::models::{CountingModel, Model};

    /// Two neurons, 0 -> 1, delay 3. Neuron 0 fires once at step 2; neuron 1
    /// logs the inputs it consumes.
    struct Chain {
        spec: GraphSpec,
    }

    impl Model for Chain {
        type Neuron = Vec<(u64, i64)>;
        type Synapse = ();
        type Input = i64;
        fn name(&self) -> &'static str {
            "chain"
        }
        fn graph_spec(&self) -> &GraphSpec {
            &self.spec
        }
        fn dt_ms(&self) -> f64 {
            0.1
        }
        fn delay_steps(&self) -> u32 {
            3
        }
        fn init_neuron(&self, _: NeuronId) -> Self::Neuron {
            Vec::new()
        }
        fn init_synapse(&self, _: NeuronId, _: NeuronId) {}
        fn update_neuron(&self, id: NeuronId, n: &mut Self::Neuron, input: i64, step: u64) -> bool {
            if input != 0 {
                n.push((step, input));
            }
            id == 0 && step == 2
        }
        fn deliver(&self, _: &(), _: NeuronId, input: &mut i64) {
            *input += 1;
        }
    }

    fn chain() -> Chain {
        let mut spec = GraphSpec::uniform(2, 0.0, 1);
        spec.projections.clear();
        // 0 -> 1 only.
        spec.populations = vec![
            crate::graph::Population { name: "a".into(), size: 1 },
            crate::graph::Population { name: "b".into(), size: 1 },
        ];
        spec.projections.push(crate::graph::Projection { from: 0, to: 1, probability: 1.0 });
        Chain { spec }
    }

    #[test]
    fn spike_reaches_target_after_delay_plus_one() {
        for delivery in DeliveryStrategy::ALL {
            let cfg = StrategyConfig { delivery, chunk_size: 32, workers: 1, ..Default::default() };
            let mut sim = Simulation::new(chain(), cfg).unwrap();
            sim.run_steps(10, None).unwrap();
            assert_eq!(sim.neurons()[1], vec![(6, 1)]);
            assert!(sim.neurons()[0].is_empty());
            assert_eq!(sim.metrics().deliver_calls, 1);
        }
    }

    #[test]
    fn quiet_step_only_advances_clock() {
        let model = CountingModel::new(20, 0.3, 2, 0.0, u32::MAX, 1).unwrap();
        let cfg = StrategyConfig { workers: 1, chunk_size: 32, ..Default::default() };
        let mut sim = Simulation::new(model, cfg).unwrap();
        let before: Vec<_> = sim.synapses().entries().to_vec();
        sim.run_steps(5, None).unwrap();
        assert_eq!(sim.clock().now, 5);
        assert_eq!(sim.metrics().total_spikes, 0);
        assert_eq!(sim.synapses().entries(), &before[..]);
        assert!(sim.inputs().iter().all(|&x| x == 0));
    }

    #[test]
    fn duration_to_steps() {
        assert_eq!(SimClock::steps_for(0.001, 0.1), 10);
        let model = CountingModel::new(10, 0.2, 2, 0.1, 30, 1).unwrap();
        let mut sim = Simulation::new(model, StrategyConfig { workers: 1, chunk_size: 32, ..Default::default() }).unwrap();
        let mut raster = Raster::default();
        let m = sim.run(0.001, Some(&mut raster)).unwrap();
        assert_eq!(m.steps, 10);
        assert_eq!(m.total_spikes as usize, raster.len());
        assert!(sim.run(0.0, None).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let model = CountingModel::new(10, 0.2, 2, 0.1, 30, 1).unwrap();
        let cfg = StrategyConfig { chunk_size: 48, ..Default::default() };
        assert!(matches!(Simulation::new(model.clone(), cfg), Err(EngineError::Config(_))));
        let cfg = StrategyConfig { chunk_size: 16, ..Default::default() };
        assert!(matches!(Simulation::new(model, cfg), Err(EngineError::Config(_))));
        let long = CountingModel::new(10, 0.2, 40, 0.1, 30, 1).unwrap();
        let cfg = StrategyConfig { history: HistoryBits::H32, ..Default::default() };
        assert!(matches!(Simulation::new(long, cfg), Err(EngineError::DelayTooLong { .. })));
    }

    #[test]
    fn naive_work_is_one_call_per_plastic_synapse_per_step() {
        let model = CountingModel::new(40, 0.2, 2, 0.05, 30, 3).unwrap();
        let cfg = StrategyConfig::new(PlasticityStrategy::Naive, DeliveryStrategy::Naive);
        let mut sim = Simulation::new(model, StrategyConfig { workers: 1, chunk_size: 32, ..cfg }).unwrap();
        let syn = sim.metrics().plastic_synapses;
        sim.run_steps(25, None).unwrap();
        assert_eq!(sim.metrics().update_calls, 25 * syn);
    }

    #[test]
    fn raster_text_round_trips() {
        let r = Raster(vec![(0, 3), (0, 7), (5, 1)]);
        assert_eq!(r.to_text(), "0\t3\n0\t7\n5\t1\n");
        assert_eq!(parse_raster(&r.to_text()).unwrap(), r);
        assert!(parse_raster("x").is_err());
    }

    #[test]
    fn split_rows_is_disjoint() {
        let mut v: Vec<u32> = (0..20).collect();
        let rows = split_rows(&mut v, 4, [1u32, 3, 4].into_iter());
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], &[4, 5, 6, 7]);
        assert_eq!(rows[1], &[12, 13, 14, 15]);
        assert_eq!(rows[2], &[16, 17, 18, 19]);
    }
}
