//! Network topology: a padded (rectangular) adjacency list, the parallel
//! synapse table, and per-row slice pivots.
//!
//! Row `i` of the adjacency list holds neuron `i`'s outgoing connections as
//! ascending neuron ids. Rows are padded to a common width with [`SENTINEL`],
//! which compares greater than every valid id, so padding always sorts last.
//! The synapse table has the same shape; cell `(i, j)` of one corresponds to
//! cell `(i, j)` of the other.

use std::fmt::Write as _;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Index into the neuron array.
pub type NeuronId = u32;

/// Marks an unused adjacency cell. Greater than any valid [`NeuronId`].
pub const SENTINEL: NeuronId = NeuronId::MAX;

/// Rows are padded to a multiple of this many columns.
pub const ROW_ALIGN: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("network must contain at least one neuron")]
    Empty,
    #[error("population `{0}` has size 0")]
    EmptyPopulation(String),
    #[error("connection probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("projection references unknown population index {0}")]
    UnknownPopulation(usize),
    #[error("network of {0} neurons exceeds the id range")]
    TooLarge(usize),
    #[error("row {row} is not sorted ascending at column {col}")]
    Unsorted { row: usize, col: usize },
    #[error("chunk size must be at least 1")]
    ChunkSize,
    #[error("malformed adjacency dump at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A contiguous block of neurons with a shared role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub name: String,
    pub size: usize,
}

/// Random connectivity from one population onto another.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub from: usize,
    pub to: usize,
    pub probability: f64,
}

/// Parameters for random graph construction. Populations are laid out
/// back to back in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub populations: Vec<Population>,
    pub projections: Vec<Projection>,
    pub allow_self_connections: bool,
    pub seed: u64,
}

impl GraphSpec {
    /// A single population of `n` neurons connected all-to-all with probability `p`.
    pub fn uniform(n: usize, p: f64, seed: u64) -> Self {
        GraphSpec {
            populations: vec![Population { name: "all".into(), size: n }],
            projections: vec![Projection { from: 0, to: 0, probability: p }],
            allow_self_connections: false,
            seed,
        }
    }

    pub fn num_neurons(&self) -> usize {
        self.populations.iter().map(|p| p.size).sum()
    }

    /// Id range covered by population `index`.
    pub fn population_range(&self, index: usize) -> Range<usize> {
        let start: usize = self.populations[..index].iter().map(|p| p.size).sum();
        start..start + self.populations[index].size
    }

    /// Expected number of synapses.
    pub fn expected_synapses(&self) -> f64 {
        self.projections
            .iter()
            .map(|pr| {
                let from = self.populations[pr.from].size as f64;
                let to = self.populations[pr.to].size as f64;
                let candidates = if pr.from == pr.to && !self.allow_self_connections {
                    from * (to - 1.0)
                } else {
                    from * to
                };
                candidates * pr.probability
            })
            .sum()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.populations.is_empty() {
            return Err(GraphError::Empty);
        }
        for p in &self.populations {
            if p.size == 0 {
                return Err(GraphError::EmptyPopulation(p.name.clone()));
            }
        }
        let n = self.num_neurons();
        if n >= SENTINEL as usize {
            return Err(GraphError::TooLarge(n));
        }
        for pr in &self.projections {
            if !(0.0..=1.0).contains(&pr.probability) {
                return Err(GraphError::Probability(pr.probability));
            }
            for idx in [pr.from, pr.to] {
                if idx >= self.populations.len() {
                    return Err(GraphError::UnknownPopulation(idx));
                }
            }
        }
        Ok(())
    }
}

/// Rectangular, sorted, sentinel-padded outgoing-connection table.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedAdjacencyList {
    num_neurons: usize,
    width: usize,
    entries: Vec<NeuronId>,
}

impl PaddedAdjacencyList {
    /// Builds a table from explicit rows. Each row is sorted and deduplicated;
    /// the width is the longest row rounded up to [`ROW_ALIGN`] unless
    /// `width` overrides it.
    pub fn from_rows(
        num_neurons: usize,
        rows: Vec<Vec<NeuronId>>,
        width: Option<usize>,
    ) -> Result<Self, GraphError> {
        if num_neurons == 0 || rows.len() != num_neurons {
            return Err(GraphError::Empty);
        }
        let mut rows = rows;
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            if let Some(&bad) = row.iter().find(|&&id| id as usize >= num_neurons) {
                return Err(GraphError::Parse {
                    line: 0,
                    reason: format!("id {bad} out of range"),
                });
            }
        }
        let max_degree = rows.iter().map(Vec::len).max().unwrap_or(0);
        let width = width.unwrap_or_else(|| round_up(max_degree, ROW_ALIGN)).max(max_degree);
        Ok(Self::pack(num_neurons, width, rows))
    }

    fn pack(num_neurons: usize, width: usize, rows: Vec<Vec<NeuronId>>) -> Self {
        let mut entries = vec![SENTINEL; num_neurons * width];
        if width > 0 {
            entries
                .par_chunks_mut(width)
                .zip(rows.into_par_iter())
                .for_each(|(dst, row)| dst[..row.len()].copy_from_slice(&row));
        }
        PaddedAdjacencyList { num_neurons, width, entries }
    }

    pub fn num_neurons(&self) -> usize {
        self.num_neurons
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Full padded row including sentinels.
    #[inline]
    pub fn row(&self, src: NeuronId) -> &[NeuronId] {
        let start = src as usize * self.width;
        &self.entries[start..start + self.width]
    }

    /// The non-sentinel prefix of a row.
    #[inline]
    pub fn neighbors(&self, src: NeuronId) -> &[NeuronId] {
        let row = self.row(src);
        &row[..valid_len(row)]
    }

    /// Number of real connections leaving `src`.
    #[inline]
    pub fn out_degree(&self, src: NeuronId) -> usize {
        valid_len(self.row(src))
    }

    pub fn entries(&self) -> &[NeuronId] {
        &self.entries
    }

    pub fn num_synapses(&self) -> usize {
        (0..self.num_neurons as NeuronId).map(|i| self.out_degree(i)).sum()
    }

    /// Checks every structural invariant of the table.
    pub fn check(&self) -> Result<(), GraphError> {
        for i in 0..self.num_neurons {
            let row = self.row(i as NeuronId);
            for (col, pair) in row.windows(2).enumerate() {
                let ok = pair[0] < pair[1] || (pair[0] == SENTINEL && pair[1] == SENTINEL);
                if !ok {
                    return Err(GraphError::Unsorted { row: i, col: col + 1 });
                }
            }
            if let Some(col) = row
                .iter()
                .position(|&id| id != SENTINEL && id as usize >= self.num_neurons)
            {
                return Err(GraphError::Unsorted { row: i, col });
            }
        }
        Ok(())
    }

    /// Text dump: one line per row, space separated ids, `-` for sentinels.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.num_neurons {
            let row = self.row(i as NeuronId);
            for (j, &id) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                if id == SENTINEL {
                    out.push('-');
                } else {
                    let _ = write!(out, "{id}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format produced by [`dump`](Self::dump). The width is the
    /// longest line; shorter lines are padded.
    pub fn parse_dump(text: &str) -> Result<Self, GraphError> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                if tok == "-" {
                    row.push(SENTINEL);
                    continue;
                }
                let id = tok.parse::<NeuronId>().map_err(|e| GraphError::Parse {
                    line: lineno + 1,
                    reason: e.to_string(),
                })?;
                row.push(id);
            }
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        for row in &mut rows {
            row.resize(width, SENTINEL);
        }
        let adj = PaddedAdjacencyList {
            num_neurons: n,
            width,
            entries: rows.into_iter().flatten().collect(),
        };
        adj.check()?;
        Ok(adj)
    }

    /// Stable content hash used to check construction determinism.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_neurons as u64).to_le_bytes());
        h.update((self.width as u64).to_le_bytes());
        for chunk in self.entries.chunks(1 << 16) {
            let bytes: Vec<u8> = chunk.iter().flat_map(|v| v.to_le_bytes()).collect();
            h.update(&bytes);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[inline]
fn valid_len(row: &[NeuronId]) -> usize {
    row.partition_point(|&id| id != SENTINEL)
}

fn round_up(x: usize, multiple: usize) -> usize {
    x.div_ceil(multiple) * multiple
}

/// Per-synapse model state laid out exactly like the adjacency list.
#[derive(Clone, Debug, PartialEq)]
pub struct SynapseTable<S> {
    width: usize,
    entries: Vec<S>,
}

impl<S: Clone + Send + Sync> SynapseTable<S> {
    /// Initializes every real synapse with `init(src, dst)`; padding cells get `pad`.
    pub fn from_fn<F>(adj: &PaddedAdjacencyList, pad: S, init: F) -> Self
    where
        F: Fn(NeuronId, NeuronId) -> S + Sync,
    {
        let width = adj.width();
        let mut entries = vec![pad; adj.num_neurons() * width];
        if width > 0 {
            entries.par_chunks_mut(width).enumerate().for_each(|(i, row)| {
                for (cell, &dst) in row.iter_mut().zip(adj.neighbors(i as NeuronId)) {
                    *cell = init(i as NeuronId, dst);
                }
            });
        }
        SynapseTable { width, entries }
    }
}

impl<S> SynapseTable<S> {
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn row(&self, src: NeuronId) -> &[S] {
        let start = src as usize * self.width;
        &self.entries[start..start + self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, src: NeuronId) -> &mut [S] {
        let start = src as usize * self.width;
        &mut self.entries[start..start + self.width]
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [S] {
        &mut self.entries
    }
}

/// Samples the topology described by `spec`.
///
/// Each row draws from its own ChaCha stream keyed by `(seed, row)`, so the
/// result does not depend on how rows are scheduled across threads. Targets
/// are drawn with geometric skips, which is equivalent to one Bernoulli trial
/// per candidate but costs time proportional to the realized out-degree.
pub fn build_topology(spec: &GraphSpec) -> Result<PaddedAdjacencyList, GraphError> {
    spec.validate()?;
    let n = spec.num_neurons();
    let ranges: Vec<Range<usize>> =
        (0..spec.populations.len()).map(|i| spec.population_range(i)).collect();

    let rows: Vec<Vec<NeuronId>> = (0..n)
        .into_par_iter()
        .map(|src| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(src as u64);
            let mut row = Vec::new();
            for pr in &spec.projections {
                if !ranges[pr.from].contains(&src) {
                    continue;
                }
                sample_targets(&mut rng, ranges[pr.to].clone(), pr.probability, &mut row);
            }
            if !spec.allow_self_connections {
                row.retain(|&dst| dst as usize != src);
            }
            row.sort_unstable();
            row.dedup();
            row
        })
        .collect();

    let max_degree = rows.iter().map(Vec::len).max().unwrap_or(0);
    Ok(PaddedAdjacencyList::pack(n, round_up(max_degree, ROW_ALIGN), rows))
}

/// Builds the topology and initializes the synapse table in one go.
pub fn build_graph<S, F>(
    spec: &GraphSpec,
    pad: S,
    init: F,
) -> Result<(PaddedAdjacencyList, SynapseTable<S>), GraphError>
where
    S: Clone + Send + Sync,
    F: Fn(NeuronId, NeuronId) -> S + Sync,
{
    let adj = build_topology(spec)?;
    let syn = SynapseTable::from_fn(&adj, pad, init);
    Ok((adj, syn))
}

fn sample_targets(rng: &mut ChaCha8Rng, targets: Range<usize>, p: f64, out: &mut Vec<NeuronId>) {
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        out.extend(targets.map(|t| t as NeuronId));
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut next = targets.start as f64;
    loop {
        // Number of failures before the next success.
        let u: f64 = rng.gen();
        let skip = ((1.0 - u).ln() / log_q).floor();
        next += skip;
        if next >= targets.end as f64 {
            break;
        }
        out.push(next as NeuronId);
        next += 1.0;
    }
}

/// Per-row column offsets splitting each adjacency row into slices that
/// only reference one chunk of `chunk_size` consecutive neurons.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotTable {
    chunk_size: usize,
    num_slices: usize,
    pivots: Vec<u32>,
}

impl PivotTable {
    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    /// The `num_slices + 1` offsets of row `src`, starting with an explicit 0.
    #[inline]
    pub fn row(&self, src: NeuronId) -> &[u32] {
        let stride = self.num_slices + 1;
        let start = src as usize * stride;
        &self.pivots[start..start + stride]
    }

    /// Columns of row `src` whose targets fall in chunk `slice`.
    #[inline]
    pub fn row_slice(&self, src: NeuronId, slice: usize) -> Range<usize> {
        let row = self.row(src);
        row[slice] as usize..row[slice + 1] as usize
    }
}

/// Binary-searches, for every row and every chunk boundary `k * chunk_size`,
/// the first column whose id is at least that boundary.
pub fn compute_pivots(
    adj: &PaddedAdjacencyList,
    chunk_size: usize,
) -> Result<PivotTable, GraphError> {
    if chunk_size == 0 {
        return Err(GraphError::ChunkSize);
    }
    if cfg!(debug_assertions) {
        adj.check()?;
    }
    let n = adj.num_neurons();
    let num_slices = n.div_ceil(chunk_size);
    let stride = num_slices + 1;
    let mut pivots = vec![0u32; n * stride];
    pivots.par_chunks_mut(stride).enumerate().for_each(|(i, out)| {
        let row = adj.row(i as NeuronId);
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let bound = (k * chunk_size).min(n) as u64;
            // Sentinels are never below a bound, so the last pivot lands on
            // the end of the valid prefix.
            *slot = row.partition_point(|&id| (id as u64) < bound && id != SENTINEL) as u32;
        }
    });
    Ok(PivotTable { chunk_size, num_slices, pivots })
}

/// Column range of `src`'s row that targets chunk `slice`.
#[inline]
pub fn row_slice(pivots: &PivotTable, src: NeuronId, slice: usize) -> Range<usize> {
    pivots.row_slice(src, slice)
}

/// Number of real outgoing connections of `src`.
#[inline]
pub fn out_degree(adj: &PaddedAdjacencyList, src: NeuronId) -> usize {
    adj.out_degree(src)
}
