//! Spike delivery strategies.
//!
//! Naive delivery walks each arriving row and scatters straight into the
//! global accumulator array. Sliced delivery splits the neurons into slices
//! of `chunk_size` consecutive ids; pivots give each row's columns per slice.
//! A worker owns a run of consecutive slices and delivers every arriving
//! row's matching columns into it, so its writes stay inside a cache-sized
//! block. Runs are disjoint, so they execute in parallel without atomics,
//! and the fixed order inside a run keeps results independent of the worker
//! count.

use serde::{Deserialize, Serialize};
use rayon::prelude::*;

use crate::graph::{NeuronId, PaddedAdjacencyList, PivotTable, SynapseTable, SENTINEL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeliveryStrategy {
    Naive,
    Sliced,
}

impl DeliveryStrategy {
    pub const ALL: [DeliveryStrategy; 2] = [DeliveryStrategy::Naive, DeliveryStrategy::Sliced];

    pub fn name(self) -> &'static str {
        match self {
            DeliveryStrategy::Naive => "naive",
            DeliveryStrategy::Sliced => "sliced",
        }
    }
}

impl std::str::FromStr for DeliveryStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(DeliveryStrategy::Naive),
            "sliced" => Ok(DeliveryStrategy::Sliced),
            other => Err(format!("unknown delivery strategy `{other}` (naive|sliced)")),
        }
    }
}

impl std::fmt::Display for DeliveryStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Row-wise delivery: ascending source, then ascending column.
pub fn deliver_naive<S, A, F>(
    arrivals: &[NeuronId],
    adj: &PaddedAdjacencyList,
    synapses: &SynapseTable<S>,
    inputs: &mut [A],
    deliver: F,
) where
    F: Fn(&S, NeuronId, &mut A),
{
    for &src in arrivals {
        let row = adj.row(src);
        let syn = synapses.row(src);
        for (&dst, s) in row.iter().zip(syn) {
            if dst == SENTINEL {
                break;
            }
            deliver(s, src, &mut inputs[dst as usize]);
        }
    }
}

/// Accumulator bytes one sliced-delivery task aims to keep cache-resident.
pub const TASK_WORKING_SET_BYTES: usize = 512 * 1024;

/// Slice-partitioned delivery. Each task owns a run of consecutive slices
/// whose accumulators fit [`TASK_WORKING_SET_BYTES`] (at least one slice, and
/// enough runs to occupy every worker). Every destination receives its
/// contributions in ascending source then column order, exactly as with
/// [`deliver_naive`], so results do not depend on grouping or worker count.
pub fn deliver_sliced<S, A, F>(
    arrivals: &[NeuronId],
    adj: &PaddedAdjacencyList,
    pivots: &PivotTable,
    synapses: &SynapseTable<S>,
    inputs: &mut [A],
    deliver: F,
) where
    S: Sync,
    A: Send,
    F: Fn(&S, NeuronId, &mut A) + Sync,
{
    let budget = TASK_WORKING_SET_BYTES / (pivots.chunk_size() * std::mem::size_of::<A>().max(1));
    let spread = pivots.num_slices().div_ceil(rayon::current_num_threads());
    deliver_slice_runs(arrivals, adj, pivots, synapses, inputs, deliver, budget.min(spread).max(1));
}

/// [`deliver_sliced`] with an explicit number of slices per task.
pub fn deliver_slice_runs<S, A, F>(
    arrivals: &[NeuronId],
    adj: &PaddedAdjacencyList,
    pivots: &PivotTable,
    synapses: &SynapseTable<S>,
    inputs: &mut [A],
    deliver: F,
    slices_per_task: usize,
) where
    S: Sync,
    A: Send,
    F: Fn(&S, NeuronId, &mut A) + Sync,
{
    assert!(slices_per_task >= 1, "a task owns at least one slice");
    if arrivals.is_empty() {
        return;
    }
    let chunk = pivots.chunk_size();
    let s = pivots.num_slices();
    let runs = s.div_ceil(slices_per_task);
    // Column bounds of every run for every arriving row, run-major, so a
    // task reads its bounds from two contiguous stretches.
    let a = arrivals.len();
    let mut bounds = vec![0u32; (runs + 1) * a];
    for (j, &src) in arrivals.iter().enumerate() {
        let row = pivots.row(src);
        for r in 0..=runs {
            bounds[r * a + j] = row[(r * slices_per_task).min(s)];
        }
    }
    inputs.par_chunks_mut(chunk * slices_per_task).enumerate().for_each(|(r, neurons)| {
        let starts = &bounds[r * a..(r + 1) * a];
        let ends = &bounds[(r + 1) * a..(r + 2) * a];
        let base = (r * slices_per_task * chunk) as NeuronId;
        for ((&src, &lo), &hi) in arrivals.iter().zip(starts).zip(ends) {
            let cols = lo as usize..hi as usize;
            let ids = &adj.row(src)[cols.clone()];
            let syn = &synapses.row(src)[cols];
            for (&dst, s) in ids.iter().zip(syn) {
                deliver(s, src, &mut neurons[dst.wrapping_sub(base) as usize]);
            }
        }
    });
}
