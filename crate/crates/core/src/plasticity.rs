//! Synapse-update strategies.
//!
//! All three strategies drive the same model callback
//! `update(state, pre, post, n_steps)`, which advances a synapse by
//! `n_steps - 1` silent steps followed by one step carrying the given flags.
//!
//! * Naive: every synapse gets one single-step call per simulation step.
//! * Lazy: a row is left stale until its source's spike arrives; the missed
//!   steps are then replayed one by one from the destination histories.
//! * Event-driven: like lazy, but only post-synaptic spikes in the window
//!   trigger a call, with the silent gaps between them folded into `n_steps`.
//!
//! Replay order is chronological. Window position `s` stands for step
//! `now - s`; the pre-synaptic flag belongs to position 0.

use serde::{Deserialize, Serialize};

use crate::graph::{NeuronId, SENTINEL};
use crate::history::{descending_set_bits, recent_mask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlasticityStrategy {
    Naive,
    Lazy,
    #[serde(rename = "event")]
    EventDriven,
}

impl PlasticityStrategy {
    pub const ALL: [PlasticityStrategy; 3] =
        [PlasticityStrategy::Naive, PlasticityStrategy::Lazy, PlasticityStrategy::EventDriven];

    pub fn name(self) -> &'static str {
        match self {
            PlasticityStrategy::Naive => "naive",
            PlasticityStrategy::Lazy => "lazy",
            PlasticityStrategy::EventDriven => "event",
        }
    }
}

impl std::str::FromStr for PlasticityStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(PlasticityStrategy::Naive),
            "lazy" => Ok(PlasticityStrategy::Lazy),
            "event" | "event-driven" => Ok(PlasticityStrategy::EventDriven),
            other => Err(format!("unknown plasticity strategy `{other}` (naive|lazy|event)")),
        }
    }
}

impl std::fmt::Display for PlasticityStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One invocation of the synapse update callback.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpdateCall {
    pub pre: bool,
    pub post: bool,
    pub n_steps: u32,
}

/// Extracts the post-synaptic window from a history word. Always
/// [`recent_mask`] outside of mutation tests.
pub type WindowFn = fn(u64, u32) -> u64;

/// Replays `age` missed steps one at a time.
#[inline(always)]
pub fn replay_lazy<S>(
    syn: &mut S,
    window: u64,
    age: u32,
    pre: bool,
    update: &impl Fn(&mut S, bool, bool, u32),
) {
    for s in (0..age).rev() {
        update(syn, pre && s == 0, (window >> s) & 1 == 1, 1);
    }
}

/// Replays `age` missed steps with one call per set window bit plus an
/// optional tail. The calls partition the `age` steps.
#[inline(always)]
pub fn replay_event<S>(
    syn: &mut S,
    window: u64,
    age: u32,
    pre: bool,
    update: &impl Fn(&mut S, bool, bool, u32),
) {
    let mut prev = age;
    for pos in descending_set_bits(window) {
        update(syn, pre && pos == 0, true, prev - pos);
        prev = pos;
    }
    if prev > 0 {
        update(syn, pre, false, prev);
    }
}

/// Calls `replay_lazy` would issue for one synapse.
pub fn lazy_schedule(window: u64, age: u32, pre: bool) -> Vec<UpdateCall> {
    record(|sink| replay_lazy(&mut (), window, age, pre, &|_, a, b, n| sink(a, b, n)))
}

/// Calls `replay_event` would issue for one synapse.
pub fn event_schedule(window: u64, age: u32, pre: bool) -> Vec<UpdateCall> {
    record(|sink| replay_event(&mut (), window, age, pre, &|_, a, b, n| sink(a, b, n)))
}

fn record(f: impl FnOnce(&dyn Fn(bool, bool, u32))) -> Vec<UpdateCall> {
    let calls = std::cell::RefCell::new(Vec::new());
    f(&|pre, post, n_steps| calls.borrow_mut().push(UpdateCall { pre, post, n_steps }));
    calls.into_inner()
}

/// One naive sweep over a row: a single step for every plastic synapse.
#[inline]
pub fn naive_row<S>(
    row_adj: &[NeuronId],
    row_syn: &mut [S],
    hist: &[u64],
    pre: bool,
    plastic_target: &impl Fn(NeuronId) -> bool,
    update: &impl Fn(&mut S, bool, bool, u32),
) -> u64 {
    let mut calls = 0;
    for (&dst, syn) in row_adj.iter().zip(row_syn.iter_mut()) {
        if dst == SENTINEL {
            break;
        }
        if !plastic_target(dst) {
            continue;
        }
        update(syn, pre, hist[dst as usize] & 1 == 1, 1);
        calls += 1;
    }
    calls
}

/// Brings a stale row up to date by replaying `age` steps for each plastic
/// synapse. `pre` marks whether the source's spike arrives on the newest
/// step (false when flushing without an arrival).
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn replay_row<S>(
    strategy: PlasticityStrategy,
    window_fn: WindowFn,
    row_adj: &[NeuronId],
    row_syn: &mut [S],
    hist: &[u64],
    age: u32,
    pre: bool,
    plastic_target: &impl Fn(NeuronId) -> bool,
    update: &impl Fn(&mut S, bool, bool, u32),
) {
    for (&dst, syn) in row_adj.iter().zip(row_syn.iter_mut()) {
        if dst == SENTINEL {
            break;
        }
        if !plastic_target(dst) {
            continue;
        }
        let window = window_fn(hist[dst as usize], age);
        match strategy {
            PlasticityStrategy::EventDriven => replay_event(syn, window, age, pre, update),
            _ => replay_lazy(syn, window, age, pre, update),
        }
    }
}

/// Default window extraction.
pub const DEFAULT_WINDOW: WindowFn = recent_mask;

/// Adapts a single-step-only update rule to the multi-step contract by
/// looping internally. Event-driven replay through this wrapper does the
/// same work as lazy replay.
pub fn single_step_loop<S>(
    step: impl Fn(&mut S, bool, bool) + Sync,
) -> impl Fn(&mut S, bool, bool, u32) + Sync {
    move |syn, pre, post, n_steps| {
        for _ in 1..n_steps {
            step(syn, false, false);
        }
        step(syn, pre, post);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{bit, push};
    use proptest::prelude::*;

    fn call(pre: bool, post: bool, n_steps: u32) -> UpdateCall {
        UpdateCall { pre, post, n_steps }
    }

    #[test]
    fn lazy_single_step_replay() {
        assert_eq!(lazy_schedule(0b1, 1, true), vec![call(true, true, 1)]);
        assert_eq!(lazy_schedule(0b0, 1, true), vec![call(true, false, 1)]);
    }

    #[test]
    fn lazy_window_in_chronological_order() {
        // Destination fired 4 and 1 steps ago.
        let window = (1 << 4) | (1 << 1);
        let got = lazy_schedule(window, 5, true);
        let expect = vec![
            call(false, true, 1),
            call(false, false, 1),
            call(false, false, 1),
            call(false, true, 1),
            call(true, false, 1),
        ];
        assert_eq!(got, expect);
    }

    #[test]
    fn event_empty_window_is_one_call() {
        assert_eq!(event_schedule(0, 7, true), vec![call(true, false, 7)]);
    }

    #[test]
    fn event_schedule_example() {
        let window = (1 << 4) | (1 << 1);
        assert_eq!(
            event_schedule(window, 5, true),
            vec![call(false, true, 1), call(false, true, 3), call(true, false, 1)]
        );
    }

    #[test]
    fn event_spike_at_newest_step_carries_pre() {
        assert_eq!(event_schedule(0b101, 3, true), vec![call(false, true, 1), call(true, true, 2)]);
        assert!(event_schedule(0, 0, true).is_empty());
        assert_eq!(event_schedule(0b1, 1, false), vec![call(false, true, 1)]);
    }

    /// Counting rule used to compare schedules: position-weighted sums.
    fn apply(calls: &[UpdateCall]) -> (u64, u64) {
        let (mut t, mut acc) = (0u64, 0u64);
        for c in calls {
            t += c.n_steps as u64;
            acc = acc
                .wrapping_add(c.pre as u64 * 1_000_003 * t)
                .wrapping_add(c.post as u64 * 7_919 * t)
                .wrapping_add(c.n_steps as u64);
        }
        (t, acc)
    }

    #[test]
    fn single_step_loop_unrolls() {
        let counted = std::sync::atomic::AtomicU32::new(0);
        let f = single_step_loop(|s: &mut Vec<(bool, bool)>, a, b| {
            counted.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            s.push((a, b));
        });
        let mut log = Vec::new();
        f(&mut log, true, false, 1);
        assert_eq!(log, vec![(true, false)]);
        log.clear();
        f(&mut log, false, true, 5);
        assert_eq!(log, vec![(false, false); 4].into_iter().chain([(false, true)]).collect::<Vec<_>>());
        assert_eq!(counted.load(std::sync::atomic::Ordering::Relaxed), 6);
    }

    #[test]
    fn naive_row_skips_padding_and_static_targets() {
        let adj = [1, 2, 3, SENTINEL];
        let mut syn = [0u32; 4];
        let hist = [0, 1, 0, 1];
        let calls = naive_row(&adj, &mut syn, &hist, true, &|d| d != 2, &|s, pre, post, n| {
            *s += (pre as u32) * 10 + post as u32 + 100 * n;
        });
        assert_eq!(calls, 2);
        assert_eq!(syn, [111, 0, 111, 0]);
    }

    proptest! {
        #[test]
        fn schedules_conserve_steps(hist in any::<u64>(), age in 0u32..=64, pre in any::<bool>()) {
            let window = recent_mask(hist, age);
            let lazy = lazy_schedule(window, age, pre);
            let event = event_schedule(window, age, pre);
            prop_assert_eq!(lazy.iter().map(|c| c.n_steps).sum::<u32>(), age);
            prop_assert_eq!(event.iter().map(|c| c.n_steps).sum::<u32>(), age);
            prop_assert!(event.len() as u32 <= window.count_ones() + 1);
            prop_assert_eq!(apply(&lazy), apply(&event));
            if age > 0 {
                prop_assert_eq!(event.iter().filter(|c| c.pre).count(), pre as usize);
            }
        }

        /// Replaying a window reproduces the per-step flags a naive sweep sees.
        #[test]
        fn lazy_matches_per_step_history(fires in proptest::collection::vec(any::<bool>(), 1..64)) {
            let mut h = 0u64;
            for &f in &fires {
                h = push(h, f);
            }
            let age = fires.len() as u32;
            let lazy = lazy_schedule(recent_mask(h, age), age, true);
            for (u, c) in lazy.iter().enumerate() {
                prop_assert_eq!(c.post, fires[u]);
                prop_assert_eq!(c.post, bit(h, age - 1 - u as u32));
            }
        }
    }
}
