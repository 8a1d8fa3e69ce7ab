//! Exact-arithmetic verification model.
//!
//! Synapse state is a pair of wrapping integers: the number of steps the
//! synapse has been advanced, and a sum that adds `1 + pre·P·t + post·Q·t`
//! for each step, where `t` is that step's 1-based index. The multi-step
//! update is exactly the composition of single steps, and the state records
//! at which step each flag was seen, so any misplaced, missing or duplicated
//! replay step changes it.
//!
//! Neurons fire from a counter-based random stream and are forced to fire
//! whenever they have been silent for `max_gap` steps, which bounds replay
//! ages. Delivery adds integers, so the accumulation order never matters.

use crate::graph::{GraphSpec, NeuronId};
use crate::rng;

use super::{Model, ModelError};

pub const PRE_WEIGHT: u64 = 1_000_003;
pub const POST_WEIGHT: u64 = 7_919;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CountingSynapse {
    pub steps: u64,
    pub acc: u64,
}

impl CountingSynapse {
    #[inline]
    pub fn advance(&mut self, pre: bool, post: bool, n_steps: u32) {
        self.steps = self.steps.wrapping_add(n_steps as u64);
        let t = self.steps;
        self.acc = self
            .acc
            .wrapping_add(n_steps as u64)
            .wrapping_add(pre as u64 * PRE_WEIGHT.wrapping_mul(t))
            .wrapping_add(post as u64 * POST_WEIGHT.wrapping_mul(t));
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CountingNeuron {
    pub silent_for: u32,
    /// Running hash of every input this neuron consumed.
    pub checksum: u64,
}

#[derive(Clone, Debug)]
pub struct CountingModel {
    spec: GraphSpec,
    seed: u64,
    delay: u32,
    fire_p: f64,
    max_gap: u32,
    decomposable: bool,
}

impl CountingModel {
    /// `n` neurons, connection probability `p`, per-step firing probability
    /// `fire_p`, forced firing after `max_gap` silent steps.
    pub fn new(n: usize, p: f64, delay: u32, fire_p: f64, max_gap: u32, seed: u64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyPopulation("all"));
        }
        if delay == 0 {
            return Err(ModelError::Delay);
        }
        Ok(CountingModel {
            spec: GraphSpec::uniform(n, p, seed),
            seed,
            delay,
            fire_p,
            max_gap: max_gap.max(1),
            decomposable: true,
        })
    }

    /// Largest forced-firing gap that keeps every replay within a window of
    /// `history_bits` steps, including the first arrival and the final flush.
    pub fn max_gap_for(history_bits: u32, delay: u32) -> u32 {
        history_bits.saturating_sub(delay).max(1)
    }

    /// Marks the model as lacking a closed-form skip, so the engine loops
    /// single steps on its behalf.
    pub fn single_step_only(mut self) -> Self {
        self.decomposable = false;
        self
    }
}

impl Model for CountingModel {
    type Neuron = CountingNeuron;
    type Synapse = CountingSynapse;
    type Input = i64;

    fn name(&self) -> &'static str {
        "counting"
    }

    fn graph_spec(&self) -> &GraphSpec {
        &self.spec
    }

    fn dt_ms(&self) -> f64 {
        super::constants::DT_MS
    }

    fn delay_steps(&self) -> u32 {
        self.delay
    }

    fn init_neuron(&self, _id: NeuronId) -> CountingNeuron {
        CountingNeuron::default()
    }

    fn init_synapse(&self, _src: NeuronId, _dst: NeuronId) -> CountingSynapse {
        CountingSynapse::default()
    }

    #[inline]
    fn update_neuron(&self, id: NeuronId, n: &mut CountingNeuron, input: i64, step: u64) -> bool {
        n.checksum = n.checksum.wrapping_mul(0x100_0000_01B3).wrapping_add(input as u64);
        // Inputs nudge the firing probability so delivery errors show up in
        // the raster as well as in the checksum.
        let boost = if input.rem_euclid(3) == 0 { 1.5 } else { 1.0 };
        let fired = rng::uniform(self.seed, id as u64, step) < self.fire_p * boost
            || n.silent_for + 1 >= self.max_gap;
        n.silent_for = if fired { 0 } else { n.silent_for + 1 };
        fired
    }

    #[inline]
    fn deliver(&self, syn: &CountingSynapse, src: NeuronId, input: &mut i64) {
        *input = input
            .wrapping_add(1 + (src % 13) as i64)
            .wrapping_add((syn.acc & 0xFF) as i64);
    }

    fn plastic_source(&self, _src: NeuronId) -> bool {
        true
    }

    #[inline]
    fn update_synapse(&self, syn: &mut CountingSynapse, pre: bool, post: bool, n_steps: u32) {
        if self.decomposable {
            syn.advance(pre, post, n_steps);
        } else {
            // Only single steps are meaningful here; the engine never asks
            // for more through the single-step wrapper.
            debug_assert_eq!(n_steps, 1);
            syn.advance(pre, post, 1);
        }
    }

    fn step_decomposable(&self) -> bool {
        self.decomposable
    }

    fn has_plasticity(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_step_decomposable() {
        for (pre, post) in [(false, false), (true, false), (false, true), (true, true)] {
            for n in 1..=64u32 {
                for start in [CountingSynapse::default(), CountingSynapse { steps: 17, acc: 12345 }] {
                    let mut a = start;
                    a.advance(pre, post, n);
                    let mut b = start;
                    for _ in 1..n {
                        b.advance(false, false, 1);
                    }
                    b.advance(pre, post, 1);
                    assert_eq!(a, b, "pre={pre} post={post} n={n}");
                }
            }
        }
    }

    #[test]
    fn flag_position_matters() {
        let mut a = CountingSynapse::default();
        a.advance(false, true, 1);
        a.advance(false, false, 1);
        let mut b = CountingSynapse::default();
        b.advance(false, false, 1);
        b.advance(false, true, 1);
        assert_ne!(a, b);
    }

    #[test]
    fn forced_gap_bounds_silence() {
        let m = CountingModel::new(4, 0.5, 3, 0.0, 10, 1).unwrap();
        let mut n = m.init_neuron(0);
        let fired: Vec<u64> = (0..30).filter(|&s| m.update_neuron(0, &mut n, 1, s)).collect();
        assert_eq!(fired, vec![9, 19, 29]);
        assert_eq!(CountingModel::max_gap_for(64, 3), 61);
    }
}
