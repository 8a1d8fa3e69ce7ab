//! Brunel's sparsely connected excitatory/inhibitory network of
//! current-based LIF neurons driven by an external Poisson population, and
//! its plastic variant ("Brunel+").
//!
//! Layout: excitatory `[0, E)`, inhibitory `[E, E + I)`, external drive
//! `[E + I, E + I + X)` with `X = E + I`. Every source population projects
//! onto both recurrent populations with the same probability. In Brunel+
//! the drive-to-excitatory synapses are plastic, which is `X * E / (2 (E + I)^2)`
//! = 40% of all synapses at a 4:1 ratio.

use crate::graph::{GraphSpec, NeuronId, Population, Projection};
use crate::rng;

use super::constants::{BrunelConstants, StdpConstants};
use super::stdp::{StdpParams, StdpSynapse};
use super::{weight_scaling, Model, ModelError};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BrunelNeuron {
    pub v: f32,
    pub refractory: u16,
}

#[derive(Clone, Debug)]
pub struct BrunelModel {
    spec: GraphSpec,
    plastic: bool,
    seed: u64,
    n_exc: usize,
    n_rec: usize,
    decay: f32,
    v_thresh: f32,
    v_reset: f32,
    refractory_steps: u16,
    delay_steps: u32,
    dt_ms: f64,
    /// Per-step firing probability of a drive neuron.
    drive_p: f64,
    j_exc: f32,
    j_inh: f32,
    j_ext: f32,
    stdp: StdpParams,
    /// Drive neurons fire at least this often, when set.
    max_drive_gap: Option<u32>,
}

impl BrunelModel {
    /// Network with `recurrent` excitatory+inhibitory neurons.
    pub fn new(
        recurrent: usize,
        plastic: bool,
        seed: u64,
        c: &BrunelConstants,
        stdp: &StdpConstants,
    ) -> Result<Self, ModelError> {
        let n_exc = (recurrent as f64 * c.exc_fraction).round() as usize;
        let n_inh = recurrent.saturating_sub(n_exc);
        if n_exc == 0 {
            return Err(ModelError::EmptyPopulation("excitatory"));
        }
        if n_inh == 0 {
            return Err(ModelError::EmptyPopulation("inhibitory"));
        }
        let n_rec = n_exc + n_inh;
        let p = c.probability;
        let spec = GraphSpec {
            populations: vec![
                Population { name: "exc".into(), size: n_exc },
                Population { name: "inh".into(), size: n_inh },
                Population { name: "ext".into(), size: n_rec },
            ],
            projections: (0..3)
                .flat_map(|from| (0..2).map(move |to| Projection { from, to, probability: p }))
                .collect(),
            allow_self_connections: false,
            seed,
        };

        // Each source population contributes p * size inputs per neuron.
        let base_k = c.probability * c.base_neurons as f64;
        let k = p * n_rec as f64;
        let j = weight_scaling(c.j_mv, base_k, k)?;
        let tau_s = c.tau_m_ms * 1e-3;
        // Rate at which the drive alone brings the mean membrane potential
        // to threshold; invariant under the scaling above.
        let nu_thresh_hz = c.v_thresh_mv / (j * k * tau_s);
        let nu_ext_hz = c.nu_ext_over_thresh * nu_thresh_hz;
        let delay_steps = (c.delay_ms / c.dt_ms).round() as u32;
        if delay_steps == 0 {
            return Err(ModelError::Delay);
        }
        Ok(BrunelModel {
            spec,
            plastic,
            seed,
            n_exc,
            n_rec,
            decay: (-c.dt_ms / c.tau_m_ms).exp() as f32,
            v_thresh: c.v_thresh_mv as f32,
            v_reset: c.v_reset_mv as f32,
            refractory_steps: (c.refractory_ms / c.dt_ms).round() as u16,
            delay_steps,
            dt_ms: c.dt_ms,
            drive_p: nu_ext_hz * c.dt_ms * 1e-3,
            j_exc: j as f32,
            j_inh: (-c.g * j) as f32,
            j_ext: j as f32,
            stdp: StdpParams::new(stdp, c.dt_ms, j),
            max_drive_gap: None,
        })
    }

    /// Chooses the recurrent size so the network has about `synapses` synapses.
    pub fn with_synapses(
        synapses: f64,
        plastic: bool,
        seed: u64,
        c: &BrunelConstants,
        stdp: &StdpConstants,
    ) -> Result<Self, ModelError> {
        // Sources: 2 * M neurons, targets: M neurons.
        let recurrent = (synapses / (2.0 * c.probability)).sqrt().round() as usize;
        Self::new(recurrent, plastic, seed, c, stdp)
    }

    /// Forces every drive neuron to fire at least once per `gap` steps.
    /// Used by verification runs that need bounded replay windows.
    pub fn with_max_drive_gap(mut self, gap: u32) -> Self {
        self.max_drive_gap = Some(gap.max(1));
        self
    }

    /// Overrides the per-step drive firing probability.
    pub fn with_drive_probability(mut self, p: f64) -> Self {
        self.drive_p = p;
        self
    }

    pub fn num_excitatory(&self) -> usize {
        self.n_exc
    }

    pub fn num_recurrent(&self) -> usize {
        self.n_rec
    }

    pub fn drive_rate_hz(&self) -> f64 {
        self.drive_p / (self.dt_ms * 1e-3)
    }

    pub fn stdp(&self) -> &StdpParams {
        &self.stdp
    }

    #[inline]
    fn is_drive(&self, id: NeuronId) -> bool {
        id as usize >= self.n_rec
    }
}

impl Model for BrunelModel {
    type Neuron = BrunelNeuron;
    type Synapse = StdpSynapse;
    type Input = f32;

    fn name(&self) -> &'static str {
        if self.plastic {
            "brunel+"
        } else {
            "brunel"
        }
    }

    fn graph_spec(&self) -> &GraphSpec {
        &self.spec
    }

    fn dt_ms(&self) -> f64 {
        self.dt_ms
    }

    fn delay_steps(&self) -> u32 {
        self.delay_steps
    }

    fn init_neuron(&self, id: NeuronId) -> BrunelNeuron {
        // Spread initial potentials below threshold to avoid a synchronous start.
        let u = rng::uniform(self.seed, id as u64, u64::MAX) as f32;
        BrunelNeuron { v: self.v_reset + u * (self.v_thresh - self.v_reset), refractory: 0 }
    }

    fn init_synapse(&self, src: NeuronId, _dst: NeuronId) -> StdpSynapse {
        let w = if self.is_drive(src) {
            self.j_ext
        } else if (src as usize) < self.n_exc {
            self.j_exc
        } else {
            self.j_inh
        };
        StdpSynapse { w, x_pre: 0.0, x_post: 0.0 }
    }

    #[inline]
    fn update_neuron(&self, id: NeuronId, n: &mut BrunelNeuron, input: f32, step: u64) -> bool {
        if self.is_drive(id) {
            let fired = rng::uniform(self.seed, id as u64, step) < self.drive_p;
            if let Some(gap) = self.max_drive_gap {
                // `refractory` doubles as the silence counter for drive neurons.
                if fired || n.refractory as u32 + 1 >= gap {
                    n.refractory = 0;
                    return true;
                }
                n.refractory += 1;
            }
            return fired;
        }
        if n.refractory > 0 {
            n.refractory -= 1;
            n.v = self.v_reset;
            return false;
        }
        n.v = n.v * self.decay + input;
        if n.v >= self.v_thresh {
            n.v = self.v_reset;
            n.refractory = self.refractory_steps;
            return true;
        }
        false
    }

    #[inline]
    fn deliver(&self, syn: &StdpSynapse, _src: NeuronId, input: &mut f32) {
        *input += syn.w;
    }

    fn plastic_source(&self, src: NeuronId) -> bool {
        self.plastic && self.is_drive(src)
    }

    #[inline]
    fn plastic_target(&self, dst: NeuronId) -> bool {
        (dst as usize) < self.n_exc
    }

    #[inline]
    fn update_synapse(&self, syn: &mut StdpSynapse, pre: bool, post: bool, n_steps: u32) {
        self.stdp.update(syn, pre, post, n_steps);
    }

    fn refractory_steps(&self) -> u32 {
        self.refractory_steps as u32
    }

    fn has_plasticity(&self) -> bool {
        self.plastic
    }

    fn is_external(&self, id: NeuronId) -> bool {
        self.is_drive(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_topology;

    fn model(m: usize, plastic: bool) -> BrunelModel {
        BrunelModel::new(m, plastic, 1, &BrunelConstants::default(), &StdpConstants::default())
            .unwrap()
    }

    #[test]
    fn composition() {
        let b = model(1000, true);
        assert_eq!(b.num_excitatory(), 800);
        assert_eq!(b.graph_spec().num_neurons(), 2000);
        assert_eq!(b.delay_steps(), 15);
        assert_eq!(b.refractory_steps(), 20);
        assert!(b.plastic_source(1500) && !b.plastic_source(10));
        assert!(b.plastic_target(799) && !b.plastic_target(800));
        assert!(!model(1000, false).has_plasticity());
    }

    #[test]
    fn drive_rate_is_size_invariant() {
        let a = model(1000, false).drive_rate_hz();
        let b = model(4000, false).drive_rate_hz();
        assert!((a - b).abs() < 1e-9);
        // 2 * theta / (J K tau) at the base size: 2 * 20 / (0.2 * 500 * 0.02).
        let base = model(5000, false).drive_rate_hz();
        assert!((base - 20.0).abs() < 1e-9, "{base}");
    }

    #[test]
    fn plastic_fraction_is_forty_percent() {
        let b = model(1000, true);
        let adj = build_topology(b.graph_spec()).unwrap();
        let frac = b.plastic_synapse_count(&adj) as f64 / adj.num_synapses() as f64;
        assert!((frac - 0.4).abs() < 0.01, "{frac}");
    }

    #[test]
    fn synapse_target_sets_size() {
        let b = BrunelModel::with_synapses(1e6, false, 1, &Default::default(), &Default::default())
            .unwrap();
        let expected = b.graph_spec().expected_synapses();
        assert!((expected / 1e6 - 1.0).abs() < 0.01, "{expected}");
    }

    #[test]
    fn rejects_degenerate_sizes() {
        let c = BrunelConstants::default();
        let s = StdpConstants::default();
        assert_eq!(BrunelModel::new(1, false, 1, &c, &s).unwrap_err(),
            ModelError::EmptyPopulation("inhibitory"));
        assert_eq!(BrunelModel::new(0, false, 1, &c, &s).unwrap_err(),
            ModelError::EmptyPopulation("excitatory"));
    }

    #[test]
    fn refractory_holds_reset() {
        let b = model(100, false);
        let mut n = BrunelNeuron { v: 19.9, refractory: 0 };
        assert!(b.update_neuron(0, &mut n, 5.0, 0));
        for s in 1..=20 {
            assert!(!b.update_neuron(0, &mut n, 100.0, s));
            assert_eq!(n.v, 0.0);
        }
        assert!(b.update_neuron(0, &mut n, 100.0, 21));
    }

    #[test]
    fn forced_drive_gap() {
        let b = model(100, false).with_drive_probability(0.0).with_max_drive_gap(5);
        let id = 150;
        let mut n = b.init_neuron(id);
        let fired: Vec<u64> = (0..20).filter(|&s| b.update_neuron(id, &mut n, 0.0, s)).collect();
        assert_eq!(fired, vec![4, 9, 14, 19]);
    }
}
