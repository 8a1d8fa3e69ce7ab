//! Vogels-Abbott network: conductance-based LIF neurons, 4:1
//! excitatory/inhibitory, sparse random static connectivity, started from
//! random initial potentials and conductances.
//!
//! Each neuron also receives independent excitatory background events. The
//! recurrent weights are scaled with network size and only keep the mean
//! input fixed; without the background the network's activity depends on
//! finite-size fluctuations and dies out beyond the base size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::{GraphSpec, NeuronId, Population, Projection};
use crate::rng;

use super::constants::VogelsConstants;
use super::{weight_scaling, Model, ModelError};

const BACKGROUND_STREAM: u64 = 0x6267_6e64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VogelsNeuron {
    pub v: f32,
    /// Excitatory and inhibitory conductance, in units of the leak conductance.
    pub g_exc: f32,
    pub g_inh: f32,
    pub refractory: u16,
}

/// Conductance increments accumulated during delivery.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConductanceInput {
    pub exc: f32,
    pub inh: f32,
}

#[derive(Clone, Debug)]
pub struct VogelsModel {
    spec: GraphSpec,
    seed: u64,
    n_exc: usize,
    c: VogelsConstants,
    dt_over_tau: f32,
    decay_exc: f32,
    decay_inh: f32,
    w_exc: f32,
    w_inh: f32,
    /// Expected background events per step and their conductance jump.
    ext_mean: f64,
    w_ext: f32,
    refractory_steps: u16,
}

impl VogelsModel {
    pub fn new(neurons: usize, seed: u64, c: &VogelsConstants) -> Result<Self, ModelError> {
        let n_exc = (neurons as f64 * c.exc_fraction).round() as usize;
        let n_inh = neurons.saturating_sub(n_exc);
        if n_exc == 0 {
            return Err(ModelError::EmptyPopulation("excitatory"));
        }
        if n_inh == 0 {
            return Err(ModelError::EmptyPopulation("inhibitory"));
        }
        if c.delay_steps == 0 {
            return Err(ModelError::Delay);
        }
        let p = c.probability;
        let spec = GraphSpec {
            populations: vec![
                Population { name: "exc".into(), size: n_exc },
                Population { name: "inh".into(), size: n_inh },
            ],
            projections: (0..2)
                .flat_map(|from| (0..2).map(move |to| Projection { from, to, probability: p }))
                .collect(),
            allow_self_connections: false,
            seed,
        };
        let base_n = c.base_neurons as f64;
        let base_exc = (base_n * c.exc_fraction).round();
        let base_inh = base_n - base_exc;
        let w_exc = weight_scaling(c.w_exc, p * base_exc, p * n_exc as f64)?;
        let w_inh = weight_scaling(c.w_inh, p * base_inh, p * n_inh as f64)?;
        Ok(VogelsModel {
            spec,
            seed,
            n_exc,
            dt_over_tau: (c.dt_ms / c.tau_m_ms) as f32,
            decay_exc: (-c.dt_ms / c.tau_exc_ms).exp() as f32,
            decay_inh: (-c.dt_ms / c.tau_inh_ms).exp() as f32,
            w_exc: w_exc as f32,
            w_inh: w_inh as f32,
            ext_mean: c.ext_rate_hz * c.dt_ms * 1e-3,
            w_ext: c.w_ext as f32,
            refractory_steps: (c.refractory_ms / c.dt_ms).round() as u16,
            c: c.clone(),
        })
    }

    /// Chooses the size so the network has about `synapses` synapses.
    pub fn with_synapses(synapses: f64, seed: u64, c: &VogelsConstants) -> Result<Self, ModelError> {
        let neurons = (synapses / c.probability).sqrt().round() as usize;
        Self::new(neurons, seed, c)
    }

    /// Same network with all synaptic weights multiplied by `factor`.
    pub fn with_weight_factor(mut self, factor: f32) -> Self {
        self.w_exc *= factor;
        self.w_inh *= factor;
        self.w_ext *= factor;
        self
    }

    /// Same network started with zero conductances.
    pub fn without_initial_conductance(mut self) -> Self {
        self.c.init_g_exc_mean = 0.0;
        self.c.init_g_exc_sd = 0.0;
        self.c.init_g_inh_mean = 0.0;
        self.c.init_g_inh_sd = 0.0;
        self
    }

    pub fn num_excitatory(&self) -> usize {
        self.n_exc
    }

    pub fn weights(&self) -> (f32, f32) {
        (self.w_exc, self.w_inh)
    }
}

impl Model for VogelsModel {
    type Neuron = VogelsNeuron;
    /// Weights depend only on the source population.
    type Synapse = ();
    type Input = ConductanceInput;

    fn name(&self) -> &'static str {
        "vogels"
    }

    fn graph_spec(&self) -> &GraphSpec {
        &self.spec
    }

    fn dt_ms(&self) -> f64 {
        self.c.dt_ms
    }

    fn delay_steps(&self) -> u32 {
        self.c.delay_steps
    }

    fn init_neuron(&self, id: NeuronId) -> VogelsNeuron {
        let mut r = ChaCha8Rng::seed_from_u64(rng::hash3(self.seed, id as u64, 0));
        let c = &self.c;
        let z1: f64 = StandardNormal.sample(&mut r);
        let z2: f64 = StandardNormal.sample(&mut r);
        let z3: f64 = StandardNormal.sample(&mut r);
        VogelsNeuron {
            v: (c.init_v_mean_mv + c.init_v_sd_mv * z3) as f32,
            g_exc: (c.init_g_exc_mean + c.init_g_exc_sd * z1).max(0.0) as f32,
            g_inh: (c.init_g_inh_mean + c.init_g_inh_sd * z2).max(0.0) as f32,
            refractory: 0,
        }
    }

    fn init_synapse(&self, _src: NeuronId, _dst: NeuronId) {}

    #[inline]
    fn update_neuron(&self, id: NeuronId, n: &mut VogelsNeuron, input: ConductanceInput, step: u64) -> bool {
        n.g_exc += input.exc;
        if self.ext_mean > 0.0 {
            let u = rng::uniform(self.seed ^ BACKGROUND_STREAM, id as u64, step);
            n.g_exc += rng::poisson_inverse(u, self.ext_mean) as f32 * self.w_ext;
        }
        n.g_inh += input.inh;
        let fired = if n.refractory > 0 {
            n.refractory -= 1;
            n.v = self.c.v_reset_mv as f32;
            false
        } else {
            let v = n.v;
            let dv = (self.c.v_rest_mv as f32 - v)
                + n.g_exc * (self.c.e_exc_mv as f32 - v)
                + n.g_inh * (self.c.e_inh_mv as f32 - v);
            n.v = v + self.dt_over_tau * dv;
            if n.v >= self.c.v_thresh_mv as f32 {
                n.v = self.c.v_reset_mv as f32;
                n.refractory = self.refractory_steps;
                true
            } else {
                false
            }
        };
        n.g_exc *= self.decay_exc;
        n.g_inh *= self.decay_inh;
        fired
    }

    #[inline]
    fn deliver(&self, _syn: &(), src: NeuronId, input: &mut ConductanceInput) {
        if (src as usize) < self.n_exc {
            input.exc += self.w_exc;
        } else {
            input.inh += self.w_inh;
        }
    }

    fn refractory_steps(&self) -> u32 {
        self.refractory_steps as u32
    }

    fn has_plasticity(&self) -> bool {
        false
    }
}
