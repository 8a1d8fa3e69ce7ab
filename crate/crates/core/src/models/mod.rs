//! Model-authoring contract and the bundled network models.

pub mod brunel;
pub mod constants;
pub mod counting;
pub mod stdp;
pub mod vogels;

use thiserror::Error;

use crate::graph::{GraphSpec, NeuronId, PaddedAdjacencyList};

pub use brunel::BrunelModel;
pub use constants::ModelConstants;
pub use counting::{CountingModel, CountingSynapse};
pub use stdp::{StdpParams, StdpSynapse};
pub use vogels::VogelsModel;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("population `{0}` rounds to zero neurons at this size")]
    EmptyPopulation(&'static str),
    #[error("in-degree must be positive")]
    ZeroIndegree,
    #[error("synaptic delay must be at least one step")]
    Delay,
    #[error("unknown model `{0}` (vogels|brunel|brunel+|counting)")]
    Unknown(String),
}

/// A network model: neuron and synapse state plus the callbacks the engine
/// drives. Callbacks run concurrently on disjoint state and must not rely
/// on call order across neurons or rows.
pub trait Model: Send + Sync {
    type Neuron: Clone + Send + Sync;
    type Synapse: Clone + Default + Send + Sync;
    /// Per-neuron input accumulator filled during delivery and consumed by
    /// the next neuron update.
    type Input: Copy + Default + Send + Sync;

    fn name(&self) -> &'static str;

    fn graph_spec(&self) -> &GraphSpec;

    fn dt_ms(&self) -> f64;

    /// Network-wide synaptic delay in steps.
    fn delay_steps(&self) -> u32;

    fn init_neuron(&self, id: NeuronId) -> Self::Neuron;

    fn init_synapse(&self, src: NeuronId, dst: NeuronId) -> Self::Synapse;

    /// Integrates one step and reports whether the neuron fired. `step` keys
    /// the model's counter-based random stream.
    fn update_neuron(
        &self,
        id: NeuronId,
        neuron: &mut Self::Neuron,
        input: Self::Input,
        step: u64,
    ) -> bool;

    /// Adds one synapse's contribution to the destination's accumulator.
    fn deliver(&self, syn: &Self::Synapse, src: NeuronId, input: &mut Self::Input);

    /// Whether any synapse leaving `src` is plastic.
    fn plastic_source(&self, _src: NeuronId) -> bool {
        false
    }

    /// Whether a synapse from a plastic source onto `dst` is plastic.
    fn plastic_target(&self, _dst: NeuronId) -> bool {
        true
    }

    /// Advances a synapse `n_steps - 1` silent steps, then one step with
    /// the given spike flags.
    fn update_synapse(&self, _syn: &mut Self::Synapse, _pre: bool, _post: bool, _n_steps: u32) {}

    /// True if `update_synapse` implements the multi-step contract in closed
    /// form. Otherwise the engine loops single steps on the model's behalf.
    fn step_decomposable(&self) -> bool {
        true
    }

    /// Minimum spacing between two spikes of one neuron, if any.
    fn refractory_steps(&self) -> u32 {
        0
    }

    /// Input-only neurons (e.g. Poisson drive) that have no membrane and
    /// hence no refractory period.
    fn is_external(&self, _id: NeuronId) -> bool {
        false
    }

    fn has_plasticity(&self) -> bool {
        let n = self.graph_spec().num_neurons() as NeuronId;
        (0..n).any(|i| self.plastic_source(i))
    }

    fn plastic_synapse_count(&self, adj: &PaddedAdjacencyList) -> usize {
        (0..adj.num_neurons() as NeuronId)
            .filter(|&i| self.plastic_source(i))
            .map(|i| adj.neighbors(i).iter().filter(|&&d| self.plastic_target(d)).count())
            .sum()
    }
}

/// Rescales a weight tuned for `base_indegree` inputs to a neuron that has
/// `actual_indegree`, keeping the expected total input constant.
pub fn weight_scaling(
    base_weight: f64,
    base_indegree: f64,
    actual_indegree: f64,
) -> Result<f64, ModelError> {
    if !(base_indegree > 0.0 && actual_indegree > 0.0) {
        return Err(ModelError::ZeroIndegree);
    }
    Ok(base_weight * (base_indegree / actual_indegree))
}

/// Model names accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    Vogels,
    Brunel,
    BrunelPlus,
    Counting,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vogels => "vogels",
            ModelKind::Brunel => "brunel",
            ModelKind::BrunelPlus => "brunel+",
            ModelKind::Counting => "counting",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s.to_ascii_lowercase().as_str() {
            "vogels" => Ok(ModelKind::Vogels),
            "brunel" => Ok(ModelKind::Brunel),
            "brunel+" | "brunelplus" | "brunel-plus" => Ok(ModelKind::BrunelPlus),
            "counting" => Ok(ModelKind::Counting),
            _ => Err(ModelError::Unknown(s.to_string())),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_law() {
        assert_eq!(weight_scaling(0.5, 100.0, 100.0).unwrap(), 0.5);
        assert_eq!(weight_scaling(0.5, 100.0, 200.0).unwrap(), 0.25);
        assert_eq!(weight_scaling(0.5, 0.0, 200.0), Err(ModelError::ZeroIndegree));
        assert_eq!(weight_scaling(0.5, 10.0, 0.0), Err(ModelError::ZeroIndegree));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [ModelKind::Vogels, ModelKind::Brunel, ModelKind::BrunelPlus, ModelKind::Counting] {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("izhikevich".parse::<ModelKind>().is_err());
    }
}
