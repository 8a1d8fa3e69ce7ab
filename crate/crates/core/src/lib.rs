//! Clock-driven spiking neural network engine.
//!
//! The network is stored as a padded adjacency list with per-row slice
//! pivots ([`graph`]). Synaptic plasticity can run naively, lazily, or
//! event-driven over per-neuron bitfield firing histories ([`history`],
//! [`plasticity`]), and spikes can be delivered row-wise or slice by slice
//! into bounded local buffers ([`delivery`]). [`engine`] ties the phases
//! together; [`models`] ships the benchmark networks; [`verify`] holds the
//! cross-strategy oracle suites.

pub mod delivery;
pub mod engine;
pub mod graph;
pub mod history;
pub mod models;
pub mod plasticity;
pub mod rng;
pub mod verify;

pub use delivery::DeliveryStrategy;
pub use engine::{run, setup, Raster, RasterSink, RasterWriter, RunMetrics, SimClock, Simulation, StrategyConfig};
pub use graph::{GraphSpec, NeuronId, PaddedAdjacencyList, PivotTable, SynapseTable, SENTINEL};
pub use history::HistoryBits;
pub use plasticity::PlasticityStrategy;
