//! Clock-count speed model of the synchronous machine.
//!
//! Every unit consumes one datum per clock. Per network timestep an HN's soma
//! unit needs `substeps × neurons_per_hn` clocks and each lane needs one clock
//! per row, and both sides run concurrently, so the step takes the larger of
//! the two. Wall time per model second is that clock count divided by
//! `clock_hz × dt_network`.

use crate::compile::{CompileParams, CompiledNetwork};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerfEstimate {
    /// Soma-side clocks per network timestep.
    pub neuron_clocks: u64,
    /// Synapse-side clocks (rows per lane) per network timestep.
    pub synapse_clocks: u64,
    pub seconds_per_model_second: f64,
}

impl PerfEstimate {
    fn from_clocks(neuron_clocks: u64, synapse_clocks: u64, clock_hz: f64, dt_network_ms: f64) -> Self {
        let clocks = neuron_clocks.max(synapse_clocks) as f64;
        Self {
            neuron_clocks,
            synapse_clocks,
            seconds_per_model_second: clocks / (clock_hz * dt_network_ms * 1e-3),
        }
    }

    pub fn clocks_per_step(&self) -> u64 {
        self.neuron_clocks.max(self.synapse_clocks)
    }

    pub fn is_balanced(&self) -> bool {
        self.neuron_clocks == self.synapse_clocks
    }
}

/// Pre-compile estimate assuming synapses spread evenly over all lanes.
pub fn perf_estimate(n_neurons: u64, n_synapses: u64, params: &CompileParams, dt_network_ms: f64) -> PerfEstimate {
    let n_hn = params.n_hn as u64;
    let neuron_clocks = params.substeps as u64 * n_neurons.div_ceil(n_hn);
    let synapse_clocks = n_synapses.div_ceil(n_hn * params.p as u64);
    PerfEstimate::from_clocks(neuron_clocks, synapse_clocks, params.clock_hz, dt_network_ms)
}

/// Estimate from the actual per-HN neuron and row counts, padding included.
pub fn perf_estimate_compiled(net: &CompiledNetwork, dt_network_ms: f64) -> PerfEstimate {
    let max_neurons = net.hns.iter().map(|h| (h.neurons.end - h.neurons.start) as u64).max().unwrap_or(0);
    let neuron_clocks = net.params.substeps as u64 * max_neurons;
    PerfEstimate::from_clocks(neuron_clocks, net.max_rows() as u64, net.params.clock_hz, dt_network_ms)
}
