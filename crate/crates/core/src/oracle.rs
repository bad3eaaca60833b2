//! Dense single-threaded reference simulator.
//!
//! Works straight from the [`NetworkDescription`] with no partitioning, no
//! lanes and no ring buffers: it keeps the whole raw spike history and looks
//! up `raw[t - 1 - acds - acdn(pre)][pre]` directly. In exact mode it
//! re-derives the canonical reduction order (rows of `p` currents in
//! declaration order, zero padded, pairwise tree per row, rows summed in
//! order) and so must agree with the engine bit for bit. Intended for
//! networks up to roughly 10⁴ neurons.

use crate::compile::CompileParams;
use crate::error::{Error, Result};
use crate::model::{
    detect_spike, hh_step, post_trace_step, stdp_step, stp_step, synaptic_current, NeuronAttrs, SomaState,
    SynapseState, NETWORK_DT,
};
use crate::net::{validate, NetworkDescription, SynapseAttrs};
use crate::record::{Cadence, FinalState, ProbeSpec, RunOutput, TraceRecord};
use crate::stimulus::Stimulus;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchMode {
    /// Canonical reduction order; bit-identical to the engine.
    #[default]
    Exact,
    /// Each neuron's currents summed sequentially in reverse declaration
    /// order. Agrees with exact mode only up to rounding.
    Tolerant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleConfig {
    pub match_mode: MatchMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRun {
    pub output: RunOutput,
    pub final_state: FinalState,
}

/// Pairwise sum of `v[lo..hi]`, halves split at the midpoint.
fn pairwise(v: &[f32], lo: usize, hi: usize) -> f32 {
    if hi - lo == 1 {
        return v[lo];
    }
    let mid = lo + (hi - lo) / 2;
    pairwise(v, lo, mid) + pairwise(v, mid, hi)
}

fn reduce(currents: &[f32], p: usize, mode: MatchMode) -> f32 {
    match mode {
        MatchMode::Exact => {
            let mut total = 0.0f32;
            let mut row = vec![0.0f32; p];
            for chunk in currents.chunks(p) {
                row.fill(0.0);
                row[..chunk.len()].copy_from_slice(chunk);
                total += pairwise(&row, 0, p);
            }
            total
        }
        MatchMode::Tolerant => currents.iter().rev().fold(0.0f32, |acc, &c| acc + c),
    }
}

/// Simulates `steps` network timesteps from time 0.
pub fn oracle_run(
    desc: &NetworkDescription,
    params: &CompileParams,
    steps: u64,
    stimulus: &Stimulus,
    probes: &ProbeSpec,
    config: OracleConfig,
) -> Result<OracleRun> {
    params.check()?;
    let violations = validate(desc);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let n = desc.n_neurons as usize;
    probes.check(desc.n_neurons, desc.synapses.len() as u32)?;
    stimulus.check_targets(desc.n_neurons)?;
    let p = params.p as usize;
    let dt = NETWORK_DT / params.substeps as f32;

    let mut neuron_attrs: Vec<NeuronAttrs> = vec![NeuronAttrs::default(); n];
    let mut acdn = vec![0u64; n];
    let mut soma = vec![SomaState::default(); n];
    for decl in &desc.neurons {
        let i = decl.id as usize;
        neuron_attrs[i] = desc.resolve_neuron_attrs(decl.attr_set)?.clone();
        acdn[i] = decl.acdn_delay as u64;
        soma[i] = SomaState::at_rest(decl.v_init);
    }
    let mut syn_attrs: Vec<SynapseAttrs> = Vec::with_capacity(desc.synapses.len());
    let mut syn: Vec<SynapseState> = Vec::with_capacity(desc.synapses.len());
    for s in &desc.synapses {
        syn_attrs.push(*desc.resolve_attrs(s.attr_set)?);
        syn.push(SynapseState::initial(s.w_init));
    }
    let mut inbound: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, s) in desc.synapses.iter().enumerate() {
        inbound[s.post as usize].push(k);
    }

    let mut y = vec![0.0f32; n];
    let mut netsum = vec![0.0f32; n];
    let mut raw: Vec<Vec<bool>> = Vec::with_capacity(steps as usize);
    let mut current = vec![0.0f32; desc.synapses.len()];
    let mut stim = vec![0.0f32; n];
    let mut out = RunOutput::default();
    let mut substep_log: Vec<(u32, u32, SomaState)> = Vec::new();

    for t in 0..steps {
        let prev_raw: Vec<bool> = match t {
            0 => vec![false; n],
            _ => raw[t as usize - 1].clone(),
        };
        let v_prev: Vec<f32> = soma.iter().map(|s| s.v).collect();

        for (k, s) in desc.synapses.iter().enumerate() {
            let lag = 1 + s.acds_delay as u64 + acdn[s.pre as usize];
            let pre = t >= lag && raw[(t - lag) as usize][s.pre as usize];
            let post = s.post as usize;
            let a = &syn_attrs[k];
            let st = &mut syn[k];
            st.stp = stp_step(st.stp, &a.stp, pre, NETWORK_DT);
            let o = stdp_step(st.pre_trace, y[post], st.weight, &a.stdp, &neuron_attrs[post], pre, prev_raw[post], NETWORK_DT);
            st.pre_trace = o.pre_trace;
            st.weight = o.weight;
            current[k] = synaptic_current(st.stp.s, st.weight, &a.membrane, v_prev[post]);
        }

        let mut next_netsum = vec![0.0f32; n];
        let mut gathered = Vec::new();
        for i in 0..n {
            gathered.clear();
            gathered.extend(inbound[i].iter().map(|&k| current[k]));
            next_netsum[i] = reduce(&gathered, p, config.match_mode);
            y[i] = post_trace_step(y[i], &neuron_attrs[i], prev_raw[i], NETWORK_DT);
        }

        stimulus.fill(t, &mut stim);
        let mut spikes = vec![false; n];
        substep_log.clear();
        for i in 0..n {
            let i_ext = (netsum[i] + neuron_attrs[i].i_bias) + stim[i];
            let logged = probes.cadence == Cadence::Substep && probes.neurons.contains(&(i as u32));
            for sub in 0..params.substeps {
                let next = hh_step(&soma[i], &neuron_attrs[i], i_ext, dt)
                    .map_err(|e| Error::Instability { neuron: i as u32, step: t, v: e.0.v })?;
                if detect_spike(soma[i].v, next.v) {
                    spikes[i] = true;
                }
                soma[i] = next;
                if logged {
                    substep_log.push((i as u32, sub, next));
                }
            }
            if spikes[i] {
                out.raster.events.push((t, i as u32));
            }
        }
        netsum = next_netsum;
        raw.push(spikes);

        for &id in &probes.neurons {
            let i = id as usize;
            match probes.cadence {
                Cadence::Substep => {
                    for &(who, sub, s) in &substep_log {
                        if who == id {
                            out.traces.push(TraceRecord::Substep { t, sub, neuron: id, soma: s });
                        }
                    }
                }
                Cadence::Step => {
                    out.traces.push(TraceRecord::Neuron { t, neuron: id, soma: soma[i], post_trace: y[i] })
                }
            }
        }
        for &k in &probes.synapses {
            out.traces.push(TraceRecord::Synapse { t, synapse: k, state: syn[k as usize] });
        }
    }

    Ok(OracleRun {
        output: out,
        final_state: FinalState { t: steps, soma, post_trace: y, netsum, synapses: syn },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NEURON_DT;
    use crate::net::{AttrIndex, NeuronDecl};

    fn lone_neuron(i_bias: f32) -> NetworkDescription {
        let mut desc = NetworkDescription { n_neurons: 1, ..Default::default() };
        let a = AttrIndex::default();
        desc.neuron_attr_sets.insert(a, NeuronAttrs { i_bias, ..Default::default() });
        desc.neurons.push(NeuronDecl { id: 0, attr_set: a, acdn_delay: 0, v_init: -65.0 });
        desc
    }

    #[test]
    fn lone_neuron_is_plain_integration() {
        let desc = lone_neuron(10.0);
        let probes = ProbeSpec { neurons: vec![0], synapses: vec![], cadence: Cadence::Substep };
        let run = oracle_run(&desc, &CompileParams::default(), 40, &Stimulus::new(), &probes, OracleConfig::default())
            .unwrap();
        let attrs = &desc.neuron_attr_sets[&AttrIndex::default()];
        let mut s = SomaState::at_rest(-65.0);
        for (i, rec) in run.output.traces.iter().enumerate() {
            s = hh_step(&s, attrs, 10.0, NEURON_DT).unwrap();
            match rec {
                TraceRecord::Substep { t, sub, soma, .. } => {
                    assert_eq!((*t, *sub), ((i / 25) as u64, (i % 25) as u32));
                    assert_eq!(*soma, s);
                }
                other => panic!("unexpected record {other:?}"),
            }
        }
        assert_eq!(run.output.traces.len(), 1000);
        assert_eq!(run.final_state.soma[0], s);
        assert!(!run.output.raster.is_empty());
    }

    #[test]
    fn reduction_orders() {
        let c = [1.0f32, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(reduce(&c, 2, MatchMode::Exact), ((0.0 + (1.0 + 2.0)) + (3.0 + 4.0)) + (5.0 + 0.0));
        assert_eq!(reduce(&c, 4, MatchMode::Exact), (0.0 + ((1.0 + 2.0) + (3.0 + 4.0))) + ((5.0 + 0.0) + (0.0 + 0.0)));
        assert_eq!(reduce(&c, 1, MatchMode::Tolerant), 5.0 + 4.0 + 3.0 + 2.0 + 1.0);
        assert_eq!(reduce(&[], 3, MatchMode::Exact), 0.0);
    }
}
