//! Deterministic multi-HN executor.
//!
//! One network timestep `t` runs three phases:
//!
//! * **A** (per HN, per owned neuron, per row, per lane): read the
//!   presynaptic bit published at `t - 1 - acds_delay`, advance STP and STDP
//!   (post spike = the owner's raw spike of `t - 1`), compute the synaptic
//!   current against the owner's potential at the end of `t - 1`, and reduce
//!   into the netsum write buffer: a pairwise tree over the `p` lane values
//!   of a row, rows added in order starting from `0.0`.
//! * **B** (per HN, per owned neuron): integrate the soma over all substeps
//!   with `I = (netsum from t - 1 + i_bias) + stimulus`. The raw spike is the
//!   OR of the substep threshold crossings; the published bit is the raw bit
//!   of `t - acdn_delay`.
//! * **C** (barrier): publish every HN's bits into the history slot of `t`,
//!   swap netsum buffers, advance `t`.
//!
//! HNs only write their own neurons and synapses during A and B, so they may
//! run on any number of workers with bit-identical results.

mod checkpoint;
pub mod history;

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::compile::CompiledNetwork;
use crate::error::{Error, Result};
use crate::layout::RowSpan;
use crate::model::{
    detect_spike, hh_step, post_trace_step, stdp_step, stp_step, synaptic_current, NeuronAttrs, SomaState,
    SynapseState, NETWORK_DT,
};
use crate::net::{AttrIndex, SynapseAttrs, NULL_NEURON};
use crate::record::{Cadence, FinalState, ProbeSpec, RunOutput, TraceRecord, HISTOGRAM_BINS};
use crate::stimulus::Stimulus;

pub use history::{AcdnRing, SpikeHistory, ACDN_RING_BITS, HISTORY_DEPTH};

/// Static per-HN tables. Slot `k = row * p + lane`.
#[derive(Clone, Debug)]
pub struct HnProgram {
    pub neurons: Range<u32>,
    pub rows: Vec<RowSpan>,
    pub p: usize,
    /// MM table entries, interleaved across lanes.
    pub pre: Vec<u32>,
    pub acds_delay: Vec<u8>,
    /// Dense index into the engine's synapse attribute table.
    pub attr: Vec<u16>,
    pub neuron_attr: Vec<u16>,
    pub acdn_delay: Vec<u16>,
}

impl HnProgram {
    pub fn row_count(&self) -> usize {
        self.pre.len() / self.p
    }
}

/// Mutable per-HN state.
#[derive(Clone, Debug)]
pub struct HnState {
    pub soma: Vec<SomaState>,
    pub post_trace: Vec<f32>,
    /// Raw spike of the most recent step.
    pub raw: Vec<bool>,
    pub published: Vec<bool>,
    pub netsum_read: Vec<f32>,
    pub netsum_write: Vec<f32>,
    pub acdn: Vec<AcdnRing>,
    pub synapses: Vec<SynapseState>,
    probe_substeps: Vec<bool>,
    substep_trace: Vec<(u32, u32, SomaState)>,
}

struct StepCtx<'a> {
    t: u64,
    history: &'a SpikeHistory,
    neuron_attrs: &'a [NeuronAttrs],
    synapse_attrs: &'a [SynapseAttrs],
    stim: &'a [f32],
    substeps: u32,
    dt: f32,
}

/// Balanced pairwise sum: split at `len / 2`, recurse, add the halves.
#[inline]
pub fn tree_sum(v: &[f32]) -> f32 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            tree_sum(&v[..mid]) + tree_sum(&v[mid..])
        }
    }
}

const SOMA_GROUP: usize = 8;

/// Runs the substeps of neurons `first..first + G` and publishes their spikes.
/// On instability reports the lowest failing neuron of the group.
fn integrate<const G: usize>(
    prog: &HnProgram,
    st: &mut HnState,
    ctx: &StepCtx,
    first: usize,
) -> std::result::Result<(), (u32, f32)> {
    let gid = |j: usize| prog.neurons.start + (first + j) as u32;
    let attrs: [&NeuronAttrs; G] = std::array::from_fn(|j| &ctx.neuron_attrs[prog.neuron_attr[first + j] as usize]);
    let i_ext: [f32; G] =
        std::array::from_fn(|j| (st.netsum_read[first + j] + attrs[j].i_bias) + ctx.stim[gid(j) as usize]);
    let mut s: [SomaState; G] = std::array::from_fn(|j| st.soma[first + j]);
    let mut spike = [false; G];
    let mut failed: [Option<f32>; G] = [None; G];
    let probe = G == 1 && st.probe_substeps[first];
    for sub in 0..ctx.substeps {
        for j in 0..G {
            if failed[j].is_some() {
                continue;
            }
            match hh_step(&s[j], attrs[j], i_ext[j], ctx.dt) {
                Ok(next) => {
                    spike[j] |= detect_spike(s[j].v, next.v);
                    s[j] = next;
                }
                Err(e) => failed[j] = Some(e.0.v),
            }
        }
        if probe && failed[0].is_none() {
            st.substep_trace.push((gid(0), sub, s[0]));
        }
    }
    if let Some(j) = failed.iter().position(Option::is_some) {
        return Err((gid(j), failed[j].unwrap_or(f32::NAN)));
    }
    for j in 0..G {
        let local = first + j;
        st.soma[local] = s[j];
        st.raw[local] = spike[j];
        st.acdn[local].push(ctx.t, spike[j]);
        st.published[local] = st.acdn[local].delayed(ctx.t, prog.acdn_delay[local]);
    }
    Ok(())
}

fn step_hn(prog: &HnProgram, st: &mut HnState, ctx: &StepCtx) -> std::result::Result<(), (u32, f32)> {
    let p = prog.p;
    let mut lane_vals = vec![0.0f32; p];
    st.substep_trace.clear();
    for local in 0..prog.rows.len() {
        let na = &ctx.neuron_attrs[prog.neuron_attr[local] as usize];
        let post = st.raw[local];
        let y_old = st.post_trace[local];
        let v_post = st.soma[local].v;

        // Phase A.
        let mut acc = 0.0f32;
        let span = prog.rows[local];
        for row in span.rows() {
            let base = row * p;
            for (lane, out) in lane_vals.iter_mut().enumerate() {
                let k = base + lane;
                let pre_id = prog.pre[k];
                *out = if pre_id == NULL_NEURON {
                    0.0
                } else {
                    let sa = &ctx.synapse_attrs[prog.attr[k] as usize];
                    let pre = ctx.history.read(ctx.t, prog.acds_delay[k], pre_id);
                    let syn = &mut st.synapses[k];
                    syn.stp = stp_step(syn.stp, &sa.stp, pre, NETWORK_DT);
                    let o = stdp_step(syn.pre_trace, y_old, syn.weight, &sa.stdp, na, pre, post, NETWORK_DT);
                    syn.pre_trace = o.pre_trace;
                    syn.weight = o.weight;
                    synaptic_current(syn.stp.s, syn.weight, &sa.membrane, v_post)
                };
            }
            acc += tree_sum(&lane_vals);
        }
        st.netsum_write[local] = acc;
        st.post_trace[local] = post_trace_step(y_old, na, post, NETWORK_DT);
    }

    // Phase B. Neurons are independent here, so several are integrated in
    // lockstep to overlap their transcendental calls; per-neuron arithmetic
    // is unchanged.
    let n_local = prog.rows.len();
    let mut first = 0;
    while first < n_local {
        let probed = st.probe_substeps[first..(first + SOMA_GROUP).min(n_local)].iter().any(|&b| b);
        if n_local - first >= SOMA_GROUP && !probed {
            integrate::<SOMA_GROUP>(prog, st, ctx, first)?;
            first += SOMA_GROUP;
        } else {
            integrate::<1>(prog, st, ctx, first)?;
            first += 1;
        }
    }
    Ok(())
}

pub struct Engine {
    programs: Vec<HnProgram>,
    states: Vec<HnState>,
    history: SpikeHistory,
    neuron_attrs: Vec<NeuronAttrs>,
    synapse_attrs: Vec<SynapseAttrs>,
    /// `(hn, slot)` of each declared synapse.
    origin: Vec<(u32, u32)>,
    n_neurons: u32,
    substeps: u32,
    dt: f32,
    t: u64,
    stim_buf: Vec<f32>,
    pool: Option<rayon::ThreadPool>,
}

fn dense_index<T: Clone>(sets: &BTreeMap<AttrIndex, T>) -> (Vec<T>, BTreeMap<AttrIndex, u16>) {
    let table = sets.values().cloned().collect();
    let map = sets.keys().enumerate().map(|(i, &k)| (k, i as u16)).collect();
    (table, map)
}

impl Engine {
    /// Builds an engine at step 0. `workers <= 1` runs HNs sequentially on
    /// the calling thread, which is the reference schedule.
    pub fn new(net: &CompiledNetwork, workers: usize) -> Result<Self> {
        let (neuron_attrs, n_map) = dense_index(&net.neuron_attr_sets);
        let (synapse_attrs, s_map) = dense_index(&net.synapse_attr_sets);
        let missing = |i: AttrIndex| Error::MissingAttrSet(i.get());
        let p = net.params.p as usize;
        let mut programs = Vec::with_capacity(net.hns.len());
        let mut states = Vec::with_capacity(net.hns.len());
        let mut origin = vec![(u32::MAX, u32::MAX); net.n_synapses as usize];
        for (h, hn) in net.hns.iter().enumerate() {
            let rows = hn.rows();
            if hn.lanes.len() != p || hn.lanes.iter().any(|l| l.len() != rows) {
                return Err(Error::Dimensions(format!("HN {h} lanes do not match p = {p}")));
            }
            let n_slots = rows * p;
            let mut prog = HnProgram {
                neurons: hn.neurons.clone(),
                rows: hn.neuron_rows.clone(),
                p,
                pre: Vec::with_capacity(n_slots),
                acds_delay: Vec::with_capacity(n_slots),
                attr: Vec::with_capacity(n_slots),
                neuron_attr: Vec::new(),
                acdn_delay: Vec::new(),
            };
            let mut synapses = Vec::with_capacity(n_slots);
            for row in 0..rows {
                for lane in &hn.lanes {
                    let slot = &lane[row];
                    let k = prog.pre.len();
                    prog.pre.push(slot.mm_entry);
                    prog.acds_delay.push(slot.acds_delay);
                    if slot.is_null() {
                        prog.attr.push(0);
                        synapses.push(SynapseState::NULL);
                    } else {
                        prog.attr.push(*s_map.get(&slot.attr_set).ok_or_else(|| missing(slot.attr_set))?);
                        synapses.push(slot.state);
                        if let Some(o) = origin.get_mut(slot.origin as usize) {
                            *o = (h as u32, k as u32);
                        }
                    }
                }
            }
            let n_local = hn.neurons.len();
            let mut soma = Vec::with_capacity(n_local);
            let mut post_trace = Vec::with_capacity(n_local);
            for id in hn.neurons.clone() {
                let img = &net.neurons[id as usize];
                prog.neuron_attr.push(*n_map.get(&img.attr_set).ok_or_else(|| missing(img.attr_set))?);
                prog.acdn_delay.push(img.acdn_delay);
                soma.push(img.soma);
                post_trace.push(img.post_trace);
            }
            states.push(HnState {
                soma,
                post_trace,
                raw: vec![false; n_local],
                published: vec![false; n_local],
                netsum_read: vec![0.0; n_local],
                netsum_write: vec![0.0; n_local],
                acdn: vec![AcdnRing::default(); n_local],
                synapses,
                probe_substeps: vec![false; n_local],
                substep_trace: Vec::new(),
            });
            programs.push(prog);
        }
        if origin.iter().any(|o| o.0 == u32::MAX) {
            return Err(Error::Dimensions("compiled network does not place every declared synapse".into()));
        }
        let pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
            Some(pool)
        } else {
            None
        };
        Ok(Self {
            programs,
            states,
            history: SpikeHistory::new(net.n_neurons),
            neuron_attrs,
            synapse_attrs,
            origin,
            n_neurons: net.n_neurons,
            substeps: net.params.substeps,
            dt: NETWORK_DT / net.params.substeps as f32,
            t: 0,
            stim_buf: vec![0.0; net.n_neurons as usize],
            pool,
        })
    }

    /// Next network timestep to execute.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_neurons(&self) -> u32 {
        self.n_neurons
    }

    pub fn n_synapses(&self) -> u32 {
        self.origin.len() as u32
    }

    pub fn programs(&self) -> &[HnProgram] {
        &self.programs
    }

    pub fn history(&self) -> &SpikeHistory {
        &self.history
    }

    /// Total slots (null padding included) processed per step.
    pub fn slot_count(&self) -> usize {
        self.programs.iter().map(|p| p.pre.len()).sum()
    }

    fn home(&self, neuron: u32) -> (usize, usize) {
        assert!(neuron < self.n_neurons, "neuron {neuron} out of range");
        let h = self.programs.partition_point(|p| p.neurons.end <= neuron);
        (h, (neuron - self.programs[h].neurons.start) as usize)
    }

    pub fn soma(&self, neuron: u32) -> SomaState {
        let (h, l) = self.home(neuron);
        self.states[h].soma[l]
    }

    pub fn post_trace(&self, neuron: u32) -> f32 {
        let (h, l) = self.home(neuron);
        self.states[h].post_trace[l]
    }

    /// Netsum the soma will consume at the next step.
    pub fn netsum_read(&self, neuron: u32) -> f32 {
        let (h, l) = self.home(neuron);
        self.states[h].netsum_read[l]
    }

    /// Raw spike of `neuron` during the last executed step.
    pub fn raw_spike(&self, neuron: u32) -> bool {
        let (h, l) = self.home(neuron);
        self.states[h].raw[l]
    }

    /// State of a declared synapse.
    pub fn synapse(&self, decl: u32) -> SynapseState {
        let (h, k) = self.origin[decl as usize];
        self.states[h as usize].synapses[k as usize]
    }

    /// The bit lane `lane` of HN `hn` reads for `row` at the next step.
    pub fn nu_read(&self, hn: usize, lane: usize, row: usize) -> bool {
        let prog = &self.programs[hn];
        assert!(row < prog.row_count(), "row {row} beyond lane length");
        let k = row * prog.p + lane;
        let pre = prog.pre[k];
        pre != NULL_NEURON && self.history.read(self.t, prog.acds_delay[k], pre)
    }

    /// Executes one network timestep with `stimulus[i]` added to neuron `i`.
    pub fn step(&mut self, stimulus: &[f32]) -> Result<()> {
        if stimulus.len() != self.n_neurons as usize {
            return Err(Error::Dimensions(format!(
                "stimulus has {} entries for {} neurons",
                stimulus.len(),
                self.n_neurons
            )));
        }
        let ctx = StepCtx {
            t: self.t,
            history: &self.history,
            neuron_attrs: &self.neuron_attrs,
            synapse_attrs: &self.synapse_attrs,
            stim: stimulus,
            substeps: self.substeps,
            dt: self.dt,
        };
        let programs = &self.programs;
        let states = &mut self.states;
        let results: Vec<_> = match &self.pool {
            None => {
                let mut out = Vec::with_capacity(programs.len());
                for (prog, st) in programs.iter().zip(states.iter_mut()) {
                    let r = step_hn(prog, st, &ctx);
                    let failed = r.is_err();
                    out.push(r);
                    if failed {
                        break;
                    }
                }
                out
            }
            Some(pool) => pool.install(|| {
                programs.par_iter().zip(states.par_iter_mut()).map(|(prog, st)| step_hn(prog, st, &ctx)).collect()
            }),
        };
        // HNs are in id order, so the first failure is the lowest neuron id.
        if let Some(Err((neuron, v))) = results.into_iter().find(|r| r.is_err()) {
            return Err(Error::Instability { neuron, step: self.t, v });
        }

        // Phase C.
        let t = self.t;
        self.history.clear(t);
        for (prog, st) in self.programs.iter().zip(self.states.iter_mut()) {
            for (local, &bit) in st.published.iter().enumerate() {
                if bit {
                    self.history.set(t, prog.neurons.start + local as u32);
                }
            }
            std::mem::swap(&mut st.netsum_read, &mut st.netsum_write);
        }
        self.t += 1;
        Ok(())
    }

    /// Neurons whose raw spike bit was set in the last executed step.
    pub fn last_spikes(&self) -> impl Iterator<Item = u32> + '_ {
        self.programs.iter().zip(&self.states).flat_map(|(prog, st)| {
            st.raw.iter().enumerate().filter(|(_, &b)| b).map(move |(l, _)| prog.neurons.start + l as u32)
        })
    }

    /// Runs `steps` timesteps from the current step, recording the raster
    /// and the requested probes. Stimulus timesteps are absolute.
    pub fn run(&mut self, steps: u64, probes: &ProbeSpec, stimulus: &Stimulus) -> Result<RunOutput> {
        probes.check(self.n_neurons, self.n_synapses())?;
        stimulus.check_targets(self.n_neurons)?;
        let substep = probes.cadence == Cadence::Substep;
        for st in &mut self.states {
            st.probe_substeps.fill(false);
        }
        if substep {
            for &n in &probes.neurons {
                let (h, l) = self.home(n);
                self.states[h].probe_substeps[l] = true;
            }
        }
        let mut out = RunOutput::default();
        let mut stim = std::mem::take(&mut self.stim_buf);
        let result = (|| {
            for _ in 0..steps {
                let t = self.t;
                stimulus.fill(t, &mut stim);
                self.step(&stim)?;
                out.raster.events.extend(self.last_spikes().map(|n| (t, n)));
                self.record_probes(t, probes, &mut out.traces);
            }
            Ok(())
        })();
        self.stim_buf = stim;
        for st in &mut self.states {
            st.probe_substeps.fill(false);
            st.substep_trace.clear();
        }
        result.map(|()| out)
    }

    fn record_probes(&self, t: u64, probes: &ProbeSpec, traces: &mut Vec<TraceRecord>) {
        for &n in &probes.neurons {
            match probes.cadence {
                Cadence::Substep => {
                    let (h, _) = self.home(n);
                    for &(id, sub, soma) in &self.states[h].substep_trace {
                        if id == n {
                            traces.push(TraceRecord::Substep { t, sub, neuron: n, soma });
                        }
                    }
                }
                Cadence::Step => traces.push(TraceRecord::Neuron {
                    t,
                    neuron: n,
                    soma: self.soma(n),
                    post_trace: self.post_trace(n),
                }),
            }
        }
        for &k in &probes.synapses {
            traces.push(TraceRecord::Synapse { t, synapse: k, state: self.synapse(k) });
        }
    }

    pub fn final_state(&self) -> FinalState {
        let mut fs = FinalState {
            t: self.t,
            soma: Vec::with_capacity(self.n_neurons as usize),
            post_trace: Vec::with_capacity(self.n_neurons as usize),
            netsum: Vec::with_capacity(self.n_neurons as usize),
            synapses: (0..self.n_synapses()).map(|k| self.synapse(k)).collect(),
        };
        for st in &self.states {
            fs.soma.extend_from_slice(&st.soma);
            fs.post_trace.extend_from_slice(&st.post_trace);
            fs.netsum.extend_from_slice(&st.netsum_read);
        }
        fs
    }

    /// Histogram of `w / w_max` over all declared synapses.
    pub fn weight_histogram(&self) -> [u64; HISTOGRAM_BINS] {
        crate::record::weight_histogram(self.origin.iter().map(|&(h, k)| {
            let w = self.states[h as usize].synapses[k as usize].weight;
            let a = self.programs[h as usize].attr[k as usize];
            w / self.synapse_attrs[a as usize].stdp.w_max
        }))
    }
}
