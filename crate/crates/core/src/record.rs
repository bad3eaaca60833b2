//! Run outputs: spike rasters, probe traces, weight histograms and final
//! state snapshots. Engine and oracle produce the same types so they can be
//! compared directly.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::model::{SomaState, SynapseState};

pub const RASTER_HEADER: &str = "timestep,neuron_id";
pub const HISTOGRAM_BINS: usize = 64;

/// Spike events sorted by `(timestep, neuron_id)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Raster {
    pub events: Vec<(u64, u32)>,
}

impl Raster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Appends another raster covering later steps.
    pub fn extend(&mut self, later: &Raster) {
        self.events.extend_from_slice(&later.events);
    }

    pub fn spike_count(&self, neuron: u32) -> usize {
        self.events.iter().filter(|&&(_, n)| n == neuron).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * self.events.len() + 20);
        out.push_str(RASTER_HEADER);
        out.push('\n');
        for (t, n) in &self.events {
            let _ = writeln!(out, "{t},{n}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == RASTER_HEADER => {}
            _ => return Err(Error::Parse { line: 1, message: format!("raster must start with '{RASTER_HEADER}'") }),
        }
        let mut events = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = || Error::Parse { line: i + 1, message: format!("bad raster record '{line}'") };
            let (t, n) = line.split_once(',').ok_or_else(err)?;
            events.push((t.trim().parse().map_err(|_| err())?, n.trim().parse().map_err(|_| err())?));
        }
        if events.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse { line: 0, message: "raster records are not strictly sorted".into() });
        }
        Ok(Self { events })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cadence {
    /// One record per target per network timestep.
    Step,
    /// Neuron targets are sampled after every neuron substep.
    Substep,
}

/// What to record during a run. Synapses are addressed by declaration index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeSpec {
    pub neurons: Vec<u32>,
    pub synapses: Vec<u32>,
    pub cadence: Cadence,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { neurons: Vec::new(), synapses: Vec::new(), cadence: Cadence::Step }
    }
}

impl ProbeSpec {
    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty() && self.synapses.is_empty()
    }

    /// Adds a target written as `neuron:<id>` or `synapse:<index>`.
    pub fn add_target(&mut self, spec: &str) -> Result<()> {
        let bad = || Error::ProbeTarget(format!("'{spec}' (expected neuron:<id> or synapse:<index>)"));
        let (kind, id) = spec.split_once(':').ok_or_else(bad)?;
        let id: u32 = id.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "neuron" | "n" => self.neurons.push(id),
            "synapse" | "s" => self.synapses.push(id),
            _ => return Err(bad()),
        }
        Ok(())
    }

    pub fn check(&self, n_neurons: u32, n_synapses: u32) -> Result<()> {
        if let Some(&n) = self.neurons.iter().find(|&&n| n >= n_neurons) {
            return Err(Error::ProbeTarget(format!("neuron:{n}")));
        }
        if let Some(&s) = self.synapses.iter().find(|&&s| s >= n_synapses) {
            return Err(Error::ProbeTarget(format!("synapse:{s}")));
        }
        Ok(())
    }
}

/// One probe sample. Within a step, neuron targets come first in probe
/// order (all substeps of one target together), then synapse targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceRecord {
    Substep { t: u64, sub: u32, neuron: u32, soma: SomaState },
    Neuron { t: u64, neuron: u32, soma: SomaState, post_trace: f32 },
    Synapse { t: u64, synapse: u32, state: SynapseState },
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TraceRecord::Substep { t, sub, neuron, soma } => {
                write!(f, "{t},{sub},neuron={neuron},V={},m={},h={},n={}", soma.v, soma.m, soma.h, soma.n)
            }
            TraceRecord::Neuron { t, neuron, soma, post_trace } => write!(
                f,
                "{t},neuron={neuron},V={},m={},h={},n={},y={post_trace}",
                soma.v, soma.m, soma.h, soma.n
            ),
            TraceRecord::Synapse { t, synapse, state } => write!(
                f,
                "{t},synapse={synapse},u={},x={},S={},xpre={},w={}",
                state.stp.u, state.stp.x, state.stp.s, state.pre_trace, state.weight
            ),
        }
    }
}

pub fn traces_to_text(traces: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in traces {
        let _ = writeln!(out, "{r}");
    }
    out
}

/// Counts of `w / w_max` over 64 uniform bins of [0, 1]; `w = w_max` falls in
/// the last bin.
pub fn weight_histogram(normalized: impl IntoIterator<Item = f32>) -> [u64; HISTOGRAM_BINS] {
    let mut bins = [0u64; HISTOGRAM_BINS];
    for r in normalized {
        let b = ((r * HISTOGRAM_BINS as f32) as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

pub fn histogram_to_csv(bins: &[u64; HISTOGRAM_BINS]) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for (i, c) in bins.iter().enumerate() {
        let lo = i as f64 / HISTOGRAM_BINS as f64;
        let hi = (i + 1) as f64 / HISTOGRAM_BINS as f64;
        let _ = writeln!(out, "{lo},{hi},{c}");
    }
    out
}

/// Complete per-neuron and per-synapse state after a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalState {
    pub t: u64,
    pub soma: Vec<SomaState>,
    pub post_trace: Vec<f32>,
    /// Netsum produced by the last step, one per neuron.
    pub netsum: Vec<f32>,
    /// By declaration index.
    pub synapses: Vec<SynapseState>,
}

impl FinalState {
    /// Equality of every value's bit pattern, so `-0.0 != 0.0` and NaNs with
    /// equal payloads compare equal.
    pub fn bit_identical(&self, other: &FinalState) -> bool {
        fn bits(s: &FinalState) -> Vec<u32> {
            let mut out = Vec::new();
            for x in &s.soma {
                out.extend([x.v, x.m, x.h, x.n].map(f32::to_bits));
            }
            out.extend(s.post_trace.iter().map(|x| x.to_bits()));
            out.extend(s.netsum.iter().map(|x| x.to_bits()));
            for x in &s.synapses {
                out.extend([x.stp.u, x.stp.x, x.stp.s, x.pre_trace, x.weight].map(f32::to_bits));
            }
            out
        }
        self.t == other.t
            && self.soma.len() == other.soma.len()
            && self.synapses.len() == other.synapses.len()
            && bits(self) == bits(other)
    }

    /// Human-readable dump: one line per neuron, then one per synapse.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "t={}", self.t);
        for (i, s) in self.soma.iter().enumerate() {
            let _ = writeln!(
                out,
                "neuron={i},V={},m={},h={},n={},y={},netsum={}",
                s.v, s.m, s.h, s.n, self.post_trace[i], self.netsum[i]
            );
        }
        for (k, s) in self.synapses.iter().enumerate() {
            let _ = writeln!(
                out,
                "synapse={k},u={},x={},S={},xpre={},w={}",
                s.stp.u, s.stp.x, s.stp.s, s.pre_trace, s.weight
            );
        }
        out
    }
}

/// Everything one run produces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub raster: Raster,
    pub traces: Vec<TraceRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_round_trip() {
        let r = Raster { events: vec![(0, 3), (0, 7), (12, 1)] };
        let text = r.to_csv();
        assert_eq!(text, "timestep,neuron_id\n0,3\n0,7\n12,1\n");
        assert_eq!(Raster::parse(&text).unwrap(), r);
        assert_eq!(Raster::new().to_csv(), "timestep,neuron_id\n");
    }

    #[test]
    fn raster_rejects_unsorted_and_headerless() {
        assert!(Raster::parse("timestep,neuron_id\n5,1\n4,1\n").is_err());
        assert!(Raster::parse("5,1\n").is_err());
    }

    #[test]
    fn probe_targets() {
        let mut p = ProbeSpec::default();
        p.add_target("neuron:5").unwrap();
        p.add_target("synapse:2").unwrap();
        assert!(p.add_target("axon:1").is_err());
        assert!(p.add_target("neuron").is_err());
        assert_eq!((p.neurons.clone(), p.synapses.clone()), (vec![5], vec![2]));
        assert!(p.check(6, 3).is_ok());
        assert!(matches!(p.check(5, 3), Err(Error::ProbeTarget(_))));
    }

    #[test]
    fn histogram_edges() {
        let h = weight_histogram([0.0, 1.0 / 64.0, 0.5, 1.0, 0.999]);
        assert_eq!((h[0], h[1], h[32], h[63]), (1, 1, 1, 2));
        assert_eq!(h.iter().sum::<u64>(), 5);
    }

    #[test]
    fn trace_lines() {
        let soma = SomaState { v: -65.0, m: 0.5, h: 0.25, n: 0.125 };
        let r = TraceRecord::Substep { t: 3, sub: 24, neuron: 5, soma };
        assert_eq!(r.to_string(), "3,24,neuron=5,V=-65,m=0.5,h=0.25,n=0.125");
        let r = TraceRecord::Synapse { t: 1, synapse: 0, state: SynapseState::initial(0.5) };
        assert_eq!(r.to_string(), "1,synapse=0,u=0,x=1,S=0,xpre=0,w=0.5");
    }
}
