//! Versioned binary snapshot of an [`Engine`].
//!
//! Layout (little-endian): magic `NMCKPT\0\0`, version `u32`, network
//! fingerprint `u64`, `n_neurons u32`, `n_hn u32`, `p u32`, total slots
//! `u64`, `t u64`, history depth `u32`, words per step `u32`, the history
//! words, then per neuron in id order `V m h n y` (f32), raw spike (u8),
//! netsum (f32), 5 delay-ring words; then every slot in HN and storage order
//! as `u x S xpre w` (f32); finally the trailer `NMEND\0\0\0`.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{AcdnRing, Engine, HISTORY_DEPTH};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::model::{SomaState, StpState, SynapseState};

const MAGIC: &[u8; 8] = b"NMCKPT\0\0";
const TRAILER: &[u8; 8] = b"NMEND\0\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// FNV-1a over the static tables, so a checkpoint cannot be loaded into an
/// engine built from a different network.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn bytes(&mut self, b: &[u8]) {
        for &x in b {
            self.0 ^= x as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.u32(v.to_bits());
    }
}

impl Engine {
    fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.u32(self.n_neurons);
        h.u32(self.substeps);
        for a in &self.neuron_attrs {
            for v in [a.c_m, a.i_bias, a.tau_minus, a.a_minus] {
                h.f32(v);
            }
            for c in &a.channels {
                h.f32(c.g_bar);
                h.f32(c.v_eq);
                h.bytes(&[c.p, c.q, c.gates as u8]);
            }
        }
        for a in &self.synapse_attrs {
            let s = &a.stp;
            let d = &a.stdp;
            for v in [
                s.utilization,
                s.release_scale,
                s.tau_f,
                s.tau_d,
                s.tau_s,
                d.tau_plus,
                d.a_plus,
                d.eta_plus,
                d.eta_minus,
                d.w_max,
                a.membrane.g_syn,
                a.membrane.e_syn,
            ] {
                h.f32(v);
            }
        }
        for prog in &self.programs {
            h.u32(prog.neurons.start);
            h.u32(prog.neurons.end);
            h.u32(prog.p as u32);
            for r in &prog.rows {
                h.u32(r.first);
                h.u32(r.count);
            }
            for k in 0..prog.pre.len() {
                h.u32(prog.pre[k]);
                h.u32(prog.attr[k] as u32);
                h.bytes(&[prog.acds_delay[k]]);
            }
            for l in 0..prog.neuron_attr.len() {
                h.u32(prog.neuron_attr[l] as u32);
                h.u32(prog.acdn_delay[l] as u32);
            }
        }
        h.0
    }

    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let w = &mut out;
        w.extend_from_slice(MAGIC);
        w.write_u32::<LE>(CHECKPOINT_VERSION).unwrap();
        w.write_u64::<LE>(self.fingerprint()).unwrap();
        w.write_u32::<LE>(self.n_neurons).unwrap();
        w.write_u32::<LE>(self.programs.len() as u32).unwrap();
        w.write_u32::<LE>(self.programs.first().map_or(0, |p| p.p as u32)).unwrap();
        w.write_u64::<LE>(self.slot_count() as u64).unwrap();
        w.write_u64::<LE>(self.t).unwrap();
        w.write_u32::<LE>(HISTORY_DEPTH as u32).unwrap();
        w.write_u32::<LE>(self.history.words_per_step() as u32).unwrap();
        for &x in self.history.raw_slots() {
            w.write_u64::<LE>(x).unwrap();
        }
        for st in &self.states {
            for l in 0..st.soma.len() {
                let s = st.soma[l];
                for v in [s.v, s.m, s.h, s.n, st.post_trace[l]] {
                    w.write_f32::<LE>(v).unwrap();
                }
                w.write_u8(st.raw[l] as u8).unwrap();
                w.write_f32::<LE>(st.netsum_read[l]).unwrap();
                for x in st.acdn[l].0 {
                    w.write_u64::<LE>(x).unwrap();
                }
            }
        }
        for st in &self.states {
            for s in &st.synapses {
                for v in [s.stp.u, s.stp.x, s.stp.s, s.pre_trace, s.weight] {
                    w.write_f32::<LE>(v).unwrap();
                }
            }
        }
        w.extend_from_slice(TRAILER);
        out
    }

    /// Restores a snapshot taken from an engine over the same compiled
    /// network. On error the engine is left unchanged.
    pub fn restore_checkpoint(&mut self, bytes: &[u8]) -> Result<()> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let eof = |_| bad("truncated checkpoint");
        let mut r = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(eof)?;
        if &magic != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = r.read_u32::<LE>().map_err(eof)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let fingerprint = r.read_u64::<LE>().map_err(eof)?;
        let n_neurons = r.read_u32::<LE>().map_err(eof)?;
        let n_hn = r.read_u32::<LE>().map_err(eof)?;
        let p = r.read_u32::<LE>().map_err(eof)?;
        let slots = r.read_u64::<LE>().map_err(eof)?;
        let expected = (
            self.n_neurons,
            self.programs.len() as u32,
            self.programs.first().map_or(0, |p| p.p as u32),
            self.slot_count() as u64,
        );
        if (n_neurons, n_hn, p, slots) != expected {
            return Err(Error::Checkpoint(format!(
                "dimensions (neurons, HNs, p, slots) = {:?} do not match the engine's {:?}",
                (n_neurons, n_hn, p, slots),
                expected
            )));
        }
        if fingerprint != self.fingerprint() {
            return Err(bad("checkpoint was taken from a different network"));
        }
        let t = r.read_u64::<LE>().map_err(eof)?;
        let depth = r.read_u32::<LE>().map_err(eof)?;
        let words = r.read_u32::<LE>().map_err(eof)?;
        if depth as usize != HISTORY_DEPTH || words as usize != self.history.words_per_step() {
            return Err(bad("spike history shape mismatch"));
        }
        let mut history = self.history.clone();
        for x in history.raw_slots_mut() {
            *x = r.read_u64::<LE>().map_err(eof)?;
        }
        let mut states = self.states.clone();
        for st in &mut states {
            for l in 0..st.soma.len() {
                let mut f = [0f32; 5];
                r.read_f32_into::<LE>(&mut f).map_err(eof)?;
                st.soma[l] = SomaState { v: f[0], m: f[1], h: f[2], n: f[3] };
                st.post_trace[l] = f[4];
                st.raw[l] = match r.read_u8().map_err(eof)? {
                    0 => false,
                    1 => true,
                    _ => return Err(bad("corrupt spike flag")),
                };
                st.netsum_read[l] = r.read_f32::<LE>().map_err(eof)?;
                let mut ring = [0u64; 5];
                r.read_u64_into::<LE>(&mut ring).map_err(eof)?;
                st.acdn[l] = AcdnRing(ring);
            }
        }
        for st in &mut states {
            for s in &mut st.synapses {
                let mut f = [0f32; 5];
                r.read_f32_into::<LE>(&mut f).map_err(eof)?;
                *s = SynapseState { stp: StpState { u: f[0], x: f[1], s: f[2] }, pre_trace: f[3], weight: f[4] };
            }
        }
        let mut trailer = [0u8; 8];
        r.read_exact(&mut trailer).map_err(eof)?;
        if &trailer != TRAILER || (r.position() as usize) != bytes.len() {
            return Err(bad("corrupt trailer"));
        }
        self.t = t;
        self.history = history;
        self.states = states;
        Ok(())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.checkpoint_bytes())?;
        Ok(())
    }

    pub fn load_checkpoint(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        self.restore_checkpoint(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use crate::compile::{build_images, CompileParams};
    use crate::engine::Engine;
    use crate::net::parse_network;
    use crate::record::ProbeSpec;
    use crate::stimulus::Stimulus;

    const NET: &str = "\
[header]
format = nmnet/1
n_neurons = 3
[neuron_attr_sets]
0
1 i_bias=8
[synapse_attr_sets]
0
[neurons]
0 1 4
1 0 0
2 0 0
[synapses]
1 0 0 2 0.8
2 1 0 0 0.9
2 0 0 5 0.3
";

    fn fresh(n_hn: u32) -> Engine {
        let net = build_images(&parse_network(NET).unwrap(), &CompileParams { n_hn, ..Default::default() }).unwrap();
        Engine::new(&net, 1).unwrap()
    }

    #[test]
    fn round_trip_continues_exactly() {
        let probes = ProbeSpec::default();
        let stim = Stimulus::new();
        let mut whole = fresh(1);
        let full = whole.run(400, &probes, &stim).unwrap();

        let mut first = fresh(1);
        let mut raster = first.run(150, &probes, &stim).unwrap().raster;
        let bytes = first.checkpoint_bytes();
        let mut second = fresh(1);
        second.restore_checkpoint(&bytes).unwrap();
        assert_eq!(second.checkpoint_bytes(), bytes);
        raster.extend(&second.run(250, &probes, &stim).unwrap().raster);
        assert!(!full.raster.is_empty());
        assert_eq!(raster, full.raster);
        assert!(whole.final_state().bit_identical(&second.final_state()));
    }

    #[test]
    fn rejects_foreign_and_corrupt_snapshots() {
        let e = fresh(1);
        let bytes = e.checkpoint_bytes();
        let mut other = fresh(3);
        assert!(other.restore_checkpoint(&bytes).is_err());
        let mut same = fresh(1);
        assert!(same.restore_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        let mut bumped = bytes.clone();
        bumped[8] = 9;
        assert!(same.restore_checkpoint(&bumped).is_err());
        let mut flag = fresh(1);
        flag.run(5, &ProbeSpec::default(), &Stimulus::new()).unwrap();
        let before = flag.checkpoint_bytes();
        assert!(flag.restore_checkpoint(&bytes[..40]).is_err());
        assert_eq!(flag.checkpoint_bytes(), before);
    }
}
