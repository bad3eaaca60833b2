//! On-disk form of a [`CompiledNetwork`].
//!
//! A compiled image is a directory holding a plain-text `manifest.txt` and
//! flat little-endian binary arrays:
//!
//! | file                 | record                                                        |
//! |----------------------|---------------------------------------------------------------|
//! | `neurons.bin`        | attr u16, acdn u16, V m h n y f32 (24 bytes, by neuron id)    |
//! | `neuron_attrs.bin`   | index u16, c_m i_bias tau_minus a_minus f32, n_channels u16, then per channel kind p q pad u8, g_bar v_eq f32 |
//! | `synapse_attrs.bin`  | index u16, pad u16, 12 × f32 (52 bytes)                       |
//! | `hnNNN/rows.bin`     | first_row u32, row_count u32 per owned neuron                 |
//! | `hnNNN/laneLL.bin`   | mm u32, owner u32, origin u32, attr u16, acds u8, pad u8, u x S x_j w f32 (36 bytes per row) |
//!
//! The manifest records dimensions and the format string; readers reject any
//! other format string.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::compile::{CompileParams, CompiledNetwork, HnImage, NeuronImage, SynapseSlot};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::layout::RowSpan;
use crate::model::{
    GateKind, IonChannelSpec, NeuronAttrs, SomaState, StdpAttrs, StpAttrs, StpState, SynapseMembraneAttrs,
    SynapseState,
};
use crate::net::{AttrIndex, SynapseAttrs};

pub const IMAGE_FORMAT: &str = "nmimage/1";
pub const MANIFEST: &str = "manifest.txt";

const NEURON_RECORD: usize = 24;
const SYNAPSE_ATTR_RECORD: usize = 52;
const SLOT_RECORD: usize = 36;

fn hn_dir(h: usize) -> String {
    format!("hn{h:03}")
}

fn lane_file(l: usize) -> String {
    format!("lane{l:02}.bin")
}

fn image_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Image { path: path.to_path_buf(), message: message.into() }
}

fn attr_index(raw: u16, path: &Path) -> Result<AttrIndex> {
    AttrIndex::new(raw as u32).ok_or_else(|| image_err(path, format!("attribute index {raw} out of range")))
}

// `Vec<u8>` writes are infallible.
fn put_f32s(buf: &mut Vec<u8>, values: &[f32]) {
    for &v in values {
        buf.write_f32::<LE>(v).unwrap();
    }
}

fn encode_slot(buf: &mut Vec<u8>, s: &SynapseSlot) {
    buf.write_u32::<LE>(s.mm_entry).unwrap();
    buf.write_u32::<LE>(s.owner).unwrap();
    buf.write_u32::<LE>(s.origin).unwrap();
    buf.write_u16::<LE>(s.attr_set.get()).unwrap();
    buf.write_u8(s.acds_delay).unwrap();
    buf.write_u8(0).unwrap();
    let st = &s.state;
    put_f32s(buf, &[st.stp.u, st.stp.x, st.stp.s, st.pre_trace, st.weight]);
}

fn gate_code(g: GateKind) -> u8 {
    match g {
        GateKind::None => 0,
        GateKind::Mh => 1,
        GateKind::N => 2,
    }
}

fn manifest_text(net: &CompiledNetwork) -> String {
    let p = &net.params;
    let mut m = String::new();
    let _ = writeln!(m, "format = {IMAGE_FORMAT}");
    let _ = writeln!(m, "n_neurons = {}", net.n_neurons);
    let _ = writeln!(m, "n_synapses = {}", net.n_synapses);
    let _ = writeln!(m, "n_hn = {}", p.n_hn);
    let _ = writeln!(m, "p = {}", p.p);
    let _ = writeln!(m, "substeps = {}", p.substeps);
    let _ = writeln!(m, "clock_hz = {}", p.clock_hz);
    let _ = writeln!(m, "neuron_attr_sets = {}", net.neuron_attr_sets.len());
    let _ = writeln!(m, "synapse_attr_sets = {}", net.synapse_attr_sets.len());
    for (h, hn) in net.hns.iter().enumerate() {
        let _ = writeln!(
            m,
            "hn.{h} = {}..{} rows={} nulls={}",
            hn.neurons.start,
            hn.neurons.end,
            hn.rows(),
            hn.null_slots()
        );
    }
    m
}

/// Serializes every file of the image into memory, keyed by relative path.
pub fn encode_image(net: &CompiledNetwork) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();

    let mut neurons = Vec::with_capacity(net.neurons.len() * NEURON_RECORD);
    for n in &net.neurons {
        neurons.write_u16::<LE>(n.attr_set.get()).unwrap();
        neurons.write_u16::<LE>(n.acdn_delay).unwrap();
        put_f32s(&mut neurons, &[n.soma.v, n.soma.m, n.soma.h, n.soma.n, n.post_trace]);
    }
    files.insert(PathBuf::from("neurons.bin"), neurons);

    let mut nattrs = Vec::new();
    for (index, a) in &net.neuron_attr_sets {
        nattrs.write_u16::<LE>(index.get()).unwrap();
        put_f32s(&mut nattrs, &[a.c_m, a.i_bias, a.tau_minus, a.a_minus]);
        nattrs.write_u16::<LE>(a.channels.len() as u16).unwrap();
        for ch in &a.channels {
            nattrs.extend_from_slice(&[gate_code(ch.gates), ch.p, ch.q, 0]);
            put_f32s(&mut nattrs, &[ch.g_bar, ch.v_eq]);
        }
    }
    files.insert(PathBuf::from("neuron_attrs.bin"), nattrs);

    let mut sattrs = Vec::with_capacity(net.synapse_attr_sets.len() * SYNAPSE_ATTR_RECORD);
    for (index, a) in &net.synapse_attr_sets {
        sattrs.write_u16::<LE>(index.get()).unwrap();
        sattrs.write_u16::<LE>(0).unwrap();
        put_f32s(
            &mut sattrs,
            &[
                a.stp.utilization,
                a.stp.release_scale,
                a.stp.tau_f,
                a.stp.tau_d,
                a.stp.tau_s,
                a.stdp.tau_plus,
                a.stdp.a_plus,
                a.stdp.eta_plus,
                a.stdp.eta_minus,
                a.stdp.w_max,
                a.membrane.g_syn,
                a.membrane.e_syn,
            ],
        );
    }
    files.insert(PathBuf::from("synapse_attrs.bin"), sattrs);

    for (h, hn) in net.hns.iter().enumerate() {
        let dir = PathBuf::from(hn_dir(h));
        let mut rows = Vec::with_capacity(hn.neuron_rows.len() * 8);
        for span in &hn.neuron_rows {
            rows.write_u32::<LE>(span.first).unwrap();
            rows.write_u32::<LE>(span.count).unwrap();
        }
        files.insert(dir.join("rows.bin"), rows);
        for (l, lane) in hn.lanes.iter().enumerate() {
            let mut buf = Vec::with_capacity(lane.len() * SLOT_RECORD);
            for slot in lane {
                encode_slot(&mut buf, slot);
            }
            files.insert(dir.join(lane_file(l)), buf);
        }
    }

    files.insert(PathBuf::from(MANIFEST), manifest_text(net).into_bytes());
    files
}

/// Writes the image into `dir`, each file atomically, manifest last.
pub fn write_image(net: &CompiledNetwork, dir: &Path) -> Result<()> {
    let mut files = encode_image(net);
    let manifest = files.remove(Path::new(MANIFEST)).expect("manifest encoded");
    for (rel, bytes) in &files {
        write_atomic(&dir.join(rel), bytes)?;
    }
    write_atomic(&dir.join(MANIFEST), &manifest)?;
    Ok(())
}

struct Manifest {
    values: BTreeMap<String, String>,
    hns: Vec<(u32, u32, usize)>,
}

impl Manifest {
    fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut hns = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, value) =
                line.split_once('=').ok_or_else(|| image_err(path, format!("malformed line '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(h) = key.strip_prefix("hn.") {
                let h: usize = h.parse().map_err(|_| image_err(path, format!("bad HN key '{key}'")))?;
                if h != hns.len() {
                    return Err(image_err(path, "HN entries out of order"));
                }
                let mut parts = value.split_whitespace();
                let range = parts.next().unwrap_or_default();
                let rows = parts.next().and_then(|r| r.strip_prefix("rows="));
                let parsed = range.split_once("..").and_then(|(a, b)| {
                    Some((a.parse().ok()?, b.parse().ok()?, rows?.parse().ok()?))
                });
                hns.push(parsed.ok_or_else(|| image_err(path, format!("bad HN entry '{value}'")))?);
            } else {
                values.insert(key.to_string(), value.to_string());
            }
        }
        Ok(Self { values, hns })
    }

    fn get<T: std::str::FromStr>(&self, path: &Path, key: &str) -> Result<T> {
        let raw = self.values.get(key).ok_or_else(|| image_err(path, format!("manifest lacks '{key}'")))?;
        raw.parse().map_err(|_| image_err(path, format!("bad value for '{key}': '{raw}'")))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| image_err(path, e.to_string()))
}

fn f32s<const N: usize>(cur: &mut Cursor<&[u8]>) -> std::io::Result<[f32; N]> {
    let mut out = [0f32; N];
    for v in &mut out {
        *v = cur.read_f32::<LE>()?;
    }
    Ok(out)
}

fn decode_neuron_attrs(path: &Path, bytes: &[u8]) -> Result<BTreeMap<AttrIndex, NeuronAttrs>> {
    let mut cur = Cursor::new(bytes);
    let mut out = BTreeMap::new();
    let trunc = |_| image_err(path, "truncated record");
    while (cur.position() as usize) < bytes.len() {
        let index = attr_index(cur.read_u16::<LE>().map_err(trunc)?, path)?;
        let [c_m, i_bias, tau_minus, a_minus] = f32s(&mut cur).map_err(trunc)?;
        let n_channels = cur.read_u16::<LE>().map_err(trunc)?;
        let mut channels = Vec::with_capacity(n_channels as usize);
        for _ in 0..n_channels {
            let mut head = [0u8; 4];
            cur.read_exact(&mut head).map_err(trunc)?;
            let gates = match head[0] {
                0 => GateKind::None,
                1 => GateKind::Mh,
                2 => GateKind::N,
                k => return Err(image_err(path, format!("unknown gate code {k}"))),
            };
            let [g_bar, v_eq] = f32s(&mut cur).map_err(trunc)?;
            channels.push(IonChannelSpec { g_bar, v_eq, p: head[1], q: head[2], gates });
        }
        out.insert(index, NeuronAttrs { c_m, channels, i_bias, tau_minus, a_minus });
    }
    Ok(out)
}

fn fixed_records<'a>(path: &Path, bytes: &'a [u8], size: usize, expected: usize) -> Result<Cursor<&'a [u8]>> {
    if bytes.len() != size * expected {
        return Err(image_err(
            path,
            format!("expected {expected} records of {size} bytes, found {} bytes", bytes.len()),
        ));
    }
    Ok(Cursor::new(bytes))
}

/// Reads an image written by [`write_image`].
pub fn read_image(dir: &Path) -> Result<CompiledNetwork> {
    let manifest_path = dir.join(MANIFEST);
    let text = String::from_utf8(read_file(&manifest_path)?)
        .map_err(|_| image_err(&manifest_path, "manifest is not UTF-8"))?;
    let m = Manifest::parse(&manifest_path, &text)?;
    let format: String = m.get(&manifest_path, "format")?;
    if format != IMAGE_FORMAT {
        return Err(image_err(&manifest_path, format!("unsupported format '{format}', expected '{IMAGE_FORMAT}'")));
    }
    let params = CompileParams {
        n_hn: m.get(&manifest_path, "n_hn")?,
        p: m.get(&manifest_path, "p")?,
        clock_hz: m.get(&manifest_path, "clock_hz")?,
        substeps: m.get(&manifest_path, "substeps")?,
    };
    params.check()?;
    let n_neurons: u32 = m.get(&manifest_path, "n_neurons")?;
    let n_synapses: u32 = m.get(&manifest_path, "n_synapses")?;
    if m.hns.len() != params.n_hn as usize {
        return Err(image_err(&manifest_path, "HN entry count differs from n_hn"));
    }

    let path = dir.join("neuron_attrs.bin");
    let neuron_attr_sets = decode_neuron_attrs(&path, &read_file(&path)?)?;

    let path = dir.join("synapse_attrs.bin");
    let bytes = read_file(&path)?;
    let count = bytes.len() / SYNAPSE_ATTR_RECORD;
    let mut cur = fixed_records(&path, &bytes, SYNAPSE_ATTR_RECORD, count)?;
    let mut synapse_attr_sets = BTreeMap::new();
    for _ in 0..count {
        let index = attr_index(cur.read_u16::<LE>()?, &path)?;
        cur.read_u16::<LE>()?;
        let v: [f32; 12] = f32s(&mut cur)?;
        synapse_attr_sets.insert(
            index,
            SynapseAttrs {
                stp: StpAttrs { utilization: v[0], release_scale: v[1], tau_f: v[2], tau_d: v[3], tau_s: v[4] },
                stdp: StdpAttrs { tau_plus: v[5], a_plus: v[6], eta_plus: v[7], eta_minus: v[8], w_max: v[9] },
                membrane: SynapseMembraneAttrs { g_syn: v[10], e_syn: v[11] },
            },
        );
    }

    let path = dir.join("neurons.bin");
    let bytes = read_file(&path)?;
    let mut cur = fixed_records(&path, &bytes, NEURON_RECORD, n_neurons as usize)?;
    let mut neurons = Vec::with_capacity(n_neurons as usize);
    for _ in 0..n_neurons {
        let attr_set = attr_index(cur.read_u16::<LE>()?, &path)?;
        let acdn_delay = cur.read_u16::<LE>()?;
        let [v, mg, h, n, y] = f32s(&mut cur)?;
        neurons.push(NeuronImage { attr_set, acdn_delay, soma: SomaState { v, m: mg, h, n }, post_trace: y });
    }

    let mut hns = Vec::with_capacity(m.hns.len());
    for (h, &(start, end, rows)) in m.hns.iter().enumerate() {
        let dir = dir.join(hn_dir(h));
        let path = dir.join("rows.bin");
        let bytes = read_file(&path)?;
        let owned = end.saturating_sub(start) as usize;
        let mut cur = fixed_records(&path, &bytes, 8, owned)?;
        let mut neuron_rows = Vec::with_capacity(owned);
        for _ in 0..owned {
            neuron_rows.push(RowSpan { first: cur.read_u32::<LE>()?, count: cur.read_u32::<LE>()? });
        }
        let mut lanes = Vec::with_capacity(params.p as usize);
        for l in 0..params.p as usize {
            let path = dir.join(lane_file(l));
            let bytes = read_file(&path)?;
            let mut cur = fixed_records(&path, &bytes, SLOT_RECORD, rows)?;
            let mut lane = Vec::with_capacity(rows);
            for _ in 0..rows {
                let mm_entry = cur.read_u32::<LE>()?;
                let owner = cur.read_u32::<LE>()?;
                let origin = cur.read_u32::<LE>()?;
                let attr_set = attr_index(cur.read_u16::<LE>()?, &path)?;
                let acds_delay = cur.read_u8()?;
                cur.read_u8()?;
                let [u, x, s, pre_trace, weight] = f32s(&mut cur)?;
                lane.push(SynapseSlot {
                    mm_entry,
                    attr_set,
                    acds_delay,
                    owner,
                    origin,
                    state: SynapseState { stp: StpState { u, x, s }, pre_trace, weight },
                });
            }
            lanes.push(lane);
        }
        hns.push(HnImage { neurons: start..end, neuron_rows, lanes });
    }

    Ok(CompiledNetwork {
        params,
        n_neurons,
        n_synapses,
        neuron_attr_sets,
        synapse_attr_sets,
        neurons,
        hns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::build_images;
    use crate::net::parse_network;

    fn three_neurons(n_hn: u32, p: u32) -> CompiledNetwork {
        let desc = parse_network(include_str!("../../../samples/three_neurons.net")).unwrap();
        build_images(&desc, &CompileParams { n_hn, p, ..Default::default() }).unwrap()
    }

    #[test]
    fn round_trip() {
        for (n_hn, p) in [(1, 2), (3, 1), (2, 4)] {
            let net = three_neurons(n_hn, p);
            let dir = tempfile::tempdir().unwrap();
            write_image(&net, dir.path()).unwrap();
            assert_eq!(read_image(dir.path()).unwrap(), net);
        }
    }

    #[test]
    fn recompilation_is_byte_identical() {
        let a = encode_image(&three_neurons(2, 2));
        let b = encode_image(&three_neurons(2, 2));
        assert_eq!(a, b);
        assert!(a.keys().any(|p| p.ends_with("hn001/lane01.bin")));
        let manifest = String::from_utf8(a[Path::new(MANIFEST)].clone()).unwrap();
        assert!(manifest.starts_with("format = nmimage/1\n"));
    }

    #[test]
    fn rejects_foreign_format_and_truncation() {
        let net = three_neurons(1, 2);
        let dir = tempfile::tempdir().unwrap();
        write_image(&net, dir.path()).unwrap();
        let lane = dir.path().join("hn000/lane00.bin");
        let bytes = fs::read(&lane).unwrap();
        fs::write(&lane, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_image(dir.path()), Err(Error::Image { .. })));
        fs::write(&lane, &bytes).unwrap();
        let manifest = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&manifest).unwrap().replace("nmimage/1", "nmimage/99");
        fs::write(&manifest, text).unwrap();
        assert!(matches!(read_image(dir.path()), Err(Error::Image { .. })));
    }
}
