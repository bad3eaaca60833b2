//! Line-oriented text form of a [`NetworkDescription`].
//!
//! ```text
//! [header]
//! format = nmnet/1
//! n_neurons = 3
//!
//! [neuron_attr_sets]
//! # index key=value ...
//! 0 c_m=1 i_bias=0 tau_minus=20 a_minus=1 channel=mh:120:50:3:1 channel=n:36:-77:4:0
//!
//! [synapse_attr_sets]
//! 0 U=0.2 A=1 tau_f=100 tau_d=200 tau_s=5 tau_plus=20 a_plus=1 eta_plus=0.01 eta_minus=0.01 w_max=1 g_syn=0.1 e_syn=0
//!
//! [neurons]
//! # id attr_set acdn_delay [v_init]
//! 0 0 0
//!
//! [synapses]
//! # post pre attr_set acds_delay w_init
//! 0 1 0 0 0.5
//! ```
//!
//! The full grammar, including defaults for omitted keys, is in
//! `docs/formats.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{AttrIndex, NetworkDescription, NeuronDecl, SynapseAttrs, SynapseDecl, NULL_NEURON};
use crate::error::{Error, Result};
use crate::model::{GateKind, IonChannelSpec, NeuronAttrs, REST_POTENTIAL};

pub const NETWORK_FORMAT: &str = "nmnet/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Header,
    NeuronAttrSets,
    SynapseAttrSets,
    Neurons,
    Synapses,
}

impl Section {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "header" => Section::Header,
            "neuron_attr_sets" => Section::NeuronAttrSets,
            "synapse_attr_sets" => Section::SynapseAttrSets,
            "neurons" => Section::Neurons,
            "synapses" => Section::Synapses,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::Header => "header",
            Section::NeuronAttrSets => "neuron_attr_sets",
            Section::SynapseAttrSets => "synapse_attr_sets",
            Section::Neurons => "neurons",
            Section::Synapses => "synapses",
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn number<T: FromStr>(line: usize, what: &str, token: &str) -> Result<T> {
    token.parse().map_err(|_| err(line, format!("invalid {what} '{token}'")))
}

fn attr_index(line: usize, token: &str) -> Result<AttrIndex> {
    let raw: u32 = number(line, "attribute set index", token)?;
    AttrIndex::new(raw)
        .ok_or_else(|| err(line, format!("index out of range: attribute set {raw} exceeds the 10-bit table")))
}

fn neuron_id(line: usize, token: &str) -> Result<u32> {
    let id: u32 = number(line, "neuron id", token)?;
    if id >= NULL_NEURON {
        return Err(err(line, format!("neuron id {id} out of range (24-bit, {NULL_NEURON} reserved)")));
    }
    Ok(id)
}

fn key_values<'a>(
    line: usize,
    tokens: impl Iterator<Item = &'a str>,
) -> Result<Vec<(&'a str, &'a str)>> {
    tokens
        .map(|t| t.split_once('=').ok_or_else(|| err(line, format!("expected key=value, got '{t}'"))))
        .collect()
}

fn parse_channel(line: usize, value: &str) -> Result<IonChannelSpec> {
    let parts: Vec<&str> = value.split(':').collect();
    let [kind, g_bar, v_eq, p, q] = parts[..] else {
        return Err(err(line, format!("channel '{value}' must be kind:g_bar:v_eq:p:q")));
    };
    Ok(IonChannelSpec {
        gates: GateKind::from_name(kind).ok_or_else(|| err(line, format!("unknown gate kind '{kind}'")))?,
        g_bar: number(line, "g_bar", g_bar)?,
        v_eq: number(line, "v_eq", v_eq)?,
        p: number(line, "exponent p", p)?,
        q: number(line, "exponent q", q)?,
    })
}

fn parse_neuron_attrs(line: usize, fields: &[(&str, &str)]) -> Result<NeuronAttrs> {
    let mut attrs = NeuronAttrs::default();
    let mut channels = Vec::new();
    for &(key, value) in fields {
        match key {
            "c_m" => attrs.c_m = number(line, key, value)?,
            "i_bias" => attrs.i_bias = number(line, key, value)?,
            "tau_minus" => attrs.tau_minus = number(line, key, value)?,
            "a_minus" => attrs.a_minus = number(line, key, value)?,
            "channel" => channels.push(parse_channel(line, value)?),
            _ => return Err(err(line, format!("unknown field '{key}'"))),
        }
    }
    if !channels.is_empty() {
        attrs.channels = channels;
    }
    Ok(attrs)
}

fn parse_synapse_attrs(line: usize, fields: &[(&str, &str)]) -> Result<SynapseAttrs> {
    let mut a = SynapseAttrs::default();
    for &(key, value) in fields {
        let slot = match key {
            "U" => &mut a.stp.utilization,
            "A" => &mut a.stp.release_scale,
            "tau_f" => &mut a.stp.tau_f,
            "tau_d" => &mut a.stp.tau_d,
            "tau_s" => &mut a.stp.tau_s,
            "tau_plus" => &mut a.stdp.tau_plus,
            "a_plus" => &mut a.stdp.a_plus,
            "eta_plus" => &mut a.stdp.eta_plus,
            "eta_minus" => &mut a.stdp.eta_minus,
            "w_max" => &mut a.stdp.w_max,
            "g_syn" => &mut a.membrane.g_syn,
            "e_syn" => &mut a.membrane.e_syn,
            _ => return Err(err(line, format!("unknown field '{key}'"))),
        };
        *slot = number(line, key, value)?;
    }
    Ok(a)
}

/// Parses the text form. Structural problems (syntax, unknown fields,
/// missing sections, field-width overflow) are errors here; semantic
/// consistency is left to [`validate`](super::validate).
pub fn parse_network(text: &str) -> Result<NetworkDescription> {
    let mut desc = NetworkDescription::default();
    let mut seen: BTreeMap<Section, usize> = BTreeMap::new();
    let mut current: Option<Section> = None;
    let mut n_neurons: Option<u32> = None;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let section = Section::from_name(name.trim())
                .ok_or_else(|| err(line, format!("unknown section [{name}]")))?;
            if seen.insert(section, line).is_some() {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            current = Some(section);
            continue;
        }
        let section = current.ok_or_else(|| err(line, "record outside of any section"))?;
        let mut tokens = content.split_whitespace();
        match section {
            Section::Header => {
                let (key, value) = content
                    .split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| err(line, "expected key = value"))?;
                match key {
                    "format" if value == NETWORK_FORMAT => {}
                    "format" => return Err(err(line, format!("unsupported format '{value}'"))),
                    "n_neurons" => n_neurons = Some(number(line, key, value)?),
                    _ => return Err(err(line, format!("unknown field '{key}'"))),
                }
            }
            Section::NeuronAttrSets | Section::SynapseAttrSets => {
                let index = attr_index(line, tokens.next().unwrap_or_default())?;
                let fields = key_values(line, tokens)?;
                let duplicate = if section == Section::NeuronAttrSets {
                    desc.neuron_attr_sets.insert(index, parse_neuron_attrs(line, &fields)?).is_some()
                } else {
                    desc.synapse_attr_sets.insert(index, parse_synapse_attrs(line, &fields)?).is_some()
                };
                if duplicate {
                    return Err(err(line, format!("attribute set {index} defined twice")));
                }
            }
            Section::Neurons => {
                let cols: Vec<&str> = tokens.collect();
                if !(3..=4).contains(&cols.len()) {
                    return Err(err(line, "neuron record is: id attr_set acdn_delay [v_init]"));
                }
                desc.neurons.push(NeuronDecl {
                    id: neuron_id(line, cols[0])?,
                    attr_set: attr_index(line, cols[1])?,
                    acdn_delay: number(line, "acdn_delay", cols[2])?,
                    v_init: match cols.get(3) {
                        Some(v) => number(line, "v_init", v)?,
                        None => REST_POTENTIAL,
                    },
                });
            }
            Section::Synapses => {
                let cols: Vec<&str> = tokens.collect();
                if cols.len() != 5 {
                    return Err(err(line, "synapse record is: post pre attr_set acds_delay w_init"));
                }
                desc.synapses.push(SynapseDecl {
                    post: neuron_id(line, cols[0])?,
                    pre: neuron_id(line, cols[1])?,
                    attr_set: attr_index(line, cols[2])?,
                    acds_delay: number(line, "acds_delay", cols[3])?,
                    w_init: number(line, "w_init", cols[4])?,
                });
            }
        }
    }

    for required in [Section::Header, Section::NeuronAttrSets, Section::Neurons] {
        if !seen.contains_key(&required) {
            return Err(err(last_line + 1, format!("missing section [{}]", required.name())));
        }
    }
    desc.n_neurons = n_neurons.ok_or_else(|| err(seen[&Section::Header], "header lacks n_neurons"))?;
    Ok(desc)
}

impl NetworkDescription {
    /// Canonical text form; `parse_network(&d.to_text())` reproduces `d`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[header]\nformat = {NETWORK_FORMAT}\nn_neurons = {}", self.n_neurons);

        out.push_str("\n[neuron_attr_sets]\n");
        for (index, a) in &self.neuron_attr_sets {
            let _ = write!(
                out,
                "{index} c_m={} i_bias={} tau_minus={} a_minus={}",
                a.c_m, a.i_bias, a.tau_minus, a.a_minus
            );
            for ch in &a.channels {
                let _ = write!(out, " channel={}:{}:{}:{}:{}", ch.gates.as_str(), ch.g_bar, ch.v_eq, ch.p, ch.q);
            }
            out.push('\n');
        }

        out.push_str("\n[synapse_attr_sets]\n");
        for (index, a) in &self.synapse_attr_sets {
            let _ = writeln!(
                out,
                "{index} U={} A={} tau_f={} tau_d={} tau_s={} tau_plus={} a_plus={} eta_plus={} eta_minus={} w_max={} g_syn={} e_syn={}",
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
            );
        }

        out.push_str("\n[neurons]\n# id attr_set acdn_delay v_init\n");
        for n in &self.neurons {
            let _ = writeln!(out, "{} {} {} {}", n.id, n.attr_set, n.acdn_delay, n.v_init);
        }

        out.push_str("\n[synapses]\n# post pre attr_set acds_delay w_init\n");
        for s in &self.synapses {
            let _ = writeln!(out, "{} {} {} {} {}", s.post, s.pre, s.attr_set, s.acds_delay, s.w_init);
        }
        out
    }
}
