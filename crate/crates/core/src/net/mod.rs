//! Network description: neurons, synapses and the two attribute-set tables.
//!
//! Attribute sets are addressed by a 10-bit index and neuron ids by a 24-bit
//! id. Those widths are enforced as hard limits so that a description always
//! fits the addressing model of the compiled image.

mod text;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{NeuronAttrs, StdpAttrs, StpAttrs, SynapseMembraneAttrs};

pub use text::{parse_network, NETWORK_FORMAT};
pub use validate::validate;

/// Width of a neuron id in the spike memory.
pub const NEURON_ID_BITS: u32 = 24;
/// Reserved presynaptic id of a null synapse.
pub const NULL_NEURON: u32 = (1 << NEURON_ID_BITS) - 1;
/// Entries per attribute-set table (10-bit index).
pub const ATTR_TABLE_SIZE: u16 = 1024;
pub const MAX_ACDN_DELAY: u16 = 256;
pub const MAX_ACDS_DELAY: u8 = 24;

/// 10-bit attribute-set index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrIndex(u16);

impl AttrIndex {
    pub fn new(index: u32) -> Option<Self> {
        (index < ATTR_TABLE_SIZE as u32).then_some(Self(index as u16))
    }

    pub fn get(self) -> u16 {
        self.0
    }
}

impl fmt::Display for AttrIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The attribute bundle shared by every synapse that references one index.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SynapseAttrs {
    pub stp: StpAttrs,
    pub stdp: StdpAttrs,
    pub membrane: SynapseMembraneAttrs,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuronDecl {
    pub id: u32,
    pub attr_set: AttrIndex,
    /// Per-neuron axonal delay (ms).
    pub acdn_delay: u16,
    pub v_init: f32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynapseDecl {
    pub post: u32,
    pub pre: u32,
    pub attr_set: AttrIndex,
    /// Per-synapse axonal delay (ms).
    pub acds_delay: u8,
    pub w_init: f32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkDescription {
    pub n_neurons: u32,
    pub neuron_attr_sets: BTreeMap<AttrIndex, NeuronAttrs>,
    pub synapse_attr_sets: BTreeMap<AttrIndex, SynapseAttrs>,
    pub neurons: Vec<NeuronDecl>,
    pub synapses: Vec<SynapseDecl>,
}

impl NetworkDescription {
    pub fn resolve_attrs(&self, index: AttrIndex) -> Result<&SynapseAttrs> {
        self.synapse_attr_sets.get(&index).ok_or(Error::MissingAttrSet(index.get()))
    }

    pub fn resolve_neuron_attrs(&self, index: AttrIndex) -> Result<&NeuronAttrs> {
        self.neuron_attr_sets.get(&index).ok_or(Error::MissingAttrSet(index.get()))
    }

    /// Declaration indices of each neuron's inbound synapses, in declaration
    /// order. Out-of-range post ids are skipped.
    pub fn inbound_synapses(&self) -> Vec<Vec<u32>> {
        let mut groups = vec![Vec::new(); self.n_neurons as usize];
        for (k, syn) in self.synapses.iter().enumerate() {
            if let Some(g) = groups.get_mut(syn.post as usize) {
                g.push(k as u32);
            }
        }
        groups
    }

    /// Neuron declarations indexed by id. Only meaningful after validation.
    pub fn neurons_by_id(&self) -> Vec<Option<&NeuronDecl>> {
        let mut out = vec![None; self.n_neurons as usize];
        for decl in &self.neurons {
            if let Some(slot) = out.get_mut(decl.id as usize) {
                *slot = Some(decl);
            }
        }
        out
    }
}

/// One reason a description cannot be compiled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
