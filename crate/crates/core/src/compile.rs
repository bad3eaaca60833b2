//! Turns a validated [`NetworkDescription`] into per-HN memory images.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::layout::{layout_lanes, partition, RowSpan};
use crate::model::{NeuronAttrs, SomaState, SynapseState, SUBSTEPS};
use crate::net::{validate, AttrIndex, NetworkDescription, SynapseAttrs, NULL_NEURON};

/// Marks a slot that does not originate from any declared synapse.
pub const NO_ORIGIN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompileParams {
    pub n_hn: u32,
    /// Lanes (NU/SNU pairs) per HN.
    pub p: u32,
    pub clock_hz: f64,
    /// Neuron timesteps per network timestep.
    pub substeps: u32,
}

impl Default for CompileParams {
    fn default() -> Self {
        Self { n_hn: 1, p: 2, clock_hz: 300e6, substeps: SUBSTEPS }
    }
}

impl CompileParams {
    pub fn check(&self) -> Result<()> {
        if self.n_hn == 0 {
            return Err(Error::Params("n_hn must be at least 1".into()));
        }
        if self.p == 0 {
            return Err(Error::Params("p must be at least 1".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Params("substeps must be at least 1".into()));
        }
        if !(self.clock_hz > 0.0) || !self.clock_hz.is_finite() {
            return Err(Error::Params("clock_hz must be positive".into()));
        }
        Ok(())
    }
}

/// One lane entry: the MM table value plus the SNU's per-synapse memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynapseSlot {
    /// Presynaptic neuron id, or [`NULL_NEURON`].
    pub mm_entry: u32,
    pub attr_set: AttrIndex,
    pub acds_delay: u8,
    /// Postsynaptic neuron.
    pub owner: u32,
    /// Declaration index of the source synapse, or [`NO_ORIGIN`].
    pub origin: u32,
    pub state: SynapseState,
}

impl SynapseSlot {
    pub fn null(owner: u32) -> Self {
        Self {
            mm_entry: NULL_NEURON,
            attr_set: AttrIndex::default(),
            acds_delay: 0,
            owner,
            origin: NO_ORIGIN,
            state: SynapseState::NULL,
        }
    }

    pub fn is_null(&self) -> bool {
        self.mm_entry == NULL_NEURON
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuronImage {
    pub attr_set: AttrIndex,
    pub acdn_delay: u16,
    pub soma: SomaState,
    pub post_trace: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HnImage {
    pub neurons: Range<u32>,
    /// Row span of each owned neuron, in id order.
    pub neuron_rows: Vec<RowSpan>,
    /// `p` lanes of identical length.
    pub lanes: Vec<Vec<SynapseSlot>>,
}

impl HnImage {
    pub fn rows(&self) -> usize {
        self.lanes.first().map_or(0, Vec::len)
    }

    pub fn null_slots(&self) -> usize {
        self.lanes.iter().flatten().filter(|s| s.is_null()).count()
    }

    /// Presynaptic ids of one lane in row order.
    pub fn mm_table(&self, lane: usize) -> Vec<u32> {
        self.lanes[lane].iter().map(|s| s.mm_entry).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledNetwork {
    pub params: CompileParams,
    pub n_neurons: u32,
    pub n_synapses: u32,
    pub neuron_attr_sets: BTreeMap<AttrIndex, NeuronAttrs>,
    pub synapse_attr_sets: BTreeMap<AttrIndex, SynapseAttrs>,
    /// Indexed by neuron id.
    pub neurons: Vec<NeuronImage>,
    pub hns: Vec<HnImage>,
}

impl CompiledNetwork {
    pub fn max_rows(&self) -> usize {
        self.hns.iter().map(HnImage::rows).max().unwrap_or(0)
    }

    pub fn null_slots(&self) -> usize {
        self.hns.iter().map(HnImage::null_slots).sum()
    }

    /// `(hn, lane, row)` of every declared synapse, by declaration index.
    pub fn origin_index(&self) -> Vec<(u32, u32, u32)> {
        let mut index = vec![(u32::MAX, u32::MAX, u32::MAX); self.n_synapses as usize];
        for (h, hn) in self.hns.iter().enumerate() {
            for (l, lane) in hn.lanes.iter().enumerate() {
                for (r, slot) in lane.iter().enumerate() {
                    if slot.origin != NO_ORIGIN {
                        index[slot.origin as usize] = (h as u32, l as u32, r as u32);
                    }
                }
            }
        }
        index
    }
}

/// Validates, partitions and lays out `desc`. Deterministic in its inputs.
pub fn build_images(desc: &NetworkDescription, params: &CompileParams) -> Result<CompiledNetwork> {
    params.check()?;
    let violations = validate(desc);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let ranges = partition(desc.n_neurons, params.n_hn)?;

    let neurons = desc
        .neurons_by_id()
        .into_iter()
        .map(|decl| {
            let decl = decl.expect("validated: every id declared");
            NeuronImage {
                attr_set: decl.attr_set,
                acdn_delay: decl.acdn_delay,
                soma: SomaState::at_rest(decl.v_init),
                post_trace: 0.0,
            }
        })
        .collect();

    let inbound = desc.inbound_synapses();
    let p = params.p as usize;
    let hns = ranges
        .into_iter()
        .map(|range| {
            let groups = &inbound[range.start as usize..range.end as usize];
            let layout = layout_lanes(groups, p);
            let mut lanes = Vec::with_capacity(p);
            for lane in &layout.lanes {
                lanes.push(Vec::with_capacity(lane.len()));
            }
            for (local, span) in layout.neuron_rows.iter().enumerate() {
                let owner = range.start + local as u32;
                for row in span.rows() {
                    for (l, lane) in layout.lanes.iter().enumerate() {
                        let slot = match lane[row] {
                            None => SynapseSlot::null(owner),
                            Some(k) => {
                                let syn = &desc.synapses[k as usize];
                                SynapseSlot {
                                    mm_entry: syn.pre,
                                    attr_set: syn.attr_set,
                                    acds_delay: syn.acds_delay,
                                    owner,
                                    origin: k,
                                    state: SynapseState::initial(syn.w_init),
                                }
                            }
                        };
                        lanes[l].push(slot);
                    }
                }
            }
            HnImage { neurons: range, neuron_rows: layout.neuron_rows, lanes }
        })
        .collect();

    Ok(CompiledNetwork {
        params: *params,
        n_neurons: desc.n_neurons,
        n_synapses: desc.synapses.len() as u32,
        neuron_attr_sets: desc.neuron_attr_sets.clone(),
        synapse_attr_sets: desc.synapse_attr_sets.clone(),
        neurons,
        hns,
    })
}
