//! Neuron partitioning and lane packing.
//!
//! Each hardware neuron (HN) owns a contiguous block of neuron ids and
//! processes all of their inbound synapses through `p` parallel lanes. A
//! neuron's synapses are cut into `p`-wide rows and the rows of consecutive
//! neurons are stacked, so synapse `j` of local neuron `i` lands at
//! lane `j % p`, row `row_offset(i) + j / p`. The unused tail of a neuron's
//! last row is padded with null slots.

use std::ops::Range;

use crate::error::{Error, Result};

/// Contiguous ceiling split: HN `h` owns `[h·c, min((h+1)·c, n))` with
/// `c = ceil(n / n_hn)`. Trailing HNs may be short or empty.
pub fn partition(n_neurons: u32, n_hn: u32) -> Result<Vec<Range<u32>>> {
    if n_hn == 0 || n_hn > n_neurons.max(1) {
        return Err(Error::Partition { n_neurons, n_hn });
    }
    let chunk = n_neurons.div_ceil(n_hn);
    Ok((0..n_hn)
        .map(|h| {
            let start = (h * chunk).min(n_neurons);
            start..(start + chunk).min(n_neurons)
        })
        .collect())
}

/// Rows `[first, first + count)` belonging to one neuron.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RowSpan {
    pub first: u32,
    pub count: u32,
}

impl RowSpan {
    pub fn rows(self) -> Range<usize> {
        self.first as usize..(self.first + self.count) as usize
    }
}

/// Lane arrays for one HN. `None` marks a null slot.
#[derive(Clone, Debug, PartialEq)]
pub struct LaneLayout<T> {
    pub lanes: Vec<Vec<Option<T>>>,
    pub neuron_rows: Vec<RowSpan>,
}

impl<T> LaneLayout<T> {
    /// Common length of every lane.
    pub fn lane_len(&self) -> usize {
        self.lanes.first().map_or(0, Vec::len)
    }

    pub fn null_count(&self) -> usize {
        self.lanes.iter().flatten().filter(|s| s.is_none()).count()
    }

    pub fn slot(&self, lane: usize, row: usize) -> Option<&T> {
        self.lanes.get(lane)?.get(row)?.as_ref()
    }
}

/// Packs each neuron's synapse group (in order) into `p` lanes.
pub fn layout_lanes<T: Copy>(groups: &[Vec<T>], p: usize) -> LaneLayout<T> {
    assert!(p >= 1, "lane count must be positive");
    let mut neuron_rows = Vec::with_capacity(groups.len());
    let mut total_rows = 0u32;
    for g in groups {
        let count = g.len().div_ceil(p) as u32;
        neuron_rows.push(RowSpan { first: total_rows, count });
        total_rows += count;
    }
    let mut lanes = vec![vec![None; total_rows as usize]; p];
    for (g, span) in groups.iter().zip(&neuron_rows) {
        for (j, &item) in g.iter().enumerate() {
            lanes[j % p][span.first as usize + j / p] = Some(item);
        }
    }
    LaneLayout { lanes, neuron_rows }
}

/// Null slots produced by padding groups of the given sizes to width `p`.
pub fn expected_nulls(group_sizes: impl IntoIterator<Item = usize>, p: usize) -> usize {
    group_sizes.into_iter().map(|n| p * n.div_ceil(p) - n).sum()
}
