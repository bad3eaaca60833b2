//! Global spike history (the MX memory) and per-neuron axonal delay rings.

/// Slots kept in the history ring: the deepest per-synapse delay (24) plus
/// the one-step bus latency plus the slot being written.
pub const HISTORY_DEPTH: usize = 26;
/// Bits in one axonal delay ring: the deepest per-neuron delay plus one.
pub const ACDN_RING_BITS: usize = 257;

/// Ring of published spike vectors indexed by absolute network timestep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeHistory {
    words: usize,
    slots: Vec<u64>,
}

impl SpikeHistory {
    pub fn new(n_neurons: u32) -> Self {
        let words = (n_neurons as usize).div_ceil(64);
        Self { words, slots: vec![0; words * HISTORY_DEPTH] }
    }

    pub fn words_per_step(&self) -> usize {
        self.words
    }

    /// Bit of `neuron` published at `step`. The caller guarantees `step` is
    /// within the last `HISTORY_DEPTH` published steps.
    #[inline]
    pub fn bit(&self, step: u64, neuron: u32) -> bool {
        let base = (step % HISTORY_DEPTH as u64) as usize * self.words;
        let w = self.slots[base + (neuron as usize >> 6)];
        (w >> (neuron & 63)) & 1 == 1
    }

    /// What a network unit sees at step `now` for a synapse with delay
    /// `delay`: the bit published at `now - 1 - delay`, or 0 before time 0.
    #[inline]
    pub fn read(&self, now: u64, delay: u8, neuron: u32) -> bool {
        let lag = 1 + delay as u64;
        now >= lag && self.bit(now - lag, neuron)
    }

    /// Clears the slot of `step` before it is filled.
    pub fn clear(&mut self, step: u64) {
        let base = (step % HISTORY_DEPTH as u64) as usize * self.words;
        self.slots[base..base + self.words].fill(0);
    }

    pub fn set(&mut self, step: u64, neuron: u32) {
        let base = (step % HISTORY_DEPTH as u64) as usize * self.words;
        self.slots[base + (neuron as usize >> 6)] |= 1 << (neuron & 63);
    }

    pub fn raw_slots(&self) -> &[u64] {
        &self.slots
    }

    pub fn raw_slots_mut(&mut self) -> &mut [u64] {
        &mut self.slots
    }
}

/// Per-neuron delay line holding the last 257 raw spike bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AcdnRing(pub [u64; 5]);

impl AcdnRing {
    /// Records the raw bit of step `t`, overwriting step `t - 257`.
    #[inline]
    pub fn push(&mut self, t: u64, bit: bool) {
        let pos = (t % ACDN_RING_BITS as u64) as usize;
        let mask = 1u64 << (pos & 63);
        if bit {
            self.0[pos >> 6] |= mask;
        } else {
            self.0[pos >> 6] &= !mask;
        }
    }

    /// Raw bit of step `t - delay`, or 0 when that precedes time 0.
    #[inline]
    pub fn delayed(&self, t: u64, delay: u16) -> bool {
        let Some(src) = t.checked_sub(delay as u64) else { return false };
        let pos = (src % ACDN_RING_BITS as u64) as usize;
        (self.0[pos >> 6] >> (pos & 63)) & 1 == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_latency_and_wraparound() {
        let mut h = SpikeHistory::new(130);
        for t in 0..100u64 {
            h.clear(t);
            if t % 7 == 0 {
                h.set(t, 129);
            }
            for d in 0..=24u8 {
                // Reads happen before step t + 1 publishes.
                let now = t + 1;
                let expect = now > d as u64 && (now - 1 - d as u64).is_multiple_of(7);
                assert_eq!(h.read(now, d, 129), expect, "now={now} d={d}");
                assert!(!h.read(now, d, 128));
            }
        }
    }

    #[test]
    fn acdn_ring_delays() {
        for delay in [0u16, 1, 5, 255, 256] {
            let mut r = AcdnRing::default();
            let mut first = None;
            for t in 0..800u64 {
                r.push(t, t == 10 || t == 600);
                if r.delayed(t, delay) && first.is_none() {
                    first = Some(t);
                }
                if t == 599 {
                    assert!(!r.delayed(t, delay) || t == 10 + delay as u64);
                }
            }
            assert_eq!(first, Some(10 + delay as u64));
        }
    }
}
