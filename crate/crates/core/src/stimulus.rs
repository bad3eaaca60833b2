//! Sparse external current injections.
//!
//! A stimulus file has one `timestep neuron_id current` record per line
//! (`#` starts a comment). The current (µA/cm²) is added to the neuron's
//! external input for all substeps of that one network timestep. Several
//! records for the same neuron and step add up in file order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stimulus {
    by_step: BTreeMap<u64, Vec<(u32, f32)>>,
}

impl Stimulus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut stim = Stimulus::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |what: &str| Error::Parse { line: i + 1, message: format!("stimulus: {what}") };
            let cols: Vec<&str> = content.split_whitespace().collect();
            let [step, id, current] = cols[..] else {
                return Err(parse_err("expected 'timestep neuron_id current'"));
            };
            let step = step.parse().map_err(|_| parse_err("invalid timestep"))?;
            let id = id.parse().map_err(|_| parse_err("invalid neuron id"))?;
            let current: f32 = current.parse().map_err(|_| parse_err("invalid current"))?;
            if !current.is_finite() {
                return Err(parse_err("current must be finite"));
            }
            stim.add(step, id, current);
        }
        Ok(stim)
    }

    pub fn add(&mut self, step: u64, neuron: u32, current: f32) {
        self.by_step.entry(step).or_default().push((neuron, current));
    }

    pub fn is_empty(&self) -> bool {
        self.by_step.is_empty()
    }

    pub fn max_neuron(&self) -> Option<u32> {
        self.by_step.values().flatten().map(|&(id, _)| id).max()
    }

    /// Errors if any record targets a neuron outside `0..n_neurons`.
    pub fn check_targets(&self, n_neurons: u32) -> Result<()> {
        match self.max_neuron() {
            Some(id) if id >= n_neurons => {
                Err(Error::Stimulus(format!("neuron {id} out of range (n_neurons = {n_neurons})")))
            }
            _ => Ok(()),
        }
    }

    /// Writes the extra current of `step` into a dense per-neuron buffer.
    pub fn fill(&self, step: u64, buf: &mut [f32]) {
        buf.fill(0.0);
        if let Some(entries) = self.by_step.get(&step) {
            for &(id, current) in entries {
                buf[id as usize] += current;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_fill() {
        let s = Stimulus::parse("# t id I\n3 1 2.5\n3 1 0.5\n4 0 -1\n").unwrap();
        let mut buf = vec![9.0; 2];
        s.fill(3, &mut buf);
        assert_eq!(buf, vec![0.0, 3.0]);
        s.fill(4, &mut buf);
        assert_eq!(buf, vec![-1.0, 0.0]);
        s.fill(5, &mut buf);
        assert_eq!(buf, vec![0.0, 0.0]);
        assert!(s.check_targets(2).is_ok());
        assert!(s.check_targets(1).is_err());
    }

    #[test]
    fn malformed_line() {
        let e = Stimulus::parse("1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
