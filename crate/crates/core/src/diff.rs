//! Comparison of two runs' rasters and probe traces.
//!
//! Trace lines are compared field by field. Bare fields (timestep, substep)
//! and `neuron=`, `synapse=`, `t=` fields identify the record and must match
//! exactly; every other `name=value` field is numeric and compared with the
//! deviation `|a - b| / max(1, |a|, |b|)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::record::Raster;

#[derive(Clone, Debug, PartialEq)]
pub enum DiffReport {
    Identical,
    WithinTolerance { max_dev: f64 },
    /// First `(step, neuron)` spiking in only one run.
    Spike { step: u64, neuron: u32, only_in_a: bool },
    Trace { line: usize, record: String, field: String, a: String, b: String },
}

impl DiffReport {
    pub fn is_match(&self) -> bool {
        matches!(self, DiffReport::Identical | DiffReport::WithinTolerance { .. })
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffReport::Identical => f.write_str("identical"),
            DiffReport::WithinTolerance { max_dev } => {
                write!(f, "identical within tolerance (max deviation {max_dev:e})")
            }
            DiffReport::Spike { step, neuron, only_in_a } => write!(
                f,
                "first divergence at step {step}: neuron {neuron} spikes only in run {}",
                if *only_in_a { "A" } else { "B" }
            ),
            DiffReport::Trace { line, record, field, a, b } => {
                write!(f, "first divergence at trace line {line} ({record}): {field} = {a} vs {b}")
            }
        }
    }
}

fn first_spike_difference(a: &Raster, b: &Raster) -> Option<DiffReport> {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.events.get(i), b.events.get(j)) {
            (None, None) => return None,
            (Some(&(step, neuron)), None) => return Some(DiffReport::Spike { step, neuron, only_in_a: true }),
            (None, Some(&(step, neuron))) => return Some(DiffReport::Spike { step, neuron, only_in_a: false }),
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(&x), Some(&y)) => {
                let (ev, only_in_a) = if x < y { (x, true) } else { (y, false) };
                return Some(DiffReport::Spike { step: ev.0, neuron: ev.1, only_in_a });
            }
        }
    }
}

fn is_key(name: &str) -> bool {
    matches!(name, "neuron" | "synapse" | "t")
}

struct Parsed<'a> {
    key: Vec<&'a str>,
    values: Vec<(&'a str, &'a str)>,
}

fn parse_line(line: &str) -> Parsed<'_> {
    let mut key = Vec::new();
    let mut values = Vec::new();
    for field in line.split(',') {
        match field.split_once('=') {
            Some((name, v)) if !is_key(name) => values.push((name, v)),
            _ => key.push(field),
        }
    }
    Parsed { key, values }
}

/// Compares two runs. `tolerance = 0` requires numerically equal traces.
pub fn diff_runs(raster_a: &Raster, raster_b: &Raster, traces_a: &str, traces_b: &str, tolerance: f64) -> Result<DiffReport> {
    let la: Vec<&str> = traces_a.lines().filter(|l| !l.trim().is_empty()).collect();
    let lb: Vec<&str> = traces_b.lines().filter(|l| !l.trim().is_empty()).collect();
    if la.len() != lb.len() {
        return Err(Error::Dimensions(format!("{} trace records vs {}", la.len(), lb.len())));
    }
    if let Some(report) = first_spike_difference(raster_a, raster_b) {
        return Ok(report);
    }
    let mut max_dev = 0.0f64;
    for (n, (a, b)) in la.iter().zip(&lb).enumerate() {
        let (pa, pb) = (parse_line(a), parse_line(b));
        let same_names = pa.values.len() == pb.values.len() && pa.values.iter().zip(&pb.values).all(|(x, y)| x.0 == y.0);
        if pa.key != pb.key || !same_names {
            return Err(Error::Dimensions(format!("trace line {} describes different records: '{a}' vs '{b}'", n + 1)));
        }
        for (&(name, va), &(_, vb)) in pa.values.iter().zip(&pb.values) {
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse { line: n + 1, message: format!("non-numeric value '{s}'") })
            };
            let (x, y) = (parse(va)?, parse(vb)?);
            let dev = if x == y || (x.is_nan() && y.is_nan()) {
                0.0
            } else {
                (x - y).abs() / 1f64.max(x.abs()).max(y.abs())
            };
            if !(dev <= tolerance) {
                return Ok(DiffReport::Trace {
                    line: n + 1,
                    record: pa.key.join(","),
                    field: name.to_string(),
                    a: va.to_string(),
                    b: vb.to_string(),
                });
            }
            max_dev = max_dev.max(dev);
        }
    }
    Ok(if max_dev == 0.0 { DiffReport::Identical } else { DiffReport::WithinTolerance { max_dev } })
}
