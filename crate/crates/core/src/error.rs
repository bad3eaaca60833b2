use std::path::PathBuf;

use crate::net::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("network description is invalid ({} violation(s)): {}", .0.len(), join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("attribute set {0} is not defined")]
    MissingAttrSet(u16),

    #[error("cannot split {n_neurons} neurons over {n_hn} hardware neurons")]
    Partition { n_neurons: u32, n_hn: u32 },

    #[error("invalid compile parameters: {0}")]
    Params(String),

    #[error("numerical instability in neuron {neuron} at step {step} (V = {v})")]
    Instability { neuron: u32, step: u64, v: f32 },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("probe target {0} does not exist in the compiled network")]
    ProbeTarget(String),

    #[error("stimulus: {0}")]
    Stimulus(String),

    #[error("mismatched dimensions: {0}")]
    Dimensions(String),

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
