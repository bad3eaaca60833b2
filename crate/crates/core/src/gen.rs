//! Seeded random networks for tests, benchmarks and the `generate` command.
//!
//! Two neuron attribute sets (0 quiet, 1 driven by a constant bias) and two
//! synapse sets (0 excitatory, 1 inhibitory, chosen by the presynaptic
//! neuron's type). The same parameters and seed always give the same
//! description on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{NeuronAttrs, SynapseMembraneAttrs};
use crate::net::{AttrIndex, NetworkDescription, NeuronDecl, SynapseAttrs, SynapseDecl, MAX_ACDN_DELAY, MAX_ACDS_DELAY};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InDegree {
    Fixed(u32),
    /// Inclusive range.
    Uniform { min: u32, max: u32 },
    /// Exponentially distributed with the given mean, capped at `max`.
    Skewed { mean: f64, max: u32 },
}

impl InDegree {
    fn sample(self, rng: &mut ChaCha8Rng) -> u32 {
        match self {
            InDegree::Fixed(k) => k,
            InDegree::Uniform { min, max } => rng.gen_range(min..=max.max(min)),
            InDegree::Skewed { mean, max } => {
                let u: f64 = rng.gen();
                ((mean * -libm::log(1.0 - u)) as u32).min(max)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    pub n_neurons: u32,
    pub in_degree: InDegree,
    pub excitatory_fraction: f64,
    /// Fraction of neurons given the driven attribute set.
    pub driven_fraction: f64,
    /// Bias current of driven neurons (µA/cm²).
    pub drive: f32,
    pub max_acds: u8,
    pub max_acdn: u16,
    /// Initial weights are uniform in `[0, w_init_max]`.
    pub w_init_max: f32,
    /// Randomize declaration order instead of grouping by target.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_neurons: 100,
            in_degree: InDegree::Uniform { min: 0, max: 20 },
            excitatory_fraction: 0.8,
            driven_fraction: 0.2,
            drive: 10.0,
            max_acds: 5,
            max_acdn: 10,
            w_init_max: 0.5,
            shuffle: true,
            seed: 0,
        }
    }
}

pub fn generate(params: &GenParams) -> NetworkDescription {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_neurons;
    let idx = |i| AttrIndex::new(i).expect("small index");
    let mut desc = NetworkDescription { n_neurons: n, ..Default::default() };
    desc.neuron_attr_sets.insert(idx(0), NeuronAttrs::default());
    desc.neuron_attr_sets.insert(idx(1), NeuronAttrs { i_bias: params.drive, ..Default::default() });
    desc.synapse_attr_sets.insert(idx(0), SynapseAttrs::default());
    desc.synapse_attr_sets.insert(
        idx(1),
        SynapseAttrs { membrane: SynapseMembraneAttrs { g_syn: 0.2, e_syn: -80.0 }, ..Default::default() },
    );

    let max_acdn = params.max_acdn.min(MAX_ACDN_DELAY);
    let max_acds = params.max_acds.min(MAX_ACDS_DELAY);
    let mut excitatory = Vec::with_capacity(n as usize);
    for id in 0..n {
        let driven = rng.gen_bool(params.driven_fraction.clamp(0.0, 1.0));
        excitatory.push(rng.gen_bool(params.excitatory_fraction.clamp(0.0, 1.0)));
        desc.neurons.push(NeuronDecl {
            id,
            attr_set: idx(driven as u32),
            acdn_delay: rng.gen_range(0..=max_acdn),
            v_init: -65.0 + rng.gen_range(-5.0f32..5.0),
        });
    }
    if n > 0 {
        for post in 0..n {
            for _ in 0..params.in_degree.sample(&mut rng) {
                let pre = if n == 1 {
                    0
                } else {
                    // Uniform over the other neurons.
                    let r = rng.gen_range(0..n - 1);
                    if r >= post {
                        r + 1
                    } else {
                        r
                    }
                };
                desc.synapses.push(SynapseDecl {
                    post,
                    pre,
                    attr_set: idx(!excitatory[pre as usize] as u32),
                    acds_delay: rng.gen_range(0..=max_acds),
                    w_init: rng.gen_range(0.0..=params.w_init_max.clamp(0.0, 1.0)),
                });
            }
        }
    }
    if params.shuffle {
        desc.synapses.shuffle(&mut rng);
    }
    desc
}
