//! Soma sanity against an independent double-precision integration.

mod common;

use common::{rest_fixed_point64, spikes64};
use neuron_machine::model::{hh_gate_rates, hh_step, NeuronAttrs, SomaState, NEURON_DT};
use neuron_machine::net::{AttrIndex, NeuronDecl};
use neuron_machine::record::ProbeSpec;
use neuron_machine::{oracle_run, CompileParams, NetworkDescription, OracleConfig, Stimulus};

/// Spikes of the reference simulator for 1000 steps at a 10 µA/cm² bias.
/// Locked from `oracle_run`; the f64 integration must agree to ±1.
const SPIKES_AT_10UA: usize = 69;

fn lone(i_bias: f32, v_init: f32) -> NetworkDescription {
    let mut desc = NetworkDescription { n_neurons: 1, ..Default::default() };
    desc.neuron_attr_sets.insert(AttrIndex::default(), NeuronAttrs { i_bias, ..Default::default() });
    desc.neurons.push(NeuronDecl { id: 0, attr_set: AttrIndex::default(), acdn_delay: 0, v_init });
    desc
}

#[test]
fn rest_settles_at_the_fixed_point() {
    let v_star = rest_fixed_point64();
    for v_init in [-70.0f32, -65.0, -60.0] {
        let run = oracle_run(&lone(0.0, v_init), &CompileParams::default(), 300, &Stimulus::new(), &ProbeSpec::default(), OracleConfig::default())
            .unwrap();
        let v = run.final_state.soma[0].v as f64;
        assert!((v - v_star).abs() < 0.5, "V = {v}, fixed point {v_star}");
    }
}

#[test]
fn ten_microamp_spike_count_is_locked() {
    let run = oracle_run(&lone(10.0, -65.0), &CompileParams::default(), 1000, &Stimulus::new(), &ProbeSpec::default(), OracleConfig::default())
        .unwrap();
    let count = run.output.raster.len();
    let reference = spikes64(10.0, 1000);
    eprintln!("f32 spikes {count}, f64 spikes {reference}");
    assert!(count.abs_diff(reference) <= 1);
    assert_eq!(count, SPIKES_AT_10UA);
    // Periodic: inter-spike intervals after the first differ by at most one step.
    let times: Vec<u64> = run.output.raster.events.iter().map(|e| e.0).collect();
    let isi: Vec<u64> = times.windows(2).skip(1).map(|w| w[1] - w[0]).collect();
    assert!(isi.iter().max().unwrap() - isi.iter().min().unwrap() <= 1, "{isi:?}");
}

#[test]
fn gates_stay_bounded_under_random_drive() {
    let attrs = NeuronAttrs::default();
    let mut s = SomaState::at_rest(-65.0);
    let mut x = 0x9e37_79b9_7f4a_7c15u64;
    let mut i_ext = 0.0f32;
    for k in 0..1_000_000u32 {
        if k % 25 == 0 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            i_ext = (x >> 40) as f32 / (1u64 << 24) as f32 * 60.0 - 20.0;
        }
        s = hh_step(&s, &attrs, i_ext, NEURON_DT).unwrap();
        for g in [s.m, s.h, s.n] {
            assert!((0.0..=1.0).contains(&g), "gate {g} at substep {k}");
        }
    }
    let r = hh_gate_rates(s.v);
    assert!(r.alpha_m.is_finite() && r.beta_n.is_finite());
}
