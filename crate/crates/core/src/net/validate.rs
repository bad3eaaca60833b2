use std::collections::BTreeSet;

use super::{NetworkDescription, Violation, MAX_ACDN_DELAY, MAX_ACDS_DELAY, NULL_NEURON};
use crate::model::{NeuronAttrs, NETWORK_DT};

macro_rules! violation {
    ($out:expr, $($arg:tt)*) => {
        $out.push(Violation(format!($($arg)*)))
    };
}

fn check_tau(out: &mut Vec<Violation>, owner: &str, name: &str, tau: f32) {
    if !(tau > NETWORK_DT) || !tau.is_finite() {
        violation!(out, "{owner}: {name} = {tau}: time constant must exceed network timestep ({NETWORK_DT} ms)");
    }
}

fn check_finite(out: &mut Vec<Violation>, owner: &str, name: &str, value: f32) {
    if !value.is_finite() {
        violation!(out, "{owner}: {name} must be finite");
    }
}

fn check_neuron_attrs(out: &mut Vec<Violation>, owner: &str, a: &NeuronAttrs) {
    if !(a.c_m > 0.0) || !a.c_m.is_finite() {
        violation!(out, "{owner}: c_m must be positive");
    }
    check_finite(out, owner, "i_bias", a.i_bias);
    check_tau(out, owner, "tau_minus", a.tau_minus);
    if !(a.a_minus > 0.0) || !a.a_minus.is_finite() {
        violation!(out, "{owner}: a_minus must be positive");
    }
    for (k, ch) in a.channels.iter().enumerate() {
        if !(ch.g_bar >= 0.0) || !ch.g_bar.is_finite() {
            violation!(out, "{owner}: channel {k} g_bar must be non-negative");
        }
        check_finite(out, owner, "channel reversal potential", ch.v_eq);
    }
}

/// Every reason the description cannot be compiled; empty means valid.
pub fn validate(desc: &NetworkDescription) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = desc.n_neurons;

    if n >= NULL_NEURON {
        violation!(out, "n_neurons = {n} exceeds the 24-bit id space ({NULL_NEURON} is reserved)");
    }

    for (index, a) in &desc.neuron_attr_sets {
        check_neuron_attrs(&mut out, &format!("neuron attr set {index}"), a);
    }
    for (index, a) in &desc.synapse_attr_sets {
        let owner = format!("synapse attr set {index}");
        let u = a.stp.utilization;
        if !(0.0..=1.0).contains(&u) {
            violation!(out, "{owner}: U = {u} must lie in [0, 1]");
        }
        check_finite(&mut out, &owner, "A", a.stp.release_scale);
        for (name, tau) in [
            ("tau_f", a.stp.tau_f),
            ("tau_d", a.stp.tau_d),
            ("tau_s", a.stp.tau_s),
            ("tau_plus", a.stdp.tau_plus),
        ] {
            check_tau(&mut out, &owner, name, tau);
        }
        for (name, v) in [
            ("a_plus", a.stdp.a_plus),
            ("eta_plus", a.stdp.eta_plus),
            ("eta_minus", a.stdp.eta_minus),
            ("w_max", a.stdp.w_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                violation!(out, "{owner}: {name} must be positive");
            }
        }
        if a.stdp.eta_plus * a.stdp.a_plus > 1.0 {
            violation!(out, "{owner}: eta_plus * a_plus exceeds 1");
        }
        if !(a.membrane.g_syn >= 0.0) || !a.membrane.g_syn.is_finite() {
            violation!(out, "{owner}: g_syn must be non-negative");
        }
        check_finite(&mut out, &owner, "e_syn", a.membrane.e_syn);
    }

    let mut seen = vec![false; n.min(NULL_NEURON) as usize];
    for decl in &desc.neurons {
        let owner = format!("neuron {}", decl.id);
        match seen.get_mut(decl.id as usize) {
            None => violation!(out, "{owner}: id out of range (n_neurons = {n})"),
            Some(true) => violation!(out, "{owner}: duplicate neuron id {}", decl.id),
            Some(flag) => *flag = true,
        }
        if !desc.neuron_attr_sets.contains_key(&decl.attr_set) {
            violation!(out, "{owner}: neuron attr set {} is not defined", decl.attr_set);
        }
        if decl.acdn_delay > MAX_ACDN_DELAY {
            violation!(out, "{owner}: acdn_delay {} exceeds {MAX_ACDN_DELAY} ms", decl.acdn_delay);
        }
        check_finite(&mut out, &owner, "v_init", decl.v_init);
    }
    let missing: Vec<usize> = seen.iter().enumerate().filter(|(_, s)| !**s).map(|(i, _)| i).collect();
    if let Some(first) = missing.first() {
        violation!(out, "{} neuron id(s) are not declared (first: {first})", missing.len());
    }

    let by_id = desc.neurons_by_id();
    let mut bad_pairs = BTreeSet::new();
    for (k, syn) in desc.synapses.iter().enumerate() {
        let owner = format!("synapse {k}");
        if syn.post >= n {
            violation!(out, "{owner}: postsynaptic id out of range ({} >= {n})", syn.post);
        }
        if syn.pre >= n {
            violation!(out, "{owner}: presynaptic id out of range ({} >= {n})", syn.pre);
        }
        if syn.acds_delay > MAX_ACDS_DELAY {
            violation!(out, "{owner}: acds_delay {} exceeds {MAX_ACDS_DELAY} ms", syn.acds_delay);
        }
        let Some(attrs) = desc.synapse_attr_sets.get(&syn.attr_set) else {
            violation!(out, "{owner}: synapse attr set {} is not defined", syn.attr_set);
            continue;
        };
        if !(0.0..=attrs.stdp.w_max).contains(&syn.w_init) {
            violation!(out, "{owner}: w_init {} outside [0, {}]", syn.w_init, attrs.stdp.w_max);
        }
        let post_decl = by_id.get(syn.post as usize).copied().flatten();
        let Some(n_index) = post_decl.map(|d| d.attr_set) else { continue };
        if let Some(n_attrs) = desc.neuron_attr_sets.get(&n_index) {
            if attrs.stdp.eta_minus * n_attrs.a_minus > 1.0 && bad_pairs.insert((syn.attr_set, n_index)) {
                violation!(
                    out,
                    "synapse attr set {} with neuron attr set {n_index}: eta_minus * a_minus exceeds 1",
                    syn.attr_set
                );
            }
        }
    }
    out
}
