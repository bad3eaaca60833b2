//! Per-neuron and per-synapse numerical kernels.
//!
//! Everything here is single precision and knows nothing about networks or
//! memory layout. The engine and the reference simulator both call these
//! functions, so a disagreement between them always comes from orchestration
//! and never from arithmetic.
//!
//! Decays use the linear per-step form `x * (1 - dt / tau)` throughout, the
//! same arithmetic a pipelined decay circuit performs once per timestep.

/// Soma integration step (ms).
pub const NEURON_DT: f32 = 0.04;
/// Synapse-side step (ms).
pub const NETWORK_DT: f32 = 1.0;
/// Neuron timesteps per network timestep.
pub const SUBSTEPS: u32 = 25;
/// Default initial membrane potential (mV).
pub const REST_POTENTIAL: f32 = -65.0;

/// Which gating variables scale a channel's conductance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// Ungated (leak).
    None,
    /// `m^p h^q`, the sodium form.
    Mh,
    /// `n^p`, the potassium form.
    N,
}

impl GateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::None => "none",
            GateKind::Mh => "mh",
            GateKind::N => "n",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "none" => Some(GateKind::None),
            "mh" => Some(GateKind::Mh),
            "n" => Some(GateKind::N),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IonChannelSpec {
    /// Maximal conductance (mS/cm²).
    pub g_bar: f32,
    /// Reversal potential (mV).
    pub v_eq: f32,
    /// Activation exponent.
    pub p: u8,
    /// Inactivation exponent.
    pub q: u8,
    pub gates: GateKind,
}

impl IonChannelSpec {
    pub fn sodium() -> Self {
        Self { g_bar: 120.0, v_eq: 50.0, p: 3, q: 1, gates: GateKind::Mh }
    }

    pub fn potassium() -> Self {
        Self { g_bar: 36.0, v_eq: -77.0, p: 4, q: 0, gates: GateKind::N }
    }

    pub fn leak() -> Self {
        Self { g_bar: 0.3, v_eq: -54.387, p: 0, q: 0, gates: GateKind::None }
    }

    fn conductance(&self, s: &SomaState) -> f32 {
        match self.gates {
            GateKind::None => self.g_bar,
            GateKind::Mh => self.g_bar * ipow(s.m, self.p) * ipow(s.h, self.q),
            GateKind::N => self.g_bar * ipow(s.n, self.p),
        }
    }

    /// Ohmic channel current at the given state (µA/cm²).
    pub fn current(&self, s: &SomaState) -> f32 {
        self.conductance(s) * (s.v - self.v_eq)
    }
}

// Left-to-right repeated multiplication; `powi` leaves the evaluation order
// unspecified.
#[inline]
fn ipow(x: f32, k: u8) -> f32 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        4 => x * x * x * x,
        _ => {
            let mut r = x * x * x * x;
            for _ in 4..k {
                r *= x;
            }
            r
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuronAttrs {
    /// Membrane capacitance (µF/cm²).
    pub c_m: f32,
    pub channels: Vec<IonChannelSpec>,
    /// Constant external current (µA/cm²).
    pub i_bias: f32,
    /// Post-synaptic trace time constant (ms).
    pub tau_minus: f32,
    /// Post-synaptic trace increment.
    pub a_minus: f32,
}

impl Default for NeuronAttrs {
    fn default() -> Self {
        Self {
            c_m: 1.0,
            channels: vec![
                IonChannelSpec::sodium(),
                IonChannelSpec::potassium(),
                IonChannelSpec::leak(),
            ],
            i_bias: 0.0,
            tau_minus: 20.0,
            a_minus: 1.0,
        }
    }
}

impl NeuronAttrs {
    /// Sum of all ionic currents in channel order.
    pub fn ionic_current(&self, s: &SomaState) -> f32 {
        let mut total = 0.0f32;
        for ch in &self.channels {
            total += ch.current(s);
        }
        total
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SomaState {
    pub v: f32,
    pub m: f32,
    pub h: f32,
    pub n: f32,
}

impl SomaState {
    /// State at potential `v` with every gate at its steady-state value.
    pub fn at_rest(v: f32) -> Self {
        let r = hh_gate_rates(v);
        Self { v, m: r.m_inf(), h: r.h_inf(), n: r.n_inf() }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.m.is_finite() && self.h.is_finite() && self.n.is_finite()
    }
}

impl Default for SomaState {
    fn default() -> Self {
        Self::at_rest(REST_POTENTIAL)
    }
}

/// Opening and closing rates (1/ms) of the three gates at one potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateRates {
    pub alpha_m: f32,
    pub beta_m: f32,
    pub alpha_h: f32,
    pub beta_h: f32,
    pub alpha_n: f32,
    pub beta_n: f32,
}

impl GateRates {
    pub fn m_inf(&self) -> f32 {
        self.alpha_m / (self.alpha_m + self.beta_m)
    }

    pub fn h_inf(&self) -> f32 {
        self.alpha_h / (self.alpha_h + self.beta_h)
    }

    pub fn n_inf(&self) -> f32 {
        self.alpha_n / (self.alpha_n + self.beta_n)
    }
}

// Keeps every rate finite for any finite V; inactive inside ±1500 mV.
const EXP_ARG_LIMIT: f32 = 80.0;

fn exp(x: f32) -> f32 {
    libm::expf(x.clamp(-EXP_ARG_LIMIT, EXP_ARG_LIMIT))
}

/// `u / (1 - e^-u)`, with the removable singularity at 0 replaced by its
/// first-order series.
fn vtrap(u: f32) -> f32 {
    if u.abs() < 1e-6 {
        1.0 + 0.5 * u
    } else {
        u / -libm::expm1f((-u).clamp(-EXP_ARG_LIMIT, EXP_ARG_LIMIT))
    }
}

/// Classical squid-axon gate rates at membrane potential `v` (mV).
pub fn hh_gate_rates(v: f32) -> GateRates {
    GateRates {
        alpha_m: vtrap((v + 40.0) / 10.0),
        beta_m: 4.0 * exp(-(v + 65.0) / 18.0),
        alpha_h: 0.07 * exp(-(v + 65.0) / 20.0),
        beta_h: 1.0 / (1.0 + exp(-(v + 35.0) / 10.0)),
        alpha_n: 0.1 * vtrap((v + 55.0) / 10.0),
        beta_n: 0.125 * exp(-(v + 65.0) / 80.0),
    }
}

/// Returned by [`hh_step`] when an update leaves the finite range.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("soma state became non-finite (V = {})", .0.v)]
pub struct NonFiniteState(pub SomaState);

fn gate_step(x: f32, alpha: f32, beta: f32, dt: f32) -> f32 {
    (x + dt * (alpha * (1.0 - x) - beta * x)).clamp(0.0, 1.0)
}

/// One forward-Euler step of the membrane equation and gate kinetics.
///
/// Rates and currents are evaluated at the incoming state; gates are clamped
/// to [0, 1] after the update.
pub fn hh_step(
    state: &SomaState,
    attrs: &NeuronAttrs,
    i_ext: f32,
    dt: f32,
) -> Result<SomaState, NonFiniteState> {
    let rates = hh_gate_rates(state.v);
    let i_ion = attrs.ionic_current(state);
    let next = SomaState {
        v: state.v + dt * (i_ext - i_ion) / attrs.c_m,
        m: gate_step(state.m, rates.alpha_m, rates.beta_m, dt),
        h: gate_step(state.h, rates.alpha_h, rates.beta_h, dt),
        n: gate_step(state.n, rates.alpha_n, rates.beta_n, dt),
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(NonFiniteState(next))
    }
}

/// Upward zero crossing from a strictly negative potential.
pub fn detect_spike(v_prev: f32, v_now: f32) -> bool {
    v_prev < 0.0 && v_now >= 0.0
}

/// Per-step linear decay factor.
#[inline]
pub fn decay_factor(dt: f32, tau: f32) -> f32 {
    1.0 - dt / tau
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StpAttrs {
    /// Utilization increment `U`.
    pub utilization: f32,
    /// Release scale `A`.
    pub release_scale: f32,
    pub tau_f: f32,
    pub tau_d: f32,
    pub tau_s: f32,
}

impl Default for StpAttrs {
    fn default() -> Self {
        Self { utilization: 0.2, release_scale: 1.0, tau_f: 100.0, tau_d: 200.0, tau_s: 5.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StpState {
    /// Facilitation.
    pub u: f32,
    /// Available resources.
    pub x: f32,
    /// Release.
    pub s: f32,
}

impl StpState {
    pub const REST: StpState = StpState { u: 0.0, x: 1.0, s: 0.0 };
    pub const ZERO: StpState = StpState { u: 0.0, x: 0.0, s: 0.0 };
}

impl Default for StpState {
    fn default() -> Self {
        Self::REST
    }
}

/// Short-term plasticity update: decay all three variables, then apply the
/// spike jumps. Resources are depleted by the released fraction `u⁺x⁻`.
pub fn stp_step(state: StpState, attrs: &StpAttrs, pre_spike: bool, dt: f32) -> StpState {
    let u = state.u * decay_factor(dt, attrs.tau_f);
    let x = state.x + (1.0 - state.x) * (dt / attrs.tau_d);
    let s = state.s * decay_factor(dt, attrs.tau_s);
    if !pre_spike {
        return StpState { u, x, s };
    }
    let u_plus = u + attrs.utilization * (1.0 - u);
    let released = u_plus * x;
    StpState { u: u_plus, x: x - released, s: s + attrs.release_scale * released }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdpAttrs {
    pub tau_plus: f32,
    pub a_plus: f32,
    pub eta_plus: f32,
    pub eta_minus: f32,
    pub w_max: f32,
}

impl Default for StdpAttrs {
    fn default() -> Self {
        Self { tau_plus: 20.0, a_plus: 1.0, eta_plus: 0.01, eta_minus: 0.01, w_max: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdpOutcome {
    pub pre_trace: f32,
    pub post_trace: f32,
    pub weight: f32,
}

/// Decay and increment of the per-neuron post-synaptic trace.
pub fn post_trace_step(y: f32, n_attrs: &NeuronAttrs, post_spike: bool, dt: f32) -> f32 {
    let y = y * decay_factor(dt, n_attrs.tau_minus);
    if post_spike {
        y + n_attrs.a_minus
    } else {
        y
    }
}

/// Pair-based STDP with soft bounds.
///
/// Order within one call: decay both traces, depress on a presynaptic spike,
/// potentiate on a postsynaptic spike (both use the decayed, not yet
/// incremented traces), then increment the traces.
#[allow(clippy::too_many_arguments)]
pub fn stdp_step(
    pre_trace: f32,
    post_trace: f32,
    weight: f32,
    s_attrs: &StdpAttrs,
    n_attrs: &NeuronAttrs,
    pre_spike: bool,
    post_spike: bool,
    dt: f32,
) -> StdpOutcome {
    let x = pre_trace * decay_factor(dt, s_attrs.tau_plus);
    let y = post_trace * decay_factor(dt, n_attrs.tau_minus);
    let mut w = weight;
    if pre_spike {
        w = w - w * s_attrs.eta_minus * y;
    }
    if post_spike {
        w = w + (s_attrs.w_max - w) * s_attrs.eta_plus * x;
    }
    StdpOutcome {
        pre_trace: if pre_spike { x + s_attrs.a_plus } else { x },
        post_trace: if post_spike { y + n_attrs.a_minus } else { y },
        weight: w.clamp(0.0, s_attrs.w_max),
    }
}

/// Everything a synapse carries from one network timestep to the next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynapseState {
    pub stp: StpState,
    pub pre_trace: f32,
    pub weight: f32,
}

impl SynapseState {
    pub fn initial(weight: f32) -> Self {
        Self { stp: StpState::REST, pre_trace: 0.0, weight }
    }

    /// State of a null slot.
    pub const NULL: SynapseState = SynapseState { stp: StpState::ZERO, pre_trace: 0.0, weight: 0.0 };
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynapseMembraneAttrs {
    /// Conductance scale (mS/cm²).
    pub g_syn: f32,
    /// Reversal potential (mV).
    pub e_syn: f32,
}

impl Default for SynapseMembraneAttrs {
    fn default() -> Self {
        Self { g_syn: 0.1, e_syn: 0.0 }
    }
}

/// `S · w · g_syn · (E_syn − V_post)`, evaluated left to right.
pub fn synaptic_current(s: f32, w: f32, attrs: &SynapseMembraneAttrs, v_post: f32) -> f32 {
    s * w * attrs.g_syn * (attrs.e_syn - v_post)
}

/// Single-variable conductance decay with reset to 1 on a spike. `tau` is in
/// timesteps.
pub fn decay_step(x: f32, tau: f32, spike: bool) -> f32 {
    if spike {
        1.0
    } else {
        x * (1.0 - 1.0 / tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn passive(c_m: f32) -> NeuronAttrs {
        NeuronAttrs {
            c_m,
            channels: vec![
                IonChannelSpec { g_bar: 0.0, ..IonChannelSpec::sodium() },
                IonChannelSpec { g_bar: 0.0, ..IonChannelSpec::potassium() },
                IonChannelSpec { g_bar: 0.0, ..IonChannelSpec::leak() },
            ],
            ..NeuronAttrs::default()
        }
    }

    #[test]
    fn singular_rates_use_their_limits() {
        assert_eq!(hh_gate_rates(-40.0).alpha_m, 1.0);
        assert_eq!(hh_gate_rates(-55.0).alpha_n, 0.1);
        assert_eq!(hh_gate_rates(-65.0).beta_m, 4.0);
    }

    #[test]
    fn rates_are_continuous_across_the_singularities() {
        for (v0, pick, limit) in [
            (-40.0f32, (|r: GateRates| r.alpha_m) as fn(GateRates) -> f32, 1.0f32),
            (-55.0, |r: GateRates| r.alpha_n, 0.1),
        ] {
            for dv in [1e-3f32, -1e-3, 1e-2, -1e-2] {
                let r = pick(hh_gate_rates(v0 + dv));
                assert!((r - limit).abs() < 0.01 * limit, "{v0}+{dv}: {r}");
            }
        }
    }

    #[test]
    fn rates_stay_positive_and_finite_on_a_fine_grid() {
        let mut grid: Vec<f32> = (0..=40_000).map(|i| (-200.0 + 0.01 * i as f64) as f32).collect();
        grid.extend([-40.0, -55.0, -65.0, -35.0]);
        for v in grid {
            let r = hh_gate_rates(v);
            for x in [r.alpha_m, r.beta_m, r.alpha_h, r.beta_h, r.alpha_n, r.beta_n] {
                assert!(x.is_finite() && x >= 0.0, "V = {v}: {r:?}");
            }
        }
    }

    #[test]
    fn extreme_potentials_still_give_finite_rates() {
        for v in [-1.0e6f32, -5000.0, 5000.0, 1.0e6] {
            let r = hh_gate_rates(v);
            for x in [r.alpha_m, r.beta_m, r.alpha_h, r.beta_h, r.alpha_n, r.beta_n] {
                assert!(x.is_finite() && x >= 0.0, "V = {v}: {r:?}");
            }
        }
    }

    #[test]
    fn passive_membrane_integrates_injected_current() {
        let start = SomaState { v: -65.0, m: 0.05, h: 0.6, n: 0.3 };
        let next = hh_step(&start, &passive(1.0), 1.0, NEURON_DT).unwrap();
        assert_eq!(next.v, -65.0f32 + 0.04f32);
        let from_zero = SomaState { v: 0.0, ..start };
        assert_eq!(hh_step(&from_zero, &passive(1.0), 1.0, NEURON_DT).unwrap().v, 0.04f32);
    }

    #[test]
    fn steady_state_with_balancing_current_is_a_fixed_point() {
        let attrs = NeuronAttrs::default();
        let rest = SomaState::at_rest(-65.0);
        let i_balance = attrs.ionic_current(&rest);
        let next = hh_step(&rest, &attrs, i_balance, NEURON_DT).unwrap();
        assert!((next.v - rest.v).abs() < 1e-4, "{} -> {}", rest.v, next.v);
    }

    #[test]
    fn non_finite_update_is_reported() {
        let attrs = passive(1.0);
        let err = hh_step(&SomaState::default(), &attrs, f32::INFINITY, NEURON_DT).unwrap_err();
        assert!(!err.0.v.is_finite());
    }

    #[test]
    fn gate_iteration_converges_to_the_steady_state_form() {
        for v in [-90.0f32, -65.0, -55.0, -40.0, -20.0, 0.0, 30.0] {
            let r = hh_gate_rates(v);
            let (mut m, mut h, mut n) = (0.5f32, 0.5f32, 0.5f32);
            for _ in 0..200_000 {
                m = gate_step(m, r.alpha_m, r.beta_m, NEURON_DT);
                h = gate_step(h, r.alpha_h, r.beta_h, NEURON_DT);
                n = gate_step(n, r.alpha_n, r.beta_n, NEURON_DT);
            }
            assert!((m - r.m_inf()).abs() < 1e-5, "m at {v}");
            assert!((h - r.h_inf()).abs() < 1e-5, "h at {v}");
            assert!((n - r.n_inf()).abs() < 1e-5, "n at {v}");
        }
    }

    #[test]
    fn spike_detection() {
        assert!(detect_spike(-5.0, 3.0));
        assert!(detect_spike(-5.0, 0.0));
        assert!(!detect_spike(2.0, 5.0));
        assert!(!detect_spike(-5.0, -1.0));
        assert!(!detect_spike(0.0, 1.0));
    }

    #[test]
    fn stp_first_spike_from_rest() {
        let attrs = StpAttrs { utilization: 0.2, release_scale: 1.0, ..StpAttrs::default() };
        let out = stp_step(StpState::REST, &attrs, true, NETWORK_DT);
        assert_eq!(out, StpState { u: 0.2, x: 0.8, s: 0.2 });
    }

    #[test]
    fn stp_facilitation_decay() {
        let attrs = StpAttrs { tau_f: 100.0, ..StpAttrs::default() };
        let out = stp_step(StpState { u: 0.2, x: 1.0, s: 0.0 }, &attrs, false, NETWORK_DT);
        assert_eq!(out.u, 0.198f32);
    }

    #[test]
    fn stp_second_release_is_facilitated() {
        let attrs = StpAttrs::default();
        let first = stp_step(StpState::REST, &attrs, true, NETWORK_DT);
        let second = stp_step(first, &attrs, true, NETWORK_DT);
        let release1 = first.s;
        let release2 = second.s - first.s * decay_factor(NETWORK_DT, attrs.tau_s);
        // Brute-force iteration of the same recurrence in f64.
        let (u1, x1) = (0.2f64, 0.8f64);
        let u = u1 * (1.0 - 1.0 / 100.0);
        let x = x1 + (1.0 - x1) / 200.0;
        let u2 = u + 0.2 * (1.0 - u);
        let expected_release2 = u2 * x;
        assert!((release2 as f64 - expected_release2).abs() < 1e-6);
        assert!(release2 > release1 * decay_factor(NETWORK_DT, attrs.tau_s));
    }

    #[test]
    fn stdp_pre_trace_decays_alone() {
        let s = StdpAttrs { tau_plus: 20.0, ..StdpAttrs::default() };
        let out = stdp_step(1.0, 0.0, 0.5, &s, &NeuronAttrs::default(), false, false, NETWORK_DT);
        assert_eq!(out.pre_trace, 0.95);
        assert_eq!(out.weight, 0.5);
    }

    #[test]
    fn stdp_post_before_pre_depresses() {
        let s = StdpAttrs::default();
        let n = NeuronAttrs::default();
        let after_post = stdp_step(0.0, 0.0, 0.5, &s, &n, false, true, NETWORK_DT);
        assert_eq!(after_post.weight, 0.5);
        let after_pre =
            stdp_step(after_post.pre_trace, after_post.post_trace, 0.5, &s, &n, true, false, NETWORK_DT);
        assert!(after_pre.weight < 0.5);
    }

    #[test]
    fn stdp_post_trace_matches_neuron_trace_update() {
        let s = StdpAttrs::default();
        let n = NeuronAttrs { tau_minus: 17.0, a_minus: 0.3, ..NeuronAttrs::default() };
        for (y, post) in [(0.0, true), (0.7, false), (1.3, true)] {
            let out = stdp_step(0.2, y, 0.4, &s, &n, true, post, NETWORK_DT);
            assert_eq!(out.post_trace, post_trace_step(y, &n, post, NETWORK_DT));
        }
    }

    #[test]
    fn synaptic_current_examples() {
        let m = |g_syn, e_syn| SynapseMembraneAttrs { g_syn, e_syn };
        assert_eq!(synaptic_current(1.0, 1.0, &m(1.0, 0.0), -65.0), 65.0);
        assert_eq!(synaptic_current(0.0, 0.7, &m(3.0, 0.0), -65.0), 0.0);
        assert_eq!(synaptic_current(0.5, 0.2, &m(2.0, -80.0), -65.0), -3.0);
    }

    #[test]
    fn decay_step_examples() {
        assert_eq!(decay_step(0.3, 5.0, true), 1.0);
        assert_eq!(decay_step(0.5, 2.0, false), 0.25);
        assert_eq!(decay_step(0.0, 7.0, false), 0.0);
    }

    proptest! {
        #[test]
        fn gates_stay_bounded(drive in prop::collection::vec(-200.0f32..200.0, 1..400)) {
            let attrs = NeuronAttrs::default();
            let mut s = SomaState::default();
            for i in drive {
                s = hh_step(&s, &attrs, i, NEURON_DT).unwrap();
                prop_assert!((0.0..=1.0).contains(&s.m));
                prop_assert!((0.0..=1.0).contains(&s.h));
                prop_assert!((0.0..=1.0).contains(&s.n));
            }
        }

        #[test]
        fn stp_stays_bounded(
            spikes in prop::collection::vec(any::<bool>(), 1..300),
            utilization in 0.0f32..=1.0,
            tau_f in 1.01f32..1000.0,
            tau_d in 1.01f32..1000.0,
            tau_s in 1.01f32..100.0,
        ) {
            let attrs = StpAttrs { utilization, release_scale: 1.0, tau_f, tau_d, tau_s };
            let mut s = StpState::REST;
            for spike in spikes {
                s = stp_step(s, &attrs, spike, NETWORK_DT);
                prop_assert!((0.0..=1.0).contains(&s.u));
                prop_assert!((0.0..=1.0).contains(&s.x));
                prop_assert!(s.s >= 0.0);
            }
        }

        #[test]
        fn stdp_weight_stays_in_bounds(
            trains in prop::collection::vec((any::<bool>(), any::<bool>()), 1..500),
            w0 in 0.0f32..=1.0,
            eta_plus in 0.0001f32..1.0,
            eta_minus in 0.0001f32..1.0,
            w_max in 0.1f32..10.0,
        ) {
            let s = StdpAttrs { tau_plus: 20.0, a_plus: 1.0, eta_plus, eta_minus, w_max };
            let n = NeuronAttrs::default();
            let (mut x, mut y, mut w) = (0.0, 0.0, w0 * w_max);
            for (pre, post) in trains {
                let out = stdp_step(x, y, w, &s, &n, pre, post, NETWORK_DT);
                x = out.pre_trace;
                y = out.post_trace;
                w = out.weight;
                prop_assert!(w >= 0.0 && w <= w_max);
            }
        }

        #[test]
        fn synaptic_current_is_linear_in_each_factor(
            s in 0.0f32..2.0, w in 0.0f32..2.0, g in 0.0f32..2.0, v in -100.0f32..50.0,
        ) {
            let m = SynapseMembraneAttrs { g_syn: g, e_syn: 0.0 };
            let base = synaptic_current(s, w, &m, v);
            let tol = |x: f32| x.abs() * f32::EPSILON * 2.0;
            let ds = synaptic_current(2.0 * s, w, &m, v);
            prop_assert!((ds - 2.0 * base).abs() <= tol(ds));
            let dw = synaptic_current(s, 2.0 * w, &m, v);
            prop_assert!((dw - 2.0 * base).abs() <= tol(dw));
            let m2 = SynapseMembraneAttrs { g_syn: 2.0 * g, e_syn: 0.0 };
            let dg = synaptic_current(s, w, &m2, v);
            prop_assert!((dg - 2.0 * base).abs() <= tol(dg));
        }

        #[test]
        fn decay_step_matches_release_decay(s in 0.0f32..10.0, tau_s in 1.01f32..500.0) {
            let attrs = StpAttrs { tau_s, ..StpAttrs::default() };
            let stp = stp_step(StpState { u: 0.0, x: 1.0, s }, &attrs, false, NETWORK_DT);
            prop_assert_eq!(stp.s.to_bits(), decay_step(s, tau_s, false).to_bits());
        }
    }
}
