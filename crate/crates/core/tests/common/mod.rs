//! Double-precision Hodgkin-Huxley reference shared by the soma tests.

pub fn rates64(v: f64) -> [f64; 6] {
    let am = {
        let u = (v + 40.0) / 10.0;
        if u.abs() < 1e-9 { 1.0 } else { u / (1.0 - (-u).exp()) }
    };
    let an = {
        let u = (v + 55.0) / 10.0;
        if u.abs() < 1e-9 { 0.1 } else { 0.1 * u / (1.0 - (-u).exp()) }
    };
    [
        am,
        4.0 * (-(v + 65.0) / 18.0).exp(),
        0.07 * (-(v + 65.0) / 20.0).exp(),
        1.0 / (1.0 + (-(v + 35.0) / 10.0).exp()),
        an,
        0.125 * (-(v + 65.0) / 80.0).exp(),
    ]
}

pub fn ionic64(v: f64, m: f64, h: f64, n: f64) -> f64 {
    120.0 * m * m * m * h * (v - 50.0) + 36.0 * n * n * n * n * (v + 77.0) + 0.3 * (v + 54.387)
}

pub fn steady_current64(v: f64) -> f64 {
    let r = rates64(v);
    ionic64(v, r[0] / (r[0] + r[1]), r[2] / (r[2] + r[3]), r[4] / (r[4] + r[5]))
}

/// Spike count of a forward-Euler f64 integration at the same steps.
pub fn spikes64(i_ext: f64, steps: usize) -> usize {
    let mut v = -65.0f64;
    let r = rates64(v);
    let (mut m, mut h, mut n) = (r[0] / (r[0] + r[1]), r[2] / (r[2] + r[3]), r[4] / (r[4] + r[5]));
    let dt = 0.04;
    let mut count = 0;
    for _ in 0..steps {
        let mut fired = false;
        for _ in 0..25 {
            let r = rates64(v);
            let nv = v + dt * (i_ext - ionic64(v, m, h, n));
            m += dt * (r[0] * (1.0 - m) - r[1] * m);
            h += dt * (r[2] * (1.0 - h) - r[3] * h);
            n += dt * (r[4] * (1.0 - n) - r[5] * n);
            fired |= v < 0.0 && nv >= 0.0;
            v = nv;
        }
        count += fired as usize;
    }
    count
}

/// Resting potential: root of the steady-state current, by bisection.
pub fn rest_fixed_point64() -> f64 {
    let (mut lo, mut hi) = (-75.0f64, -55.0f64);
    assert!(steady_current64(lo) < 0.0 && steady_current64(hi) > 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if steady_current64(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
