//! Shared numerical oracles for the integration tests. The integrator is
//! deliberately independent of every closed form it is used to check.

// Each test binary compiles this module separately and uses its own subset.
#![allow(dead_code)]

use anosov_core::geometry::{ModelParams, Point3};

/// One fourth-order Runge-Kutta step of the model field.
fn rk4_step(params: &ModelParams, state: [f64; 3], h: f64) -> [f64; 3] {
    let f = |s: [f64; 3]| {
        let l = params.lambda.ln();
        [l * s[0], -l * s[1], 1.0 / (params.n as f64 * params.p as f64)]
    };
    let k1 = f(state);
    let add = |s: [f64; 3], k: [f64; 3], c: f64| [s[0] + c * k[0], s[1] + c * k[1], s[2] + c * k[2]];
    let k2 = f(add(state, k1, h / 2.0));
    let k3 = f(add(state, k2, h / 2.0));
    let k4 = f(add(state, k3, h));
    [
        state[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        state[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        state[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrate the field for time `t` in `steps` RK4 steps.
pub fn rk4_flow(params: &ModelParams, pt: &Point3, t: f64, steps: usize) -> [f64; 3] {
    let h = t / steps as f64;
    let mut state = [pt.x, pt.y, pt.z];
    for _ in 0..steps {
        state = rk4_step(params, state, h);
    }
    state
}

/// Numeric boundary-hitting time: integrate from the quadrant-1 entrance
/// point `(r1, r, 0)` until the orbit crosses the exit annulus `y = r1`,
/// then refine the crossing by bisection on the step size.
pub fn rk4_transit_time(params: &ModelParams, r: f64, h: f64) -> f64 {
    let mut state = [params.r1, r, 0.0];
    let mut t = 0.0;
    let mut guard = 0usize;
    loop {
        let next = rk4_step(params, state, h);
        if next[1] >= params.r1 {
            // Bisect inside [t, t + h].
            let mut lo = 0.0f64;
            let mut hi = h;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                let probe = rk4_step(params, state, mid);
                if probe[1] >= params.r1 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return t + 0.5 * (lo + hi);
        }
        state = next;
        t += h;
        guard += 1;
        assert!(guard < 10_000_000, "orbit never reached the exit annulus");
    }
}
