//! Certified constants of the cone-field criterion.
//!
//! Constants with a closed form are computed exactly; constants that the
//! underlying estimates only prove to exist "depending on the ratio" are
//! certified by grid extremization with a 1.05 safety factor. All of them
//! are invariant under the mirror between the two multiplicity signs, so
//! the extremization always runs in the `m < 0` orientation.

use crate::affine_flow::reentry_time_lower_bound;
use crate::error::{ModelError, Result};
use crate::geometry::ModelParams;
use crate::hyperbolicity::{
    q_of_slope, su_slope_map, su_slope_map_backward_deriv, su_slope_map_deriv,
};
use crate::surgery;
use serde::Serialize;

pub const SAFETY: f64 = 1.05;

/// Provenance of a reported constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Exact formula of the model data (possibly applied to grid inputs).
    ClosedForm,
    /// Grid extremization with the safety factor.
    Grid,
    /// Grid extremization of a quantity whose true supremum is infinite for
    /// this profile; the value is resolution-limited.
    GridLimited,
}

/// A constant with its provenance tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tagged {
    pub value: f64,
    pub provenance: Provenance,
}

impl Tagged {
    fn closed(value: f64) -> Self {
        Tagged { value, provenance: Provenance::ClosedForm }
    }
    fn grid(value: f64) -> Self {
        Tagged { value, provenance: Provenance::Grid }
    }
    fn grid_limited(value: f64) -> Self {
        Tagged { value, provenance: Provenance::GridLimited }
    }
}

/// All constants consumed by the cone checks and the feasibility search.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub epsilon: Tagged,
    pub c: Tagged,
    pub d: Tagged,
    pub k0: Tagged,
    pub q0: Tagged,
    pub t0: Tagged,
    /// Time for a flow factor to bring the big cone inside the epsilon cone.
    pub t0_capture: Tagged,
    /// Time after which flow factors expand every big-cone vector.
    pub t0_expansion: Tagged,
    pub t1_bound: Tagged,
    pub mu: Tagged,
    pub delta_u_strong: Tagged,
    pub d0: Tagged,
    pub d1: Tagged,
    /// Lipschitz envelope constants of the glue slope maps over the weak
    /// cones; infinite when the slope map has a pole inside the cone.
    pub k0_lipschitz_u: Tagged,
    pub k0_lipschitz_s: Tagged,
    /// `max_r |K(r)| (3 r / r2 - 1)`; a value above 1 certifies a pole of
    /// the forward slope map inside the weak cu-cone.
    pub pole_margin_u: f64,
    /// Analogous certificate for the backward slope map and the cs-cone.
    pub pole_margin_s: f64,
    /// Minimum of the cu `B` entry over the sampled inclination range.
    pub b_floor: f64,
    /// `min_r 1 / ||Phi_su(r)^{-1}||`, the one-glue norm floor.
    pub r0_su: f64,
    /// Smallest singular value of the cu factor over the grid.
    pub cu_min_gain: f64,
    /// Strong-cone budget `D0/r2 + D1 delta_u + 1`.
    pub kappa_strong: f64,
    /// Largest inclination the strong cone tolerates at a glue entry.
    pub epsilon_strong: f64,
    /// Weak cone slopes at these parameters.
    pub delta0_u: f64,
    pub delta1_u: f64,
    pub delta0_s: f64,
    pub delta1_s: f64,
    pub grid: usize,
}

impl ConstantsReport {
    /// Margins of the shrinking argument; every entry must be positive for
    /// the cone criterion's standing hypotheses to hold at these radii.
    pub fn shrinking_margins(&self, lambda: f64) -> std::collections::BTreeMap<String, f64> {
        let t1 = self.t1_bound.value;
        let mut m = std::collections::BTreeMap::new();
        m.insert("t1_minus_t0_capture".into(), t1 - self.t0_capture.value);
        m.insert("t1_minus_t0_expansion".into(), t1 - self.t0_expansion.value);
        m.insert(
            "strong_capture".into(),
            self.epsilon_strong - lambda.powf(t1) * self.kappa_strong,
        );
        m.insert("strong_contraction".into(), 1.0 - lambda.powf(t1) * self.d1.value);
        m
    }

    /// Whether every shrinking condition holds.
    pub fn shrinking_conditions_met(&self, lambda: f64) -> bool {
        self.shrinking_margins(lambda).values().all(|&v| v > 0.0)
    }

    /// Invariance is claimed for words acting at least twice the capture
    /// time.
    pub fn t_threshold(&self) -> f64 {
        2.0 * self.t0_capture.value
    }

    /// Margins of the weak-cone hypotheses alone.
    pub fn weak_hypotheses_met(&self, _lambda: f64) -> bool {
        let t1 = self.t1_bound.value;
        t1 > self.t0_capture.value && t1 > self.t0_expansion.value
    }

    /// Margins of the strong-cone hypotheses alone.
    pub fn strong_hypotheses_met(&self, lambda: f64) -> bool {
        let t1 = self.t1_bound.value;
        self.epsilon_strong > lambda.powf(t1) * self.kappa_strong
            && lambda.powf(t1) * self.d1.value < 1.0
    }

    /// Envelope constant `L0 = K0_lip (delta1_u - delta0_u)` of the weak
    /// slope-contraction check; infinite when no finite envelope exists.
    pub fn l0_u(&self) -> f64 {
        self.k0_lipschitz_u.value * (self.delta1_u - self.delta0_u)
    }

    pub fn l0_s(&self) -> f64 {
        self.k0_lipschitz_s.value * (self.delta1_s - self.delta0_s)
    }

    /// Envelope constant of the strong contraction check.
    pub fn l0_strong(&self) -> f64 {
        2.0 * self.d1.value * self.delta_u_strong.value
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let r_ratio = params.r1 / params.r2;
        let checks = [
            (self.epsilon.value > 0.0, "epsilon > 0"),
            (
                self.epsilon.value < (1.5 * r_ratio).min(1.0 / (3.0 * r_ratio)),
                "epsilon < min(3r1/2r2, r2/3r1)",
            ),
            (self.c.value > 3.0 * r_ratio, "C > 3 r1/r2"),
            (self.d.value > 1.0 / (3.0 * r_ratio), "D > r2/3r1"),
            (self.k0.value > 0.0 && self.k0.value < 1.0, "0 < K0 < 1"),
            (self.q0.value > 0.0 && self.q0.value <= 1.0, "0 < Q0 <= 1"),
            (self.mu.value > 1.0, "mu > 1"),
            (self.mu.value < 1.0 / params.lambda, "mu < 1/lambda"),
            (
                self.delta_u_strong.value == self.d0.value / params.r2 + 1.0,
                "delta_u_strong = D0/r2 + 1",
            ),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(ModelError::Params(format!("constants invariant failed: {}", what)));
            }
        }
        Ok(())
    }
}

/// Time needed for a flow factor to bring the big-cone edge below
/// `epsilon`: solves `lambda^{2 T} edge < epsilon`.
pub fn cota_time(edge: f64, epsilon: f64, lambda: f64) -> f64 {
    if edge <= epsilon {
        return 0.0;
    }
    (epsilon / edge).ln() / (2.0 * lambda.ln())
}

/// Time needed for the `Q`-gap norm bound to give strict expansion:
/// solves `Q0 lambda^{-T} > 1`.
pub fn expansion_time(q0: f64, lambda: f64) -> f64 {
    if q0 >= 1.0 {
        return 0.0;
    }
    q0.ln() / lambda.ln()
}

/// Estimate every constant by grid extremization at `grid` points.
///
/// `r1_initial` is the outer radius the ambient model was built at; the
/// re-entry bound `T1` measures how far the current radii have been shrunk
/// from it.
pub fn estimate_constants(
    params: &ModelParams,
    r1_initial: f64,
    grid: usize,
) -> Result<ConstantsReport> {
    params.validate()?;
    if grid < 16 {
        return Err(ModelError::Resolution { suggested: 16 });
    }
    if r1_initial < params.r1 {
        return Err(ModelError::Params(
            "r1_initial must be at least the current r1".into(),
        ));
    }
    // Constants are mirror-invariant: extremize in the m < 0 orientation.
    let canon = ModelParams { m: -params.m.abs(), ..*params };
    let (r1, r2) = (params.r1, params.r2);
    let lambda = params.lambda;

    let r_grid: Vec<f64> = (0..grid).map(|i| r2 * (i as f64 + 0.5) / grid as f64).collect();

    // K0: bound of the axis image slope factor |K|/(1+|K|), always below 1.
    let mut k0 = 0.0f64;
    let mut pole_margin_u = 0.0f64;
    let mut pole_margin_s = 0.0f64;
    let mut r0_su = f64::INFINITY;
    for &r in &r_grid {
        let kk = surgery::k_coefficient(&canon, r).abs();
        k0 = k0.max(kk / (1.0 + kk));
        pole_margin_u = pole_margin_u.max(kk * (3.0 * r / r2 - 1.0));
        if kk > 0.0 {
            let pole_s = (1.0 + kk) * r / (kk * r1);
            pole_margin_s = pole_margin_s.max(1.5 * r1 / r2 / pole_s);
        }
        let phi = surgery::phi_matrix_su(&canon, r);
        let inv_norm = phi.inverse().expect("unimodular").op_norm();
        r0_su = r0_su.min(1.0 / inv_norm);
    }
    let k0 = k0 * SAFETY;
    if k0 >= 1.0 {
        return Err(ModelError::Resolution { suggested: grid * 2 });
    }

    // epsilon: small enough for both cones and for the one-glue re-capture.
    let epsilon = (r2 / (3.0 * r1))
        .min(1.5 * r1 / r2)
        .min(3.0 * r1 / r2 * (1.0 - k0))
        / SAFETY;

    // C, D: extremes of the glue slope map over cone slopes. With a pole
    // inside the cone the true extremes are infinite and the grid value is
    // resolution-limited.
    let (lo_u, hi_u) = (-3.0 * r1 / r2, r2 / (3.0 * r1));
    let mut min_img = 0.0f64;
    let mut max_img = 0.0f64;
    let mut lip_u = 1.0f64;
    for &r in &r_grid {
        if surgery::k_coefficient(&canon, r) == 0.0 {
            continue;
        }
        for j in 0..=grid {
            let delta = lo_u + (hi_u - lo_u) * j as f64 / grid as f64;
            let img = su_slope_map(&canon, r, delta);
            if img.is_finite() {
                min_img = min_img.min(img);
                max_img = max_img.max(img);
            }
            let der = su_slope_map_deriv(&canon, r, delta).abs();
            if der.is_finite() {
                lip_u = lip_u.max(der);
            }
        }
    }
    let pole_inside_u = pole_margin_u > 1.0;
    let mut c = (-min_img * r2 / r1 * SAFETY).max(3.0 * r1 / r2 * (1.0 + 1e-9));
    let mut d = (max_img * r1 / r2 * SAFETY).max(r2 / (3.0 * r1) * (1.0 + 1e-9));
    if !c.is_finite() {
        c = 3.0 * r1 / r2 * 1e6;
    }
    if !d.is_finite() {
        d = r2 / (3.0 * r1) * 1e6;
    }

    // Backward Lipschitz over the cs-cone.
    let (lo_s, hi_s) = (-1.5 * r1 / r2, 2.0 * r2 / (3.0 * r1));
    let mut lip_s = 1.0f64;
    for &r in &r_grid {
        if surgery::k_coefficient(&canon, r) == 0.0 {
            continue;
        }
        for j in 0..=grid {
            let delta = lo_s + (hi_s - lo_s) * j as f64 / grid as f64;
            let der = su_slope_map_backward_deriv(&canon, r, delta).abs();
            if der.is_finite() {
                lip_s = lip_s.max(der);
            }
        }
    }
    let pole_inside_s = pole_margin_s > 1.0;

    // Q0, T0, mu. T0 must serve both the cone-capture bound and the strict
    // norm expansion, so it is the larger of the two times.
    let edge_lo = c * r1 / r2;
    let edge_hi = d * r2 / r1;
    let q0 = q_of_slope(edge_lo).min(q_of_slope(edge_hi));
    let t0_capture = cota_time(edge_lo, epsilon, lambda).max(cota_time(edge_hi, epsilon, lambda));
    // Expansion threshold: lambda^{2T} edge^2 < 1 for the worst cone slope.
    let t0_expansion = edge_lo.max(edge_hi).ln().max(0.0) / lambda.ln().abs();
    let t0 = t0_capture.max(SAFETY * expansion_time(q0, lambda));
    let mu = q0.powf(1.0 / t0) / lambda;

    // Strong-cone constants over the arriving inclination range [-eps, eps].
    let alpha_grid: Vec<f64> = (0..=64).map(|j| -epsilon + 2.0 * epsilon * j as f64 / 64.0).collect();
    let mut d0 = 0.0f64;
    let mut d1 = 1.0f64;
    let mut b_floor = f64::INFINITY;
    let mut cu_min_gain = f64::INFINITY;
    for &r in &r_grid {
        for &alpha in &alpha_grid {
            let m = surgery::phi_matrix_cu(&canon, r, alpha);
            let (a, b) = (m.0[0][1], m.0[1][1]);
            b_floor = b_floor.min(b);
            d0 = d0.max((a / b).abs() * r2);
            d1 = d1.max(1.0 / b.abs());
            cu_min_gain = cu_min_gain.min(m.min_singular_value());
        }
    }
    let d0 = d0 * SAFETY;
    let d1 = d1 * SAFETY;
    let delta_u_strong = d0 / r2 + 1.0;
    let kappa_strong = d0 / r2 + d1 * delta_u_strong + 1.0;
    let epsilon_strong = 1.0 / d1 / SAFETY;

    let t1_bound = if params.r1 < r1_initial {
        reentry_time_lower_bound(params.r1, r1_initial, lambda)?
    } else {
        0.0
    };

    let report = ConstantsReport {
        epsilon: Tagged::grid(epsilon),
        c: if pole_inside_u { Tagged::grid_limited(c) } else { Tagged::grid(c) },
        d: if pole_inside_u { Tagged::grid_limited(d) } else { Tagged::grid(d) },
        k0: Tagged::grid(k0),
        q0: Tagged::closed(q0),
        t0: Tagged::closed(t0),
        t0_capture: Tagged::closed(t0_capture),
        t0_expansion: Tagged::closed(t0_expansion),
        t1_bound: Tagged::closed(t1_bound),
        mu: Tagged::closed(mu),
        delta_u_strong: Tagged::closed(delta_u_strong),
        d0: Tagged::grid(d0),
        d1: Tagged::grid(d1),
        k0_lipschitz_u: if pole_inside_u {
            Tagged::grid_limited(f64::INFINITY)
        } else {
            Tagged::grid(lip_u * SAFETY)
        },
        k0_lipschitz_s: if pole_inside_s {
            Tagged::grid_limited(f64::INFINITY)
        } else {
            Tagged::grid(lip_s * SAFETY)
        },
        pole_margin_u,
        pole_margin_s,
        b_floor,
        r0_su,
        cu_min_gain,
        kappa_strong,
        epsilon_strong,
        delta0_u: crate::hyperbolicity::weak_cu_slope_range(params).0,
        delta1_u: crate::hyperbolicity::weak_cu_slope_range(params).1,
        delta0_s: crate::hyperbolicity::weak_cs_slope_range(params).0,
        delta1_s: crate::hyperbolicity::weak_cs_slope_range(params).1,
        grid,
    };
    report.validate(params)?;
    Ok(report)
}
