//! Numerical cone-field criterion: slope functions, cone data, the
//! certifiable constants, the six cone checks (weak and strong),
//! nested-cone splitting extraction and the parameter feasibility search.

pub mod checks;
pub mod constants;
pub mod search;
pub mod splitting;

pub use checks::{
    builtin_checks, check_by_name, check_names, Check, CheckReport, SuiteContext,
    SuiteSettings, Violation,
};
pub use constants::{estimate_constants, ConstantsReport, Provenance, Tagged};
pub use search::{parameter_search, HalvingRecord, SearchInput, SearchReport};
pub use splitting::{extract_splitting, SplittingReport};

use crate::cocycle::{CocycleWord, Factor, TangentVector};
use crate::geometry::ModelParams;
use crate::surgery;
use serde::Serialize;

/// A slope value, with the vertical direction signalled explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slope {
    Finite(f64),
    Infinite,
}

impl Slope {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Slope::Finite(v) => Some(*v),
            Slope::Infinite => None,
        }
    }
}

/// u-slope `b/c` of a tangent vector.
pub fn slope_u(v: &TangentVector) -> Slope {
    if v.c == 0.0 {
        Slope::Infinite
    } else {
        Slope::Finite(v.b / v.c)
    }
}

/// s-slope `c/b` of a tangent vector.
pub fn slope_s(v: &TangentVector) -> Slope {
    if v.b == 0.0 {
        Slope::Infinite
    } else {
        Slope::Finite(v.c / v.b)
    }
}

/// Inclination `a/c` of a vector of the center-unstable plane written as
/// `a Y + c e_tilde_u`.
pub fn slope_tilde_u(a: f64, c: f64) -> Slope {
    if c == 0.0 {
        Slope::Infinite
    } else {
        Slope::Finite(a / c)
    }
}

/// Flavor of a cone family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeFlavor {
    Cu,
    Cs,
    StrongU,
    StrongS,
}

/// A slope-interval cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cone {
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub flavor: ConeFlavor,
}

impl Cone {
    pub fn new(delta_lo: f64, delta_hi: f64, flavor: ConeFlavor) -> Self {
        assert!(delta_lo < delta_hi, "cone needs delta_lo < delta_hi");
        Cone { delta_lo, delta_hi, flavor }
    }

    pub fn contains(&self, slope: f64) -> bool {
        (self.delta_lo..=self.delta_hi).contains(&slope)
    }

    pub fn diameter(&self) -> f64 {
        self.delta_hi - self.delta_lo
    }

    /// Signed distance of `slope` inside the cone, normalized by the
    /// diameter; negative outside.
    pub fn margin(&self, slope: f64) -> f64 {
        if !slope.is_finite() {
            return f64::NEG_INFINITY;
        }
        (slope - self.delta_lo).min(self.delta_hi - slope) / self.diameter()
    }
}

/// Weak center-unstable cone slope range. The written form is the `m < 0`
/// one; for `m > 0` the whole picture mirrors through `e_u -> -e_u`.
pub fn weak_cu_slope_range(params: &ModelParams) -> (f64, f64) {
    let lo = -3.0 * params.r1 / params.r2;
    let hi = params.r2 / (3.0 * params.r1);
    if params.m < 0 {
        (lo, hi)
    } else {
        (-hi, -lo)
    }
}

/// Weak center-stable cone slope range (in the s-slope `c/b`).
pub fn weak_cs_slope_range(params: &ModelParams) -> (f64, f64) {
    let lo = -3.0 * params.r1 / (2.0 * params.r2);
    let hi = 2.0 * params.r2 / (3.0 * params.r1);
    if params.m < 0 {
        (lo, hi)
    } else {
        (-hi, -lo)
    }
}

pub fn weak_cu_cone(params: &ModelParams) -> Cone {
    let (lo, hi) = weak_cu_slope_range(params);
    Cone::new(lo, hi, ConeFlavor::Cu)
}

pub fn weak_cs_cone(params: &ModelParams) -> Cone {
    let (lo, hi) = weak_cs_slope_range(params);
    Cone::new(lo, hi, ConeFlavor::Cs)
}

/// Image of a u-slope under one glue factor at radial coordinate `r`.
pub fn su_slope_map(params: &ModelParams, r: f64, delta: f64) -> f64 {
    let m = surgery::phi_matrix_su(params, r);
    if !delta.is_finite() {
        if m.0[1][0] == 0.0 {
            return f64::INFINITY;
        }
        return m.0[0][0] / m.0[1][0];
    }
    (m.0[0][0] * delta + m.0[0][1]) / (m.0[1][0] * delta + m.0[1][1])
}

/// Derivative of the glue slope map; `1/h^2` with `h` the denominator.
pub fn su_slope_map_deriv(params: &ModelParams, r: f64, delta: f64) -> f64 {
    let m = surgery::phi_matrix_su(params, r);
    let h = m.0[1][0] * delta + m.0[1][1];
    // det = 1 for glue factors.
    1.0 / (h * h)
}

/// Image of an s-slope under the inverse of one glue factor (as met along
/// the backward flow).
pub fn su_slope_map_backward(params: &ModelParams, r: f64, delta_s: f64) -> f64 {
    let m = surgery::phi_matrix_su(params, r);
    let inv = crate::linalg::Mat2([
        [2.0 - m.0[0][0], -m.0[0][1]],
        [-m.0[1][0], 2.0 - m.0[1][1]],
    ]);
    if !delta_s.is_finite() {
        if inv.0[0][1] == 0.0 {
            return f64::INFINITY;
        }
        return inv.0[1][1] / inv.0[0][1];
    }
    // Vector (b, c) = (1, delta_s); new slope is c'/b'.
    (inv.0[1][0] + inv.0[1][1] * delta_s) / (inv.0[0][0] + inv.0[0][1] * delta_s)
}

/// Derivative of the backward slope map.
pub fn su_slope_map_backward_deriv(params: &ModelParams, r: f64, delta_s: f64) -> f64 {
    let m = surgery::phi_matrix_su(params, r);
    let h = (2.0 - m.0[0][0]) - m.0[0][1] * delta_s;
    1.0 / (h * h)
}

/// Push a u-slope through a whole word.
pub fn propagate_slope_u(params: &ModelParams, word: &CocycleWord, delta0: f64) -> f64 {
    let mut delta = delta0;
    for f in &word.factors {
        match f {
            Factor::Flow { flow } => delta *= params.lambda.powf(2.0 * *flow),
            Factor::Glue { glue_r } => delta = su_slope_map(params, *glue_r, delta),
        }
    }
    delta
}

/// Push an s-slope through the word traversed backwards (the action of the
/// inverse cocycle).
pub fn propagate_slope_s(params: &ModelParams, word: &CocycleWord, delta0: f64) -> f64 {
    let mut delta = delta0;
    for f in word.factors.iter().rev() {
        match f {
            Factor::Flow { flow } => delta *= params.lambda.powf(2.0 * *flow),
            Factor::Glue { glue_r } => delta = su_slope_map_backward(params, *glue_r, delta),
        }
    }
    delta
}

/// Push a pair of u-slopes through a word, tracking their difference by the
/// exact recursion instead of subtracting the propagated values: a
/// unimodular Moebius map satisfies `g(a) - g(b) = (a - b)/(h(a) h(b))`
/// with `h` its denominator, so the difference never suffers cancellation.
/// Returns `(image_lo, image_hi, |difference|)`.
pub fn propagate_pair_u(
    params: &ModelParams,
    word: &CocycleWord,
    lo: f64,
    hi: f64,
) -> (f64, f64, f64) {
    let mut a = lo;
    let mut b = hi;
    let mut diff = (hi - lo).abs();
    for f in &word.factors {
        match f {
            Factor::Flow { flow } => {
                let rate = params.lambda.powf(2.0 * *flow);
                a *= rate;
                b *= rate;
                diff *= rate;
            }
            Factor::Glue { glue_r } => {
                let m = surgery::phi_matrix_su(params, *glue_r);
                let ha = m.0[1][0] * a + m.0[1][1];
                let hb = m.0[1][0] * b + m.0[1][1];
                a = (m.0[0][0] * a + m.0[0][1]) / ha;
                b = (m.0[0][0] * b + m.0[0][1]) / hb;
                diff /= (ha * hb).abs();
            }
        }
    }
    (a, b, diff)
}

/// Backward counterpart of [`propagate_pair_u`] for s-slope pairs.
pub fn propagate_pair_s(
    params: &ModelParams,
    word: &CocycleWord,
    lo: f64,
    hi: f64,
) -> (f64, f64, f64) {
    let mut a = lo;
    let mut b = hi;
    let mut diff = (hi - lo).abs();
    for f in word.factors.iter().rev() {
        match f {
            Factor::Flow { flow } => {
                let rate = params.lambda.powf(2.0 * *flow);
                a *= rate;
                b *= rate;
                diff *= rate;
            }
            Factor::Glue { glue_r } => {
                let m = surgery::phi_matrix_su(params, *glue_r);
                let inv = crate::linalg::Mat2([
                    [2.0 - m.0[0][0], -m.0[0][1]],
                    [-m.0[1][0], 2.0 - m.0[1][1]],
                ]);
                let ha = inv.0[0][0] + inv.0[0][1] * a;
                let hb = inv.0[0][0] + inv.0[0][1] * b;
                a = (inv.0[1][0] + inv.0[1][1] * a) / ha;
                b = (inv.0[1][0] + inv.0[1][1] * b) / hb;
                diff /= (ha * hb).abs();
            }
        }
    }
    (a, b, diff)
}

/// Thread a pair of tilde-u slopes with their exact difference; glue
/// factors act affinely, so the difference only ever divides by `B`.
/// Returns `(image_lo, image_hi, |difference|)`.
pub fn propagate_pair_tilde_u(
    params: &ModelParams,
    word: &CocycleWord,
    alpha0: f64,
    lo: f64,
    hi: f64,
) -> (f64, f64, f64) {
    let mut alpha = alpha0;
    let mut a = lo;
    let mut b = hi;
    let mut diff = (hi - lo).abs();
    for f in &word.factors {
        match f {
            Factor::Flow { flow } => {
                let rate = params.lambda.powf(*flow);
                a *= rate;
                b *= rate;
                diff *= rate;
                alpha *= rate * rate;
            }
            Factor::Glue { glue_r } => {
                let m = surgery::phi_matrix_cu(params, *glue_r, alpha);
                let (shift, scale) = (m.0[0][1], m.0[1][1]);
                a = (a + shift) / scale;
                b = (b + shift) / scale;
                diff /= scale.abs();
                alpha = surgery::cu_alpha_image(params, *glue_r, alpha);
            }
        }
    }
    (a, b, diff)
}

/// Log of the s/u-norm growth of the vector with u-slope `delta0` along the
/// word, accumulated with per-factor rescaling.
pub fn su_log_growth(params: &ModelParams, word: &CocycleWord, delta0: f64) -> f64 {
    let mut v = if delta0.is_finite() {
        let n = (delta0 * delta0 + 1.0).sqrt();
        [delta0 / n, 1.0 / n]
    } else {
        [1.0, 0.0]
    };
    let mut log_growth = 0.0;
    for f in &word.factors {
        let m = match f {
            Factor::Flow { flow } => crate::cocycle::psi_matrix_su(params, *flow),
            Factor::Glue { glue_r } => surgery::phi_matrix_su(params, *glue_r),
        };
        v = m.apply(v);
        let n = crate::linalg::norm2(v);
        log_growth += n.ln();
        v = [v[0] / n, v[1] / n];
    }
    log_growth
}

/// Backward counterpart of [`su_log_growth`] for s-slope `delta0`.
pub fn su_log_growth_backward(params: &ModelParams, word: &CocycleWord, delta0: f64) -> f64 {
    let mut v = if delta0.is_finite() {
        let n = (delta0 * delta0 + 1.0).sqrt();
        [1.0 / n, delta0 / n]
    } else {
        [0.0, 1.0]
    };
    let mut log_growth = 0.0;
    for f in word.factors.iter().rev() {
        let m = match f {
            Factor::Flow { flow } => crate::cocycle::psi_matrix_su(params, -*flow),
            Factor::Glue { glue_r } => surgery::phi_matrix_su(params, *glue_r)
                .inverse()
                .expect("glue factors are unimodular"),
        };
        v = m.apply(v);
        let n = crate::linalg::norm2(v);
        log_growth += n.ln();
        v = [v[0] / n, v[1] / n];
    }
    log_growth
}

/// `Q(delta) = (delta^2 + 1)^{-1}`, the slope-dependent norm-expansion gap.
pub fn q_of_slope(delta: f64) -> f64 {
    1.0 / (delta * delta + 1.0)
}

/// Thread the pair (plane inclination, tilde-u slope) through one word.
/// Returns the final slope, the final inclination and the smallest cu `B`
/// entry met along the way.
pub fn propagate_tilde_u(
    params: &ModelParams,
    word: &CocycleWord,
    alpha0: f64,
    slope0: f64,
) -> (f64, f64, f64) {
    let mut alpha = alpha0;
    let mut slope = slope0;
    let mut b_min = f64::INFINITY;
    for f in &word.factors {
        match f {
            Factor::Flow { flow } => {
                slope *= params.lambda.powf(*flow);
                alpha *= params.lambda.powf(2.0 * *flow);
            }
            Factor::Glue { glue_r } => {
                let m = surgery::phi_matrix_cu(params, *glue_r, alpha);
                let (a, b) = (m.0[0][1], m.0[1][1]);
                b_min = b_min.min(b);
                slope = (slope + a) / b;
                alpha = surgery::cu_alpha_image(params, *glue_r, alpha);
            }
        }
    }
    (slope, alpha, b_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap()
    }

    #[test]
    fn slope_examples() {
        let v = TangentVector::new(0.0, 1.0, 1.0);
        assert_eq!(slope_u(&v), Slope::Finite(1.0));
        let v = TangentVector::new(0.0, 0.0, 1.0);
        assert_eq!(slope_u(&v), Slope::Finite(0.0));
        assert_eq!(slope_s(&v), Slope::Infinite);
        let v = TangentVector::new(0.0, 1.0, 2.0);
        assert_eq!(slope_u(&v), Slope::Finite(0.5));
        assert_eq!(slope_s(&v), Slope::Finite(2.0));
        assert_eq!(slope_tilde_u(1.0, 2.0), Slope::Finite(0.5));
        assert_eq!(slope_tilde_u(1.0, 0.0), Slope::Infinite);
    }

    #[test]
    fn reciprocal_slopes() {
        let v = TangentVector::new(0.3, 0.7, -1.3);
        let u = slope_u(&v).finite().unwrap();
        let s = slope_s(&v).finite().unwrap();
        assert!((u * s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_of_slope(0.0), 1.0);
        assert_eq!(q_of_slope(1.0), 0.5);
    }

    #[test]
    fn flow_contracts_slopes_exactly() {
        let p = params();
        let word = CocycleWord::pure_flow(3.2);
        for d0 in [-11.0, -2.0, 0.05, 0.0] {
            let out = propagate_slope_u(&p, &word, d0);
            assert!((out - d0 * p.lambda.powf(6.4)).abs() < 1e-14 * d0.abs().max(1.0));
        }
        // Backward s-slopes contract at the same rate.
        let out = propagate_slope_s(&p, &word, -4.0);
        assert!((out + 4.0 * p.lambda.powf(6.4)).abs() < 1e-13);
    }

    #[test]
    fn slope_map_matches_matrix_action() {
        let p = params();
        let r = 0.05;
        let m = surgery::phi_matrix_su(&p, r);
        for d in [-10.0, -1.0, 0.0, 0.08] {
            let img = m.apply([d, 1.0]);
            let expect = img[0] / img[1];
            assert!((su_slope_map(&p, r, d) - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn slope_map_derivative_is_finite_difference() {
        let p = params();
        let r = 0.047;
        for d in [-1.2, -0.4, 0.01] {
            let h = 1e-6;
            let fd = (su_slope_map(&p, r, d + h) - su_slope_map(&p, r, d - h)) / (2.0 * h);
            assert!((su_slope_map_deriv(&p, r, d) - fd).abs() < 1e-4 * fd.abs().max(1.0));
            let fdb = (su_slope_map_backward(&p, r, d + h)
                - su_slope_map_backward(&p, r, d - h))
                / (2.0 * h);
            assert!(
                (su_slope_map_backward_deriv(&p, r, d) - fdb).abs()
                    < 1e-4 * fdb.abs().max(1.0)
            );
        }
    }

    #[test]
    fn eigen_direction_is_parabolic_fixed_point() {
        let p = params();
        let r = 0.05;
        let eigen = -p.r1 / r;
        assert!((su_slope_map(&p, r, eigen) - eigen).abs() < 1e-9);
        assert!((su_slope_map_deriv(&p, r, eigen) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deriv_below_one_between_eigen_and_axis() {
        let p = params();
        for k in 0..30 {
            let r = p.r2 / 3.0 + (p.r2 / 3.0) * (k as f64 + 0.5) / 30.0;
            let eigen = -p.r1 / r;
            for j in 1..40 {
                let d = eigen * (1.0 - j as f64 / 40.0);
                assert!(su_slope_map_deriv(&p, r, d) < 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn growth_matches_direct_product_for_short_words() {
        let p = params();
        let word = CocycleWord::from_parts(1.1, &[(0.05, 2.3)]);
        let m = crate::cocycle::dpsi_su(&p, &word);
        let d0 = -0.3;
        let n0 = (d0 * d0 + 1.0f64).sqrt();
        let v = [d0 / n0, 1.0 / n0];
        let direct = crate::linalg::norm2(m.apply(v)).ln();
        assert!((su_log_growth(&p, &word, d0) - direct).abs() < 1e-10);
    }

    #[test]
    fn pure_unstable_vector_grows_exactly() {
        let p = params();
        for t in [0.5, 3.0, 11.0] {
            let g = su_log_growth(&p, &CocycleWord::pure_flow(t), 0.0);
            assert!((g + t * p.lambda.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_glue_norm_floor() {
        use rand::{Rng, SeedableRng};
        let p = params();
        let constants = estimate_constants(&p, p.r1, 256).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(17);
        for _ in 0..2_000 {
            let r = rng.gen::<f64>() * p.r2;
            let m = surgery::phi_matrix_su(&p, r);
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            let v = [theta.cos(), theta.sin()];
            let grown = crate::linalg::norm2(m.apply(v));
            assert!(grown >= constants.r0_su * (1.0 - 1e-9));
        }
    }

    #[test]
    fn backward_growth_inverts_forward() {
        let p = params();
        let word = CocycleWord::from_parts(0.8, &[(0.04, 1.0)]);
        let m = crate::cocycle::dpsi_su(&p, &word);
        let inv = m.inverse().unwrap();
        let d0 = -2.0;
        let n0 = (d0 * d0 + 1.0f64).sqrt();
        let v = [1.0 / n0, d0 / n0];
        let direct = crate::linalg::norm2(inv.apply(v)).ln();
        assert!((su_log_growth_backward(&p, &word, d0) - direct).abs() < 1e-10);
    }

    #[test]
    fn cone_margins() {
        let cone = Cone::new(-2.0, 1.0, ConeFlavor::Cu);
        assert!(cone.contains(0.0));
        assert!(!cone.contains(1.5));
        assert!(cone.margin(-2.0) == 0.0);
        assert!(cone.margin(1.5) < 0.0);
        assert!((cone.margin(-0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn epsilon_cone_captured_by_one_glue() {
        // A glue factor maps every epsilon-cone slope strictly inside the
        // weak cone.
        let p = params();
        let constants = estimate_constants(&p, p.r1, 128).unwrap();
        let eps = constants.epsilon.value;
        let cone = weak_cu_cone(&p);
        for i in 0..64 {
            let r = p.r2 * (i as f64 + 0.5) / 64.0;
            for j in 0..=32 {
                let delta = -eps + 2.0 * eps * j as f64 / 32.0;
                let image = su_slope_map(&p, r, delta);
                assert!(
                    image > cone.delta_lo && image < cone.delta_hi,
                    "slope {} at r {} mapped to {}",
                    delta, r, image
                );
            }
        }
    }

    #[test]
    fn pure_flow_image_cone_is_contracted_pair() {
        // A flow factor of duration t maps the cone onto the interval with
        // both edges scaled by lambda^{2t}, nested inside for t >= T.
        let p = params();
        let constants = estimate_constants(&p, p.r1, 128).unwrap();
        let t = constants.t_threshold();
        let cone = weak_cu_cone(&p);
        let word = CocycleWord::pure_flow(t);
        let rate = p.lambda.powf(2.0 * t);
        let lo = propagate_slope_u(&p, &word, cone.delta_lo);
        let hi = propagate_slope_u(&p, &word, cone.delta_hi);
        assert!((lo - rate * cone.delta_lo).abs() < 1e-12);
        assert!((hi - rate * cone.delta_hi).abs() < 1e-12);
        assert!(cone.contains(lo) && cone.contains(hi));
    }

    #[test]
    fn mirrored_cones_for_positive_multiplicity() {
        let neg = params();
        let pos = ModelParams::new(0.5, 1, 1, 1, 0.4, 0.1).unwrap();
        let (nl, nh) = weak_cu_slope_range(&neg);
        let (pl, ph) = weak_cu_slope_range(&pos);
        assert_eq!((pl, ph), (-nh, -nl));
    }
}
