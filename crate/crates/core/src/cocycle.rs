//! The derivative cocycle as alternating words of flow factors and glue
//! factors, together with the seeded itinerary samplers that feed the
//! verification suite.
//!
//! A word stands for the composition `Psi_{t_{l+1}} Phi_{r_l} ... Phi_{r_1}
//! Psi_{t_1}` read left to right in application order: the first factor of
//! the vector is applied first. Outside dynamics is represented only by its
//! transit times, so a word carries durations and glue base coordinates and
//! nothing else.

use crate::error::{ModelError, Result};
use crate::geometry::{ModelParams, Point3};
use crate::linalg::{Mat2, Mat3};
use crate::surgery;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// One factor of a cocycle word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Factor {
    /// Flow for a nonnegative duration.
    Flow { flow: f64 },
    /// Glue factor at radial coordinate `glue_r` on the twisted annulus.
    Glue { glue_r: f64 },
}

/// Where a sampled word came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Durations drawn directly by the constrained sampler.
    Synthetic,
    /// Transit times traced through the region, outside returns synthetic.
    Geometric,
}

/// Alternating word of flow and glue factors, starting and ending with a
/// flow factor (whose duration may be zero at the ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleWord {
    pub factors: Vec<Factor>,
}

impl CocycleWord {
    /// Build from leading time, (glue, following time) pairs.
    pub fn from_parts(lead: f64, rest: &[(f64, f64)]) -> CocycleWord {
        let mut factors = vec![Factor::Flow { flow: lead }];
        for &(r, t) in rest {
            factors.push(Factor::Glue { glue_r: r });
            factors.push(Factor::Flow { flow: t });
        }
        CocycleWord { factors }
    }

    pub fn pure_flow(t: f64) -> CocycleWord {
        CocycleWord { factors: vec![Factor::Flow { flow: t }] }
    }

    pub fn total_time(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Flow { flow } => *flow,
                Factor::Glue { .. } => 0.0,
            })
            .sum()
    }

    pub fn glue_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| matches!(f, Factor::Glue { .. }))
            .count()
    }

    /// Interior flow durations (all but the first and last flow factor).
    pub fn interior_times(&self) -> Vec<f64> {
        let times: Vec<f64> = self
            .factors
            .iter()
            .filter_map(|f| match f {
                Factor::Flow { flow } => Some(*flow),
                _ => None,
            })
            .collect();
        if times.len() <= 2 {
            return Vec::new();
        }
        times[1..times.len() - 1].to_vec()
    }

    /// Word whose action is `self` followed by `then`; the junction flow
    /// durations merge so the factors stay alternating.
    pub fn concat(&self, then: &CocycleWord) -> CocycleWord {
        let mut factors = self.factors.clone();
        let mut rhs = then.factors.iter();
        if let (Some(Factor::Flow { flow: a }), Some(Factor::Flow { flow: b })) =
            (factors.last().copied(), rhs.clone().next())
        {
            *factors.last_mut().unwrap() = Factor::Flow { flow: a + b };
            rhs.next();
        }
        factors.extend(rhs.copied());
        CocycleWord { factors }
    }

    pub fn well_formed(&self) -> bool {
        if self.factors.is_empty() {
            return true;
        }
        let flow_at = |k: usize| matches!(self.factors[k], Factor::Flow { .. });
        if !flow_at(0) || !flow_at(self.factors.len() - 1) {
            return false;
        }
        self.factors
            .windows(2)
            .all(|w| matches!(w, [Factor::Flow { .. }, Factor::Glue { .. }] | [Factor::Glue { .. }, Factor::Flow { .. }]))
    }
}

/// Coefficients `(a, b, c)` of a tangent vector in the frame `{Y, e_s, e_u}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentVector {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl TangentVector {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        TangentVector { a, b, c }
    }

    pub fn norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c).sqrt()
    }

    pub fn su_part(&self) -> [f64; 2] {
        [self.b, self.c]
    }

    pub fn su_norm(&self) -> f64 {
        (self.b * self.b + self.c * self.c).sqrt()
    }
}

/// Inclination state of the center-unstable plane threaded through a word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CuState {
    pub alpha: f64,
}

impl CuState {
    /// Flow for duration `s` contracts the inclination by `lambda^{2s}`.
    pub fn flow(&self, params: &ModelParams, s: f64) -> CuState {
        CuState { alpha: self.alpha * params.lambda.powf(2.0 * s) }
    }
}

/// Full 3x3 flow factor: `diag(1, lambda^t, lambda^{-t})`.
pub fn psi_matrix_full(params: &ModelParams, t: f64) -> Mat3 {
    let lt = params.lambda.powf(t);
    Mat3([[1.0, 0.0, 0.0], [0.0, lt, 0.0], [0.0, 0.0, 1.0 / lt]])
}

/// s/u flow factor: `diag(lambda^t, lambda^{-t})`.
pub fn psi_matrix_su(params: &ModelParams, t: f64) -> Mat2 {
    let lt = params.lambda.powf(t);
    Mat2([[lt, 0.0], [0.0, 1.0 / lt]])
}

/// Center-unstable flow factor: `diag(1, lambda^{-t})`.
pub fn psi_matrix_cu(params: &ModelParams, t: f64) -> Mat2 {
    Mat2([[1.0, 0.0], [0.0, params.lambda.powf(-t)]])
}

/// Ordered product of the word's factors in the full frame.
pub fn dpsi_full(params: &ModelParams, word: &CocycleWord) -> Mat3 {
    let mut acc = Mat3::IDENTITY;
    for factor in &word.factors {
        let m = match factor {
            Factor::Flow { flow } => psi_matrix_full(params, *flow),
            Factor::Glue { glue_r } => surgery::phi_matrix_full(params, *glue_r),
        };
        acc = m.mul(&acc);
    }
    acc
}

/// Ordered product of the word's factors on the s/u quotient.
pub fn dpsi_su(params: &ModelParams, word: &CocycleWord) -> Mat2 {
    let mut acc = Mat2::IDENTITY;
    for factor in &word.factors {
        let m = match factor {
            Factor::Flow { flow } => psi_matrix_su(params, *flow),
            Factor::Glue { glue_r } => surgery::phi_matrix_su(params, *glue_r),
        };
        acc = m.mul(&acc);
    }
    acc
}

/// Outcome of threading the center-unstable plane through a word.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CuResult {
    pub matrix: Mat2,
    pub final_alpha: f64,
    /// Set when the inclination left the weak-cone slope range; reported,
    /// not fatal.
    pub cone_violation: bool,
}

/// Product of the center-unstable factors with the inclination threaded
/// through each glue.
pub fn dpsi_cu(params: &ModelParams, word: &CocycleWord, alpha0: f64) -> CuResult {
    let (lo, hi) = crate::hyperbolicity::weak_cu_slope_range(params);
    let mut acc = Mat2::IDENTITY;
    let mut alpha = alpha0;
    let mut violated = !(lo..=hi).contains(&alpha0);
    for factor in &word.factors {
        match factor {
            Factor::Flow { flow } => {
                acc = psi_matrix_cu(params, *flow).mul(&acc);
                alpha *= params.lambda.powf(2.0 * *flow);
            }
            Factor::Glue { glue_r } => {
                acc = surgery::phi_matrix_cu(params, *glue_r, alpha).mul(&acc);
                alpha = surgery::cu_alpha_image(params, *glue_r, alpha);
            }
        }
        if !(lo..=hi).contains(&alpha) {
            violated = true;
        }
    }
    CuResult { matrix: acc, final_alpha: alpha, cone_violation: violated }
}

/// Spec of the constrained sampler.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SamplerSpec {
    pub count: usize,
    pub max_factors: usize,
    pub min_interior_time: f64,
    /// Width of the uniform window added on top of the minimum duration.
    pub time_spread: f64,
    /// Lower bound for the leading and trailing flow durations.
    pub end_time_floor: f64,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(count: usize, max_factors: usize, min_interior_time: f64, seed: u64) -> Self {
        SamplerSpec {
            count,
            max_factors,
            min_interior_time,
            time_spread: 2.0,
            end_time_floor: 0.5,
            seed,
        }
    }
}

fn validate_spec(params: &ModelParams, spec: &SamplerSpec) -> Result<()> {
    params.validate()?;
    if spec.max_factors == 0 || spec.max_factors.is_multiple_of(2) {
        return Err(ModelError::Config(
            "max_factors must be odd and positive (words start and end with a flow factor)".into(),
        ));
    }
    if spec.min_interior_time < 0.0 || spec.time_spread < 0.0 || spec.end_time_floor < 0.0 {
        return Err(ModelError::Config("sampler durations must be nonnegative".into()));
    }
    Ok(())
}

/// A sampled word together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledWord {
    pub word: CocycleWord,
    pub provenance: Provenance,
}

/// Deterministic constrained sampler: interior durations are at least
/// `min_interior_time`, glue coordinates uniform on `[0, r2]`.
pub fn sample_itineraries(params: &ModelParams, spec: &SamplerSpec) -> Result<Vec<SampledWord>> {
    validate_spec(params, spec)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let max_glues = (spec.max_factors - 1) / 2;
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let glues = rng.gen_range(0..=max_glues);
        let lead = spec.end_time_floor + rng.gen::<f64>() * spec.time_spread;
        let mut rest = Vec::with_capacity(glues);
        for k in 0..glues {
            let r = rng.gen::<f64>() * params.r2;
            let t = if k + 1 == glues {
                // Trailing segment.
                spec.end_time_floor + rng.gen::<f64>() * spec.time_spread
            } else {
                spec.min_interior_time + rng.gen::<f64>() * spec.time_spread
            };
            rest.push((r, t));
        }
        out.push(SampledWord {
            word: CocycleWord::from_parts(lead, &rest),
            provenance: Provenance::Synthetic,
        });
    }
    Ok(out)
}

/// Trace real orbits through the region (entry to exit via the transit map)
/// and stitch synthetic outside returns between visits.
pub fn geometric_itineraries(
    params: &ModelParams,
    spec: &SamplerSpec,
) -> Result<Vec<SampledWord>> {
    validate_spec(params, spec)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed ^ 0x67656f6d);
    let max_glues = (spec.max_factors - 1) / 2;
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let glues = rng.gen_range(0..=max_glues);
        let lead = spec.end_time_floor + rng.gen::<f64>() * spec.time_spread;
        let mut z = rng.gen::<f64>();
        let mut rest = Vec::with_capacity(glues);
        for k in 0..glues {
            // Entry radial coordinate away from the stable wall.
            let r = params.r2 * (1e-6 + (1.0 - 1e-6) * rng.gen::<f64>());
            let entry = Point3::new(params.r1, if params.m < 0 { r } else { -r }, z);
            let transit = crate::affine_flow::transit_map(params, &entry, 1e-9)?;
            z = transit.exit_point.z;
            let t = if k + 1 == glues {
                transit.transit_time + spec.end_time_floor + rng.gen::<f64>() * spec.time_spread
            } else {
                // Outside return long enough to respect the interior floor.
                let outside = (spec.min_interior_time - transit.transit_time).max(0.0)
                    + spec.end_time_floor
                    + rng.gen::<f64>() * spec.time_spread;
                z = crate::geometry::wrap_z(z + outside / params.np());
                transit.transit_time + outside
            };
            rest.push((r, t));
        }
        out.push(SampledWord {
            word: CocycleWord::from_parts(lead, &rest),
            provenance: Provenance::Geometric,
        });
    }
    Ok(out)
}

/// Sampler for volume checks. The determinant of a word product carries a
/// rounding error of order `||M||^2 eps`, so the words are kept well
/// conditioned: short durations and at most two glue factors each.
pub fn sample_volume_words(
    params: &ModelParams,
    count: usize,
    max_glues: usize,
    seed: u64,
) -> Result<Vec<CocycleWord>> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x766f6c);
    let max_glues = max_glues.min(2);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let glues = rng.gen_range(0..=max_glues);
        let lead = rng.gen::<f64>() * 0.3;
        let rest: Vec<(f64, f64)> = (0..glues)
            .map(|_| (rng.gen::<f64>() * params.r2, rng.gen::<f64>() * 0.3))
            .collect();
        out.push(CocycleWord::from_parts(lead, &rest));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap()
    }

    fn spec(count: usize, seed: u64) -> SamplerSpec {
        SamplerSpec::new(count, 9, 3.0, seed)
    }

    #[test]
    fn flow_factor_action() {
        let p = params();
        let word = CocycleWord::pure_flow(2.0);
        let m = dpsi_full(&p, &word);
        let img = m.apply([1.0, 1.0, 1.0]);
        assert!((img[0] - 1.0).abs() < 1e-15);
        assert!((img[1] - 0.25).abs() < 1e-15);
        assert!((img[2] - 4.0).abs() < 1e-15);

        let su = dpsi_su(&p, &word);
        assert!((su.0[0][0] - 0.25).abs() < 1e-15);
        assert!((su.0[1][1] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn empty_word_is_identity() {
        let p = params();
        let word = CocycleWord { factors: vec![] };
        assert_eq!(dpsi_full(&p, &word), Mat3::IDENTITY);
        assert_eq!(dpsi_su(&p, &word), Mat2::IDENTITY);
    }

    #[test]
    fn mixed_word_volume_and_growth() {
        let p = params();
        let word = CocycleWord::from_parts(1.0, &[(p.r2 / 2.0, 1.0)]);
        let m = dpsi_full(&p, &word);
        assert!((m.det() - 1.0).abs() < 1e-12);
        assert!(m.su_block().trace() > 2.0);
    }

    #[test]
    fn off_support_glue_acts_trivially() {
        let p = params();
        let word = CocycleWord::from_parts(0.0, &[(0.9 * p.r2, 0.0)]);
        assert_eq!(dpsi_su(&p, &word), Mat2::IDENTITY);
        assert_eq!(dpsi_full(&p, &word), Mat3::IDENTITY);
    }

    #[test]
    fn su_matches_full_block() {
        let p = params();
        let words = sample_itineraries(&p, &spec(40, 7)).unwrap();
        for sw in &words {
            if sw.word.total_time() > 40.0 {
                continue;
            }
            let full = dpsi_full(&p, &sw.word).su_block();
            let su = dpsi_su(&p, &sw.word);
            for i in 0..2 {
                for j in 0..2 {
                    let scale = su.0[i][j].abs().max(1.0);
                    assert!((full.0[i][j] - su.0[i][j]).abs() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn cocycle_law_under_concatenation() {
        let p = params();
        let w1 = CocycleWord::from_parts(0.7, &[(0.05, 1.3)]);
        let w2 = CocycleWord::from_parts(0.4, &[(0.04, 0.8), (0.06, 0.2)]);
        let joint = w1.concat(&w2);
        assert!(joint.well_formed());
        let lhs = dpsi_full(&p, &joint);
        let rhs = dpsi_full(&p, &w2).mul(&dpsi_full(&p, &w1));
        for i in 0..3 {
            for j in 0..3 {
                let scale = rhs.0[i][j].abs().max(1.0);
                assert!((lhs.0[i][j] - rhs.0[i][j]).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn dets_are_one() {
        let p = params();
        let words = sample_volume_words(&p, 200, 2, 3).unwrap();
        for w in &words {
            assert!((dpsi_full(&p, w).det() - 1.0).abs() < 1e-9);
            assert!((dpsi_su(&p, w).det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cu_inclination_rule() {
        let p = params();
        let res = dpsi_cu(&p, &CocycleWord::pure_flow(3.0), -1.0);
        assert!((res.final_alpha + p.lambda.powf(6.0)).abs() < 1e-15);
        assert!(!res.cone_violation);

        // Identity glue factors leave the diag product.
        let word = CocycleWord::from_parts(1.0, &[(0.095, 2.0)]);
        let res = dpsi_cu(&p, &word, -0.5);
        assert!((res.matrix.0[1][1] - p.lambda.powf(-3.0)).abs() < 1e-10);
        assert_eq!(res.matrix.0[1][0], 0.0);
    }

    #[test]
    fn cu_inclination_outside_range_is_flagged() {
        let p = params();
        let (lo, _) = crate::hyperbolicity::weak_cu_slope_range(&p);
        let res = dpsi_cu(&p, &CocycleWord::pure_flow(1.0), 2.0 * lo);
        assert!(res.cone_violation);
        // The state struct follows the same contraction rule.
        let state = CuState { alpha: -1.0 }.flow(&p, 3.0);
        assert!((state.alpha + p.lambda.powf(6.0)).abs() < 1e-15);
    }

    #[test]
    fn cu_glue_entry_matches_b() {
        let p = params();
        let word = CocycleWord::from_parts(3.0, &[(p.r2 / 2.0, 0.0)]);
        let res = dpsi_cu(&p, &word, -1.0);
        let alpha_at_glue = -p.lambda.powf(6.0);
        let b = surgery::cu_b_entry(&p, p.r2 / 2.0, alpha_at_glue);
        let lt = p.lambda.powf(-3.0);
        assert!((res.matrix.0[1][1] - b * lt).abs() < 1e-10);
        assert_eq!(res.matrix.0[1][0], 0.0);
    }

    #[test]
    fn cu_oracle_full_restriction() {
        // Thread the plane through the full 3x3 factor by factor and compare.
        let p = params();
        let word = CocycleWord::from_parts(0.9, &[(0.047, 2.1), (0.061, 0.4)]);
        let alpha0 = -0.03;
        let mut alpha = alpha0;
        let mut acc = Mat2::IDENTITY;
        for f in &word.factors {
            let m3 = match f {
                Factor::Flow { flow } => psi_matrix_full(&p, *flow),
                Factor::Glue { glue_r } => surgery::phi_matrix_full(&p, *glue_r),
            };
            // Restriction to span{Y, alpha e_s + e_u}: Y maps to Y and the
            // inclined vector decomposes against the image inclination.
            let img = m3.apply([0.0, alpha, 1.0]);
            let restricted = Mat2([[1.0, img[0]], [0.0, img[2]]]);
            acc = restricted.mul(&acc);
            alpha = img[1] / img[2];
        }
        let res = dpsi_cu(&p, &word, alpha0);
        assert!((res.final_alpha - alpha).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let scale = acc.0[i][j].abs().max(1.0);
                assert!((res.matrix.0[i][j] - acc.0[i][j]).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = params();
        let a = sample_itineraries(&p, &spec(50, 99)).unwrap();
        let b = sample_itineraries(&p, &spec(50, 99)).unwrap();
        assert_eq!(a, b);
        let c = sample_itineraries(&p, &spec(50, 100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampler_respects_constraints() {
        let p = params();
        let words = sample_itineraries(&p, &spec(100, 5)).unwrap();
        assert_eq!(words.len(), 100);
        for sw in &words {
            assert!(sw.word.well_formed());
            assert!(sw.word.factors.len() <= 9);
            for t in sw.word.interior_times() {
                assert!(t >= 3.0);
            }
            for f in &sw.word.factors {
                if let Factor::Glue { glue_r } = f {
                    assert!((0.0..=p.r2).contains(glue_r));
                }
            }
        }
        assert!(sample_itineraries(&p, &spec(0, 5)).unwrap().is_empty());
    }

    #[test]
    fn geometric_words_embed_transit_times(){
        let p = params();
        let words = geometric_itineraries(&p, &spec(60, 11)).unwrap();
        for sw in &words {
            assert_eq!(sw.provenance, Provenance::Geometric);
            assert!(sw.word.well_formed());
            for t in sw.word.interior_times() {
                assert!(t >= 3.0 - 1e-12);
            }
        }
    }

    #[test]
    fn word_json_schema() {
        let word = CocycleWord::from_parts(1.5, &[(0.05, 2.0)]);
        let json = serde_json::to_string(&word.factors).unwrap();
        assert_eq!(json, r#"[{"flow":1.5},{"glue_r":0.05},{"flow":2.0}]"#);
        let back: Vec<Factor> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, word.factors);
    }
}
