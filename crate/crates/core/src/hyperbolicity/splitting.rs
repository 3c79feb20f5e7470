//! Nested-cone extraction of the invariant splitting: the limit slopes of
//! the center-unstable and center-stable planes and of the strong lines
//! inside them, with the per-iteration contraction history.

use crate::cocycle::{Factor, SampledWord};
use crate::error::{ModelError, Result};
use crate::geometry::ModelParams;
use crate::hyperbolicity::constants::ConstantsReport;
use crate::hyperbolicity::{weak_cs_cone, weak_cu_cone};
use serde::Serialize;

/// Diameters below this are treated as fully converged; the geometric decay
/// degenerates the intervals numerically within a few iterations.
const DIAM_FLOOR: f64 = 1e-120;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub word_time: f64,
    pub cu_diameter: f64,
    pub cs_diameter: f64,
    /// Slope-diameter ratio of this iteration against the previous one.
    pub contraction_factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplittingReport {
    /// Limit u-slope of the center-unstable plane family.
    pub fcu_slope: f64,
    /// Limit s-slope of the center-stable plane family.
    pub fcs_slope: f64,
    /// Limit tilde-u inclination of the strong unstable line inside the
    /// center-unstable plane.
    pub fu_inclination: f64,
    /// Limit inclination of the strong stable line (backward analogue).
    pub fs_inclination: f64,
    /// Residual widths of the strong-line inclination intervals.
    pub fu_diameter: f64,
    pub fs_diameter: f64,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    /// The two limit planes meet along the flow axis only.
    pub flow_axis_ok: bool,
    pub iterations_used: usize,
}

/// Iterate cone images along the word stream until the slope intervals
/// degenerate, then extract the strong lines inside the limit planes.
///
/// Interval positions come from the endpoint images; the diameters follow
/// the exact difference recursion of [`crate::hyperbolicity::propagate_pair_u`],
/// so the recorded contraction factors stay meaningful far below the
/// resolution of an endpoint subtraction.
pub fn extract_splitting(
    params: &ModelParams,
    constants: &ConstantsReport,
    words: &[SampledWord],
    max_iterations: usize,
) -> Result<SplittingReport> {
    if words.is_empty() {
        return Err(ModelError::Config("splitting extraction needs a word stream".into()));
    }
    let cu = weak_cu_cone(params);
    let cs = weak_cs_cone(params);
    let (mut cu_lo, mut cu_hi) = (cu.delta_lo, cu.delta_hi);
    let (mut cs_lo, mut cs_hi) = (cs.delta_lo, cs.delta_hi);
    let mut cu_diam = cu.diameter();
    let mut cs_diam;
    let mut history = Vec::new();
    let mut converged = false;
    let mut used = 0;
    for (k, sw) in words.iter().take(max_iterations).enumerate() {
        used = k + 1;
        let before = cu_diam;
        let (nlo, nhi, ndiam) =
            crate::hyperbolicity::propagate_pair_u(params, &sw.word, cu_lo, cu_hi);
        let (slo, shi, sdiam) =
            crate::hyperbolicity::propagate_pair_s(params, &sw.word, cs_lo, cs_hi);
        if !(nlo.is_finite() && nhi.is_finite() && slo.is_finite() && shi.is_finite()) {
            return Err(ModelError::Data(
                "non-contraction detected: cone image escaped to infinite slope".into(),
            ));
        }
        (cu_lo, cu_hi) = (nlo.min(nhi), nlo.max(nhi));
        (cs_lo, cs_hi) = (slo.min(shi), slo.max(shi));
        cu_diam = ndiam;
        cs_diam = sdiam;
        history.push(IterationRecord {
            iteration: k,
            word_time: sw.word.total_time(),
            cu_diameter: cu_diam,
            cs_diameter: cs_diam,
            contraction_factor: if before > 0.0 { cu_diam / before } else { 0.0 },
        });
        if cu_diam < DIAM_FLOOR && cs_diam < DIAM_FLOOR {
            converged = true;
            break;
        }
        if k > 0 && cu_diam >= before && cu_diam > 1e-100 {
            return Err(ModelError::Data(format!(
                "non-contraction detected: cu slope diameter grew from {} to {}",
                before, cu_diam
            )));
        }
    }
    let fcu = 0.5 * (cu_lo + cu_hi);
    let fcs = 0.5 * (cs_lo + cs_hi);

    // Strong line inside the limit center-unstable plane: thread the
    // tilde-u interval through the stream with the plane inclination fcu.
    let delta_u = constants.delta_u_strong.value;
    let (mut su_lo, mut su_hi) = (-delta_u, delta_u);
    let mut su_diam = 2.0 * delta_u;
    let (mut ss_lo, mut ss_hi) = (-delta_u, delta_u);
    let mut ss_diam = 2.0 * delta_u;
    for sw in words.iter().take(max_iterations) {
        let (a, b, d) = crate::hyperbolicity::propagate_pair_tilde_u(
            params, &sw.word, fcu, su_lo, su_hi,
        );
        (su_lo, su_hi) = (a.min(b), a.max(b));
        su_diam = d;
        let (c, e, ds) = tilde_s_pair(params, &sw.word, fcs, ss_lo, ss_hi);
        (ss_lo, ss_hi) = (c.min(e), c.max(e));
        ss_diam = ds;
        if su_diam < DIAM_FLOOR && ss_diam < DIAM_FLOOR {
            break;
        }
    }

    // The planes meet along the flow axis alone unless their non-axis
    // slopes are mutually reciprocal.
    let flow_axis_ok = (fcu * fcs - 1.0).abs() > 0.5;
    Ok(SplittingReport {
        fcu_slope: fcu,
        fcs_slope: fcs,
        fu_inclination: 0.5 * (su_lo + su_hi),
        fs_inclination: 0.5 * (ss_lo + ss_hi),
        fu_diameter: su_diam,
        fs_diameter: ss_diam,
        history,
        converged,
        flow_axis_ok,
        iterations_used: used,
    })
}

/// Backward analogue of the tilde-u threading for the strong stable line:
/// restrict the inverse factors to the plane `{Y, e_s + beta e_u}` and
/// carry the pair difference through the affine recursion.
fn tilde_s_pair(
    params: &ModelParams,
    word: &crate::cocycle::CocycleWord,
    beta0: f64,
    lo: f64,
    hi: f64,
) -> (f64, f64, f64) {
    let mut beta = beta0;
    let mut a = lo;
    let mut b = hi;
    let mut diff = (hi - lo).abs();
    for f in word.factors.iter().rev() {
        match f {
            Factor::Flow { flow } => {
                let rate = params.lambda.powf(*flow);
                a *= rate;
                b *= rate;
                diff *= rate;
                beta *= rate * rate;
            }
            Factor::Glue { glue_r } => {
                let inv = crate::surgery::phi_matrix_full(params, *glue_r)
                    .inverse()
                    .expect("glue factors are unimodular");
                // Image of Y is Y; image of e_s + beta e_u decomposes against
                // the new plane inclination.
                let img = inv.apply([0.0, 1.0, beta]);
                a = (a + img[0]) / img[1];
                b = (b + img[0]) / img[1];
                diff /= img[1].abs();
                beta = img[2] / img[1];
            }
        }
    }
    (a, b, diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{CocycleWord, Provenance, SampledWord};

    fn params() -> ModelParams {
        ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap()
    }

    fn stream(words: Vec<CocycleWord>) -> Vec<SampledWord> {
        words
            .into_iter()
            .map(|word| SampledWord { word, provenance: Provenance::Synthetic })
            .collect()
    }

    #[test]
    fn pure_flow_stream_converges_to_axis() {
        let p = params();
        let constants = crate::hyperbolicity::estimate_constants(&p, p.r1, 64).unwrap();
        let words = stream(vec![CocycleWord::pure_flow(8.0); 40]);
        let report = extract_splitting(&p, &constants, &words, 40).unwrap();
        assert!(report.converged);
        assert!(report.fcu_slope.abs() < 1e-100);
        assert!(report.fcs_slope.abs() < 1e-100);
        assert!(report.flow_axis_ok);
        for rec in &report.history {
            let expect = p.lambda.powf(2.0 * rec.word_time);
            assert!((rec.contraction_factor - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_stream_contracts() {
        let p = params();
        let constants = crate::hyperbolicity::estimate_constants(&p, p.r1, 64).unwrap();
        let words = stream(
            (0..30)
                .map(|k| CocycleWord::from_parts(4.0, &[(0.03 + 0.001 * k as f64, 5.0)]))
                .collect(),
        );
        let report = extract_splitting(&p, &constants, &words, 30).unwrap();
        assert!(report.converged);
        // The strong line settles to a single inclination inside the cone.
        assert!(report.fu_diameter < 1e-12);
        assert!(report.fu_inclination.abs() <= constants.delta_u_strong.value);
        assert!(report.flow_axis_ok);
    }

    #[test]
    fn empty_stream_is_config_error() {
        let p = params();
        let constants = crate::hyperbolicity::estimate_constants(&p, p.r1, 64).unwrap();
        assert!(matches!(
            extract_splitting(&p, &constants, &[], 10),
            Err(ModelError::Config(_))
        ));
    }
}
