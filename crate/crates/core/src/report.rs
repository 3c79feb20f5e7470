//! Serializable report schemas and deterministic builders. Reports are
//! byte-identical for identical (config, seed): all collections are
//! ordered, nothing carries timestamps or absolute paths.

use crate::cocycle::{CocycleWord, SampledWord};
use crate::error::Result;
use crate::geometry::ModelParams;
use crate::hyperbolicity::checks::{
    builtin_checks, run_suite, Check, CheckReport, SuiteContext, SuiteSettings,
};
use crate::hyperbolicity::constants::{estimate_constants, ConstantsReport};
use crate::hyperbolicity::search::sample_suite_words;
use serde::Serialize;

/// Echo of every knob that influenced a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunEcho {
    pub lambda: f64,
    pub n: u32,
    pub m: i32,
    pub p: u32,
    pub r1: f64,
    pub r2: f64,
    pub r1_init: f64,
    pub seed: u64,
    pub samples: usize,
    pub max_factors: usize,
    pub grid: usize,
    pub mesh: usize,
    pub tol_boundary: f64,
    pub checks: Vec<String>,
}

/// One row of the glue-factor table: the matrix data at a sampled radial
/// coordinate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GlueFactorRow {
    pub r: f64,
    pub kappa: f64,
    pub k_coefficient: f64,
    pub det_full: f64,
    pub trace_su: f64,
    pub su: crate::linalg::Mat2,
    pub jordan_eta: f64,
}

/// Per-r table of the surgery factors.
pub fn glue_factor_table(params: &ModelParams, rows: usize) -> Vec<GlueFactorRow> {
    (0..rows)
        .map(|i| {
            let r = params.r2 * (i as f64 + 0.5) / rows as f64;
            let su = crate::surgery::phi_matrix_su(params, r);
            GlueFactorRow {
                r,
                kappa: crate::surgery::kappa(params, r),
                k_coefficient: crate::surgery::k_coefficient(params, r),
                det_full: crate::surgery::phi_matrix_full(params, r).det(),
                trace_su: su.trace(),
                su,
                jordan_eta: crate::surgery::jordan_eta(params, r),
            }
        })
        .collect()
}

/// The verification report: parameters, constants, the surgery factor
/// table, per-check results and the overall verdict.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: RunEcho,
    pub params: ModelParams,
    pub constants: ConstantsReport,
    pub t_threshold: f64,
    pub glue_factors: Vec<GlueFactorRow>,
    pub suite: Vec<CheckReport>,
    pub feasible: bool,
}

impl VerifyReport {
    pub fn violations(&self) -> usize {
        self.suite.iter().map(|r| r.violations.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

/// Sample the word families and run the selected checks.
pub fn build_verify_report(
    params: &ModelParams,
    echo: RunEcho,
    checks: &[Box<dyn Check>],
) -> Result<VerifyReport> {
    params.validate()?;
    let constants = estimate_constants(params, echo.r1_init, echo.grid)?;
    let (weak, strong, volume) = sample_suite_words(
        params,
        constants.t1_bound.value,
        constants.t_threshold(),
        echo.samples,
        echo.max_factors,
        echo.seed,
    )?;
    let settings = SuiteSettings {
        mesh: echo.mesh,
        ..SuiteSettings::with_threshold(constants.t_threshold())
    };
    let ctx = SuiteContext {
        params,
        constants: &constants,
        weak_words: &weak,
        strong_words: &strong,
        volume_words: &volume,
        settings,
    };
    let suite = run_suite(checks, &ctx);
    let feasible = suite.iter().all(|r| r.passed());
    Ok(VerifyReport {
        config: echo,
        params: *params,
        t_threshold: settings.t_threshold,
        constants,
        glue_factors: glue_factor_table(params, 33),
        suite,
        feasible,
    })
}

/// Standard verify run over all built-in checks.
pub fn verify_all(params: &ModelParams, echo: RunEcho) -> Result<VerifyReport> {
    build_verify_report(params, echo, &builtin_checks())
}

/// CSV rows of per-word growth statistics: total time against the log of
/// the s/u growth of an in-cone vector (for expansion fitting) and the
/// slope-diameter ratio against the pure-flow decay (the contraction
/// table).
pub fn growth_csv(params: &ModelParams, words: &[SampledWord]) -> String {
    let cone = crate::hyperbolicity::weak_cu_cone(params);
    let mut out =
        String::from("word_index,total_time,glue_count,log_growth,contraction_ratio,provenance\n");
    for (idx, sw) in words.iter().enumerate() {
        let g = crate::hyperbolicity::su_log_growth(params, &sw.word, 0.0);
        let t = sw.word.total_time();
        let (_, _, diff) = crate::hyperbolicity::propagate_pair_u(
            params,
            &sw.word,
            cone.delta_lo,
            cone.delta_hi,
        );
        let ratio = diff / (params.lambda.powf(2.0 * t) * cone.diameter());
        out.push_str(&format!(
            "{},{},{},{},{},{:?}\n",
            idx,
            t,
            sw.word.glue_count(),
            g,
            ratio,
            sw.provenance
        ));
    }
    out
}

/// CSV of an orbit trace.
pub fn trace_csv(samples: &[crate::affine_flow::TraceSample]) -> String {
    let mut out = String::from("t,x,y,z,region\n");
    for s in samples {
        out.push_str(&format!("{},{},{},{},{:?}\n", s.t, s.x, s.y, s.z, s.region));
    }
    out
}

/// CSV of a band mesh.
pub fn mesh_csv(rows: &[crate::sections::MeshRow]) -> String {
    let mut out = String::from("copy,r,theta,x,y,z,det\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.copy, r.r, r.theta, r.x, r.y, r.z, r.det
        ));
    }
    out
}

/// Serialize a word list in the `[{"flow": t} | {"glue_r": r}]` schema.
pub fn words_json(words: &[CocycleWord]) -> String {
    let factors: Vec<_> = words.iter().map(|w| &w.factors).collect();
    serde_json::to_string_pretty(&factors).expect("words serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo(params: &ModelParams) -> RunEcho {
        RunEcho {
            lambda: params.lambda,
            n: params.n,
            m: params.m,
            p: params.p,
            r1: params.r1,
            r2: params.r2,
            r1_init: 0.4,
            seed: 11,
            samples: 60,
            max_factors: 9,
            grid: 64,
            mesh: 48,
            tol_boundary: 1e-12,
            checks: vec!["volume".into()],
        }
    }

    #[test]
    fn reports_are_byte_identical() {
        let p = ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap();
        let a = verify_all(&p, echo(&p)).unwrap().to_json();
        let b = verify_all(&p, echo(&p)).unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn single_check_selection() {
        let p = ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap();
        let checks = vec![crate::hyperbolicity::check_by_name("volume").unwrap()];
        let report = build_verify_report(&p, echo(&p), &checks).unwrap();
        assert_eq!(report.suite.len(), 1);
        assert_eq!(report.suite[0].check, "volume");
        assert!(report.feasible);
    }
}
