//! The verification suite as a registry of named checks behind a common
//! trait. Each check is a pure fold over the sampled words; reports merge
//! deterministically (violations sorted by word index).

use crate::cocycle::{CocycleWord, Factor, SampledWord};
use crate::geometry::ModelParams;
use crate::hyperbolicity::constants::ConstantsReport;
use crate::hyperbolicity::{
    propagate_pair_s, propagate_pair_u, propagate_slope_s, propagate_slope_u, su_log_growth,
    su_log_growth_backward, weak_cs_cone, weak_cu_cone, Cone,
};
use crate::surgery;
use serde::Serialize;
use std::collections::BTreeMap;

/// Settings shared by the whole suite run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuiteSettings {
    /// Words must act at least this long before cone invariance is claimed.
    pub t_threshold: f64,
    /// Minimum number of qualifying words for an invariance verdict.
    pub min_qualifying: usize,
    /// Grid points per axis for the transversality sweep.
    pub mesh: usize,
    /// Number of radial samples for the one-factor volume sweep.
    pub volume_r_samples: usize,
    /// Relative tolerance folded into every envelope comparison.
    pub tol: f64,
}

impl SuiteSettings {
    pub fn with_threshold(t_threshold: f64) -> Self {
        SuiteSettings {
            t_threshold,
            min_qualifying: 16,
            mesh: 200,
            volume_r_samples: 10_000,
            tol: 1e-9,
        }
    }
}

/// Everything a check may read.
pub struct SuiteContext<'a> {
    pub params: &'a ModelParams,
    pub constants: &'a ConstantsReport,
    pub weak_words: &'a [SampledWord],
    pub strong_words: &'a [SampledWord],
    pub volume_words: &'a [CocycleWord],
    pub settings: SuiteSettings,
}

/// One recorded violation, carrying the full word.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub word_index: usize,
    pub word: Vec<Factor>,
    pub description: String,
    pub value: f64,
}

/// Result of one check over the sampled suite.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub samples: usize,
    pub violations: Vec<Violation>,
    pub worst_margin: f64,
    pub extras: BTreeMap<String, f64>,
}

impl CheckReport {
    fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            samples: 0,
            violations: Vec::new(),
            worst_margin: f64::INFINITY,
            extras: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn fold_margin(&mut self, margin: f64) {
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
    }

    fn finalize(mut self) -> Self {
        self.violations.sort_by_key(|v| v.word_index);
        if !self.worst_margin.is_finite() {
            self.worst_margin = 1.0;
        }
        self
    }
}

/// An interchangeable verification strategy, registered by name.
pub trait Check {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &SuiteContext) -> CheckReport;
}

/// All built-in checks in the order the verify command runs them.
pub fn builtin_checks() -> Vec<Box<dyn Check>> {
    vec![
        Box::new(ConeInvariance),
        Box::new(SlopeContraction),
        Box::new(Expansion),
        Box::new(StrongConeInvariance),
        Box::new(StrongSlopeContraction),
        Box::new(StrongExpansion),
        Box::new(Volume),
        Box::new(Transversality),
    ]
}

pub fn check_names() -> Vec<&'static str> {
    builtin_checks().iter().map(|c| c.name()).collect()
}

pub fn check_by_name(name: &str) -> Option<Box<dyn Check>> {
    builtin_checks().into_iter().find(|c| c.name() == name)
}

fn violation(report: &mut CheckReport, idx: usize, word: &CocycleWord, what: String, value: f64) {
    report.violations.push(Violation {
        word_index: idx,
        word: word.factors.clone(),
        description: what,
        value,
    });
}

// ---------------------------------------------------------------------
// Weak cones: invariance for words of total time at least T.
// ---------------------------------------------------------------------

pub struct ConeInvariance;

impl Check for ConeInvariance {
    fn name(&self) -> &'static str {
        "cone-invariance"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let cu = weak_cu_cone(ctx.params);
        let cs = weak_cs_cone(ctx.params);
        let t = ctx.settings.t_threshold;
        // Cone invariance presumes the re-entry time dominates the capture
        // and expansion times; below that the radii are too large for the
        // criterion to apply.
        if !ctx.constants.weak_hypotheses_met(ctx.params.lambda) {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "re-entry bound {} does not dominate the capture/expansion times ({}, {})",
                    ctx.constants.t1_bound.value,
                    ctx.constants.t0_capture.value,
                    ctx.constants.t0_expansion.value
                ),
                value: ctx.constants.t1_bound.value,
            });
        }
        let mut qualifying = 0usize;
        for (idx, sw) in ctx.weak_words.iter().enumerate() {
            if sw.word.total_time() < t {
                continue;
            }
            qualifying += 1;
            for delta0 in [cu.delta_lo, cu.delta_hi] {
                let image = propagate_slope_u(ctx.params, &sw.word, delta0);
                let margin = cu.margin(image);
                report.fold_margin(margin);
                if margin < -ctx.settings.tol {
                    violation(
                        &mut report,
                        idx,
                        &sw.word,
                        format!("cu edge slope {} maps to {} outside the cone", delta0, image),
                        image,
                    );
                }
            }
            for delta0 in [cs.delta_lo, cs.delta_hi] {
                let image = propagate_slope_s(ctx.params, &sw.word, delta0);
                let margin = cs.margin(image);
                report.fold_margin(margin);
                if margin < -ctx.settings.tol {
                    violation(
                        &mut report,
                        idx,
                        &sw.word,
                        format!("cs edge slope {} maps to {} outside the cone", delta0, image),
                        image,
                    );
                }
            }
        }
        report.samples = qualifying;
        report.extras.insert("qualifying_words".into(), qualifying as f64);
        if !ctx.weak_words.is_empty() && qualifying < ctx.settings.min_qualifying {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "only {} of {} sampled words act longer than T = {}",
                    qualifying,
                    ctx.weak_words.len(),
                    t
                ),
                value: qualifying as f64,
            });
        }
        report.finalize()
    }
}

// ---------------------------------------------------------------------
// Weak cones: slope-diameter contraction at rate lambda^{2t}.
// ---------------------------------------------------------------------

/// One row of the contraction table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioRow {
    pub word_index: usize,
    pub total_time: f64,
    /// `|image diameter| / lambda^{2t}` in units of the initial diameter.
    pub ratio: f64,
}

pub fn contraction_table(ctx: &SuiteContext) -> Vec<RatioRow> {
    let cu = weak_cu_cone(ctx.params);
    ctx.weak_words
        .iter()
        .enumerate()
        .map(|(idx, sw)| {
            let t = sw.word.total_time();
            let (_, _, diff) =
                propagate_pair_u(ctx.params, &sw.word, cu.delta_lo, cu.delta_hi);
            let decay = ctx.params.lambda.powf(2.0 * t);
            RatioRow {
                word_index: idx,
                total_time: t,
                ratio: diff / (decay * cu.diameter()),
            }
        })
        .collect()
}

pub struct SlopeContraction;

impl Check for SlopeContraction {
    fn name(&self) -> &'static str {
        "slope-contraction"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let cu = weak_cu_cone(ctx.params);
        let cs = weak_cs_cone(ctx.params);
        let l0_u = ctx.constants.l0_u();
        let l0_s = ctx.constants.l0_s();
        let mut measured_u = 0.0f64;
        let mut measured_s = 0.0f64;
        for (idx, sw) in ctx.weak_words.iter().enumerate() {
            let t = sw.word.total_time();
            let decay = ctx.params.lambda.powf(2.0 * t);
            let (_, _, diff_u) =
                propagate_pair_u(ctx.params, &sw.word, cu.delta_lo, cu.delta_hi);
            measured_u = measured_u.max(diff_u / decay);
            if l0_u.is_finite() {
                let envelope = decay * l0_u;
                report.fold_margin(1.0 - diff_u / envelope);
                if diff_u > envelope * (1.0 + ctx.settings.tol) {
                    violation(
                        &mut report,
                        idx,
                        &sw.word,
                        format!("cu slope diameter {} exceeds envelope {}", diff_u, envelope),
                        diff_u / envelope,
                    );
                }
            }
            let (_, _, diff_s) =
                propagate_pair_s(ctx.params, &sw.word, cs.delta_lo, cs.delta_hi);
            measured_s = measured_s.max(diff_s / decay);
            if l0_s.is_finite() {
                let envelope = decay * l0_s;
                report.fold_margin(1.0 - diff_s / envelope);
                if diff_s > envelope * (1.0 + ctx.settings.tol) {
                    violation(
                        &mut report,
                        idx,
                        &sw.word,
                        format!("cs slope diameter {} exceeds envelope {}", diff_s, envelope),
                        diff_s / envelope,
                    );
                }
            }
        }
        report.samples = ctx.weak_words.len();
        report.extras.insert("measured_l0_u".into(), measured_u);
        report.extras.insert("measured_l0_s".into(), measured_s);
        report
            .extras
            .insert("envelope_unbounded_u".into(), if l0_u.is_finite() { 0.0 } else { 1.0 });
        report
            .extras
            .insert("envelope_unbounded_s".into(), if l0_s.is_finite() { 0.0 } else { 1.0 });
        report.finalize()
    }
}

// ---------------------------------------------------------------------
// Weak cones: uniform norm expansion in the cones.
// ---------------------------------------------------------------------

/// Least-squares fit of `log growth` against `t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpansionFit {
    pub mu_measured: f64,
    pub l_measured: f64,
    pub points: usize,
}

fn fit_growth(points: &[(f64, f64)]) -> ExpansionFit {
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let var_t: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.0 - mean_t)).sum();
    let cov: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = if var_t > 0.0 { cov / var_t } else { 0.0 };
    ExpansionFit {
        mu_measured: slope.exp(),
        l_measured: (mean_y - slope * mean_t).exp(),
        points: points.len(),
    }
}

pub struct Expansion;

impl Check for Expansion {
    fn name(&self) -> &'static str {
        "expansion"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let cu = weak_cu_cone(ctx.params);
        let cs = weak_cs_cone(ctx.params);
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for sw in ctx.weak_words {
            let t = sw.word.total_time();
            for delta0 in [0.0, cu.delta_lo / 4.0, cu.delta_hi / 2.0] {
                forward.push((t, su_log_growth(ctx.params, &sw.word, delta0)));
            }
            for delta0 in [0.0, cs.delta_lo / 4.0, cs.delta_hi / 2.0] {
                backward.push((t, su_log_growth_backward(ctx.params, &sw.word, delta0)));
            }
        }
        let fit = fit_growth(&forward);
        let fit_back = fit_growth(&backward);
        let mu_formula = ctx.constants.mu.value;
        let needed = (0.9 * mu_formula).max(1.0);
        report.samples = fit.points;
        report.extras.insert("mu_measured".into(), fit.mu_measured);
        report.extras.insert("mu_formula".into(), mu_formula);
        report.extras.insert("l_measured".into(), fit.l_measured);
        report.extras.insert("mu_measured_backward".into(), fit_back.mu_measured);
        report.fold_margin(fit.mu_measured - needed);
        report.fold_margin(fit_back.mu_measured - 1.0);
        if fit.mu_measured <= needed {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "fitted growth exponent {} below required {}",
                    fit.mu_measured, needed
                ),
                value: fit.mu_measured,
            });
        }
        if fit_back.mu_measured <= 1.0 {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "fitted backward growth exponent {} not expanding",
                    fit_back.mu_measured
                ),
                value: fit_back.mu_measured,
            });
        }
        report.finalize()
    }
}

// ---------------------------------------------------------------------
// Strong cones: the same three checks inside the center-unstable planes.
// ---------------------------------------------------------------------

/// Deterministic inclination for the j-th strong word.
fn strong_alpha(epsilon: f64, j: usize) -> f64 {
    -epsilon + 2.0 * epsilon * ((j % 7) as f64) / 6.0
}

use crate::hyperbolicity::propagate_tilde_u;

pub struct StrongConeInvariance;

impl Check for StrongConeInvariance {
    fn name(&self) -> &'static str {
        "strong-cone-invariance"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let delta_u = ctx.constants.delta_u_strong.value;
        let eps = ctx.constants.epsilon.value;
        let cone = Cone::new(-delta_u, delta_u, crate::hyperbolicity::ConeFlavor::StrongU);
        let t = ctx.settings.t_threshold;
        if !ctx.constants.strong_hypotheses_met(ctx.params.lambda) {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "strong capture fails at these radii: lambda^T1 kappa = {} vs epsilon = {}",
                    ctx.params.lambda.powf(ctx.constants.t1_bound.value)
                        * ctx.constants.kappa_strong,
                    ctx.constants.epsilon_strong
                ),
                value: ctx.constants.kappa_strong,
            });
        }
        let mut qualifying = 0usize;
        let mut b_min = f64::INFINITY;
        for (idx, sw) in ctx.strong_words.iter().enumerate() {
            if sw.word.total_time() < t {
                continue;
            }
            qualifying += 1;
            let alpha0 = strong_alpha(eps, idx);
            for slope0 in [-delta_u, delta_u] {
                let (image, _, b) = propagate_tilde_u(ctx.params, &sw.word, alpha0, slope0);
                b_min = b_min.min(b);
                let margin = cone.margin(image);
                report.fold_margin(margin);
                if margin < -ctx.settings.tol {
                    violation(
                        &mut report,
                        idx,
                        &sw.word,
                        format!(
                            "strong slope {} maps to {} outside |slope| <= {}",
                            slope0, image, delta_u
                        ),
                        image,
                    );
                }
            }
        }
        report.samples = qualifying;
        report.extras.insert("qualifying_words".into(), qualifying as f64);
        report
            .extras
            .insert("b_min_observed".into(), if b_min.is_finite() { b_min } else { 1.0 });
        if !ctx.strong_words.is_empty() && qualifying < ctx.settings.min_qualifying {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "only {} of {} strong words act longer than T = {}",
                    qualifying,
                    ctx.strong_words.len(),
                    t
                ),
                value: qualifying as f64,
            });
        }
        report.finalize()
    }
}

pub struct StrongSlopeContraction;

impl Check for StrongSlopeContraction {
    fn name(&self) -> &'static str {
        "strong-slope-contraction"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let delta_u = ctx.constants.delta_u_strong.value;
        let eps = ctx.constants.epsilon.value;
        let l0 = ctx.constants.l0_strong();
        let mut measured = 0.0f64;
        for (idx, sw) in ctx.strong_words.iter().enumerate() {
            let t = sw.word.total_time();
            let alpha0 = strong_alpha(eps, idx);
            let (_, _, diff) = crate::hyperbolicity::propagate_pair_tilde_u(
                ctx.params, &sw.word, alpha0, -delta_u, delta_u,
            );
            // Single power of lambda: flow factors scale tilde-u slopes by
            // lambda^t.
            let decay = ctx.params.lambda.powf(t);
            measured = measured.max(diff / decay);
            let envelope = decay * l0;
            report.fold_margin(1.0 - diff / envelope);
            if diff > envelope * (1.0 + ctx.settings.tol) {
                violation(
                    &mut report,
                    idx,
                    &sw.word,
                    format!("strong slope diameter {} exceeds envelope {}", diff, envelope),
                    diff / envelope,
                );
            }
        }
        report.samples = ctx.strong_words.len();
        report.extras.insert("measured_l0_strong".into(), measured);
        report.extras.insert("l0_strong".into(), l0);
        report.finalize()
    }
}

pub struct StrongExpansion;

impl Check for StrongExpansion {
    fn name(&self) -> &'static str {
        "strong-expansion"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let delta_u = ctx.constants.delta_u_strong.value;
        let eps = ctx.constants.epsilon.value;
        let mut points = Vec::new();
        for (idx, sw) in ctx.strong_words.iter().enumerate() {
            let t = sw.word.total_time();
            for slope0 in [0.0, delta_u / 2.0, -delta_u / 2.0] {
                // Vector (a, c) in the plane frame {Y, e_tilde_u}.
                let n0 = (slope0 * slope0 + 1.0f64).sqrt();
                let mut v = [slope0 / n0, 1.0 / n0];
                let mut log_growth = 0.0;
                let mut alpha = strong_alpha(eps, idx);
                for f in &sw.word.factors {
                    let m = match f {
                        Factor::Flow { flow } => {
                            alpha *= ctx.params.lambda.powf(2.0 * *flow);
                            crate::cocycle::psi_matrix_cu(ctx.params, *flow)
                        }
                        Factor::Glue { glue_r } => {
                            let m = surgery::phi_matrix_cu(ctx.params, *glue_r, alpha);
                            alpha = surgery::cu_alpha_image(ctx.params, *glue_r, alpha);
                            m
                        }
                    };
                    v = m.apply(v);
                    let n = crate::linalg::norm2(v);
                    log_growth += n.ln();
                    v = [v[0] / n, v[1] / n];
                }
                points.push((t, log_growth));
            }
        }
        let fit = fit_growth(&points);
        report.samples = fit.points;
        report.extras.insert("mu_strong".into(), fit.mu_measured);
        report.extras.insert("l_strong".into(), fit.l_measured);
        report.extras.insert("cu_min_gain".into(), ctx.constants.cu_min_gain);
        report.fold_margin(fit.mu_measured - 1.0);
        if fit.points > 0 && fit.mu_measured <= 1.0 {
            report.violations.push(Violation {
                word_index: 0,
                word: Vec::new(),
                description: format!(
                    "fitted strong growth exponent {} not expanding",
                    fit.mu_measured
                ),
                value: fit.mu_measured,
            });
        }
        report.finalize()
    }
}

// ---------------------------------------------------------------------
// Volume preservation.
// ---------------------------------------------------------------------

pub const VOLUME_FACTOR_TOL: f64 = 1e-12;
pub const VOLUME_WORD_TOL: f64 = 1e-9;

pub struct Volume;

impl Check for Volume {
    fn name(&self) -> &'static str {
        "volume"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let n = ctx.settings.volume_r_samples.max(1);
        let mut worst_factor = 0.0f64;
        for i in 0..n {
            let r = ctx.params.r2 * (i as f64 + 0.5) / n as f64;
            let err = (surgery::phi_matrix_full(ctx.params, r).det() - 1.0).abs();
            worst_factor = worst_factor.max(err);
            if err > VOLUME_FACTOR_TOL {
                report.violations.push(Violation {
                    word_index: i,
                    word: Vec::new(),
                    description: format!("glue factor at r = {} has |det - 1| = {}", r, err),
                    value: err,
                });
            }
        }
        let mut worst_word = 0.0f64;
        for (idx, word) in ctx.volume_words.iter().enumerate() {
            let err = surgery::volume_check(ctx.params, word);
            worst_word = worst_word.max(err);
            if err > VOLUME_WORD_TOL {
                violation(
                    &mut report,
                    idx,
                    word,
                    format!("word determinant drifts by {}", err),
                    err,
                );
            }
        }
        report.samples = n + ctx.volume_words.len();
        report.extras.insert("worst_factor_drift".into(), worst_factor);
        report.extras.insert("worst_word_drift".into(), worst_word);
        report.fold_margin(VOLUME_FACTOR_TOL - worst_factor);
        report.fold_margin(VOLUME_WORD_TOL - worst_word);
        report.finalize()
    }
}

// ---------------------------------------------------------------------
// Helicoid transversality.
// ---------------------------------------------------------------------

pub struct Transversality;

impl Check for Transversality {
    fn name(&self) -> &'static str {
        "transversality"
    }

    fn run(&self, ctx: &SuiteContext) -> CheckReport {
        let mut report = CheckReport::new(self.name());
        let section = match crate::sections::build_helicoid(ctx.params) {
            Ok(s) => s,
            Err(e) => {
                report.violations.push(Violation {
                    word_index: 0,
                    word: Vec::new(),
                    description: format!("helicoid construction failed: {}", e),
                    value: f64::NAN,
                });
                return report.finalize();
            }
        };
        match crate::sections::transversality_check(&section, ctx.settings.mesh) {
            Ok(tr) => {
                report.samples = ctx.settings.mesh * ctx.settings.mesh;
                report.extras.insert("max_det".into(), tr.max_det);
                report.extras.insert("min_det".into(), tr.min_det);
                report
                    .extras
                    .insert("horizontal_auto_pass".into(), if tr.horizontal_auto_pass { 1.0 } else { 0.0 });
                report.fold_margin(-tr.max_det);
                if !tr.pass {
                    report.violations.push(Violation {
                        word_index: 0,
                        word: Vec::new(),
                        description: format!(
                            "transversality determinant reaches {} >= 0 on the band grid",
                            tr.max_det
                        ),
                        value: tr.max_det,
                    });
                }
            }
            Err(e) => {
                report.violations.push(Violation {
                    word_index: 0,
                    word: Vec::new(),
                    description: format!("transversality sweep failed: {}", e),
                    value: f64::NAN,
                });
            }
        }
        report.finalize()
    }
}

/// Run `checks` over a context; the standard entry point of the verify
/// command and the search gate.
pub fn run_suite(checks: &[Box<dyn Check>], ctx: &SuiteContext) -> Vec<CheckReport> {
    checks.iter().map(|c| c.run(ctx)).collect()
}
