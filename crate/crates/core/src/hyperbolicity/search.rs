//! Feasibility search over the radii: halve `r1` at fixed ratio `r2/r1`
//! until the sampled cone suite passes, or the budget runs out.

use crate::cocycle::{sample_itineraries, sample_volume_words, SamplerSpec};
use crate::error::{ModelError, Result};
use crate::geometry::ModelParams;
use crate::hyperbolicity::checks::{builtin_checks, run_suite, CheckReport, SuiteContext, SuiteSettings};
use crate::hyperbolicity::constants::{estimate_constants, ConstantsReport};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct SearchInput {
    pub lambda: f64,
    pub n: u32,
    pub m: i32,
    pub p: u32,
    /// Fixed ratio r2/r1 of the shrinking schedule.
    pub ratio: f64,
    /// Radius the schedule starts from; also the scale of the ambient model.
    pub r1_init: f64,
    /// Number of candidates tested; candidate k has k halvings applied.
    pub budget: u32,
    pub samples: usize,
    pub max_factors: usize,
    pub seed: u64,
    pub grid: usize,
    pub mesh: usize,
}

impl SearchInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(ModelError::Params(format!(
                "ratio r2/r1 must lie in (0,1), got {}",
                self.ratio
            )));
        }
        // The remaining constraints ride on the params constructor.
        self.params_at(0)?;
        Ok(())
    }

    pub fn params_at(&self, halvings: u32) -> Result<ModelParams> {
        let r1 = self.r1_init / 2f64.powi(halvings as i32);
        ModelParams::new(self.lambda, self.n, self.m, self.p, r1, r1 * self.ratio)
    }
}

/// Diagnostics for one tested candidate.
#[derive(Debug, Clone, Serialize)]
pub struct HalvingRecord {
    pub halvings: u32,
    pub r1: f64,
    pub r2: f64,
    pub t1_bound: f64,
    pub t0: f64,
    /// Margins of the shrinking conditions; all must be positive before the
    /// sampled suite is consulted.
    pub margins: BTreeMap<String, f64>,
    pub conditions_ok: bool,
    pub violations: usize,
    pub failing_check: Option<String>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub input: SearchInput,
    pub feasible: bool,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub halvings_used: Option<u32>,
    pub history: Vec<HalvingRecord>,
    pub failing_check: Option<String>,
    pub tightest_margin: f64,
    pub constants: Option<ConstantsReport>,
    pub suite: Vec<CheckReport>,
}


/// Sample the three word families for one candidate. The duration window
/// widens when the interior floor alone would leave too few words acting
/// longer than the invariance threshold `t_threshold`; outside returns may
/// be arbitrarily long, so this stays within the sampler contract.
pub fn sample_suite_words(
    params: &ModelParams,
    t1_bound: f64,
    t_threshold: f64,
    samples: usize,
    max_factors: usize,
    seed: u64,
) -> Result<(
    Vec<crate::cocycle::SampledWord>,
    Vec<crate::cocycle::SampledWord>,
    Vec<crate::cocycle::CocycleWord>,
)> {
    let glues = ((max_factors.max(3) - 1) / 2) as f64;
    let spread = (2.0f64).max((1.25 * t_threshold - glues * t1_bound) * 2.0 / (glues + 1.0));
    let mut weak_spec = SamplerSpec::new(samples, max_factors, t1_bound, seed);
    weak_spec.time_spread = spread;
    let mut strong_spec =
        SamplerSpec::new(samples, max_factors, t1_bound, seed ^ 0x5354524f4e47);
    strong_spec.time_spread = spread;
    let weak = sample_itineraries(params, &weak_spec)?;
    let strong = sample_itineraries(params, &strong_spec)?;
    let volume = sample_volume_words(params, samples, 2, seed)?;
    Ok((weak, strong, volume))
}

/// Run the shrinking schedule. Candidate `k` is accepted when the six
/// cone checks report zero violations over the sampled words.
pub fn parameter_search(input: &SearchInput) -> Result<SearchReport> {
    input.validate()?;
    let mut history = Vec::new();
    let mut tightest = f64::NEG_INFINITY;
    let mut last_failing: Option<String> = None;
    for k in 0..input.budget {
        let params = input.params_at(k)?;
        let constants = estimate_constants(&params, input.r1_init, input.grid)?;
        let t1 = constants.t1_bound.value;
        let margins = constants.shrinking_margins(params.lambda);
        let conditions_ok = constants.shrinking_conditions_met(params.lambda);
        if !conditions_ok {
            let worst = margins
                .iter()
                .filter(|(_, &v)| v <= 0.0)
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(name, &v)| (name.clone(), v))
                .unwrap();
            if worst.1 > tightest {
                tightest = worst.1;
                last_failing = Some(format!("shrinking-condition:{}", worst.0));
            }
            history.push(HalvingRecord {
                halvings: k,
                r1: params.r1,
                r2: params.r2,
                t1_bound: t1,
                t0: constants.t0.value,
                margins,
                conditions_ok,
                violations: 0,
                failing_check: Some(format!("shrinking-condition:{}", worst.0)),
                feasible: false,
            });
            continue;
        }
        let seed_k = input.seed.wrapping_add(mix_seed(k as u64 + 1));
        let (weak, strong, volume) = sample_suite_words(
            &params,
            t1,
            constants.t_threshold(),
            input.samples,
            input.max_factors,
            seed_k,
        )?;
        let settings = SuiteSettings {
            mesh: input.mesh,
            ..SuiteSettings::with_threshold(constants.t_threshold())
        };
        let ctx = SuiteContext {
            params: &params,
            constants: &constants,
            weak_words: &weak,
            strong_words: &strong,
            volume_words: &volume,
            settings,
        };
        let cone_checks: Vec<_> = builtin_checks()
            .into_iter()
            .filter(|c| c.name() != "volume" && c.name() != "transversality")
            .collect();
        let suite = run_suite(&cone_checks, &ctx);
        let violations: usize = suite.iter().map(|r| r.violations.len()).sum();
        let failing = suite
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.check.clone())
            .next();
        for r in &suite {
            if !r.passed() && r.worst_margin > tightest {
                tightest = r.worst_margin;
                last_failing = Some(r.check.clone());
            }
        }
        let feasible = violations == 0;
        history.push(HalvingRecord {
            halvings: k,
            r1: params.r1,
            r2: params.r2,
            t1_bound: t1,
            t0: constants.t0.value,
            margins,
            conditions_ok,
            violations,
            failing_check: failing,
            feasible,
        });
        if feasible {
            return Ok(SearchReport {
                input: input.clone(),
                feasible: true,
                r1: Some(params.r1),
                r2: Some(params.r2),
                halvings_used: Some(k),
                history,
                failing_check: None,
                tightest_margin: 1.0,
                constants: Some(constants),
                suite,
            });
        }
    }
    Ok(SearchReport {
        input: input.clone(),
        feasible: false,
        r1: None,
        r2: None,
        halvings_used: None,
        history,
        failing_check: last_failing,
        tightest_margin: if tightest.is_finite() { tightest } else { -1.0 },
        constants: None,
        suite: Vec::new(),
    })
}

fn mix_seed(k: u64) -> u64 {
    k.wrapping_mul(0x9e3779b97f4a7c15)
}
