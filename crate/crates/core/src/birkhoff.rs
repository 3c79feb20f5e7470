//! Integer and homological combinatorics of Birkhoff sections: boundary
//! data validation, quadrant permutations, holonomy defects, intersection
//! numbers, blow-down bookkeeping, the data-level criterion comparison and
//! the saddle-band conjugacy obstruction.

use crate::error::{ModelError, Result};
use serde::{Deserialize, Serialize};

/// Per-boundary-orbit record `(p, n, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BirkhoffBoundaryData {
    /// Number of boundary components of the section over the orbit.
    pub p: u32,
    /// Linking number.
    pub n: u32,
    /// Multiplicity, stored signed.
    pub m: i64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Extended gcd: returns `(g, x, y)` with `a x + b y = g`.
fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = extended_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Inverse of `m` modulo `n`, for coprime inputs.
fn mod_inverse(m: i64, n: u64) -> Option<u64> {
    let n = n as i64;
    let m = m.rem_euclid(n);
    let (g, x, _) = extended_gcd(m, n);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(n) as u64)
}

/// One violated invariant of a boundary record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DataViolation {
    NonPositiveLinking,
    ZeroMultiplicity,
    NonPositiveComponents,
    GcdNotOne { gcd: u64 },
}

/// Validation verdict; violations are returned as data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub violations: Vec<DataViolation>,
    /// `|m| = 1` exactly when the section is embedded near the orbit.
    pub embedded: bool,
}

impl ValidationOutcome {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(data: &BirkhoffBoundaryData) -> ValidationOutcome {
    let mut violations = Vec::new();
    if data.n < 1 {
        violations.push(DataViolation::NonPositiveLinking);
    }
    if data.m == 0 {
        violations.push(DataViolation::ZeroMultiplicity);
    }
    if data.p < 1 {
        violations.push(DataViolation::NonPositiveComponents);
    }
    if data.n >= 1 && data.m != 0 {
        let g = gcd(data.n as u64, data.m.unsigned_abs());
        if g != 1 {
            violations.push(DataViolation::GcdNotOne { gcd: g });
        }
    }
    ValidationOutcome { violations, embedded: data.m.unsigned_abs() == 1 }
}

/// The permutation of the `4n` quadrants induced by the first return map:
/// a shift by `+4l` (for `m > 0`) or `-4l` (for `m < 0`) where
/// `l = m^{-1} mod n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadrantPermutation {
    pub n: u32,
    pub m: i64,
    /// The residue `l = m^{-1} mod n` (zero when n = 1).
    pub l: u64,
    /// Signed shift applied to quadrant indices modulo `4n`.
    pub shift: i64,
}

impl QuadrantPermutation {
    /// Image of quadrant index `j` (0-based residue modulo `4n`).
    pub fn apply(&self, j: u64) -> u64 {
        let modulus = 4 * self.n as i64;
        (j as i64 + self.shift).rem_euclid(modulus) as u64
    }

    /// Image under the k-th power.
    pub fn apply_power(&self, j: u64, k: u64) -> u64 {
        let modulus = 4 * self.n as i64;
        (j as i64 + self.shift * k as i64 % modulus).rem_euclid(modulus) as u64
    }

    /// Order of the permutation.
    pub fn order(&self) -> u64 {
        let modulus = 4 * self.n as u64;
        let step = self.shift.rem_euclid(modulus as i64) as u64;
        if step == 0 {
            1
        } else {
            modulus / gcd(step, modulus)
        }
    }
}

pub fn quadrant_permutation(n: u32, m: i64) -> Result<QuadrantPermutation> {
    if n < 1 || m == 0 || gcd(n as u64, m.unsigned_abs()) != 1 {
        return Err(ModelError::Domain(format!(
            "quadrant permutation needs coprime n >= 1 and m != 0, got n={}, m={}",
            n, m
        )));
    }
    let l = if n == 1 { 0 } else { mod_inverse(m, n as u64).expect("coprime") };
    let shift = if m > 0 { 4 * l as i64 } else { -4 * (l as i64) };
    Ok(QuadrantPermutation { n, m, l, shift })
}

/// The power `k` with `P^k` shifting each quadrant to its neighbour in the
/// next ambient quadrant: the unique `k` in `[1, n-1]` with `k = m mod n`.
pub fn kth_power_shift(n: u32, m: i64) -> Result<u64> {
    if n == 1 {
        return Err(ModelError::NotApplicable(
            "the one-step shift is undefined for linking number 1".into(),
        ));
    }
    if gcd(n as u64, m.unsigned_abs()) != 1 || m == 0 {
        return Err(ModelError::Domain("need coprime n, m with m nonzero".into()));
    }
    let k = m.rem_euclid(n as i64) as u64;
    debug_assert!(k >= 1 && k < n as u64);
    Ok(k)
}

/// The holonomy defect across a cut segment: the first return map appears
/// to the power `m` when comparing the two flow projections.
pub fn holonomy_defect(data: &BirkhoffBoundaryData) -> i64 {
    data.m
}

/// Defect accumulated by composing across several cuts.
pub fn composed_defect(data: &BirkhoffBoundaryData, cuts: u32) -> i64 {
    data.m * cuts as i64
}

/// Homological intersection of the curve class `p a + q b` with the
/// section class: `-p m + q n`.
pub fn homological_intersection(p_coeff: i64, q_coeff: i64, n: u32, m: i64) -> i64 {
    -p_coeff * m + q_coeff * (n as i64)
}

/// Marked-orbit summary from blowing down one boundary record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlowdownRecord {
    pub period: u32,
    pub prongs: u32,
    /// Singularity of the invariant foliations (at least 3 prongs).
    pub singular: bool,
}

pub fn blowdown_bookkeeping(data: &[BirkhoffBoundaryData]) -> Vec<BlowdownRecord> {
    data.iter()
        .map(|d| BlowdownRecord {
            period: d.p,
            prongs: 2 * d.n,
            singular: d.n >= 2,
        })
        .collect()
}

/// Verdict of the data-level orbital-equivalence comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CriterionVerdict {
    /// Both hypotheses check out at the data level.
    Positive,
    /// Some orbit record differs under the supplied correspondence.
    Negative { mismatches: Vec<usize> },
    /// The conjugacy attestation was not supplied; hypotheses unmet.
    Inconclusive,
}

/// Compare two boundary-data lists under the index correspondence, gated by
/// an external attestation that the first-return actions on fundamental
/// groups are conjugate (deciding that is out of scope here).
pub fn orbit_data_criterion(
    data1: &[BirkhoffBoundaryData],
    data2: &[BirkhoffBoundaryData],
    conjugacy_token: bool,
) -> Result<CriterionVerdict> {
    if data1.len() != data2.len() {
        return Err(ModelError::Data(format!(
            "orbit lists have different lengths: {} vs {}",
            data1.len(),
            data2.len()
        )));
    }
    if !conjugacy_token {
        return Ok(CriterionVerdict::Inconclusive);
    }
    let mismatches: Vec<usize> = data1
        .iter()
        .zip(data2)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i)
        .collect();
    if mismatches.is_empty() {
        Ok(CriterionVerdict::Positive)
    } else {
        Ok(CriterionVerdict::Negative { mismatches })
    }
}

/// The band conjugacy invariant `log(mu_q) / log(mu_p)` of a saddle
/// connection with corner expansion rates `mu_p, mu_q > 1`.
pub fn saddle_band_invariant(mu_p: f64, mu_q: f64) -> Result<f64> {
    if !(mu_p > 1.0 && mu_q > 1.0) {
        return Err(ModelError::Domain(format!(
            "corner eigenvalues must exceed 1, got {} and {}",
            mu_p, mu_q
        )));
    }
    Ok(mu_q.ln() / mu_p.ln())
}

/// Signed-crossing oracle for the homological intersection: march the
/// curve of class `p a + q b` and count its signed crossings with the
/// preimage lattice of the section boundary curve of class `n a + m b`.
/// Independent of the closed form, up to the shared orientation convention.
pub fn crossing_count_oracle(p_coeff: i64, q_coeff: i64, n: u32, m: i64, steps: usize) -> i64 {
    // The level function F(s) = m * (p s) - n * (q s) crosses an integer
    // exactly where the curves meet; each crossing signs with F'.
    let f = |s: f64| (m * p_coeff - n as i64 * q_coeff) as f64 * s;
    let offset = 0.5f64.sqrt() / (2.0 * steps as f64);
    let mut signed = 0i64;
    let mut prev = f(offset);
    for k in 1..=steps {
        let s = offset + k as f64 / steps as f64;
        let cur = f(s);
        let (lo, hi) = if cur >= prev { (prev, cur) } else { (cur, prev) };
        let crossings = (hi.floor() - lo.floor()) as i64;
        signed += if cur >= prev { crossings } else { -crossings };
        prev = cur;
    }
    // Crossing the section positively counts -1 against the class [B].
    -signed
}
