//! The bump profile `rho`, the boundary gluing map, and the tangent-space
//! transfer matrices of the surgery in the bases used downstream: the full
//! 3x3 in the hyperbolic frame `{Y, e_s, e_u}`, the 3x3 in the frame
//! `{X, e_2, e_3}` adapted to the twisted annulus, the s/u-quotient 2x2 and
//! the center-unstable 2x2.

use crate::error::{ModelError, Result};
use crate::geometry::{ModelParams, Point3};
use crate::linalg::{Mat2, Mat3};
use serde::Serialize;

/// Largest value of `|rho'|`, attained at the midpoint of the drop: 45/8.
pub const RHO_PRIME_MAX: f64 = 45.0 / 8.0;

/// Monotone C^2 profile with `rho = 1` on `[0, 1/3]`, `rho = 0` on
/// `[2/3, 1]` and a reversed quintic smoothstep in between.
pub fn rho(t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if t <= 1.0 / 3.0 {
        return Ok(1.0);
    }
    if t >= 2.0 / 3.0 {
        return Ok(0.0);
    }
    let u = 3.0 * t - 1.0;
    Ok(1.0 - smoothstep(u))
}

/// Derivative of [`rho`]; continuous, negative exactly on (1/3, 2/3).
pub fn rho_prime(t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if t <= 1.0 / 3.0 || t >= 2.0 / 3.0 {
        return Ok(0.0);
    }
    let u = 3.0 * t - 1.0;
    Ok(-3.0 * smoothstep_prime(u))
}

fn check_unit_interval(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ModelError::Domain(format!("rho argument {} outside [0, 1]", t)));
    }
    Ok(())
}

fn smoothstep(u: f64) -> f64 {
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

fn smoothstep_prime(u: f64) -> f64 {
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// Tabulated values of `rho` and `rho'` on a uniform grid over [0, 1].
#[derive(Debug, Clone, Serialize)]
pub struct BumpProfile {
    pub samples: usize,
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_prime: Vec<f64>,
}

impl BumpProfile {
    pub fn tabulate(samples: usize) -> Self {
        let n = samples.max(2);
        let mut t = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        let mut rp = Vec::with_capacity(n);
        for k in 0..n {
            let x = k as f64 / (n - 1) as f64;
            t.push(x);
            r.push(rho(x).unwrap());
            rp.push(rho_prime(x).unwrap());
        }
        BumpProfile { samples: n, t, rho: r, rho_prime: rp }
    }
}

/// `kappa(r) = (|m|/n) * |rho'(r/r2)|`, the twist-rate profile of the glue.
pub fn kappa(params: &ModelParams, r: f64) -> f64 {
    let t = (r / params.r2).clamp(0.0, 1.0);
    (params.m.unsigned_abs() as f64 / params.n as f64) * rho_prime(t).unwrap().abs()
}

/// `K(r, r2) = -(p |m| |log lambda|) * |rho'(r/r2)| * (r/r2)`, the
/// nonpositive coefficient of the s/u action of one glue factor.
pub fn k_coefficient(params: &ModelParams, r: f64) -> f64 {
    let cte = params.p as f64 * params.m.unsigned_abs() as f64 * params.log_lambda().abs();
    let t = (r / params.r2).clamp(0.0, 1.0);
    -cte * rho_prime(t).unwrap().abs() * (r / params.r2)
}

/// The boundary gluing map in the chart of quadrant `chart`.
///
/// For `m < 0` it twists the entrance annulus of quadrant 1 by
/// `z -> z + (|m|/n) rho(y/r2)`; for `m > 0` the mirrored formula twists the
/// entrance annulus of quadrant 4. Off the twisted annulus it is the
/// identity.
pub fn glue(params: &ModelParams, pt: &Point3, chart: u8, tol: f64) -> Result<Point3> {
    params.validate()?;
    let classes = crate::geometry::classify_boundary_point(pt, params, tol)?;
    let amount = params.m.unsigned_abs() as f64 / params.n as f64;
    let on_entrance = |q: u8| {
        classes.iter().any(|c| {
            c.quadrant == q && c.kind == crate::geometry::WallKind::EntranceAnnulus
        })
    };
    if params.m < 0 && chart == 1 && on_entrance(1) && pt.y >= -tol {
        let t = (pt.y / params.r2).clamp(0.0, 1.0);
        return Ok(Point3::new(pt.x, pt.y, pt.z + amount * rho(t)?));
    }
    if params.m > 0 && chart == 4 && on_entrance(4) && pt.y <= tol {
        let t = (-pt.y / params.r2).clamp(0.0, 1.0);
        return Ok(Point3::new(pt.x, pt.y, pt.z + amount * rho(t)?));
    }
    Ok(*pt)
}

/// Full 3x3 matrix of one glue factor in the hyperbolic frames `B0 -> B1`
/// at radial coordinate `r` on the twisted annulus.
pub fn phi_matrix_full(params: &ModelParams, r: f64) -> Mat3 {
    let k = kappa(params, r);
    let np = params.np();
    let l = params.log_lambda();
    let (r1, r2) = (params.r1, params.r2);
    let sign = if params.m < 0 { 1.0 } else { -1.0 };
    // m < 0 case as written; the m > 0 matrix is the conjugate by the
    // y-mirror diag(1, 1, -1) on {Y, e_s, e_u}, which flips the off-diagonal
    // entries coupling e_u to the rest.
    Mat3([
        [1.0, -k * np * r / (r1 * r2), sign * (-k * np / r2)],
        [0.0, k * np * l * r / r2 + 1.0, sign * (k * np * l * r1 / r2)],
        [sign * 0.0, sign * (-k * np * l * r * r / (r1 * r2)), -k * np * l * r / r2 + 1.0],
    ])
}

/// The same factor in the frame `{X, e_2, e_3}` adapted to the annulus:
/// a unipotent shear by `-kappa(r)/r2` (mirrored for `m > 0`).
pub fn phi_matrix_frame_c(params: &ModelParams, r: f64) -> Mat3 {
    let shear = kappa(params, r) / params.r2;
    let sign = if params.m < 0 { 1.0 } else { -1.0 };
    Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, sign * -shear, 1.0]])
}

/// Action of one glue factor on the s/u quotient:
/// `[[K+1, K r1/r], [-K r/r1, -K+1]]`.
pub fn phi_matrix_su(params: &ModelParams, r: f64) -> Mat2 {
    let k = k_coefficient(params, r);
    if k == 0.0 {
        return Mat2::IDENTITY;
    }
    let (r1, _) = (params.r1, params.r2);
    let sign = if params.m < 0 { 1.0 } else { -1.0 };
    Mat2([
        [k + 1.0, sign * k * r1 / r],
        [sign * -k * r / r1, -k + 1.0],
    ])
}

/// Off-diagonal profile `eta(r)` of the Jordan form of the s/u factor in the
/// eigenbasis `{w1, w2}`: `[[1, eta(r) r1/r2], [0, 1]]`. Computed from the
/// change of basis; continuous with support in `[r2/3, 2 r2/3]`.
pub fn jordan_eta(params: &ModelParams, r: f64) -> f64 {
    let k = k_coefficient(params, r);
    if k == 0.0 {
        return 0.0;
    }
    let (r1, r2) = (params.r1, params.r2);
    -k * (r * r + r1 * r1) * r2 / (r * r1 * r1)
}

/// Center-unstable action of one glue factor on the plane spanned by the
/// field direction and the inclined unstable vector `alpha e_s + e_u`:
/// upper triangular `[[1, A], [0, B]]`.
///
/// `A` and `B` are read off from the full 3x3 restricted to that plane:
/// `A = -(kappa n p / r2)(alpha r/r1 + 1)` and
/// `B = -K(r, r2)(alpha r/r1 + 1) + 1`.
pub fn phi_matrix_cu(params: &ModelParams, r: f64, alpha: f64) -> Mat2 {
    let k = k_coefficient(params, r);
    if k == 0.0 {
        return Mat2::IDENTITY;
    }
    let sign = if params.m < 0 { 1.0 } else { -1.0 };
    let incline = sign * alpha * r / params.r1 + 1.0;
    let a = -(kappa(params, r) * params.np() / params.r2) * incline * sign;
    let b = -k * incline + 1.0;
    Mat2([[1.0, a], [0.0, b]])
}

/// The `B` entry of [`phi_matrix_cu`]; stays bounded away from zero for
/// inclinations in the arriving range.
pub fn cu_b_entry(params: &ModelParams, r: f64, alpha: f64) -> f64 {
    phi_matrix_cu(params, r, alpha).0[1][1]
}

/// New inclination of the center-unstable plane after one glue factor: the
/// image of `alpha e_s + e_u` under the s/u action.
pub fn cu_alpha_image(params: &ModelParams, r: f64, alpha: f64) -> f64 {
    let m = phi_matrix_su(params, r);
    let img = m.apply([alpha, 1.0]);
    img[0] / img[1]
}

/// A glue factor at one base point of the twisted annulus, with its matrix
/// representations available on demand.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GlueFactor {
    pub base_point: Point3,
    pub r: f64,
    pub kappa: f64,
}

impl GlueFactor {
    pub fn at(params: &ModelParams, r: f64, z: f64) -> Result<GlueFactor> {
        if !(0.0..=params.r2).contains(&r) {
            return Err(ModelError::Domain(format!(
                "glue radial coordinate {} outside [0, r2]",
                r
            )));
        }
        let y = if params.m < 0 { r } else { -r };
        Ok(GlueFactor {
            base_point: Point3::new(params.r1, y, z),
            r,
            kappa: kappa(params, r),
        })
    }

    pub fn full(&self, params: &ModelParams) -> Mat3 {
        phi_matrix_full(params, self.r)
    }

    pub fn su(&self, params: &ModelParams) -> Mat2 {
        phi_matrix_su(params, self.r)
    }
}

/// `|det - 1|` of the product of the word's factors in the full frame.
pub fn volume_check(params: &ModelParams, word: &crate::cocycle::CocycleWord) -> f64 {
    let m = crate::cocycle::dpsi_full(params, word);
    (m.det() - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.5, 1, -1, 1, 0.4, 0.1).unwrap()
    }

    #[test]
    fn rho_plateaus_and_midpoint() {
        assert_eq!(rho(0.2).unwrap(), 1.0);
        assert_eq!(rho(0.8).unwrap(), 0.0);
        assert!((rho(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(rho(-0.1).is_err());
        assert!(rho(1.1).is_err());
    }

    #[test]
    fn rho_monotone_and_c1() {
        let prof = BumpProfile::tabulate(2001);
        for w in prof.rho.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for (k, &t) in prof.t.iter().enumerate() {
            if t > 1.0 / 3.0 + 1e-9 && t < 2.0 / 3.0 - 1e-9 {
                assert!(prof.rho_prime[k] < 0.0);
            }
        }
        // rho' is continuous at the junctions and maximal at the midpoint.
        assert!(rho_prime(1.0 / 3.0 + 1e-9).unwrap().abs() < 1e-6);
        assert!(rho_prime(2.0 / 3.0 - 1e-9).unwrap().abs() < 1e-6);
        assert!((rho_prime(0.5).unwrap().abs() - RHO_PRIME_MAX).abs() < 1e-12);
    }

    #[test]
    fn glue_examples() {
        let p = ModelParams::new(0.5, 2, -1, 1, 0.4, 0.1).unwrap();
        // Off the support of the twist.
        let pt = Point3::new(0.4, 0.09, 0.3);
        assert_eq!(glue(&p, &pt, 1, 1e-12).unwrap(), pt);
        // On the left plateau: shift by |m|/n.
        let out = glue(&p, &Point3::new(0.4, 0.01, 0.3), 1, 1e-12).unwrap();
        assert!((out.z - 0.8).abs() < 1e-15);
        // Off-boundary points are rejected.
        assert!(glue(&p, &Point3::new(0.1, 0.01, 0.3), 1, 1e-12).is_err());
    }

    #[test]
    fn glue_seam_well_defined() {
        // A point of the seam between the two entrance annuli has chart-4
        // coordinates (r1, 0, z) and chart-1 coordinates (r1, 0, z + m/n).
        let p = ModelParams::new(0.5, 2, -1, 1, 0.4, 0.1).unwrap();
        for k in 0..100 {
            let z = k as f64 / 100.0;
            let via4 = glue(&p, &Point3::new(0.4, 0.0, z), 4, 1e-12).unwrap();
            let via1 =
                glue(&p, &Point3::new(0.4, 0.0, z - 0.5), 1, 1e-12).unwrap();
            assert!(crate::geometry::circle_dist(via4.z, via1.z) < 1e-12);
        }
    }

    #[test]
    fn glue_positive_multiplicity_twists_fourth_quadrant() {
        let p = ModelParams::new(0.5, 2, 1, 1, 0.4, 0.1).unwrap();
        let out = glue(&p, &Point3::new(0.4, -0.01, 0.3), 4, 1e-12).unwrap();
        assert!((out.z - 0.8).abs() < 1e-15);
        // Quadrant-1 annulus untouched for m > 0.
        let pt = Point3::new(0.4, 0.01, 0.3);
        assert_eq!(glue(&p, &pt, 1, 1e-12).unwrap(), pt);
    }

    #[test]
    fn full_matrix_pinned_entries() {
        let p = params();
        let m = phi_matrix_full(&p, 0.05);
        // kappa(0.05) = |rho'(1/2)| = 45/8; entry (2,3) = kappa np log(lambda) r1/r2.
        let expect = RHO_PRIME_MAX * 0.5f64.ln() * 4.0;
        assert!((m.0[1][2] - expect).abs() < 1e-12);
        assert!((expect + 15.596).abs() < 1e-3);
        assert!((m.det() - 1.0).abs() < 1e-12);
        // Identity off the support.
        let id = phi_matrix_full(&p, 0.09);
        assert_eq!(id, Mat3::IDENTITY);
    }

    #[test]
    fn su_matrix_pinned_entries() {
        let p = params();
        let m = phi_matrix_su(&p, 0.05);
        // K = log(0.5) * (45/8) * 0.5 = -1.94948 to five digits.
        assert!((m.0[0][0] + 0.9495).abs() < 1e-4);
        assert!((m.0[0][1] + 15.596).abs() < 1e-3);
        assert!((m.0[1][0] - 0.2437).abs() < 1e-4);
        assert!((m.0[1][1] - 2.9495).abs() < 1e-4);
        assert!((m.det() - 1.0).abs() < 1e-12);
        assert!((m.trace() - 2.0).abs() < 1e-12);
        assert_eq!(phi_matrix_su(&p, 0.095), Mat2::IDENTITY);
    }

    #[test]
    fn su_matrix_is_su_block_of_full() {
        let p = params();
        for k in 0..50 {
            let r = p.r2 * k as f64 / 49.0;
            let full = phi_matrix_full(&p, r).su_block();
            let su = phi_matrix_su(&p, r);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((full.0[i][j] - su.0[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn su_unipotent_structure() {
        let p = params();
        for k in 0..50 {
            let r = p.r2 * (k as f64 + 0.5) / 50.0;
            let m = phi_matrix_su(&p, r);
            let nilp = m.sub(&Mat2::IDENTITY);
            let sq = nilp.mul(&nilp);
            assert!(sq.frobenius_norm() < 1e-10);
            // Eigenvector direction (-1, r/r1).
            if k_coefficient(&p, r) != 0.0 {
                let v = [-1.0, r / p.r1];
                let img = m.apply(v);
                assert!((img[0] - v[0]).abs() < 1e-10);
                assert!((img[1] - v[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jordan_form_matches_eta() {
        let p = params();
        let r = 0.04;
        let m = phi_matrix_su(&p, r);
        let w1 = [-1.0, r / p.r1];
        let w2 = [r / p.r1, 1.0];
        let img = m.apply(w2);
        // img = coef * w1 + 1 * w2, coef = eta * r1/r2.
        let coef = jordan_eta(&p, r) * p.r1 / p.r2;
        assert!((img[0] - (coef * w1[0] + w2[0])).abs() < 1e-10);
        assert!((img[1] - (coef * w1[1] + w2[1])).abs() < 1e-10);
        assert!(jordan_eta(&p, r) >= 0.0);
        assert_eq!(jordan_eta(&p, 0.09), 0.0);
    }

    #[test]
    fn cu_matrix_pinned_entries() {
        let p = params();
        let m = phi_matrix_cu(&p, 0.05, 0.0);
        let k = k_coefficient(&p, 0.05);
        assert!((k + 1.9499).abs() < 1e-3);
        assert!((m.0[1][1] - (1.0 - k)).abs() < 1e-12);
        assert!((m.0[1][1] - 2.9499).abs() < 1e-3);
        assert_eq!(m.0[1][0], 0.0);
        assert_eq!(m.0[0][0], 1.0);
        assert_eq!(phi_matrix_cu(&p, 0.095, 0.3), Mat2::IDENTITY);
    }

    #[test]
    fn cu_matrix_matches_full_restriction() {
        // Oracle: restrict the full 3x3 to the plane {Y, alpha e_s + e_u}.
        let p = params();
        for (r, alpha) in [(0.04, 0.0), (0.05, -0.05), (0.06, 0.07), (0.033, 0.02)] {
            let full = phi_matrix_full(&p, r);
            let img = full.apply([0.0, alpha, 1.0]);
            let b = img[2];
            let a = img[0];
            let alpha_new = img[1] / img[2];
            let cu = phi_matrix_cu(&p, r, alpha);
            assert!((cu.0[0][1] - a).abs() < 1e-10, "A entry at r={}", r);
            assert!((cu.0[1][1] - b).abs() < 1e-10, "B entry at r={}", r);
            assert!((cu_alpha_image(&p, r, alpha) - alpha_new).abs() < 1e-10);
        }
    }

    #[test]
    fn full_matrix_equals_frame_c_conjugate() {
        // Change of basis between the hyperbolic frame {X, e1, e2} and the
        // annulus frame {X, e2, e3} at the entry point (r1, r, z).
        let p = params();
        let l = p.log_lambda();
        for k in 1..40 {
            let r = p.r2 * k as f64 / 40.0;
            let t = Mat3([
                [1.0, 1.0 / (l * p.r1), 0.0],
                [0.0, r / p.r1, 1.0],
                [0.0, -1.0 / (p.np() * l * p.r1), 0.0],
            ]);
            let conj = t.inverse().unwrap().mul(&phi_matrix_frame_c(&p, r)).mul(&t);
            let full = phi_matrix_full(&p, r);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (conj.0[i][j] - full.0[i][j]).abs() < 1e-10,
                        "entry ({}, {}) at r={}: {} vs {}",
                        i, j, r, conj.0[i][j], full.0[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn mirrored_factors_for_positive_multiplicity() {
        let neg = params();
        let pos = ModelParams::new(0.5, 1, 1, 1, 0.4, 0.1).unwrap();
        for k in 0..20 {
            let r = neg.r2 * (k as f64 + 0.5) / 20.0;
            let a = phi_matrix_su(&neg, r);
            let b = phi_matrix_su(&pos, r);
            // Conjugate by diag(1, -1).
            assert!((a.0[0][0] - b.0[0][0]).abs() < 1e-14);
            assert!((a.0[0][1] + b.0[0][1]).abs() < 1e-14);
            assert!((a.0[1][0] + b.0[1][0]).abs() < 1e-14);
            assert!((a.0[1][1] - b.0[1][1]).abs() < 1e-14);
            assert!((b.det() - 1.0).abs() < 1e-12);
            assert!((phi_matrix_full(&pos, r).det() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn volume_of_a_long_word() {
        use rand::{Rng, SeedableRng};
        let p = params();
        let empty = crate::cocycle::CocycleWord { factors: vec![] };
        assert_eq!(volume_check(&p, &empty), 0.0);
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        let rest: Vec<(f64, f64)> = (0..10)
            .map(|_| (rng.gen::<f64>() * p.r2, rng.gen::<f64>() * 0.3))
            .collect();
        let word = crate::cocycle::CocycleWord::from_parts(0.1, &rest);
        assert_eq!(word.factors.len(), 21);
        assert!(volume_check(&p, &word) <= 1e-9);
    }

    #[test]
    fn kappa_support() {
        let p = params();
        assert_eq!(kappa(&p, 0.02), 0.0);
        assert_eq!(kappa(&p, 0.08), 0.0);
        assert!(kappa(&p, 0.05) > 0.0);
        assert_eq!(k_coefficient(&p, 0.02), 0.0);
        assert!(k_coefficient(&p, 0.05) < 0.0);
    }
}
