//! The helicoidal local Birkhoff section inside the cross-shaped region:
//! boundary arc bookkeeping, coning rule, transversality certification and
//! the end-to-end cat-map fixture.

use crate::birkhoff::{blowdown_bookkeeping, validate, BirkhoffBoundaryData, BlowdownRecord, ValidationOutcome};
use crate::error::{ModelError, Result};
use crate::geometry::{wrap_z, ModelParams};
use crate::hyperbolicity::search::{parameter_search, sample_suite_words, SearchInput, SearchReport};
use crate::hyperbolicity::splitting::{extract_splitting, SplittingReport};
use crate::surgery;
use rand::{Rng, SeedableRng};
use serde::Serialize;

/// Kind of one sub-arc of the boundary curve within a quadrant copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Entrance,
    Hyperbola,
    Exit,
}

/// One quadrant copy of the boundary curve; three sub-arcs at a constant
/// z-level, except the twisted entrance portion of the surgered quadrant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadrantArc {
    pub index: usize,
    pub quadrant: u8,
    pub copy: u32,
    pub z_level: f64,
    pub twisted: bool,
}

/// One twisted band of the helicoid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Band {
    pub copy: u32,
    pub z_from: f64,
    /// Signed z-travel across the band; `m/n` exactly.
    pub signed_span: f64,
}

/// The helicoid: boundary curve plus the radial coning rule
/// `(x, y, z) -> (theta x, theta y, z)`.
#[derive(Debug, Clone, Serialize)]
pub struct HelicoidSection {
    pub params: ModelParams,
    pub arcs: Vec<QuadrantArc>,
    pub bands: Vec<Band>,
    /// +1 for the construction matched to the multiplicity sign; -1 builds
    /// the deliberately wrong-signature surface.
    pub twist_sign: f64,
}

impl HelicoidSection {
    /// Homology class of the boundary curve in the meridian/longitude basis.
    pub fn boundary_class(&self) -> (i64, i64) {
        let meridian = (self.arcs.len() / 4) as i64;
        let longitude: f64 = self.bands.iter().map(|b| b.signed_span).sum();
        (meridian, longitude.round() as i64)
    }

    /// Lift of the z-coordinate of the twisted band of `copy` at radial
    /// coordinate `r` (not reduced modulo 1, so it is monotone across the
    /// drop of the profile).
    pub fn band_z(&self, copy: u32, r: f64) -> f64 {
        let p = &self.params;
        let amount = p.m.unsigned_abs() as f64 / p.n as f64;
        let z0 = self.bands[copy as usize].z_from;
        z0 + amount * surgery::rho((r / p.r2).clamp(0.0, 1.0)).unwrap()
    }

    /// Magnitude of `dz/dr` on a band, signed by the build orientation.
    pub fn band_slope(&self, r: f64) -> f64 {
        self.twist_sign * surgery::kappa(&self.params, r) / self.params.r2
    }

    /// A point of the coned band surface.
    pub fn band_point(&self, copy: u32, r: f64, theta: f64) -> [f64; 3] {
        let p = &self.params;
        let y = if p.m < 0 { r } else { -r };
        [theta * p.r1, theta * y, wrap_z(self.band_z(copy, r))]
    }

    /// Number of radial arcs in a generic slice `{z = const}` of the
    /// section: each band covers a z-interval of length `|m|/n` (injective
    /// through the drop of the profile), so the total over the n bands is
    /// `|m|` for generic z.
    pub fn radial_arc_count(&self, z: f64) -> usize {
        let span = self.params.m.unsigned_abs() as f64 / self.params.n as f64;
        self.bands
            .iter()
            .map(|b| {
                let frac = (z - b.z_from).rem_euclid(1.0);
                if frac >= span {
                    0
                } else {
                    (span - frac).floor() as usize + 1
                }
            })
            .sum()
    }
}

/// Build the helicoid for the parameters' multiplicity sign.
pub fn build_helicoid(params: &ModelParams) -> Result<HelicoidSection> {
    build_helicoid_with_sign(params, 1.0)
}

/// Deliberately wrong-signature build: the twisted bands are mirrored
/// against the multiplicity, which puts them in a bad position against the
/// flow.
pub fn build_helicoid_wrong_signature(params: &ModelParams) -> Result<HelicoidSection> {
    build_helicoid_with_sign(params, -1.0)
}

fn build_helicoid_with_sign(params: &ModelParams, twist_sign: f64) -> Result<HelicoidSection> {
    params.validate()?;
    let n = params.n;
    let shift = params.m as f64 / n as f64;
    let twisted_quadrant: u8 = if params.m < 0 { 1 } else { 4 };
    let mut arcs = Vec::with_capacity(4 * n as usize);
    let mut bands = Vec::with_capacity(n as usize);
    let mut accumulated = 0.0f64;
    for copy in 0..n {
        let z_level = wrap_z(accumulated);
        for quadrant in 1..=4u8 {
            arcs.push(QuadrantArc {
                index: arcs.len(),
                quadrant,
                copy,
                z_level,
                twisted: quadrant == twisted_quadrant,
            });
        }
        bands.push(Band { copy, z_from: z_level, signed_span: shift });
        accumulated += shift;
    }
    // The curve closes after all 4n quadrant copies: the accumulated shift
    // is the integer m.
    let closure = accumulated - params.m as f64;
    if closure.abs() > 1e-12 {
        return Err(ModelError::Data(format!(
            "boundary curve fails to close: residual shift {}",
            closure
        )));
    }
    Ok(HelicoidSection { params: *params, arcs, bands, twist_sign })
}

/// Closed form of the flow/band triple product at radial coordinate `r`
/// with band slope magnitude `kappa_slope` (taken in the orientation
/// matched to the multiplicity):
/// `2 kappa_slope log(lambda) r1 r - r1/(n p)`.
pub fn band_det(params: &ModelParams, r: f64, kappa_slope: f64) -> f64 {
    2.0 * kappa_slope * params.log_lambda() * params.r1 * r - params.r1 / params.np()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransversalityReport {
    pub min_det: f64,
    pub max_det: f64,
    /// Worst determinant at the band boundary (theta = 1); the coning
    /// scales the triple product linearly in theta, so this is the
    /// scale-normalized certificate.
    pub max_base_det: f64,
    pub pass: bool,
    pub grid: usize,
    /// Horizontal sheets are transverse outright: the field's z-component
    /// `1/(n p)` never vanishes.
    pub horizontal_auto_pass: bool,
}

/// Sweep the triple product over an `(r, theta)` grid of the bands.
pub fn transversality_check(section: &HelicoidSection, grid: usize) -> Result<TransversalityReport> {
    if grid < 2 {
        return Err(ModelError::Resolution { suggested: 2 });
    }
    let p = &section.params;
    let mut min_det = f64::INFINITY;
    let mut max_det = f64::NEG_INFINITY;
    let mut max_base = f64::NEG_INFINITY;
    for i in 0..grid {
        let r = p.r2 * (i as f64 + 0.5) / grid as f64;
        let slope = section.twist_sign * surgery::kappa(p, r) / p.r2;
        let base = band_det(p, r, slope);
        max_base = max_base.max(base);
        for j in 1..=grid {
            let theta = j as f64 / grid as f64;
            let det = theta * base;
            min_det = min_det.min(det);
            max_det = max_det.max(det);
        }
    }
    Ok(TransversalityReport {
        min_det,
        max_det,
        max_base_det: max_base,
        pass: max_det < 0.0,
        grid,
        horizontal_auto_pass: true,
    })
}

/// Finite sample check that the first return to a horizontal sheet of the
/// section agrees with the linear base-plane return on interior points:
/// the return lands on the same sheet after time `n p` and equals the
/// hyperbolic linear map there.
pub fn first_return_agreement(params: &ModelParams, samples: usize) -> Result<bool> {
    params.validate()?;
    let section = build_helicoid(params)?;
    let sheet_z = section.arcs[0].z_level;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x72657475726e);
    for _ in 0..samples {
        let x = (rng.gen::<f64>() - 0.5) * params.r2;
        let y = (rng.gen::<f64>() - 0.5) * params.r2;
        if crate::geometry::region_position(params, x, y, 0.0)
            != crate::geometry::RegionPosition::Interior
        {
            continue;
        }
        let start = crate::geometry::Point3::new(x, y, sheet_z);
        let (linear, time) = crate::affine_flow::first_return_to_base(params, x, y);
        let flowed = crate::affine_flow::flow(params, &start, time);
        let same_sheet = crate::geometry::circle_dist(flowed.z, sheet_z) < 1e-12;
        let same_point =
            (flowed.x - linear[0]).abs() < 1e-12 && (flowed.y - linear[1]).abs() < 1e-12;
        if !(same_sheet && same_point) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Spectral radius of a 2x2 integer matrix by power iteration.
pub fn spectral_radius_2x2(m: [[f64; 2]; 2]) -> f64 {
    let mut v = [1.0, 0.7];
    let mut radius = 0.0;
    for _ in 0..256 {
        let w = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        radius = (w[0] * w[0] + w[1] * w[1]).sqrt() / (v[0] * v[0] + v[1] * v[1]).sqrt();
        let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
        v = [w[0] / n, w[1] / n];
    }
    radius
}

/// The full cat-map scenario record.
#[derive(Debug, Clone, Serialize)]
pub struct CatmapFixture {
    pub spectral_radius: f64,
    pub lambda: f64,
    pub boundary: BirkhoffBoundaryData,
    pub validation: ValidationOutcome,
    pub blowdown: Vec<BlowdownRecord>,
    pub search: SearchReport,
    pub splitting: Option<SplittingReport>,
    pub transversality: Option<TransversalityReport>,
    pub wrong_signature_max_det: Option<f64>,
    pub first_return_agreement: Option<bool>,
}

/// Wire the suspension of the hyperbolic toral map `[[2,1],[1,1]]` into the
/// surgery, the cone suite and the section checks.
pub fn catmap_fixture(samples: usize, budget: u32, seed: u64, grid: usize) -> Result<CatmapFixture> {
    let spectral_radius = spectral_radius_2x2([[2.0, 1.0], [1.0, 1.0]]);
    let lambda = 1.0 / spectral_radius;
    let boundary = BirkhoffBoundaryData { p: 1, n: 1, m: -1 };
    let validation = validate(&boundary);
    let blowdown = blowdown_bookkeeping(std::slice::from_ref(&boundary));
    let input = SearchInput {
        lambda,
        n: boundary.n,
        m: boundary.m as i32,
        p: boundary.p,
        ratio: 0.25,
        r1_init: 0.4,
        budget,
        samples,
        max_factors: 9,
        seed,
        grid,
        mesh: 200,
    };
    let search = parameter_search(&input)?;
    let (splitting, transversality, wrong_signature_max_det, agreement) = if search.feasible {
        let params = input.params_at(search.halvings_used.unwrap())?;
        let constants = search.constants.as_ref().unwrap();
        // The nested-cone iteration composes blocks of duration at least
        // T = 2 T0, so the stream keeps only words acting that long.
        let t_block = constants.t_threshold();
        let (weak, _, _) = sample_suite_words(
            &params,
            constants.t1_bound.value,
            t_block,
            512,
            9,
            seed ^ 0x73706c69,
        )?;
        let stream: Vec<_> = weak
            .into_iter()
            .filter(|sw| sw.word.total_time() >= t_block)
            .take(64)
            .collect();
        let splitting = extract_splitting(&params, constants, &stream, 64)?;
        let section = build_helicoid(&params)?;
        let trans = transversality_check(&section, 200)?;
        let wrong = build_helicoid_wrong_signature(&params)?;
        let wrong_trans = transversality_check(&wrong, 200)?;
        let agreement = first_return_agreement(&params, 256)?;
        (Some(splitting), Some(trans), Some(wrong_trans.max_det), Some(agreement))
    } else {
        (None, None, None, None)
    };
    Ok(CatmapFixture {
        spectral_radius,
        lambda,
        boundary,
        validation,
        blowdown,
        search,
        splitting,
        transversality,
        wrong_signature_max_det,
        first_return_agreement: agreement,
    })
}

/// One row of the band mesh export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeshRow {
    pub copy: u32,
    pub r: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub det: f64,
}

/// Mesh of the bands at the given density, with the pointwise triple
/// product, for plotting.
pub fn band_mesh(section: &HelicoidSection, density: usize) -> Vec<MeshRow> {
    let p = &section.params;
    let mut rows = Vec::new();
    for band in &section.bands {
        for i in 0..density {
            let r = p.r2 * (i as f64 + 0.5) / density as f64;
            let slope = section.twist_sign * surgery::kappa(p, r) / p.r2;
            for j in 1..=density {
                let theta = j as f64 / density as f64;
                let pt = section.band_point(band.copy, r, theta);
                rows.push(MeshRow {
                    copy: band.copy,
                    r,
                    theta,
                    x: pt[0],
                    y: pt[1],
                    z: pt[2],
                    det: theta * band_det(p, r, slope),
                });
            }
        }
    }
    rows
}
