//! Closed-form dynamics of the affine model field
//! `X(x, y, z) = (log(lambda) x, -log(lambda) y, 1/(n p))` on `R^2 x R/Z`.

use crate::error::{ModelError, Result};
use crate::geometry::{from_quadrant1, to_quadrant1, ModelParams, Point3};
use serde::Serialize;

/// Entry points with radial coordinate below this are treated as lying on
/// the stable wall: the transit time would overflow the log.
pub const STABLE_WALL_FLOOR: f64 = 1e-300;

/// Result of pushing an entrance point through the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitResult {
    pub exit_point: Point3,
    pub transit_time: f64,
}

/// The model vector field at a point.
pub fn vector_field(params: &ModelParams, pt: &Point3) -> [f64; 3] {
    let l = params.log_lambda();
    [l * pt.x, -l * pt.y, 1.0 / params.np()]
}

/// Time-t map of the flow: `(lambda^t x, lambda^-t y, z + t/(n p))`.
pub fn flow(params: &ModelParams, pt: &Point3, t: f64) -> Point3 {
    let lt = params.lambda.powf(t);
    Point3::new(pt.x * lt, pt.y / lt, pt.z + t / params.np())
}

/// Transit time from the entrance annulus at radial coordinate `r`:
/// `tau(r) = log(r/r1) / log(lambda)`.
pub fn transit_time(params: &ModelParams, r: f64) -> f64 {
    (r / params.r1).ln() / params.log_lambda()
}

/// Push an entrance point through the cross-shaped region.
///
/// In the quadrant-1 convention the entry is `(r1, r, z)` with `0 < r <= r2`
/// and the exit is `(r, r1, z + tau/(n p))`. Entries on the other three
/// entrance annuli are conjugated into quadrant 1 by the axis reflections.
pub fn transit_map(params: &ModelParams, entry: &Point3, tol: f64) -> Result<TransitResult> {
    params.validate()?;
    // Locate the entrance annulus: |x| = r1, |y| <= r2.
    let quadrant = entry
        .quadrants()
        .into_iter()
        .find(|&q| {
            let (x, _) = to_quadrant1(q, entry.x, entry.y);
            (x - params.r1).abs() <= tol
        })
        .ok_or_else(|| {
            ModelError::Domain(format!(
                "entry point ({}, {}) is not on an entrance annulus",
                entry.x, entry.y
            ))
        })?;
    let (_, r) = to_quadrant1(quadrant, entry.x, entry.y);
    if r < -tol {
        return Err(ModelError::Domain("entry radial coordinate is negative".into()));
    }
    if r > params.r2 + tol {
        return Err(ModelError::Domain(format!(
            "entry radial coordinate {} exceeds r2 = {}",
            r, params.r2
        )));
    }
    if r.abs() < STABLE_WALL_FLOOR {
        return Err(ModelError::NeverExits);
    }
    let tau = transit_time(params, r);
    let (ex, ey) = from_quadrant1(quadrant, r, params.r1);
    Ok(TransitResult {
        exit_point: Point3::new(ex, ey, entry.z + tau / params.np()),
        transit_time: tau,
    })
}

/// First return to the base plane `z = 0`: the linear map
/// `(x, y) -> (lambda^{np} x, lambda^{-np} y)` after time `n p`.
pub fn first_return_to_base(params: &ModelParams, x: f64, y: f64) -> ([f64; 2], f64) {
    let t = params.np();
    let lt = params.lambda.powf(t);
    ([x * lt, y / lt], t)
}

/// Lower bound for the re-entry time of the surgery support once the region
/// has been shrunk from `r1` to `r1_shrunk` at a fixed ratio:
/// `2 log(r1_shrunk/r1) / log(lambda)`.
pub fn reentry_time_lower_bound(r1_shrunk: f64, r1: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(ModelError::Domain("lambda must lie in (0,1)".into()));
    }
    if !(r1_shrunk > 0.0 && r1_shrunk < r1) {
        return Err(ModelError::Domain(format!(
            "need 0 < r1_shrunk < r1, got r1_shrunk={}, r1={}",
            r1_shrunk, r1
        )));
    }
    Ok(2.0 * (r1_shrunk / r1).ln() / lambda.ln())
}

/// Tag of one sample of an orbit trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionTag {
    Q1,
    Q2,
    Q3,
    Q4,
    Outside,
}

/// One CSV row of an orbit trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub region: RegionTag,
}

/// Sample the orbit of `start` at times `0, dt, ..., t_max`.
pub fn trace_orbit(params: &ModelParams, start: &Point3, t_max: f64, dt: f64) -> Vec<TraceSample> {
    let mut out = Vec::new();
    let steps = (t_max / dt).floor() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let p = flow(params, start, t);
        let inside = crate::geometry::region_position(params, p.x, p.y, 0.0)
            != crate::geometry::RegionPosition::Outside;
        let region = if !inside {
            RegionTag::Outside
        } else if p.x >= 0.0 && p.y >= 0.0 {
            RegionTag::Q1
        } else if p.x <= 0.0 && p.y >= 0.0 {
            RegionTag::Q2
        } else if p.x <= 0.0 && p.y <= 0.0 {
            RegionTag::Q3
        } else {
            RegionTag::Q4
        };
        out.push(TraceSample { t, x: p.x, y: p.y, z: p.z, region });
    }
    out
}
