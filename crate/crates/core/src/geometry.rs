//! The cross-shaped neighbourhood `Q(r1,r2) x R/Z`, its quadrant
//! decomposition, boundary annuli and the normal-coordinate chart seams.
//!
//! Quadrant labels follow the counterclockwise convention with
//! `Q1 = {x >= 0, y >= 0}`. The planar region is the union of the four
//! quadrant pieces `Q_i`, where `Q_1` is bounded by the axis segments of
//! length `r1`, the entrance/exit segments of length `r2` and the arc of
//! hyperbola `x*y = r1*r2`.

use crate::error::{ModelError, Result};
use serde::{Deserialize, Serialize};

/// Default absolute tolerance for boundary membership tests.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// The tuple `(lambda, n, m, p, r1, r2)` fixing the local model and surgery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Contraction factor of the first return map, in (0,1).
    pub lambda: f64,
    /// Linking number, >= 1.
    pub n: u32,
    /// Multiplicity, nonzero, coprime with n.
    pub m: i32,
    /// Number of boundary components over the orbit, >= 1.
    pub p: u32,
    /// Outer radius of the cross-shaped region.
    pub r1: f64,
    /// Entrance/exit half-width, 0 < r2 < r1 < 1.
    pub r2: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ModelParams {
    pub fn new(lambda: f64, n: u32, m: i32, p: u32, r1: f64, r2: f64) -> Result<Self> {
        let params = ModelParams { lambda, n, m, p, r1, r2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(ModelError::Params(format!(
                "lambda must lie in (0,1), got {}",
                self.lambda
            )));
        }
        if self.n < 1 {
            return Err(ModelError::Params("n must be >= 1".into()));
        }
        if self.m == 0 {
            return Err(ModelError::Params("m must be nonzero".into()));
        }
        if self.p < 1 {
            return Err(ModelError::Params("p must be >= 1".into()));
        }
        if !(self.r2 > 0.0 && self.r2 < self.r1 && self.r1 < 1.0) {
            return Err(ModelError::Params(format!(
                "need 0 < r2 < r1 < 1, got r1={}, r2={}",
                self.r1, self.r2
            )));
        }
        if gcd(self.n as u64, self.m.unsigned_abs() as u64) != 1 {
            return Err(ModelError::Params(format!(
                "gcd(n, |m|) must be 1, got n={}, m={}",
                self.n, self.m
            )));
        }
        Ok(())
    }

    pub fn log_lambda(&self) -> f64 {
        self.lambda.ln()
    }

    /// `n*p`, the z-period of the first return to the base plane.
    pub fn np(&self) -> f64 {
        (self.n as f64) * (self.p as f64)
    }

    /// Shrink both radii by `factor`, keeping the ratio.
    pub fn shrunk(&self, factor: f64) -> ModelParams {
        ModelParams {
            r1: self.r1 * factor,
            r2: self.r2 * factor,
            ..*self
        }
    }
}

/// A point `(x, y, z)` with `z` a circle coordinate reduced modulo 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Reduce to [0, 1).
pub fn wrap_z(z: f64) -> f64 {
    let r = z.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the circle R/Z.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z: wrap_z(z) }
    }

    /// Quadrants containing (x, y); axis points belong to two, the origin to all four.
    pub fn quadrants(&self) -> Vec<u8> {
        let mut out = Vec::new();
        if self.x >= 0.0 && self.y >= 0.0 {
            out.push(1);
        }
        if self.x <= 0.0 && self.y >= 0.0 {
            out.push(2);
        }
        if self.x <= 0.0 && self.y <= 0.0 {
            out.push(3);
        }
        if self.x >= 0.0 && self.y <= 0.0 {
            out.push(4);
        }
        out
    }
}

/// Kind of boundary wall of one quadrant piece of the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WallKind {
    /// Axis segment inside the stable manifold, `L^s_i`.
    StableWall,
    /// Axis segment inside the unstable manifold, `L^u_i`.
    UnstableWall,
    /// Arc of hyperbola `x*y = r1*r2`, `L^c_i`.
    HyperbolaWall,
    /// Annulus where the field points inward, `A_in^i`.
    EntranceAnnulus,
    /// Annulus where the field points outward, `A_out^i`.
    ExitAnnulus,
}

/// One incident boundary class of a point of the boundary torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub kind: WallKind,
    pub quadrant: u8,
}

impl BoundaryClass {
    pub fn new(kind: WallKind, quadrant: u8) -> Self {
        BoundaryClass { kind, quadrant }
    }
}

/// Flow-equivariant reflection taking quadrant `q` onto quadrant 1.
///
/// The rotation `(x,y) -> (-y,x)` maps the region pieces onto each other but
/// swaps the stable and unstable axes, so transporting dynamics between
/// quadrants must use the axis reflections instead.
pub fn to_quadrant1(q: u8, x: f64, y: f64) -> (f64, f64) {
    match q {
        1 => (x, y),
        2 => (-x, y),
        3 => (-x, -y),
        4 => (x, -y),
        _ => panic!("quadrant index must be 1..=4"),
    }
}

/// Inverse of [`to_quadrant1`].
pub fn from_quadrant1(q: u8, x: f64, y: f64) -> (f64, f64) {
    // The axis reflections are involutions.
    to_quadrant1(q, x, y)
}

/// Signs `(sx, sy)` of quadrant `q`.
pub fn quadrant_signs(q: u8) -> (f64, f64) {
    match q {
        1 => (1.0, 1.0),
        2 => (-1.0, 1.0),
        3 => (-1.0, -1.0),
        4 => (1.0, -1.0),
        _ => panic!("quadrant index must be 1..=4"),
    }
}

/// Endpoints of one straight wall segment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

/// Descriptor of one quadrant piece `Q_i` of the region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadrantWalls {
    pub quadrant: u8,
    /// `w^s_i`: axis segment in the stable manifold.
    pub stable: Segment,
    /// `w^u_i`: axis segment in the unstable manifold.
    pub unstable: Segment,
    /// `J_in^i`: entrance segment.
    pub entrance: Segment,
    /// `J_out^i`: exit segment.
    pub exit: Segment,
    /// Endpoints of the hyperbola arc `|x*y| = r1*r2`.
    pub hyperbola: Segment,
}

/// Serializable description of `Q(r1, r2)` for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossRegion {
    pub r1: f64,
    pub r2: f64,
    pub quadrants: Vec<QuadrantWalls>,
}

impl CrossRegion {
    /// Point of the quadrant-1 hyperbola arc; `t = 0` gives `(r1, r2)` and
    /// `t = 1` gives `(r2, r1)`.
    pub fn hyperbola_point(&self, quadrant: u8, t: f64) -> [f64; 2] {
        let x1 = self.r1 * (self.r2 / self.r1).powf(t);
        let y1 = self.r1 * self.r2 / x1;
        let (x, y) = from_quadrant1(quadrant, x1, y1);
        [x, y]
    }
}

/// Build the planar region descriptor.
pub fn build_cross_region(params: &ModelParams) -> Result<CrossRegion> {
    params.validate()?;
    let (r1, r2) = (params.r1, params.r2);
    let quadrants = (1..=4u8)
        .map(|q| {
            let map = |x: f64, y: f64| {
                let (mx, my) = from_quadrant1(q, x, y);
                [mx, my]
            };
            QuadrantWalls {
                quadrant: q,
                stable: Segment { start: map(0.0, 0.0), end: map(r1, 0.0) },
                unstable: Segment { start: map(0.0, 0.0), end: map(0.0, r1) },
                entrance: Segment { start: map(r1, 0.0), end: map(r1, r2) },
                exit: Segment { start: map(0.0, r1), end: map(r2, r1) },
                hyperbola: Segment { start: map(r1, r2), end: map(r2, r1) },
            }
        })
        .collect();
    Ok(CrossRegion { r1, r2, quadrants })
}

/// Where a planar point sits relative to the region `Q(r1, r2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionPosition {
    Interior,
    Boundary,
    Outside,
}

/// Classify `(x, y)` against the planar region with absolute tolerance `tol`.
pub fn region_position(params: &ModelParams, x: f64, y: f64, tol: f64) -> RegionPosition {
    let (ax, ay) = (x.abs(), y.abs());
    let box_excess = ax.max(ay) - params.r1;
    let arc_excess = ax * ay - params.r1 * params.r2;
    if box_excess > tol || arc_excess > tol {
        return RegionPosition::Outside;
    }
    if box_excess.abs() <= tol || arc_excess.abs() <= tol {
        return RegionPosition::Boundary;
    }
    RegionPosition::Interior
}

/// All boundary classes incident to `pt`; corner points collect every
/// incident wall. Errors if `pt` is not on the boundary torus within `tol`.
pub fn classify_boundary_point(
    pt: &Point3,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<BoundaryClass>> {
    params.validate()?;
    if region_position(params, pt.x, pt.y, tol) != RegionPosition::Boundary {
        return Err(ModelError::Classification(format!(
            "point ({}, {}) is not on the boundary of the region",
            pt.x, pt.y
        )));
    }
    let (r1, r2) = (params.r1, params.r2);
    let mut classes = Vec::new();
    for q in pt.quadrants() {
        let (x, y) = to_quadrant1(q, pt.x, pt.y);
        // In quadrant-1 coordinates the walls are:
        //   stable    y = 0, 0 <= x <= r1
        //   unstable  x = 0, 0 <= y <= r1
        //   entrance  x = r1, 0 <= y <= r2
        //   exit      y = r1, 0 <= x <= r2
        //   hyperbola x*y = r1*r2 between (r1, r2) and (r2, r1)
        if y.abs() <= tol && x >= -tol && x <= r1 + tol {
            classes.push(BoundaryClass::new(WallKind::StableWall, q));
        }
        if x.abs() <= tol && y >= -tol && y <= r1 + tol {
            classes.push(BoundaryClass::new(WallKind::UnstableWall, q));
        }
        if (x - r1).abs() <= tol && y >= -tol && y <= r2 + tol {
            classes.push(BoundaryClass::new(WallKind::EntranceAnnulus, q));
        }
        if (y - r1).abs() <= tol && x >= -tol && x <= r2 + tol {
            classes.push(BoundaryClass::new(WallKind::ExitAnnulus, q));
        }
        if (x * y - r1 * r2).abs() <= tol && x >= r2 - tol && x <= r1 + tol {
            classes.push(BoundaryClass::new(WallKind::HyperbolaWall, q));
        }
    }
    classes.sort_by_key(|c| (c.quadrant, wall_rank(c.kind)));
    classes.dedup();
    if classes.is_empty() {
        return Err(ModelError::Classification(format!(
            "boundary point ({}, {}) matched no wall family",
            pt.x, pt.y
        )));
    }
    Ok(classes)
}

fn wall_rank(kind: WallKind) -> u8 {
    match kind {
        WallKind::StableWall => 0,
        WallKind::UnstableWall => 1,
        WallKind::HyperbolaWall => 2,
        WallKind::EntranceAnnulus => 3,
        WallKind::ExitAnnulus => 4,
    }
}

/// Chart transition across the common wall of two adjacent quadrants.
///
/// The only nontrivial seam is 4 -> 1 on the positive x-axis, which shifts
/// `z` by `m/n`; the reverse crossing shifts by `-m/n`. Every other seam is
/// the identity.
pub fn chart_seam(
    pt: &Point3,
    from_quadrant: u8,
    to_quadrant: u8,
    params: &ModelParams,
    tol: f64,
) -> Result<Point3> {
    params.validate()?;
    let wall_ok = match (from_quadrant, to_quadrant) {
        (1, 2) | (2, 1) => pt.x.abs() <= tol && pt.y >= -tol,
        (2, 3) | (3, 2) => pt.y.abs() <= tol && pt.x <= tol,
        (3, 4) | (4, 3) => pt.x.abs() <= tol && pt.y <= tol,
        (4, 1) | (1, 4) => pt.y.abs() <= tol && pt.x >= -tol,
        _ => {
            return Err(ModelError::Domain(format!(
                "quadrants {} and {} are not adjacent",
                from_quadrant, to_quadrant
            )))
        }
    };
    if !wall_ok {
        return Err(ModelError::Domain(format!(
            "point ({}, {}) is not on the {} -> {} seam",
            pt.x, pt.y, from_quadrant, to_quadrant
        )));
    }
    let shift = match (from_quadrant, to_quadrant) {
        (4, 1) => params.m as f64 / params.n as f64,
        (1, 4) => -(params.m as f64) / params.n as f64,
        _ => 0.0,
    };
    Ok(Point3::new(pt.x, pt.y, pt.z + shift))
}
