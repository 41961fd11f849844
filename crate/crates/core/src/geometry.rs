//! Convex field shapes, their polygonal approximation, convex clipping and
//! intersection-over-union.
//!
//! Every field shape is convex, so the intersection of two polygonized fields
//! is computed by clipping one convex polygon against the half-planes of the
//! other. Areas in the IOU ratio all come from the same polygons, which keeps
//! the ratio inside `[0, 1]`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Tolerance used for convexity and vertex de-duplication, in meters.
pub const CONVEX_TOLERANCE: f64 = 1e-9;

/// Intersections with less area than this (m²) are reported as empty.
pub const MIN_INTERSECTION_AREA: f64 = 1e-12;

/// Minimum vertex count accepted by [`to_polygon`].
pub const MIN_POLYGON_VERTICES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
}

/// A point or displacement in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    /// Panics if either component is NaN or infinite; see [`Vec2::try_new`].
    pub fn new(x: f64, y: f64) -> Self {
        Self::try_new(x, y).expect("Vec2 components must be finite")
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Vec2 { x, y })
        } else {
            Err(GeometryError::NonFinite("Vec2"))
        }
    }

    /// Unit vector pointing along `angle` (radians).
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2 { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).length()
    }

    /// Direction in radians, `atan2(y, x)`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotates counter-clockwise by `angle` radians about the origin.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2 {
            x: self.x * c - self.y * s,
            y: self.x * s + self.y * c,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2 {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2 {
            x: self.x - o.x,
            y: self.y - o.y,
        }
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2 {
            x: self.x * s,
            y: self.y * s,
        }
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2 {
            x: -self.x,
            y: -self.y,
        }
    }
}

// Serialized as a two-element array `[x, y]`.
impl Serialize for Vec2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vec2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(deserializer)?;
        Vec2::try_new(x, y).map_err(serde::de::Error::custom)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

fn check_finite(value: f64, what: &'static str) -> Result<f64, GeometryError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(GeometryError::NonFinite(what))
    }
}

/// Elliptical user field. `heading` is the direction of the major axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseField {
    pub center: Vec2,
    pub r_major: f64,
    pub r_minor: f64,
    pub heading: f64,
}

impl EllipseField {
    pub fn new(center: Vec2, r_major: f64, r_minor: f64, heading: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite("ellipse center"));
        }
        check_finite(r_major, "ellipse r_major")?;
        check_finite(r_minor, "ellipse r_minor")?;
        check_finite(heading, "ellipse heading")?;
        if !(r_minor > 0.0 && r_major >= r_minor) {
            return Err(GeometryError::Domain(format!(
                "ellipse axes must satisfy r_major >= r_minor > 0, got ({r_major}, {r_minor})"
            )));
        }
        Ok(EllipseField {
            center,
            r_major,
            r_minor,
            heading: normalize_angle(heading),
        })
    }

    /// Distance from the center to either focus.
    pub fn focal_offset(&self) -> f64 {
        (self.r_major * self.r_major - self.r_minor * self.r_minor).sqrt()
    }

    pub fn area(&self) -> f64 {
        PI * self.r_major * self.r_minor
    }
}

/// Directional device field: the half of a disk lying on the `facing` side
/// of the diameter through `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfDiskField {
    pub center: Vec2,
    pub radius: f64,
    pub facing: f64,
}

impl HalfDiskField {
    pub fn new(center: Vec2, radius: f64, facing: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite("half-disk center"));
        }
        check_finite(radius, "half-disk radius")?;
        check_finite(facing, "half-disk facing")?;
        if radius <= 0.0 {
            return Err(GeometryError::Domain(format!("half-disk radius must be > 0, got {radius}")));
        }
        Ok(HalfDiskField {
            center,
            radius,
            facing: normalize_angle(facing),
        })
    }

    pub fn area(&self) -> f64 {
        0.5 * PI * self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleField {
    pub center: Vec2,
    pub radius: f64,
    /// Angle of the first polygon vertex. Only affects polygonization.
    pub orientation: f64,
}

impl CircleField {
    pub fn new(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        Self::oriented(center, radius, 0.0)
    }

    pub fn oriented(center: Vec2, radius: f64, orientation: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFinite("circle center"));
        }
        check_finite(radius, "circle radius")?;
        check_finite(orientation, "circle orientation")?;
        if radius <= 0.0 {
            return Err(GeometryError::Domain(format!("circle radius must be > 0, got {radius}")));
        }
        Ok(CircleField {
            center,
            radius,
            orientation: normalize_angle(orientation),
        })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// An interaction field. All variants are convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum FieldShape {
    Ellipse(EllipseField),
    HalfDisk(HalfDiskField),
    Circle(CircleField),
}

impl FieldShape {
    /// Exact area of the analytic shape.
    pub fn area(&self) -> f64 {
        match self {
            FieldShape::Ellipse(e) => e.area(),
            FieldShape::HalfDisk(h) => h.area(),
            FieldShape::Circle(c) => c.area(),
        }
    }

    /// Exact point-membership test on the analytic shape (boundary included).
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            FieldShape::Ellipse(e) => {
                let local = (p - e.center).rotate(-e.heading);
                let u = local.x / e.r_major;
                let v = local.y / e.r_minor;
                u * u + v * v <= 1.0
            }
            FieldShape::HalfDisk(h) => {
                let d = p - h.center;
                d.dot(Vec2::from_angle(h.facing)) >= 0.0 && d.dot(d) <= h.radius * h.radius
            }
            FieldShape::Circle(c) => {
                let d = p - c.center;
                d.dot(d) <= c.radius * c.radius
            }
        }
    }

    /// Axis-aligned bounding box of the analytic shape as `(min, max)`.
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match self {
            FieldShape::Ellipse(e) => {
                let (s, c) = e.heading.sin_cos();
                let hx = ((e.r_major * c).powi(2) + (e.r_minor * s).powi(2)).sqrt();
                let hy = ((e.r_major * s).powi(2) + (e.r_minor * c).powi(2)).sqrt();
                (e.center - Vec2 { x: hx, y: hy }, e.center + Vec2 { x: hx, y: hy })
            }
            FieldShape::HalfDisk(h) => {
                let r = Vec2 {
                    x: h.radius,
                    y: h.radius,
                };
                (h.center - r, h.center + r)
            }
            FieldShape::Circle(c) => {
                let r = Vec2 {
                    x: c.radius,
                    y: c.radius,
                };
                (c.center - r, c.center + r)
            }
        }
    }
}

/// Returns `(r_major, r_minor)` such that `r_major / r_minor = k·speed + 1`
/// and `r_major · r_minor = c`.
pub fn ellipse_axes(speed: f64, k: f64, c: f64) -> Result<(f64, f64), GeometryError> {
    check_finite(speed, "speed")?;
    check_finite(k, "dynamics coefficient")?;
    check_finite(c, "area constant")?;
    if speed < 0.0 {
        return Err(GeometryError::Domain(format!("speed must be >= 0, got {speed}")));
    }
    if k < 0.0 {
        return Err(GeometryError::Domain(format!("dynamics coefficient must be >= 0, got {k}")));
    }
    if c <= 0.0 {
        return Err(GeometryError::Domain(format!("area constant must be > 0, got {c}")));
    }
    let ratio = k * speed + 1.0;
    if ratio == 1.0 {
        let r = c.sqrt();
        return Ok((r, r));
    }
    Ok(((c * ratio).sqrt(), (c / ratio).sqrt()))
}

/// A convex polygon with counter-clockwise vertices, or the empty polygon.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon { vertices: Vec::new() }
    }

    /// Validates winding and strict convexity (within [`CONVEX_TOLERANCE`]).
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.is_empty() {
            return Ok(Self::empty());
        }
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("polygon vertex"));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let edge = b - a;
            let len = edge.length();
            if len <= CONVEX_TOLERANCE {
                return Err(GeometryError::InvalidPolygon(format!("duplicate vertex at index {}", (i + 1) % n)));
            }
            // Signed distance of `c` from the line through a→b.
            if edge.cross(c - a) / len <= CONVEX_TOLERANCE {
                return Err(GeometryError::InvalidPolygon(format!(
                    "not strictly convex counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        let poly = ConvexPolygon { vertices };
        if signed_area(&poly.vertices) <= 0.0 {
            return Err(GeometryError::InvalidPolygon("winding is not counter-clockwise".into()));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn bounds(&self) -> Option<(Vec2, Vec2)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                Vec2 {
                    x: lo.x.min(v.x),
                    y: lo.y.min(v.y),
                },
                Vec2 {
                    x: hi.x.max(v.x),
                    y: hi.y.max(v.y),
                },
            )
        }))
    }
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        twice += vertices[i].cross(vertices[(i + 1) % n]);
    }
    0.5 * twice
}

/// Shoelace area; zero for the empty polygon.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    signed_area(&p.vertices).max(0.0)
}

/// Inscribed polygonal approximation of a field.
///
/// Ellipses and circles get `n` parameter-uniform boundary samples starting
/// at the heading (or orientation). Half-disks get the two diameter
/// endpoints plus `n - 2` evenly spaced arc samples.
pub fn to_polygon(shape: &FieldShape, n: usize) -> Result<ConvexPolygon, GeometryError> {
    if n < MIN_POLYGON_VERTICES {
        return Err(GeometryError::Domain(format!(
            "polygonization needs at least {MIN_POLYGON_VERTICES} vertices, got {n}"
        )));
    }
    let vertices = match shape {
        FieldShape::Ellipse(e) => ellipse_vertices(e.center, e.r_major, e.r_minor, e.heading, n),
        FieldShape::Circle(c) => ellipse_vertices(c.center, c.radius, c.radius, c.orientation, n),
        FieldShape::HalfDisk(h) => half_disk_vertices(h, n),
    };
    Ok(ConvexPolygon { vertices })
}

fn ellipse_vertices(center: Vec2, a: f64, b: f64, heading: f64, n: usize) -> Vec<Vec2> {
    let (s, c) = heading.sin_cos();
    (0..n)
        .map(|i| {
            let theta = TAU * i as f64 / n as f64;
            let (st, ct) = theta.sin_cos();
            let lx = a * ct;
            let ly = b * st;
            Vec2 {
                x: center.x + (lx * c - ly * s),
                y: center.y + (lx * s + ly * c),
            }
        })
        .collect()
}

fn half_disk_vertices(h: &HalfDiskField, n: usize) -> Vec<Vec2> {
    let forward = Vec2::from_angle(h.facing);
    // Perpendicular to facing, so that walking start → arc → end is CCW.
    let side = Vec2 {
        x: forward.y,
        y: -forward.x,
    };
    let start = h.center + side * h.radius;
    let end = h.center - side * h.radius;
    let steps = (n - 1) as f64;
    let first_angle = h.facing - PI / 2.0;
    let mut out = Vec::with_capacity(n);
    out.push(start);
    for j in 1..n - 1 {
        let angle = first_angle + PI * j as f64 / steps;
        out.push(h.center + Vec2::from_angle(angle) * h.radius);
    }
    out.push(end);
    out
}

/// Intersection of two convex polygons by successive half-plane clipping.
pub fn convex_intersect(p: &ConvexPolygon, q: &ConvexPolygon) -> ConvexPolygon {
    if p.is_empty() || q.is_empty() {
        return ConvexPolygon::empty();
    }
    let (plo, phi) = p.bounds().expect("non-empty");
    let (qlo, qhi) = q.bounds().expect("non-empty");
    if plo.x > qhi.x || qlo.x > phi.x || plo.y > qhi.y || qlo.y > phi.y {
        return ConvexPolygon::empty();
    }

    let mut subject = p.vertices.clone();
    let mut scratch = Vec::with_capacity(subject.len() + q.len());
    let clip = &q.vertices;
    for i in 0..clip.len() {
        if subject.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b - a;
        scratch.clear();
        let m = subject.len();
        for j in 0..m {
            let cur = subject[j];
            let next = subject[(j + 1) % m];
            let dc = edge.cross(cur - a);
            let dn = edge.cross(next - a);
            let cur_in = dc >= 0.0;
            let next_in = dn >= 0.0;
            if cur_in {
                scratch.push(cur);
            }
            if cur_in != next_in {
                let t = dc / (dc - dn);
                scratch.push(cur + (next - cur) * t);
            }
        }
        std::mem::swap(&mut subject, &mut scratch);
    }

    let cleaned = clean_ring(subject);
    if cleaned.len() < 3 || signed_area(&cleaned) < MIN_INTERSECTION_AREA {
        return ConvexPolygon::empty();
    }
    ConvexPolygon { vertices: cleaned }
}

/// Drops near-duplicate and collinear vertices left behind by clipping.
fn clean_ring(mut ring: Vec<Vec2>) -> Vec<Vec2> {
    let mut changed = true;
    while changed && ring.len() >= 3 {
        changed = false;
        let n = ring.len();
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let prev = ring[(i + n - 1) % n];
            let cur = ring[i];
            let next = ring[(i + 1) % n];
            let prev_kept = keep.last().copied().unwrap_or(prev);
            if cur.distance(prev_kept) <= CONVEX_TOLERANCE {
                changed = true;
                continue;
            }
            let base = next - prev_kept;
            let len = base.length();
            // A convex counter-clockwise vertex lies strictly right of the chord.
            if len > CONVEX_TOLERANCE && base.cross(cur - prev_kept) / len >= -CONVEX_TOLERANCE {
                changed = true;
                continue;
            }
            keep.push(cur);
        }
        if keep.len() >= 2 && keep[0].distance(*keep.last().expect("len >= 2")) <= CONVEX_TOLERANCE {
            keep.pop();
            changed = true;
        }
        ring = keep;
    }
    ring
}

/// Intersection-over-union of two polygonized fields.
pub fn iou(a: &FieldShape, b: &FieldShape, n: usize) -> Result<f64, GeometryError> {
    let p = to_polygon(a, n)?;
    let q = to_polygon(b, n)?;
    Ok(polygon_iou(&p, &q))
}

/// IOU of two already polygonized regions.
pub fn polygon_iou(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    let area_p = polygon_area(p);
    let area_q = polygon_area(q);
    if area_p <= 0.0 || area_q <= 0.0 {
        return 0.0;
    }
    let inter = polygon_area(&convex_intersect(p, q));
    let union = area_p + area_q - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Closed-form IOU of two disks via the circular-lens area.
pub fn circle_circle_iou_analytic(c1: Vec2, r1: f64, c2: Vec2, r2: f64) -> f64 {
    let d = c1.distance(c2);
    let a1 = PI * r1 * r1;
    let a2 = PI * r2 * r2;
    let inter = if d >= r1 + r2 {
        0.0
    } else if d <= (r1 - r2).abs() {
        a1.min(a2)
    } else {
        let alpha = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
        let beta = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
        let kite = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
        r1 * r1 * alpha + r2 * r2 * beta - 0.5 * kite
    };
    let union = a1 + a2 - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Monte-Carlo IOU estimate of the analytic shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub iou: f64,
    pub std_error: f64,
}

/// Minimum sample count accepted by [`mc_area_oracle`].
pub const MC_MIN_SAMPLES: usize = 10_000;

/// Uniformly samples the joint bounding box and counts hits in the
/// intersection and the union. The standard error is the binomial error of
/// the intersection fraction among union hits.
pub fn mc_area_oracle(
    a: &FieldShape,
    b: &FieldShape,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, GeometryError> {
    if samples < MC_MIN_SAMPLES {
        return Err(GeometryError::Domain(format!(
            "Monte-Carlo oracle needs at least {MC_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    let lo = Vec2 {
        x: alo.x.min(blo.x),
        y: alo.y.min(blo.y),
    };
    let hi = Vec2 {
        x: ahi.x.max(bhi.x),
        y: ahi.y.max(bhi.y),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inter = 0u64;
    let mut union = 0u64;
    for _ in 0..samples {
        let p = Vec2 {
            x: lo.x + (hi.x - lo.x) * rng.random::<f64>(),
            y: lo.y + (hi.y - lo.y) * rng.random::<f64>(),
        };
        let in_a = a.contains(p);
        let in_b = b.contains(p);
        if in_a || in_b {
            union += 1;
            if in_a && in_b {
                inter += 1;
            }
        }
    }
    if union == 0 {
        return Ok(McEstimate { iou: 0.0, std_error: 0.0 });
    }
    let p = inter as f64 / union as f64;
    Ok(McEstimate {
        iou: p,
        std_error: (p * (1.0 - p) / union as f64).sqrt(),
    })
}
