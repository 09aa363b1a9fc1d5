//! Plane geometry for elliptical fractures and event triples.
//!
//! Planes are stored as `a*x + b*y + c*z = d`. Strike is measured clockwise
//! from the +y axis (map north) and lies in `[0, 180)`; dip lies in
//! `[0, 180]` where values above 90 encode the obtuse-dip branch of the
//! extraction formulas rather than a physical overturn.

use nalgebra::Vector3;
use thiserror::Error;

/// 3-component position / direction vector, meters.
pub type Vec3 = Vector3<f64>;

/// Relative tolerance for declaring an event triple collinear.
pub const DEGENERATE_TRIPLE_REL_TOL: f64 = 1e-9;

/// Minimum intersection segment length considered non-degenerate, meters.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("the three points are collinear or coincident")]
    DegenerateTriple,
    #[error("fracture axis length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("aspect ratio must be >= 1, got {0}")]
    InvalidAspectRatio(f64),
    #[error("elliptical fractures need at least 8 polygon vertices, got {0}")]
    TooFewVertices(usize),
    #[error("normal vector must be non-zero")]
    ZeroNormal,
    #[error("axis-aligned box must have min < max on every axis")]
    EmptyBox,
}

/// Coefficients of the plane `a*x + b*y + c*z = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PlaneCoefficients {
    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.a, self.b, self.c)
    }

    /// Same plane with the normal flipped so that `c >= 0`, breaking ties
    /// toward `b >= 0`, then `a > 0`. Angle extraction assumes this form.
    pub fn canonicalized(&self) -> PlaneCoefficients {
        let flip = if self.c != 0.0 {
            self.c < 0.0
        } else if self.b != 0.0 {
            self.b < 0.0
        } else {
            self.a < 0.0
        };
        if flip {
            PlaneCoefficients {
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            }
        } else {
            *self
        }
    }
}

/// Fracture plane orientation, degrees. `strike` in `[0, 180)`, `dip` in `[0, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StrikeDip {
    pub strike_deg: f64,
    pub dip_deg: f64,
}

/// Fits a plane through three points.
///
/// The triple is rejected as degenerate when the cross product of the two
/// edge vectors is shorter than [`DEGENERATE_TRIPLE_REL_TOL`] times the
/// product of the edge lengths.
pub fn plane_from_points(p1: Vec3, p2: Vec3, p3: Vec3) -> Result<PlaneCoefficients, GeometryError> {
    let e1 = p2 - p1;
    let e2 = p3 - p1;
    let n = e1.cross(&e2);
    if n.norm() < DEGENERATE_TRIPLE_REL_TOL * e1.norm() * e2.norm() || n.norm() == 0.0 {
        return Err(GeometryError::DegenerateTriple);
    }
    Ok(PlaneCoefficients {
        a: n.x,
        b: n.y,
        c: n.z,
        d: n.dot(&p1),
    })
}

/// Extracts strike and dip angles from plane coefficients.
///
/// The plane is canonicalized first, so any positive or negative scaling of
/// the coefficients maps to the same angles. Horizontal planes return
/// (0, 0), planes with `a = 0` strike at 90 degrees, and planes with
/// `c = 0` dip at 90 degrees.
pub fn strike_dip_from_plane(plane: &PlaneCoefficients) -> StrikeDip {
    let p = plane.canonicalized();
    let (a, b, c) = (p.a, p.b, p.c);

    let strike_deg = if a == 0.0 && b == 0.0 {
        0.0
    } else if a == 0.0 {
        90.0
    } else {
        let s = (-b / a).atan().to_degrees();
        let folded = if s < 0.0 { 180.0 - s.abs() } else { s + 0.0 };
        // A tiny negative s folds to a value that rounds to 180 exactly;
        // strike is 180-periodic, so wrap it back to 0.
        if folded >= 180.0 {
            0.0
        } else {
            folded
        }
    };

    let dip_deg = if a == 0.0 && b == 0.0 {
        0.0
    } else if c == 0.0 {
        90.0
    } else {
        let acute = ((a * a + b * b).sqrt() / c.abs()).atan().to_degrees();
        if -c * a > 0.0 {
            180.0 - acute
        } else {
            acute
        }
    };

    StrikeDip { strike_deg, dip_deg }
}

/// Builds a unit normal whose extracted angles reproduce `sd`.
///
/// Inverse of [`strike_dip_from_plane`] on its canonical range; exact
/// horizontal planes (dip 0 or 180) both map to +z.
pub fn normal_from_strike_dip(sd: StrikeDip) -> Vec3 {
    let strike = sd.strike_deg.to_radians();
    let dip = sd.dip_deg;
    // Magnitudes come from the acute dip; the branch only flips signs.
    let acute = if dip > 90.0 { 180.0 - dip } else { dip };
    let (h, c) = (acute.to_radians().sin(), acute.to_radians().cos());
    if h == 0.0 {
        return Vec3::new(0.0, 0.0, 1.0);
    }
    let (sin_s, cos_s) = (strike.sin(), strike.cos());
    let (mut a, mut b) = if cos_s == 0.0 {
        (0.0, h)
    } else {
        (h * cos_s.abs(), -h * sin_s * cos_s.signum())
    };
    if dip > 90.0 {
        a = -a;
        b = -b;
    }
    Vec3::new(a, b, c)
}

/// Planar elliptical fracture before domain truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticalFracture {
    pub center: Vec3,
    pub unit_normal: Vec3,
    /// Semi-minor axis, meters.
    pub minor_radius: f64,
    /// Semi-major over semi-minor, `>= 1`.
    pub aspect_ratio: f64,
    /// Number of polygon vertices used to approximate the ellipse boundary.
    pub n_vertices: usize,
}

impl EllipticalFracture {
    pub fn new(
        center: Vec3,
        normal: Vec3,
        minor_radius: f64,
        aspect_ratio: f64,
        n_vertices: usize,
    ) -> Result<Self, GeometryError> {
        if !(minor_radius > 0.0) {
            return Err(GeometryError::NonPositiveLength(minor_radius));
        }
        if !(aspect_ratio >= 1.0) {
            return Err(GeometryError::InvalidAspectRatio(aspect_ratio));
        }
        if n_vertices < 8 {
            return Err(GeometryError::TooFewVertices(n_vertices));
        }
        let norm = normal.norm();
        if !(norm > 0.0) {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(EllipticalFracture {
            center,
            unit_normal: normal / norm,
            minor_radius,
            aspect_ratio,
            n_vertices,
        })
    }

    pub fn major_radius(&self) -> f64 {
        self.aspect_ratio * self.minor_radius
    }

    pub fn strike_dip(&self) -> StrikeDip {
        strike_dip_from_plane(&PlaneCoefficients {
            a: self.unit_normal.x,
            b: self.unit_normal.y,
            c: self.unit_normal.z,
            d: self.unit_normal.dot(&self.center),
        })
    }

    /// In-plane orthonormal frame `(u, v)`: `u` points along the strike
    /// direction (major axis), `v = n x u`, so `u -> v` is counterclockwise
    /// about the normal.
    pub fn plane_frame(&self) -> (Vec3, Vec3) {
        let sd = self.strike_dip();
        let s = sd.strike_deg.to_radians();
        let strike_dir = Vec3::new(s.sin(), s.cos(), 0.0);
        let n = self.unit_normal;
        let u = (strike_dir - n * strike_dir.dot(&n)).normalize();
        let v = n.cross(&u);
        (u, v)
    }
}

/// Polygon vertices on the ellipse boundary, counterclockwise about the
/// fracture normal, with the major axis along the in-plane strike direction.
pub fn fracture_polygon(f: &EllipticalFracture) -> Vec<Vec3> {
    let (u, v) = f.plane_frame();
    let (rmaj, rmin) = (f.major_radius(), f.minor_radius);
    (0..f.n_vertices)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / f.n_vertices as f64;
            f.center + u * (rmaj * t.cos()) + v * (rmin * t.sin())
        })
        .collect()
}

/// Axis-aligned box, used as the flow domain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AxisBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl AxisBox {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self, GeometryError> {
        if (0..3).any(|i| !(min[i] < max[i])) {
            return Err(GeometryError::EmptyBox);
        }
        Ok(AxisBox { min, max })
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }
}

/// Clips a convex planar polygon against the box, one half-space at a time.
/// Returns an empty vector when the polygon lies entirely outside.
pub fn clip_polygon_to_box(polygon: &[Vec3], bbox: &AxisBox) -> Vec<Vec3> {
    let mut poly: Vec<Vec3> = polygon.to_vec();
    for axis in 0..3 {
        for (bound, keep_below) in [(bbox.max[axis], true), (bbox.min[axis], false)] {
            if poly.is_empty() {
                return poly;
            }
            poly = clip_half_space(&poly, axis, bound, keep_below);
        }
    }
    poly
}

/// Keeps the part of `poly` with `p[axis] <= bound` (or `>=` when
/// `keep_below` is false).
fn clip_half_space(poly: &[Vec3], axis: usize, bound: f64, keep_below: bool) -> Vec<Vec3> {
    let signed = |p: &Vec3| {
        if keep_below {
            bound - p[axis]
        } else {
            p[axis] - bound
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (dc, dn) = (signed(&cur), signed(&next));
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push(cur + (next - cur) * t);
        }
    }
    dedup_ring(&mut out);
    out
}

/// Removes consecutive duplicate vertices (clipping artifacts).
fn dedup_ring(poly: &mut Vec<Vec3>) {
    if poly.len() < 2 {
        return;
    }
    let scale: f64 = poly.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut keep: Vec<Vec3> = Vec::with_capacity(poly.len());
    for p in poly.iter() {
        if keep.last().is_none_or(|q: &Vec3| (p - q).norm() > tol) {
            keep.push(*p);
        }
    }
    while keep.len() >= 2 && (keep[0] - *keep.last().unwrap()).norm() <= tol {
        keep.pop();
    }
    *poly = keep;
}

/// Area of a planar polygon embedded in 3-D.
pub fn polygon_area(poly: &[Vec3]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = Vec3::zeros();
    for i in 0..poly.len() {
        s += poly[i].cross(&poly[(i + 1) % poly.len()]);
    }
    0.5 * s.norm()
}

/// Area centroid of a planar polygon (vertex mean for degenerate inputs).
pub fn polygon_centroid(poly: &[Vec3]) -> Vec3 {
    let vertex_mean = poly.iter().sum::<Vec3>() / poly.len().max(1) as f64;
    if poly.len() < 3 {
        return vertex_mean;
    }
    let mut weighted = Vec3::zeros();
    let mut total = 0.0;
    for i in 1..poly.len() - 1 {
        let (a, b, c) = (poly[0], poly[i], poly[i + 1]);
        let area2 = (b - a).cross(&(c - a)).norm();
        weighted += (a + b + c) / 3.0 * area2;
        total += area2;
    }
    if total == 0.0 {
        vertex_mean
    } else {
        weighted / total
    }
}

/// Unit normal of a planar polygon via Newell's method, oriented with the
/// winding order (counterclockwise winding yields the +normal side).
pub fn polygon_normal(poly: &[Vec3]) -> Option<Vec3> {
    if poly.len() < 3 {
        return None;
    }
    let c = polygon_centroid(poly);
    let mut n = Vec3::zeros();
    for i in 0..poly.len() {
        let p = poly[i] - c;
        let q = poly[(i + 1) % poly.len()] - c;
        n += p.cross(&q);
    }
    let norm = n.norm();
    if norm > 0.0 {
        Some(n / norm)
    } else {
        None
    }
}

/// Whether `point` lies inside (or on the boundary of) a convex planar
/// polygon, tested in the polygon's plane. Winding order may be either way.
pub fn point_in_convex_polygon(poly: &[Vec3], point: &Vec3) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let Some(normal) = polygon_normal(poly) else {
        return false;
    };
    let scale = poly.iter().map(|p| (p - point).norm()).fold(0.0f64, f64::max);
    let eps = 1e-9 * scale * scale;
    let mut saw_pos = false;
    let mut saw_neg = false;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let s = (b - a).cross(&(point - a)).dot(&normal);
        if s > eps {
            saw_pos = true;
        } else if s < -eps {
            saw_neg = true;
        }
        if saw_pos && saw_neg {
            return false;
        }
    }
    true
}

/// Intersection segment of two convex planar polygons' planes, clipped to
/// both polygons. `None` when the planes are parallel (coplanar included)
/// or the clipped segment is empty or degenerate.
pub fn plane_intersection_segment(poly_a: &[Vec3], poly_b: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let na = polygon_normal(poly_a)?;
    let nb = polygon_normal(poly_b)?;
    let da = na.dot(&polygon_centroid(poly_a));
    let db = nb.dot(&polygon_centroid(poly_b));

    let dir = na.cross(&nb);
    if dir.norm() < 1e-12 {
        return None;
    }
    // Point on both planes: closed-form solution of the 2x2 system.
    let p0 = (nb.cross(&dir) * da + dir.cross(&na) * db) / dir.norm_squared();
    let dir = dir.normalize();

    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for poly in [poly_a, poly_b] {
        let (lo, hi) = clip_line_to_convex_polygon(&p0, &dir, poly)?;
        t_lo = t_lo.max(lo);
        t_hi = t_hi.min(hi);
    }
    if t_hi - t_lo <= MIN_SEGMENT_LENGTH {
        return None;
    }
    Some((p0 + dir * t_lo, p0 + dir * t_hi))
}

/// Clips the line `p0 + t*dir` (already lying in the polygon's plane) to a
/// convex polygon, returning the feasible parameter interval.
fn clip_line_to_convex_polygon(p0: &Vec3, dir: &Vec3, poly: &[Vec3]) -> Option<(f64, f64)> {
    let n = polygon_normal(poly)?;
    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..poly.len() {
        let a = poly[i];
        let e = poly[(i + 1) % poly.len()] - a;
        if e.norm() == 0.0 {
            continue;
        }
        let inward = n.cross(&e);
        let alpha = inward.dot(&(p0 - a));
        let beta = inward.dot(dir);
        if beta.abs() < 1e-14 * inward.norm() {
            if alpha < 0.0 {
                return None;
            }
            continue;
        }
        let t = -alpha / beta;
        if beta > 0.0 {
            t_lo = t_lo.max(t);
        } else {
            t_hi = t_hi.min(t);
        }
    }
    if t_lo > t_hi {
        None
    } else {
        Some((t_lo, t_hi))
    }
}
