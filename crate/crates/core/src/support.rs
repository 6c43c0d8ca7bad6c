//! Support sets of log-concave functions: intervals and half-lines on the
//! line, convex polygons in the plane, plus the whole-space tags, with
//! support functions, radial functions and the Gauss map.

use crate::error::{CoreError, Result};
use crate::ext::{Ext, INF};

/// Closed convex support set K_f.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportSet {
    /// Bounded interval [lo, hi] (n = 1). lo == hi is a degenerate point.
    Interval { lo: f64, hi: f64 },
    /// Half-infinite interval; `towards_plus_infinity` tells which side is
    /// unbounded (n = 1).
    HalfLine { anchor: f64, towards_plus_infinity: bool },
    /// The whole line (n = 1).
    Line,
    /// Convex polygon, vertices in counterclockwise order (n = 2).
    Polygon(Vec<[f64; 2]>),
    /// The whole plane (n = 2).
    Plane,
}

impl SupportSet {
    /// Validating polygon constructor: distinct vertices, CCW orientation,
    /// convex corners (cross products >= 0).
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<SupportSet> {
        if vertices.len() < 3 {
            return Err(CoreError::InvalidSpec("polygon needs at least 3 vertices".into()));
        }
        let m = vertices.len();
        for i in 0..m {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            if (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14 {
                return Err(CoreError::InvalidSpec("repeated polygon vertex".into()));
            }
            let c = vertices[(i + 2) % m];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross < -1e-12 {
                return Err(CoreError::InvalidSpec(
                    "polygon is not convex in CCW order".into(),
                ));
            }
        }
        Ok(SupportSet::Polygon(vertices))
    }

    /// Axis-aligned rectangle as a polygon.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<SupportSet> {
        SupportSet::polygon(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn dim(&self) -> usize {
        match self {
            SupportSet::Interval { .. } | SupportSet::HalfLine { .. } | SupportSet::Line => 1,
            SupportSet::Polygon(_) | SupportSet::Plane => 2,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, SupportSet::Interval { .. } | SupportSet::Polygon(_))
    }

    /// Lebesgue measure (length or area); +inf for unbounded sets.
    pub fn measure(&self) -> Ext {
        match self {
            SupportSet::Interval { lo, hi } => Ext::finite(hi - lo),
            SupportSet::Polygon(v) => Ext::finite(polygon_area(v)),
            _ => INF,
        }
    }

    /// h_K(u) = sup over K of <x, u> for a unit direction u.
    pub fn support_function(&self, u: &[f64]) -> Result<Ext> {
        check_unit(u, self.dim())?;
        Ok(match self {
            SupportSet::Interval { lo, hi } => Ext::finite((lo * u[0]).max(hi * u[0])),
            SupportSet::HalfLine { anchor, towards_plus_infinity } => {
                let unbounded = (u[0] > 0.0) == *towards_plus_infinity && u[0] != 0.0;
                if unbounded {
                    INF
                } else {
                    Ext::finite(anchor * u[0])
                }
            }
            SupportSet::Line => INF,
            SupportSet::Polygon(v) => Ext::finite(
                v.iter()
                    .map(|p| p[0] * u[0] + p[1] * u[1])
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
            SupportSet::Plane => INF,
        })
    }

    /// Support function evaluated at a general (not necessarily unit) vector,
    /// using positive homogeneity. h_K(0) = 0 for nonempty K.
    pub fn support_function_vec(&self, y: &[f64]) -> Ext {
        let dim = self.dim();
        let norm = if dim == 1 { y[0].abs() } else { (y[0] * y[0] + y[1] * y[1]).sqrt() };
        if norm == 0.0 {
            return Ext::finite(0.0);
        }
        let u = if dim == 1 { vec![y[0] / norm] } else { vec![y[0] / norm, y[1] / norm] };
        self.support_function(&u).expect("unit by construction").scale(norm)
    }

    /// rho_K(u) = sup { t > 0 : t u in K }. Requires the origin strictly
    /// inside K; +inf along directions where K is unbounded.
    pub fn radial_function(&self, u: &[f64]) -> Result<Ext> {
        check_unit(u, self.dim())?;
        if !self.origin_interior() {
            return Err(CoreError::OriginNotInterior);
        }
        Ok(match self {
            SupportSet::Interval { lo, hi } => {
                if u[0] > 0.0 {
                    Ext::finite(*hi)
                } else {
                    Ext::finite(-lo)
                }
            }
            SupportSet::HalfLine { anchor, towards_plus_infinity } => {
                let unbounded = (u[0] > 0.0) == *towards_plus_infinity;
                if unbounded {
                    INF
                } else {
                    Ext::finite(anchor.abs())
                }
            }
            SupportSet::Line | SupportSet::Plane => INF,
            SupportSet::Polygon(v) => Ext::finite(polygon_ray_exit(v, u)),
        })
    }

    /// Whether the origin lies in the interior of K.
    pub fn origin_interior(&self) -> bool {
        match self {
            SupportSet::Interval { lo, hi } => *lo < 0.0 && *hi > 0.0,
            SupportSet::HalfLine { anchor, towards_plus_infinity } => {
                if *towards_plus_infinity {
                    *anchor < 0.0
                } else {
                    *anchor > 0.0
                }
            }
            SupportSet::Line | SupportSet::Plane => true,
            SupportSet::Polygon(v) => point_strictly_inside(v, &[0.0, 0.0]),
        }
    }

    /// An interior point (used to translate data whose support misses the
    /// origin); None for empty-interior sets.
    pub fn interior_point(&self) -> Option<Vec<f64>> {
        match self {
            SupportSet::Interval { lo, hi } => {
                if lo < hi {
                    Some(vec![(lo + hi) / 2.0])
                } else {
                    None
                }
            }
            SupportSet::HalfLine { anchor, towards_plus_infinity } => Some(vec![if *towards_plus_infinity {
                anchor + 1.0
            } else {
                anchor - 1.0
            }]),
            SupportSet::Line => Some(vec![0.0]),
            SupportSet::Plane => Some(vec![0.0, 0.0]),
            SupportSet::Polygon(v) => {
                if polygon_area(v) <= 0.0 {
                    return None;
                }
                let m = v.len() as f64;
                let cx = v.iter().map(|p| p[0]).sum::<f64>() / m;
                let cy = v.iter().map(|p| p[1]).sum::<f64>() / m;
                Some(vec![cx, cy])
            }
        }
    }

    /// Translated set K - shift.
    pub fn translated(&self, shift: &[f64]) -> SupportSet {
        match self {
            SupportSet::Interval { lo, hi } => {
                SupportSet::Interval { lo: lo - shift[0], hi: hi - shift[0] }
            }
            SupportSet::HalfLine { anchor, towards_plus_infinity } => SupportSet::HalfLine {
                anchor: anchor - shift[0],
                towards_plus_infinity: *towards_plus_infinity,
            },
            SupportSet::Line => SupportSet::Line,
            SupportSet::Plane => SupportSet::Plane,
            SupportSet::Polygon(v) => SupportSet::Polygon(
                v.iter().map(|p| [p[0] - shift[0], p[1] - shift[1]]).collect(),
            ),
        }
    }

    /// Scaled set K / c for c > 0 (the support of x -> f(cx)).
    pub fn scaled(&self, c: f64) -> SupportSet {
        assert!(c > 0.0);
        match self {
            SupportSet::Interval { lo, hi } => SupportSet::Interval { lo: lo / c, hi: hi / c },
            SupportSet::HalfLine { anchor, towards_plus_infinity } => SupportSet::HalfLine {
                anchor: anchor / c,
                towards_plus_infinity: *towards_plus_infinity,
            },
            SupportSet::Line => SupportSet::Line,
            SupportSet::Plane => SupportSet::Plane,
            SupportSet::Polygon(v) => {
                SupportSet::Polygon(v.iter().map(|p| [p[0] / c, p[1] / c]).collect())
            }
        }
    }

    /// Minkowski sum K + t L of two bounded sets of equal dimension.
    pub fn minkowski_sum(&self, other: &SupportSet, t: f64) -> Result<SupportSet> {
        if self.dim() != other.dim() {
            return Err(CoreError::SpecMismatch("support set dims differ".into()));
        }
        match (self, other) {
            (SupportSet::Interval { lo: a, hi: b }, SupportSet::Interval { lo: c, hi: d }) => {
                Ok(SupportSet::Interval { lo: a + t * c, hi: b + t * d })
            }
            (SupportSet::Polygon(p), SupportSet::Polygon(q)) => {
                let mut pts = Vec::with_capacity(p.len() * q.len());
                for a in p {
                    for b in q {
                        pts.push([a[0] + t * b[0], a[1] + t * b[1]]);
                    }
                }
                let hull = convex_hull(&mut pts);
                SupportSet::polygon(hull)
            }
            _ => Err(CoreError::UnboundedBody),
        }
    }

    /// Largest |x| over K; +inf for unbounded sets.
    pub fn circumradius(&self) -> Ext {
        match self {
            SupportSet::Interval { lo, hi } => Ext::finite(lo.abs().max(hi.abs())),
            SupportSet::Polygon(v) => Ext::finite(
                v.iter().map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt()).fold(0.0, f64::max),
            ),
            _ => INF,
        }
    }

    /// Boundary elements for surface integrals: points with outward unit
    /// normals and, for polygon edges, the edge length. 1-D supports yield
    /// their finite endpoints (weight 1); unbounded sets yield nothing for
    /// the unbounded part.
    pub fn boundary_elements(&self) -> Vec<BoundaryElement> {
        match self {
            SupportSet::Interval { lo, hi } => vec![
                BoundaryElement { point: [*lo, 0.0], normal: [-1.0, 0.0], length: 1.0 },
                BoundaryElement { point: [*hi, 0.0], normal: [1.0, 0.0], length: 1.0 },
            ],
            SupportSet::HalfLine { anchor, towards_plus_infinity } => {
                let n = if *towards_plus_infinity { -1.0 } else { 1.0 };
                vec![BoundaryElement { point: [*anchor, 0.0], normal: [n, 0.0], length: 1.0 }]
            }
            SupportSet::Line | SupportSet::Plane => Vec::new(),
            SupportSet::Polygon(v) => {
                let m = v.len();
                (0..m)
                    .map(|i| {
                        let a = v[i];
                        let b = v[(i + 1) % m];
                        let e = [b[0] - a[0], b[1] - a[1]];
                        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                        // CCW orientation: outward normal is the edge rotated -90
                        // degrees; adding 0.0 clears negative zeros
                        BoundaryElement {
                            point: [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0],
                            normal: [e[1] / len + 0.0, -e[0] / len + 0.0],
                            length: len,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Area of the intersection with an axis-aligned rectangle; used for
    /// support-clipped quadrature weights. 1-D sets return clipped length.
    pub fn clipped_cell_measure(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            SupportSet::Interval { lo: a, hi: b } => (hi[0].min(*b) - lo[0].max(*a)).max(0.0),
            SupportSet::HalfLine { anchor, towards_plus_infinity } => {
                if *towards_plus_infinity {
                    (hi[0] - lo[0].max(*anchor)).max(0.0)
                } else {
                    (hi[0].min(*anchor) - lo[0]).max(0.0)
                }
            }
            SupportSet::Line => hi[0] - lo[0],
            SupportSet::Plane => (hi[0] - lo[0]) * (hi[1] - lo[1]),
            SupportSet::Polygon(v) => {
                let rect = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
                let clipped = clip_polygon(&rect, v);
                polygon_area(&clipped)
            }
        }
    }

    /// Whether a point lies in the closed set.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            SupportSet::Interval { lo, hi } => p[0] >= *lo - 1e-12 && p[0] <= *hi + 1e-12,
            SupportSet::HalfLine { anchor, towards_plus_infinity } => {
                if *towards_plus_infinity {
                    p[0] >= *anchor - 1e-12
                } else {
                    p[0] <= *anchor + 1e-12
                }
            }
            SupportSet::Line | SupportSet::Plane => true,
            SupportSet::Polygon(v) => {
                let m = v.len();
                (0..m).all(|i| {
                    let a = v[i];
                    let b = v[(i + 1) % m];
                    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12
                })
            }
        }
    }
}

/// One boundary quadrature element: a point on the boundary, the outward
/// unit normal there, and the attached length (1 for 1-D endpoints).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryElement {
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

fn check_unit(u: &[f64], dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(CoreError::SpecMismatch("direction dim mismatch".into()));
    }
    let norm = if dim == 1 { u[0].abs() } else { (u[0] * u[0] + u[1] * u[1]).sqrt() };
    if (norm - 1.0).abs() > 1e-12 {
        return Err(CoreError::NonUnitDirection(norm));
    }
    Ok(())
}

/// Shoelace area of a CCW polygon.
pub fn polygon_area(v: &[[f64; 2]]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let m = v.len();
    let mut s = 0.0;
    for i in 0..m {
        let a = v[i];
        let b = v[(i + 1) % m];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s / 2.0
}

fn point_strictly_inside(v: &[[f64; 2]], p: &[f64; 2]) -> bool {
    let m = v.len();
    (0..m).all(|i| {
        let a = v[i];
        let b = v[(i + 1) % m];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) > 1e-12
    })
}

/// Exit parameter of the ray t * u from the origin through a convex polygon
/// containing the origin strictly inside.
fn polygon_ray_exit(v: &[[f64; 2]], u: &[f64]) -> f64 {
    let m = v.len();
    let mut best = f64::INFINITY;
    for i in 0..m {
        let a = v[i];
        let b = v[(i + 1) % m];
        // edge halfplane: <x, n> <= <a, n> with outward normal n
        let e = [b[0] - a[0], b[1] - a[1]];
        let n = [e[1], -e[0]];
        let denom = u[0] * n[0] + u[1] * n[1];
        if denom > 1e-15 {
            let t = (a[0] * n[0] + a[1] * n[1]) / denom;
            if t > 0.0 {
                best = best.min(t);
            }
        }
    }
    best
}

/// Monotone-chain convex hull (CCW, no repeated points).
pub fn convex_hull(points: &mut Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    points.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    let n = points.len();
    if n < 3 {
        return points.clone();
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for p in points.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-14 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in points.iter().rev() {
        while hull.len() >= lower_len
            && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-14
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Sutherland-Hodgman clip of a subject polygon against a convex CCW clip
/// polygon.
pub fn clip_polygon(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            return out;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let inside = |p: &[f64; 2]| {
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-14
        };
        let input = std::mem::take(&mut out);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let cur_in = inside(&cur);
            let prev_in = inside(&prev);
            if cur_in != prev_in {
                // intersection of segment prev-cur with the clip line
                let d = [cur[0] - prev[0], cur[1] - prev[1]];
                let n = [b[1] - a[1], -(b[0] - a[0])];
                let denom = d[0] * n[0] + d[1] * n[1];
                if denom.abs() > 1e-18 {
                    let t = ((a[0] - prev[0]) * n[0] + (a[1] - prev[1]) * n[1]) / denom;
                    out.push([prev[0] + t * d[0], prev[1] + t * d[1]]);
                }
            }
            if cur_in {
                out.push(cur);
            }
        }
    }
    out
}
