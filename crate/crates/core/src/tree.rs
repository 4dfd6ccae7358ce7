//! Points, kernel, geodesics and pair configurations on the Berkovich line over a finite place.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::places::{self, log_abs, Place};
use crate::Rational;

/// Coordinate chart of a tree point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// Coordinate `t`.
    Direct,
    /// Coordinate `u = 1/t`.
    Inverted,
}

/// The point `eta(center, exp(log_radius))` in the given chart; type 1 when `log_radius = -inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePoint {
    pub chart: Chart,
    pub center: Rational,
    pub log_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct TreePointRepr {
    chart: Chart,
    center: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    type1: bool,
}

impl Serialize for TreePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let type1 = self.is_type1();
        TreePointRepr {
            chart: self.chart,
            center: places::format_rational(&self.center),
            log_radius: (!type1).then_some(self.log_radius),
            type1,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TreePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TreePointRepr::deserialize(d)?;
        let center = places::parse_rational(&r.center).map_err(serde::de::Error::custom)?;
        let log_radius = match (r.type1, r.log_radius) {
            (true, _) => f64::NEG_INFINITY,
            (false, Some(x)) => x,
            (false, None) => return Err(serde::de::Error::missing_field("log_radius")),
        };
        Ok(TreePoint { chart: r.chart, center, log_radius })
    }
}

impl TreePoint {
    pub fn new(center: Rational, log_radius: f64) -> Self {
        TreePoint { chart: Chart::Direct, center, log_radius }
    }

    pub fn from_int(center: i64, log_radius: f64) -> Self {
        Self::new(Rational::from_integer(center.into()), log_radius)
    }

    pub fn classical(center: Rational) -> Self {
        Self::new(center, f64::NEG_INFINITY)
    }

    /// The Gauss point `eta(0, 1)`.
    pub fn gauss() -> Self {
        Self::new(Rational::zero(), 0.0)
    }

    pub fn inverted(center: Rational, log_radius: f64) -> Self {
        TreePoint { chart: Chart::Inverted, center, log_radius }
    }

    /// The classical point at infinity.
    pub fn infinity() -> Self {
        Self::inverted(Rational::zero(), f64::NEG_INFINITY)
    }

    pub fn is_type1(&self) -> bool {
        self.log_radius == f64::NEG_INFINITY
    }

    /// Rewrites the point in the direct chart.
    pub fn to_direct(&self, v: &Place) -> Result<TreePoint> {
        match self.chart {
            Chart::Direct => Ok(self.clone()),
            Chart::Inverted => {
                let la = log_abs(&self.center, v);
                if self.log_radius < la {
                    let c = self.center.recip();
                    Ok(TreePoint::new(c, self.log_radius - 2.0 * la))
                } else if self.log_radius == f64::NEG_INFINITY {
                    Err(Error::ChartMismatch)
                } else {
                    Ok(TreePoint::new(Rational::zero(), -self.log_radius))
                }
            }
        }
    }

    /// Image under `t -> 1/t`, in the direct chart.
    pub fn invert(&self, v: &Place) -> Result<TreePoint> {
        let d = self.to_direct(v)?;
        TreePoint { chart: Chart::Inverted, ..d }.to_direct(v)
    }

    /// Image under `t -> t + c`.
    pub fn translate(&self, c: &Rational, v: &Place) -> Result<TreePoint> {
        let d = self.to_direct(v)?;
        Ok(TreePoint::new(&d.center + c, d.log_radius))
    }

    /// Image under `t -> c t` for nonzero `c`.
    pub fn scale(&self, c: &Rational, v: &Place) -> Result<TreePoint> {
        if c.is_zero() {
            return Err(Error::ZeroInput);
        }
        let d = self.to_direct(v)?;
        Ok(TreePoint::new(&d.center * c, d.log_radius + log_abs(c, v)))
    }
}

fn direct_pair(x: &TreePoint, y: &TreePoint, v: &Place) -> Result<(TreePoint, TreePoint)> {
    v.require_finite()?;
    Ok((x.to_direct(v)?, y.to_direct(v)?))
}

fn kernel_direct(x: &TreePoint, y: &TreePoint, v: &Place) -> f64 {
    x.log_radius.max(y.log_radius).max(log_abs(&(&x.center - &y.center), v))
}

/// Log of the Hsia kernel, `log max(r, s, |a - b|_v)`.
pub fn hsia_log_kernel(x: &TreePoint, y: &TreePoint, v: &Place) -> Result<f64> {
    let (x, y) = direct_pair(x, y, v)?;
    Ok(kernel_direct(&x, &y, v))
}

/// Smallest point above both arguments.
pub fn join(x: &TreePoint, y: &TreePoint, v: &Place) -> Result<TreePoint> {
    let (x, y) = direct_pair(x, y, v)?;
    let k = kernel_direct(&x, &y, v);
    Ok(TreePoint::new(x.center, k))
}

/// Tree distance between two type-2/3 points.
pub fn path_length(x: &TreePoint, y: &TreePoint, v: &Place) -> Result<f64> {
    let (x, y) = direct_pair(x, y, v)?;
    if x.is_type1() || y.is_type1() {
        return Err(Error::Type1Endpoint);
    }
    let k = kernel_direct(&x, &y, v);
    Ok((k - x.log_radius) + (k - y.log_radius))
}

/// Whether two representations denote the same point.
pub fn same_point(x: &TreePoint, y: &TreePoint, v: &Place, tol: f64) -> Result<bool> {
    let (x, y) = direct_pair(x, y, v)?;
    if x.is_type1() || y.is_type1() {
        return Ok(x.is_type1() && y.is_type1() && x.center == y.center);
    }
    let k = kernel_direct(&x, &y, v);
    Ok((k - x.log_radius).abs() <= tol && (k - y.log_radius).abs() <= tol)
}

/// One vertical piece of a geodesic: the points `eta(center, exp(t))`, `lo <= t <= hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub center: Rational,
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Geodesic between two type-2/3 points, stored in the direct chart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    start: TreePoint,
    end: TreePoint,
    #[serde(skip)]
    top: f64,
    length: f64,
    #[serde(skip)]
    place: Place,
}

/// Geodesic from `x` to `y`.
pub fn segment_between(x: &TreePoint, y: &TreePoint, v: &Place) -> Result<Segment> {
    let (x, y) = direct_pair(x, y, v)?;
    if x.is_type1() || y.is_type1() {
        return Err(Error::Type1Endpoint);
    }
    let top = kernel_direct(&x, &y, v);
    let length = (top - x.log_radius) + (top - y.log_radius);
    Ok(Segment { start: x, end: y, top, length, place: *v })
}

impl Segment {
    pub fn singleton(x: &TreePoint, v: &Place) -> Result<Segment> {
        segment_between(x, x, v)
    }

    pub fn start(&self) -> &TreePoint {
        &self.start
    }

    pub fn end(&self) -> &TreePoint {
        &self.end
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn place(&self) -> &Place {
        &self.place
    }

    pub fn is_singleton(&self) -> bool {
        self.length == 0.0
    }

    /// Log radius of the highest point.
    pub fn top(&self) -> f64 {
        self.top
    }

    /// The two ascending arcs, from `start` and from `end` up to the top.
    pub fn arcs(&self) -> [Arc; 2] {
        [
            Arc { center: self.start.center.clone(), lo: self.start.log_radius, hi: self.top },
            Arc { center: self.end.center.clone(), lo: self.end.log_radius, hi: self.top },
        ]
    }

    /// Point at arc length `t` from `start`, clamped to the segment.
    pub fn point_at(&self, t: f64) -> TreePoint {
        let t = t.clamp(0.0, self.length);
        let rise = self.top - self.start.log_radius;
        if t <= rise {
            TreePoint::new(self.start.center.clone(), self.start.log_radius + t)
        } else {
            TreePoint::new(self.end.center.clone(), self.top - (t - rise))
        }
    }

    pub fn reversed(&self) -> Segment {
        Segment { start: self.end.clone(), end: self.start.clone(), ..self.clone() }
    }

    /// Same segment up to orientation.
    pub fn same_as(&self, other: &Segment, tol: f64) -> Result<bool> {
        let v = &self.place;
        let fwd = same_point(&self.start, &other.start, v, tol)? && same_point(&self.end, &other.end, v, tol)?;
        let bwd = same_point(&self.start, &other.end, v, tol)? && same_point(&self.end, &other.start, v, tol)?;
        Ok(fwd || bwd)
    }

    /// Position along `self` of the closest point to `z`, and the distance to it.
    pub fn project(&self, z: &TreePoint) -> Result<(f64, f64)> {
        let v = &self.place;
        let d0 = path_length(&self.start, z, v)?;
        let d1 = path_length(&self.end, z, v)?;
        let pos = ((d0 + self.length - d1) / 2.0).clamp(0.0, self.length);
        let dist = ((d0 + d1 - self.length) / 2.0).max(0.0);
        Ok((pos, dist))
    }
}

/// Relative position of two segments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "variant")]
pub enum PairConfiguration {
    /// At most one common point. Each segment is split at the point facing the other;
    /// the first piece is the one containing the segment's start.
    Disjoint { a_pieces: (f64, f64), b_pieces: (f64, f64), gap: f64 },
    /// Overlap of positive length. `a_pieces.0` and `b_pieces.0` hang off the same end of the overlap.
    Meeting { shared: f64, a_pieces: (f64, f64), b_pieces: (f64, f64) },
}

impl PairConfiguration {
    pub fn lengths(&self) -> (f64, f64) {
        match *self {
            PairConfiguration::Disjoint { a_pieces, b_pieces, .. } => {
                (a_pieces.0 + a_pieces.1, b_pieces.0 + b_pieces.1)
            }
            PairConfiguration::Meeting { shared, a_pieces, b_pieces } => {
                (shared + a_pieces.0 + a_pieces.1, shared + b_pieces.0 + b_pieces.1)
            }
        }
    }
}

fn check_places(a: &Segment, b: &Segment) -> Result<Place> {
    if a.place != b.place {
        return Err(Error::PlaceMismatch);
    }
    Ok(a.place)
}

fn overlap_tol(a: &Segment, b: &Segment) -> f64 {
    1e-12 * (1.0 + a.length + b.length)
}

/// Classifies two segments over the same place.
pub fn classify_pair(ia: &Segment, ib: &Segment) -> Result<PairConfiguration> {
    check_places(ia, ib)?;
    let (la, lb) = (ia.length, ib.length);
    let (p0, _) = ia.project(&ib.start)?;
    let (p1, _) = ia.project(&ib.end)?;
    let (s0, _) = ib.project(&ia.start)?;
    let (s1, _) = ib.project(&ia.end)?;
    let (lo, hi) = (p0.min(p1), p0.max(p1));
    if hi - lo > overlap_tol(ia, ib) {
        let shared = hi - lo;
        let a_first = lo;
        let a_second = (la - shared - a_first).max(0.0);
        let b_first = if s0 <= s1 { s0 } else { lb - s0 };
        let b_first = b_first.clamp(0.0, (lb - shared).max(0.0));
        let b_second = (lb - shared - b_first).max(0.0);
        Ok(PairConfiguration::Meeting { shared, a_pieces: (a_first, a_second), b_pieces: (b_first, b_second) })
    } else {
        let p = (p0 + p1) / 2.0;
        let s = (s0 + s1) / 2.0;
        let v = ia.place;
        let gap = path_length(&ia.point_at(p), &ib.point_at(s), &v)?;
        Ok(PairConfiguration::Disjoint { a_pieces: (p, la - p), b_pieces: (s, lb - s), gap })
    }
}

/// Common part of two segments, if any.
pub fn intersection(ia: &Segment, ib: &Segment) -> Result<Option<Segment>> {
    let v = check_places(ia, ib)?;
    let (p0, _) = ia.project(&ib.start)?;
    let (p1, _) = ia.project(&ib.end)?;
    let tol = overlap_tol(ia, ib);
    let (lo, hi) = (p0.min(p1), p0.max(p1));
    if hi - lo > tol {
        return segment_between(&ia.point_at(lo), &ia.point_at(hi), &v).map(Some);
    }
    let p = (p0 + p1) / 2.0;
    let z = ia.point_at(p);
    let (_, dist) = ib.project(&z)?;
    if dist <= tol {
        Segment::singleton(&z, &v).map(Some)
    } else {
        Ok(None)
    }
}

/// Length in units of `epsilon * ln p`, when it is an integer multiple up to `1e-9`.
pub fn length_units(length: f64, v: &Place) -> Option<i64> {
    let unit = v.log_unit()?;
    let k = (length / unit).round();
    ((length / unit - k).abs() <= 1e-9).then_some(k as i64)
}
