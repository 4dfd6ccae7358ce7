//! Lattès maps attached to four branch points: cross-ratios, the ultrametric equilibrium
//! segment, the Legendre form, and complex 2-power torsion images.

use std::fmt;

use num_complex::{Complex, Complex64};
use num_traits::{Float, One, Zero};
use serde::{Deserialize, Serialize};

use crate::energy_ua::SegmentMeasure;
use crate::error::{Error, Result};
use crate::places::{self, padic_valuation, Place};
use crate::quartic::poly_roots;
use crate::tree::{path_length, segment_between, Segment, TreePoint};
use crate::Rational;

/// A point of the rational projective line.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProjPoint {
    Finite(Rational),
    Infinity,
}

impl ProjPoint {
    pub fn int(n: i64) -> Self {
        ProjPoint::Finite(Rational::from_integer(n.into()))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ProjPoint::Finite(x) => Some(x),
            ProjPoint::Infinity => None,
        }
    }

    /// Homogeneous coordinates `(x, y)` with `y in {0, 1}`.
    pub fn homogeneous(&self) -> (Rational, Rational) {
        match self {
            ProjPoint::Finite(x) => (x.clone(), Rational::one()),
            ProjPoint::Infinity => (Rational::one(), Rational::zero()),
        }
    }

    pub fn from_homogeneous(x: Rational, y: Rational) -> Self {
        if y.is_zero() {
            ProjPoint::Infinity
        } else {
            ProjPoint::Finite(x / y)
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "∞" | "infinity" => Ok(ProjPoint::Infinity),
            t => places::parse_rational(t).map(ProjPoint::Finite),
        }
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjPoint::Finite(x) => f.write_str(&places::format_rational(x)),
            ProjPoint::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProjPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ProjPoint::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Four distinct points of the projective line.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Quadruple {
    points: [ProjPoint; 4],
}

impl Quadruple {
    pub fn new(points: [ProjPoint; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::DegenerateQuadruple);
                }
            }
        }
        Ok(Quadruple { points })
    }

    pub fn parse(items: &[&str]) -> Result<Self> {
        if items.len() != 4 {
            return Err(Error::Parse("a quadruple needs four points".into()));
        }
        let pts: Vec<ProjPoint> = items.iter().map(|s| ProjPoint::parse(s)).collect::<Result<_>>()?;
        Self::new([pts[0].clone(), pts[1].clone(), pts[2].clone(), pts[3].clone()])
    }

    pub fn points(&self) -> &[ProjPoint; 4] {
        &self.points
    }

    pub fn permuted(&self, order: [usize; 4]) -> Quadruple {
        Quadruple { points: order.map(|i| self.points[i].clone()) }
    }

    pub fn contains_finite(&self, u: &Rational) -> bool {
        self.points.iter().any(|p| p.finite() == Some(u))
    }

    /// Every finite coordinate and every difference of two finite coordinates.
    pub fn rational_data(&self) -> Vec<Rational> {
        let fin: Vec<&Rational> = self.points.iter().filter_map(|p| p.finite()).collect();
        let mut out: Vec<Rational> = fin.iter().map(|x| (*x).clone()).collect();
        for i in 0..fin.len() {
            for j in 0..i {
                out.push(fin[i] - fin[j]);
            }
        }
        out
    }
}

fn det(p: &(Rational, Rational), q: &(Rational, Rational)) -> Rational {
    &p.0 * &q.1 - &q.0 * &p.1
}

/// `(g3 - g1)(g4 - g2) / ((g3 - g2)(g4 - g1))`, with infinity handled projectively.
pub fn cross_ratio(g1: &ProjPoint, g2: &ProjPoint, g3: &ProjPoint, g4: &ProjPoint) -> Result<Rational> {
    let q = Quadruple::new([g1.clone(), g2.clone(), g3.clone(), g4.clone()])?;
    Ok(quadruple_cross_ratio(&q))
}

pub fn quadruple_cross_ratio(q: &Quadruple) -> Rational {
    let h: Vec<_> = q.points.iter().map(|p| p.homogeneous()).collect();
    det(&h[2], &h[0]) * det(&h[3], &h[1]) / (det(&h[2], &h[1]) * det(&h[3], &h[0]))
}

/// The six values taken by the cross-ratio under permutations.
pub fn cross_ratio_orbit(beta: &Rational) -> [Rational; 6] {
    let one = Rational::one();
    let b = beta.clone();
    [b.clone(), b.recip(), &one - &b, (&one - &b).recip(), &b / (&b - &one), (&b - &one) / &b]
}

/// Projective linear map `t -> (a t + b) / (c t + d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mobius {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl Mobius {
    pub fn identity() -> Self {
        Mobius { a: Rational::one(), b: Rational::zero(), c: Rational::zero(), d: Rational::one() }
    }

    pub fn det(&self) -> Rational {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn apply_homogeneous(&self, x: &Rational, y: &Rational) -> (Rational, Rational) {
        (&self.a * x + &self.b * y, &self.c * x + &self.d * y)
    }

    pub fn apply(&self, p: &ProjPoint) -> ProjPoint {
        let (x, y) = p.homogeneous();
        let (u, w) = self.apply_homogeneous(&x, &y);
        ProjPoint::from_homogeneous(u, w)
    }

    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d.clone(), b: -self.b.clone(), c: -self.c.clone(), d: self.a.clone() }
    }

    /// Action on homogeneous complex coordinates.
    pub fn apply_complex(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        let f = places::rational_to_f64;
        (x * f(&self.a) + y * f(&self.b), x * f(&self.c) + y * f(&self.d))
    }
}

/// Legendre parameter, never 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LegendreParam {
    lambda: Rational,
}

impl LegendreParam {
    pub fn new(lambda: Rational) -> Result<Self> {
        if lambda.is_zero() || lambda.is_one() {
            return Err(Error::BadLegendreParameter);
        }
        Ok(LegendreParam { lambda })
    }

    pub fn from_int(n: i64) -> Result<Self> {
        Self::new(Rational::from_integer(n.into()))
    }

    pub fn value(&self) -> &Rational {
        &self.lambda
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(places::rational_to_f64(&self.lambda), 0.0)
    }

    /// The branch points `(inf, 0, 1, lambda)`.
    pub fn quadruple(&self) -> Quadruple {
        Quadruple {
            points: [ProjPoint::Infinity, ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Finite(self.lambda.clone())],
        }
    }
}

/// Möbius map sending the first three points to `inf, 0, 1`, and the parameter `lambda`
/// that the fourth point is sent to.
pub fn normalize_to_legendre(q: &Quadruple) -> Result<(LegendreParam, Mobius)> {
    let h: Vec<_> = q.points.iter().map(|p| p.homogeneous()).collect();
    let d31 = det(&h[2], &h[0]);
    let d32 = det(&h[2], &h[1]);
    let (x1, y1) = &h[0];
    let (x2, y2) = &h[1];
    let m = Mobius { a: y2 * &d31, b: -(x2 * &d31), c: y1 * &d32, d: -(x1 * &d32) };
    let lambda = quadruple_cross_ratio(q);
    Ok((LegendreParam::new(lambda)?, m))
}

/// `L(t) = (t^2 - lambda)^2 / (4 t (t - 1)(t - lambda))`, exact on the rational projective line.
pub fn legendre_lattes_eval(lambda: &LegendreParam, t: &ProjPoint) -> ProjPoint {
    let l = &lambda.lambda;
    match t {
        ProjPoint::Infinity => ProjPoint::Infinity,
        ProjPoint::Finite(t) => {
            let num = {
                let s = t * t - l;
                &s * &s
            };
            let den = Rational::from_integer(4.into()) * t * (t - Rational::one()) * (t - l);
            ProjPoint::from_homogeneous(num, den)
        }
    }
}

/// Complex evaluation; `None` stands for infinity.
pub fn legendre_lattes_complex<T: Float>(lambda: Complex<T>, t: Option<Complex<T>>) -> Option<Complex<T>> {
    let t = t?;
    let one = Complex::new(T::one(), T::zero());
    let four = T::from(4.0).unwrap();
    let s = t * t - lambda;
    let den = t * (t - one) * (t - lambda) * four;
    if den.norm_sqr() == T::zero() {
        return None;
    }
    Some(s * s / den)
}

fn median(x: &ProjPoint, y: &ProjPoint, z: &ProjPoint, v: &Place) -> TreePoint {
    let fin: Vec<&Rational> = [x, y, z].iter().filter_map(|p| p.finite()).collect();
    if fin.len() == 2 {
        let r = places::log_abs(&(fin[0] - fin[1]), v);
        return TreePoint::new(fin[0].clone(), r);
    }
    let pairs = [(fin[0], fin[1]), (fin[0], fin[2]), (fin[1], fin[2])];
    let (mut best, mut best_r) = (fin[0], f64::INFINITY);
    for (a, b) in pairs {
        let r = places::log_abs(&(a - b), v);
        if r < best_r {
            best = a;
            best_r = r;
        }
    }
    TreePoint::new(best.clone(), best_r)
}

/// Segment carrying the equilibrium measure of the Lattès map with these branch points.
pub fn lattes_segment(q: &Quadruple, v: &Place) -> Result<Segment> {
    v.require_finite()?;
    let p = &q.points;
    let meds: Vec<TreePoint> = (0..4)
        .map(|k| {
            let others: Vec<&ProjPoint> = (0..4).filter(|&i| i != k).map(|i| &p[i]).collect();
            median(others[0], others[1], others[2], v)
        })
        .collect();
    let (mut best, mut far) = ((0, 0), -1.0);
    for i in 0..4 {
        for j in i + 1..4 {
            let d = path_length(&meds[i], &meds[j], v)?;
            if d > far {
                far = d;
                best = (i, j);
            }
        }
    }
    segment_between(&meds[best.0], &meds[best.1], v)
}

/// Segment length in units of `epsilon * ln p`, from the cross-ratio orbit.
pub fn lattes_length_units(q: &Quadruple, p: u64) -> i64 {
    cross_ratio_orbit(&quadruple_cross_ratio(q))
        .iter()
        .filter_map(|b| padic_valuation(b, p).finite())
        .map(|k| -k)
        .max()
        .unwrap_or(0)
}

/// Length of the equilibrium segment via the largest cross-ratio.
pub fn lattes_segment_length(q: &Quadruple, v: &Place) -> Result<f64> {
    let p = v.require_finite()?;
    Ok(lattes_length_units(q, p) as f64 * v.log_unit().unwrap_or(0.0))
}

/// Normalized Lebesgue measure on the equilibrium segment (Dirac when it is a point).
pub fn equilibrium_measure_ua(q: &Quadruple, v: &Place) -> Result<SegmentMeasure> {
    if v.require_finite()? == 2 {
        return Err(Error::ResidueCharTwo);
    }
    lattes_segment(q, v).map(SegmentMeasure::new)
}

/// A point of the complex projective line. Serialized as `[re, im]` or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CPoint {
    Finite(Complex64),
    Infinity,
}

impl Serialize for CPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CPoint::Finite(z) => [z.re + 0.0, z.im + 0.0].serialize(s),
            CPoint::Infinity => s.serialize_str("inf"),
        }
    }
}

impl CPoint {
    pub fn finite(&self) -> Option<Complex64> {
        match self {
            CPoint::Finite(z) => Some(*z),
            CPoint::Infinity => None,
        }
    }

    pub fn close_to(&self, other: &CPoint, tol: f64) -> bool {
        match (self, other) {
            (CPoint::Infinity, CPoint::Infinity) => true,
            (CPoint::Finite(a), CPoint::Finite(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }

    pub fn from_option(z: Option<Complex64>) -> Self {
        z.map_or(CPoint::Infinity, CPoint::Finite)
    }
}

/// Complex Lattès map on the projective line.
pub fn lattes_map_point(lambda: Complex64, t: CPoint) -> CPoint {
    CPoint::from_option(legendre_lattes_complex(lambda, t.finite()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Base {
    Zero,
    One,
    Lambda,
    Inf,
}

fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - c * 4.0).sqrt();
    let q = if (b.conj() * disc).re >= 0.0 { (b + disc) * -0.5 } else { (b - disc) * -0.5 };
    if q.norm() == 0.0 {
        return [Complex64::zero(), Complex64::zero()];
    }
    [q, c / q]
}

fn preimages_tagged(lambda: Complex64, w: CPoint, tag: Option<Base>) -> Result<Vec<(CPoint, Option<Base>)>> {
    let one = Complex64::one();
    let doubled = |r: [Complex64; 2]| r.iter().chain(r.iter()).map(|z| (CPoint::Finite(*z), None)).collect::<Vec<_>>();
    Ok(match tag {
        Some(Base::Inf) => vec![
            (CPoint::Finite(Complex64::zero()), Some(Base::Zero)),
            (CPoint::Finite(one), Some(Base::One)),
            (CPoint::Finite(lambda), Some(Base::Lambda)),
            (CPoint::Infinity, Some(Base::Inf)),
        ],
        Some(Base::Zero) => doubled(quadratic_roots(Complex64::zero(), -lambda)),
        Some(Base::One) => doubled(quadratic_roots(-one * 2.0, lambda)),
        Some(Base::Lambda) => doubled(quadratic_roots(-lambda * 2.0, lambda)),
        None => lattes_preimages(lambda, w)?.iter().map(|p| (*p, None)).collect(),
    })
}

/// The four preimages of `w`, with multiplicity.
pub fn lattes_preimages(lambda: Complex64, w: CPoint) -> Result<[CPoint; 4]> {
    let w = match w {
        CPoint::Infinity => {
            return Ok([
                CPoint::Finite(Complex64::zero()),
                CPoint::Finite(Complex64::one()),
                CPoint::Finite(lambda),
                CPoint::Infinity,
            ])
        }
        CPoint::Finite(w) => w,
    };
    let coeffs =
        [lambda * lambda, -w * lambda * 4.0, w * (lambda + 1.0) * 4.0 - lambda * 2.0, -w * 4.0, Complex64::one()];
    let r = poly_roots(&coeffs)?;
    Ok([CPoint::Finite(r[0]), CPoint::Finite(r[1]), CPoint::Finite(r[2]), CPoint::Finite(r[3])])
}

/// Largest supported torsion level.
pub const MAX_TORSION_LEVEL: u32 = 5;

/// Iterated preimages of the branch points under the Lattès map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsionImages {
    pub level: u32,
    /// Distinct points, sorted by rounded real then imaginary part; infinity last.
    pub points: Vec<CPoint>,
    /// Number of preimages counted with multiplicity.
    pub with_multiplicity: usize,
}

fn sort_key(p: &CPoint, tol: f64) -> (bool, i64, i64) {
    match p {
        CPoint::Infinity => (true, 0, 0),
        CPoint::Finite(z) => (false, (z.re / tol).round() as i64, (z.im / tol).round() as i64),
    }
}

fn dedup(mut items: Vec<(CPoint, Option<Base>)>, tol: f64) -> Vec<(CPoint, Option<Base>)> {
    let mut kept_inf: Option<(CPoint, Option<Base>)> = None;
    items.sort_by(|a, b| {
        let ra = a.0.finite().map_or(f64::INFINITY, |z| z.re);
        let rb = b.0.finite().map_or(f64::INFINITY, |z| z.re);
        ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut kept: Vec<(Complex64, Option<Base>)> = Vec::new();
    for (p, tag) in items {
        let z = match p {
            CPoint::Infinity => {
                kept_inf = Some((p, kept_inf.and_then(|k| k.1).or(tag)));
                continue;
            }
            CPoint::Finite(z) => z,
        };
        let mut merged = false;
        for k in kept.iter_mut().rev() {
            if k.0.re < z.re - tol {
                break;
            }
            if (k.0 - z).norm() <= tol {
                if k.1.is_none() && tag.is_some() {
                    *k = (z, tag);
                }
                merged = true;
                break;
            }
        }
        if !merged {
            kept.push((z, tag));
        }
    }
    let mut out: Vec<_> = kept.into_iter().map(|(z, t)| (CPoint::Finite(z), t)).collect();
    out.extend(kept_inf);
    out
}

/// Points `t` with `L^level(t)` in `{0, 1, lambda, inf}`, deduplicated at `tol`.
pub fn torsion_images_complex(lambda: Complex64, level: u32, tol: f64) -> Result<TorsionImages> {
    if level > MAX_TORSION_LEVEL {
        return Err(Error::LevelTooLarge { level, cap: MAX_TORSION_LEVEL });
    }
    let mut current = vec![
        (CPoint::Finite(Complex64::zero()), Some(Base::Zero)),
        (CPoint::Finite(Complex64::one()), Some(Base::One)),
        (CPoint::Finite(lambda), Some(Base::Lambda)),
        (CPoint::Infinity, Some(Base::Inf)),
    ];
    let mut with_multiplicity = 4;
    for _ in 0..level {
        let mut next = Vec::with_capacity(current.len() * 4);
        for (w, tag) in &current {
            next.extend(preimages_tagged(lambda, *w, *tag)?);
        }
        with_multiplicity = next.len();
        current = dedup(next, tol);
    }
    let mut points: Vec<CPoint> = current.into_iter().map(|(p, _)| p).collect();
    points.sort_by_key(|p| sort_key(p, tol));
    Ok(TorsionImages { level, points, with_multiplicity })
}

pub fn torsion_images(lambda: &LegendreParam, level: u32, tol: f64) -> Result<TorsionImages> {
    torsion_images_complex(lambda.to_complex(), level, tol)
}

/// Torsion images for arbitrary branch points, pulled back through the normalizing map.
pub fn torsion_images_quadruple(q: &Quadruple, level: u32, tol: f64) -> Result<TorsionImages> {
    let (lambda, m) = normalize_to_legendre(q)?;
    let base = torsion_images(&lambda, level, tol)?;
    let inv = m.inverse();
    let mut points: Vec<CPoint> = base
        .points
        .iter()
        .map(|p| {
            let (x, y) = match p {
                CPoint::Finite(z) => (*z, Complex64::one()),
                CPoint::Infinity => (Complex64::one(), Complex64::zero()),
            };
            let (u, w) = inv.apply_complex(x, y);
            if w.norm() <= 1e-300 * u.norm().max(1.0) {
                CPoint::Infinity
            } else {
                CPoint::Finite(u / w)
            }
        })
        .collect();
    points.sort_by_key(|p| sort_key(p, tol));
    Ok(TorsionImages { points, ..base })
}
