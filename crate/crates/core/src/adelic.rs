//! Global pairings over Q assembled from local ones, heights, and numerical scans.

use std::collections::BTreeSet;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy_arch::{circle_pair_closed, circle_pair_jensen, sample_lattes_complex};
use crate::energy_ua::{
    energy_closed_form, kernel_energy, kernel_pairing, local_discrepancy, ArcMeasure, SegmentMeasure,
};
use crate::error::{Error, Result};
use crate::green::LattesDynamics;
use crate::lattes::{lattes_segment, torsion_images_quadruple, CPoint, ProjPoint, Quadruple};
use crate::places::{self, log_abs, projective_height, submax, support_places, Place, PlaceKind};
use crate::tree::TreePoint;
use crate::Rational;

/// Branch data `(a1, a2, a3, inf)` and `(b1, b2, b3, 0)` of two Lattès maps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PairConfig {
    #[serde(serialize_with = "ser_rationals")]
    pub a: [Rational; 3],
    #[serde(serialize_with = "ser_rationals")]
    pub b: [Rational; 3],
}

fn ser_rationals<S: serde::Serializer>(xs: &[Rational; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(3))?;
    for x in xs {
        seq.serialize_element(&places::format_rational(x))?;
    }
    seq.end()
}

impl PairConfig {
    pub fn new(a: [Rational; 3], b: [Rational; 3]) -> Result<Self> {
        let distinct = |x: &[Rational; 3]| x[0] != x[1] && x[0] != x[2] && x[1] != x[2];
        let nonzero = a.iter().chain(b.iter()).all(|x| !x.is_zero());
        if !(nonzero && distinct(&a) && distinct(&b)) {
            return Err(Error::DegenerateConfig);
        }
        Ok(PairConfig { a, b })
    }

    pub fn parse(a: &[&str], b: &[&str]) -> Result<Self> {
        let read = |xs: &[&str]| -> Result<[Rational; 3]> {
            if xs.len() != 3 {
                return Err(Error::Parse("expected three entries".into()));
            }
            Ok([places::parse_rational(xs[0])?, places::parse_rational(xs[1])?, places::parse_rational(xs[2])?])
        };
        Self::new(read(a)?, read(b)?)
    }

    pub fn quad_a(&self) -> Quadruple {
        let [x, y, z] = self.a.clone();
        Quadruple::new([ProjPoint::Finite(x), ProjPoint::Finite(y), ProjPoint::Finite(z), ProjPoint::Infinity])
            .expect("validated")
    }

    pub fn quad_b(&self) -> Quadruple {
        let [x, y, z] = self.b.clone();
        Quadruple::new([ProjPoint::Finite(x), ProjPoint::Finite(y), ProjPoint::Finite(z), ProjPoint::int(0)])
            .expect("validated")
    }

    /// `(a1, a2, a3, b1, b2, b3)`.
    pub fn entries(&self) -> Vec<Rational> {
        self.a.iter().chain(self.b.iter()).cloned().collect()
    }

    pub fn scaled(&self, s: &Rational) -> Result<Self> {
        Self::new(self.a.clone().map(|x| x * s), self.b.clone().map(|x| x * s))
    }
}

fn with_two_and_infinity(mut finite: Vec<Place>) -> Vec<Place> {
    let two = Place::finite(2).expect("prime");
    if !finite.contains(&two) {
        finite.push(two);
    }
    finite.sort_by_key(|p| p.prime());
    let mut out = vec![Place::archimedean()];
    out.extend(finite);
    out
}

/// The archimedean place, 2, and every prime of an entry or of a difference on one side.
pub fn relevant_places(cfg: &PairConfig) -> Result<Vec<Place>> {
    let mut data = cfg.quad_a().rational_data();
    data.extend(cfg.quad_b().rational_data());
    Ok(with_two_and_infinity(support_places(&data)?))
}

/// `h([a1 : a2 : a3 : b1 : b2 : b3])`.
pub fn h_ab(cfg: &PairConfig) -> f64 {
    projective_height(&cfg.entries()).unwrap_or(0.0)
}

/// Finite set of rationals with per-place radii (1 where unspecified).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteSet {
    #[serde(skip)]
    points: Vec<Rational>,
    radii: Vec<(PlaceKind, f64)>,
}

impl FiniteSet {
    pub fn new(points: Vec<Rational>) -> Result<Self> {
        let mut pts = points;
        pts.sort();
        pts.dedup();
        if pts.is_empty() {
            return Err(Error::EmptyF);
        }
        Ok(FiniteSet { points: pts, radii: Vec::new() })
    }

    pub fn with_radius(mut self, v: &Place, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::BadRadii);
        }
        self.radii.retain(|(k, _)| *k != v.kind());
        self.radii.push((v.kind(), r));
        Ok(self)
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn radius(&self, v: &Place) -> f64 {
        self.radii.iter().find(|(k, _)| *k == v.kind()).map_or(1.0, |x| x.1)
    }

    fn data(&self) -> Vec<Rational> {
        let mut out = self.points.clone();
        for i in 0..self.points.len() {
            for j in 0..i {
                out.push(&self.points[i] - &self.points[j]);
            }
        }
        out
    }

    fn radius_places(&self) -> Vec<Place> {
        self.radii
            .iter()
            .filter(|(_, r)| *r != 1.0)
            .filter_map(|(k, _)| match k {
                PlaceKind::Finite { p } => Place::finite(*p).ok(),
                _ => None,
            })
            .collect()
    }
}

/// An adelic probability measure of one of the supported shapes.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum MeasureFamily {
    /// Gauss point at every finite place, unit circle at infinity.
    Standard,
    /// Equilibrium measure of the Lattès map with these branch points.
    Lattes(Quadruple),
    /// Average of the disk points of radius `r_v` around each element.
    Smoothed(FiniteSet),
}

impl MeasureFamily {
    fn bad_places(&self) -> Result<Vec<Place>> {
        match self {
            MeasureFamily::Standard => Ok(Vec::new()),
            MeasureFamily::Lattes(q) => support_places(&q.rational_data()),
            MeasureFamily::Smoothed(f) => {
                let mut out = support_places(&f.data())?;
                out.extend(f.radius_places());
                Ok(out)
            }
        }
    }

    fn same_measure(&self, other: &MeasureFamily) -> bool {
        match (self, other) {
            (MeasureFamily::Lattes(a), MeasureFamily::Lattes(b)) => {
                let sa: BTreeSet<String> = a.points().iter().map(|p| p.to_string()).collect();
                let sb: BTreeSet<String> = b.points().iter().map(|p| p.to_string()).collect();
                sa == sb
            }
            _ => self == other,
        }
    }
}

/// Controls for archimedean estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArchOptions {
    pub samples: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub batches: usize,
    /// Tolerance multiplier applied to the Monte Carlo standard error.
    pub sigmas: f64,
}

impl Default for ArchOptions {
    fn default() -> Self {
        ArchOptions { samples: 8000, seed: 7, burn_in: 200, batches: 20, sigmas: 4.0 }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn arc_measure(f: &MeasureFamily, v: &Place) -> Result<ArcMeasure> {
    match f {
        MeasureFamily::Standard => ArcMeasure::atom(&TreePoint::gauss(), v),
        MeasureFamily::Lattes(q) => Ok(ArcMeasure::from_segment(&lattes_segment(q, v)?)),
        MeasureFamily::Smoothed(set) => {
            let lr = set.radius(v).ln() * v.epsilon();
            let w = 1.0 / set.points.len() as f64;
            let items: Vec<(f64, ArcMeasure)> = set
                .points
                .iter()
                .map(|x| Ok((w, ArcMeasure::atom(&TreePoint::new(x.clone(), lr), v)?)))
                .collect::<Result<_>>()?;
            Ok(ArcMeasure::mixture(&items))
        }
    }
}

/// Local energy at an odd finite place, exact.
pub fn local_family_energy(f1: &MeasureFamily, f2: &MeasureFamily, v: &Place) -> Result<f64> {
    if v.require_finite()? == 2 {
        return Err(Error::ResidueCharTwo);
    }
    if f1.same_measure(f2) {
        return Ok(0.0);
    }
    if let (MeasureFamily::Lattes(a), MeasureFamily::Lattes(b)) = (f1, f2) {
        let ia = SegmentMeasure::new(lattes_segment(a, v)?);
        let ib = SegmentMeasure::new(lattes_segment(b, v)?);
        return energy_closed_form(&ia, &ib, v);
    }
    Ok(kernel_energy(&arc_measure(f1, v)?, &arc_measure(f2, v)?, v))
}

/// Archimedean realization of a family.
#[allow(clippy::large_enum_variant)]
enum ArchSide {
    Circles(Vec<(f64, Complex64, f64)>),
    Lattes { dynamics: LattesDynamics, cloud: Vec<Complex64> },
}

fn to_complex(x: &Rational) -> Complex64 {
    Complex64::new(places::rational_to_f64(x), 0.0)
}

fn arch_side(f: &MeasureFamily, opts: &ArchOptions, stream: u64) -> Result<ArchSide> {
    match f {
        MeasureFamily::Standard => Ok(ArchSide::Circles(vec![(1.0, Complex64::new(0.0, 0.0), 1.0)])),
        MeasureFamily::Smoothed(set) => {
            let r = set.radius(&Place::archimedean());
            let w = 1.0 / set.points.len() as f64;
            Ok(ArchSide::Circles(set.points.iter().map(|x| (w, to_complex(x), r)).collect()))
        }
        MeasureFamily::Lattes(q) => {
            let dynamics = LattesDynamics::from_quadruple(q)?;
            let seed = splitmix(opts.seed ^ splitmix(stream));
            let legendre = sample_lattes_complex(dynamics.lambda().to_complex(), opts.samples, seed, opts.burn_in)?;
            let inv = dynamics.frame().inverse();
            let cloud = legendre
                .iter()
                .filter_map(|t| {
                    let (u, w) = inv.apply_complex(*t, Complex64::new(1.0, 0.0));
                    let z = u / w;
                    z.is_finite().then_some(z)
                })
                .collect();
            Ok(ArchSide::Lattes { dynamics, cloud })
        }
    }
}

const CIRCLE_NODES: usize = 2048;

/// Mean of the potential over a circle by the periodic trapezoid rule, with an error estimate.
fn circle_mean_potential(d: &LattesDynamics, c: Complex64, r: f64) -> (f64, f64) {
    let rule = |n: usize| -> f64 {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
                d.potential_arch(CPoint::Finite(c + Complex64::from_polar(r, t)))
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum::<f64>()
            / n as f64
    };
    let coarse = rule(CIRCLE_NODES / 2);
    let fine = rule(CIRCLE_NODES);
    (fine, (fine - coarse).abs() + 1e-12)
}

fn circles_pairing(x: &[(f64, Complex64, f64)], y: &[(f64, Complex64, f64)]) -> Result<(f64, f64)> {
    let mut total = 0.0;
    for (w1, c1, r1) in x {
        for (w2, c2, r2) in y {
            let v = match circle_pair_closed(*c1, *r1, *c2, *r2) {
                Some(v) => v,
                None => circle_pair_jensen(*c1, *r1, *c2, *r2, 1e-10)?,
            };
            total += w1 * w2 * v;
        }
    }
    Ok((total, 1e-8))
}

fn lattes_circles_pairing(d: &LattesDynamics, circles: &[(f64, Complex64, f64)]) -> (f64, f64) {
    circles.iter().fold((0.0, 0.0), |(acc, tol), (w, c, r)| {
        let (m, e) = circle_mean_potential(d, *c, *r);
        (acc + w * m, tol + w * e)
    })
}

/// Monte Carlo estimate of `(mu_A, mu_B)` with its batch-means standard error.
fn lattes_cross(
    da: &LattesDynamics,
    ca: &[Complex64],
    db: &LattesDynamics,
    cb: &[Complex64],
    batches: usize,
) -> (f64, f64) {
    let ua: Vec<f64> = cb.par_iter().map(|z| da.potential_arch(CPoint::Finite(*z))).collect();
    let ub: Vec<f64> = ca.par_iter().map(|z| db.potential_arch(CPoint::Finite(*z))).collect();
    let k = batches.max(2);
    let means: Vec<f64> = (0..k)
        .map(|i| {
            let chunk = |v: &[f64]| {
                let (lo, hi) = (i * v.len() / k, (i + 1) * v.len() / k);
                v[lo..hi].iter().sum::<f64>() / (hi - lo).max(1) as f64
            };
            0.5 * (chunk(&ua) + chunk(&ub))
        })
        .collect();
    let mean = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// `(s1, s2)` at infinity with an absolute tolerance.
fn arch_pairing(s1: &ArchSide, s2: &ArchSide, opts: &ArchOptions) -> Result<(f64, f64)> {
    match (s1, s2) {
        (ArchSide::Circles(x), ArchSide::Circles(y)) => circles_pairing(x, y),
        (ArchSide::Lattes { dynamics, .. }, ArchSide::Circles(c))
        | (ArchSide::Circles(c), ArchSide::Lattes { dynamics, .. }) => Ok(lattes_circles_pairing(dynamics, c)),
        (ArchSide::Lattes { dynamics: da, cloud: ca }, ArchSide::Lattes { dynamics: db, cloud: cb }) => {
            let (m, se) = lattes_cross(da, ca, db, cb, opts.batches);
            Ok((m, opts.sigmas * se))
        }
    }
}

fn arch_self(s: &ArchSide) -> Result<(f64, f64)> {
    match s {
        ArchSide::Circles(c) => circles_pairing(c, c),
        ArchSide::Lattes { dynamics, .. } => Ok((dynamics.self_pairing(&Place::archimedean())?, 1e-10)),
    }
}

/// Local energy at infinity and its tolerance.
fn arch_energy(f1: &MeasureFamily, f2: &MeasureFamily, opts: &ArchOptions) -> Result<(f64, f64)> {
    if f1.same_measure(f2) {
        return Ok((0.0, 0.0));
    }
    let s1 = arch_side(f1, opts, 1)?;
    let s2 = arch_side(f2, opts, 2)?;
    let (p11, t11) = arch_self(&s1)?;
    let (p22, t22) = arch_self(&s2)?;
    let (p12, t12) = arch_pairing(&s1, &s2, opts)?;
    Ok((0.5 * (p11 + p22) - p12, 0.5 * (t11 + t22) + t12))
}

/// How a place entry was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Exact,
    Estimate,
    /// Residue characteristic 2: no local formula, left out of the total.
    Excluded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlaceEntry {
    pub place: String,
    pub energy: Option<f64>,
    pub tol: f64,
    pub status: EntryStatus,
}

/// Per-place decomposition of a global energy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdelicEnergyReport {
    pub places: Vec<PlaceEntry>,
    pub total: f64,
    pub arch_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_ab: Option<f64>,
}

impl AdelicEnergyReport {
    pub fn finite_total(&self) -> f64 {
        self.places.iter().filter(|e| e.status == EntryStatus::Exact).filter_map(|e| e.energy).sum()
    }

    pub fn arch_energy(&self) -> Option<f64> {
        self.places.iter().find(|e| e.place == "inf").and_then(|e| e.energy)
    }
}

fn assemble(
    places: &[Place],
    f1: &MeasureFamily,
    f2: &MeasureFamily,
    opts: &ArchOptions,
) -> Result<AdelicEnergyReport> {
    let mut entries = Vec::with_capacity(places.len());
    let (mut total, mut arch_tol) = (0.0, 0.0);
    for v in places {
        let entry = match v.prime() {
            None => {
                let (e, t) = arch_energy(f1, f2, opts)?;
                let e = e * v.epsilon();
                arch_tol = t * v.epsilon();
                PlaceEntry { place: v.to_string(), energy: Some(e), tol: arch_tol, status: EntryStatus::Estimate }
            }
            Some(2) => PlaceEntry { place: v.to_string(), energy: None, tol: 0.0, status: EntryStatus::Excluded },
            Some(_) => {
                let e = local_family_energy(f1, f2, v)?;
                PlaceEntry { place: v.to_string(), energy: Some(e), tol: 0.0, status: EntryStatus::Exact }
            }
        };
        total += entry.energy.unwrap_or(0.0);
        entries.push(entry);
    }
    Ok(AdelicEnergyReport { places: entries, total, arch_tol, h_ab: None })
}

fn family_places(f1: &MeasureFamily, f2: &MeasureFamily) -> Result<Vec<Place>> {
    let mut fin = f1.bad_places()?;
    fin.extend(f2.bad_places()?);
    fin.sort_by_key(|p| p.prime());
    fin.dedup();
    Ok(with_two_and_infinity(fin))
}

/// Global energy of two adelic measures over every place except 2.
pub fn family_energy(f1: &MeasureFamily, f2: &MeasureFamily, opts: &ArchOptions) -> Result<AdelicEnergyReport> {
    assemble(&family_places(f1, f2)?, f1, f2, opts)
}

/// Global energy of the two Lattès equilibrium measures of a configuration.
pub fn global_energy(cfg: &PairConfig, opts: &ArchOptions) -> Result<AdelicEnergyReport> {
    let places = relevant_places(cfg)?;
    let (fa, fb) = (MeasureFamily::Lattes(cfg.quad_a()), MeasureFamily::Lattes(cfg.quad_b()));
    let mut report = assemble(&places, &fa, &fb, opts)?;
    report.h_ab = Some(h_ab(cfg));
    Ok(report)
}

/// Local energy of a configuration at a single odd finite place, possibly rescaled.
pub fn local_config_energy(cfg: &PairConfig, v: &Place) -> Result<f64> {
    local_family_energy(&MeasureFamily::Lattes(cfg.quad_a()), &MeasureFamily::Lattes(cfg.quad_b()), v)
}

/// Inputs and outcomes of the explicit-constant height inequalities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub h_ab: f64,
    pub h_f1: f64,
    pub h_f2: f64,
    /// `sum_v max_i |log|u_i / b1|_v|`.
    pub spread: f64,
    /// `61 log 2 + 122 * spread`.
    pub f1_bound: f64,
    pub f1_holds: bool,
    /// `spread <= 7 h_ab`.
    pub spread_holds: bool,
    /// `h_ab <= 81 h_f2`.
    pub f2_holds: bool,
    /// Pairs `u_i = u_j` skipped in the `|u_i/u_j - 1|` term.
    pub coincident_pairs: usize,
    /// `g1` at each odd place of the configuration.
    pub g1: Vec<(String, f64)>,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.f1_holds && self.spread_holds && self.f2_holds
    }
}

fn place_sum(places: &[Place], f: impl Fn(&Place) -> f64) -> f64 {
    places.iter().map(f).sum()
}

fn places_of(data: &[Rational]) -> Result<Vec<Place>> {
    let mut out = vec![Place::archimedean()];
    out.extend(support_places(data)?);
    Ok(out)
}

fn g1_local(cfg: &PairConfig, v: &Place) -> f64 {
    let (a, b) = (&cfg.a, &cfg.b);
    let mut best = f64::NEG_INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                if i == j || j == k || i == k {
                    continue;
                }
                let ra = (&a[i] - &a[j]) / (&a[i] - &a[k]);
                let rb = (&b[j] / &b[k]) * (&b[k] - &b[i]) / (&b[j] - &b[i]);
                best = best.max(log_abs(&ra, v)).max(log_abs(&rb, v));
            }
        }
    }
    best
}

/// Heights attached to a configuration and the explicit inequalities between them.
pub fn inequality_suite(cfg: &PairConfig) -> Result<InequalityReport> {
    let u = cfg.entries();
    let mut data = u.clone();
    for i in 0..6 {
        for j in 0..6 {
            if u[i] != u[j] {
                data.push(&u[i] - &u[j]);
            }
        }
    }
    let f1_places = places_of(&data)?;
    let mut coincident = 0;
    for i in 0..6 {
        for j in 0..6 {
            if i != j && u[i] == u[j] {
                coincident += 1;
            }
        }
    }
    let h_f1 = place_sum(&f1_places, |v| {
        let mut best: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let ratio = &u[i] / &u[j];
                best = best.max(log_abs(&ratio, v).abs());
                let shifted = ratio - Rational::one();
                if !shifted.is_zero() {
                    best = best.max(log_abs(&shifted, v).abs());
                }
            }
        }
        best
    });
    let b1 = &cfg.b[0];
    let normalized: Vec<Rational> = u.iter().map(|x| x / b1).collect();
    let (spread, spread_rhs) = places::abs_log_bound(&normalized)?;
    let hab = h_ab(cfg);
    let f2_places = places_of(&u)?;
    let h_f2 = place_sum(&f2_places, |v| {
        let logs: Vec<f64> = cfg.a.iter().flat_map(|ai| cfg.b.iter().map(move |bj| log_abs(&(ai / bj), v))).collect();
        submax(&logs).unwrap_or(0.0).max(0.0)
    });
    let f1_bound = 61.0 * std::f64::consts::LN_2 + 122.0 * spread;
    let tol = 1e-9 * (1.0 + hab);
    let g1 = relevant_places(cfg)?
        .iter()
        .filter(|v| v.prime().is_some_and(|p| p != 2))
        .map(|v| (v.to_string(), g1_local(cfg, v)))
        .collect();
    Ok(InequalityReport {
        h_ab: hab,
        h_f1,
        h_f2,
        spread,
        f1_bound,
        f1_holds: h_f1 <= f1_bound + tol,
        spread_holds: spread <= spread_rhs + tol && (spread_rhs - 7.0 * hab).abs() <= tol,
        f2_holds: hab <= 81.0 * h_f2 + tol,
        coincident_pairs: coincident,
        g1,
    })
}

/// A height and its local terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightReport {
    pub value: f64,
    pub places: Vec<(String, f64)>,
}

fn off_diagonal_log(points: &[Rational], v: &Place) -> f64 {
    let n = points.len() as f64;
    let mut acc = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i != j {
                acc += log_abs(&(&points[i] - &points[j]), v);
            }
        }
    }
    acc / (n * n)
}

/// `(rho, rho)_v` and `(rho, delta_x)_v` for a standard or Lattès family.
fn point_terms(
    rho: &MeasureFamily,
    dynamics: Option<&LattesDynamics>,
    points: &[Rational],
    v: &Place,
) -> Result<(f64, Vec<f64>)> {
    match (rho, dynamics) {
        (MeasureFamily::Standard, _) => Ok((0.0, points.iter().map(|x| -log_abs(x, v).max(0.0)).collect())),
        (MeasureFamily::Lattes(_), Some(d)) => {
            let selfp = d.self_pairing(v)?;
            let pts = points
                .iter()
                .map(|x| d.point_pairing(&ProjPoint::Finite(x.clone()), v))
                .collect::<Result<Vec<f64>>>()?;
            Ok((selfp, pts))
        }
        _ => Err(Error::DegenerateConfig),
    }
}

/// `h_rho(F) = 1/2 sum_v (rho - [F], rho - [F])_v` with the diagonal of `([F], [F])` removed.
pub fn h_rho_f(rho: &MeasureFamily, f: &FiniteSet) -> Result<HeightReport> {
    let pts = f.points();
    let mut data = f.data();
    let dynamics = match rho {
        MeasureFamily::Lattes(q) => {
            let d = LattesDynamics::from_quadruple(q)?;
            data.extend(d.bad_data());
            for x in pts {
                let (u, w) = d.frame().apply_homogeneous(x, &Rational::one());
                data.push(u);
                data.push(w);
            }
            Some(d)
        }
        MeasureFamily::Standard => None,
        MeasureFamily::Smoothed(_) => return Err(Error::DegenerateConfig),
    };
    let places = places_of(&data)?;
    let n = pts.len() as f64;
    let mut value = 0.0;
    let mut per = Vec::with_capacity(places.len());
    for v in &places {
        let (selfp, point) = point_terms(rho, dynamics.as_ref(), pts, v)?;
        let cross = point.iter().sum::<f64>() / n;
        let local = 0.5 * (selfp - 2.0 * cross - off_diagonal_log(pts, v));
        value += local;
        per.push((v.to_string(), local));
    }
    Ok(HeightReport { value, places: per })
}

/// One place of the smoothed-set bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothedPlaceTerm {
    pub place: String,
    /// `<mu_P, m_{F,r}>_v`.
    pub energy: f64,
    /// Local term of `h_{mu_P}(F)`.
    pub height: f64,
    /// Mean over `x` in `F` of `I(P, x, r_v)`.
    pub discrepancy: f64,
    /// `log(1 / r_v) / (2 #F)`.
    pub radius_term: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Both sides of the bound on `<mu_P, m_{F,r}>`, place by place (place 2 omitted).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothedBoundReport {
    pub terms: Vec<SmoothedPlaceTerm>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates `<mu_P, m_{F,r}> <= h_{mu_P}(F) + sum I + sum log(1/r)/(2 #F)` place by place.
pub fn pair_with_smoothed_set(p: &Quadruple, f: &FiniteSet) -> Result<SmoothedBoundReport> {
    let dynamics = LattesDynamics::from_quadruple(p)?;
    let pts = f.points();
    if pts.iter().any(|x| p.contains_finite(x)) {
        return Err(Error::BranchPointCenter);
    }
    let n = pts.len() as f64;
    let mut data = p.rational_data();
    data.extend(f.data());
    let mut fin = support_places(&data)?;
    fin.extend(f.radius_places());
    fin.sort_by_key(|v| v.prime());
    fin.dedup();
    fin.retain(|v| v.prime() != Some(2));
    let mut places = vec![Place::archimedean()];
    places.extend(fin);
    let mut terms = Vec::new();
    for v in &places {
        let r = f.radius(v);
        let radius_term = (1.0 / r).ln() * v.epsilon() / (2.0 * n);
        let selfp = dynamics.self_pairing(v)?;
        let cross =
            pts.iter().map(|x| dynamics.point_pairing(&ProjPoint::Finite(x.clone()), v)).sum::<Result<f64>>()? / n;
        let height = 0.5 * (selfp - 2.0 * cross - off_diagonal_log(pts, v));
        let (energy, discrepancy, tol) = if v.is_archimedean() {
            let circles: Vec<(f64, Complex64, f64)> = pts.iter().map(|x| (1.0 / n, to_complex(x), r)).collect();
            let (mm, tm) = circles_pairing(&circles, &circles)?;
            let mut mu_m = 0.0;
            let mut disc = 0.0;
            let mut tol = tm;
            for (x, c) in pts.iter().zip(&circles) {
                let (avg, err) = circle_mean_potential(&dynamics, c.1, r);
                let at = dynamics.point_pairing(&ProjPoint::Finite(x.clone()), v)?;
                mu_m += avg / n;
                disc += (at - avg).abs() / n;
                tol += 2.0 * err / n;
            }
            (0.5 * selfp - mu_m + 0.5 * mm, disc, tol + 1e-9)
        } else {
            let mu = arc_measure(&MeasureFamily::Lattes(p.clone()), v)?;
            let m = arc_measure(&MeasureFamily::Smoothed(f.clone()), v)?;
            let energy = 0.5 * selfp - kernel_pairing(&mu, &m, v) + 0.5 * kernel_pairing(&m, &m, v);
            let disc = pts.iter().map(|x| local_discrepancy(p, x, r.powf(v.epsilon()), v)).sum::<Result<f64>>()? / n;
            (energy, disc, 1e-9)
        };
        let rhs = height + discrepancy + radius_term;
        terms.push(SmoothedPlaceTerm {
            place: v.to_string(),
            energy,
            height,
            discrepancy,
            radius_term,
            tol,
            holds: energy <= rhs + tol,
        });
    }
    let lhs = terms.iter().map(|t| t.energy).sum();
    let rhs = terms.iter().map(|t| t.height + t.discrepancy + t.radius_term).sum();
    let holds = terms.iter().all(|t| t.holds);
    Ok(SmoothedBoundReport { terms, lhs, rhs, holds })
}

/// Square-root triangle inequality among three global energies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleReport {
    pub e12: f64,
    pub e13: f64,
    pub e32: f64,
    pub tol12: f64,
    pub tol13: f64,
    pub tol32: f64,
    pub holds: bool,
}

/// Checks `<r1, r2>^(1/2) <= <r1, r3>^(1/2) + <r3, r2>^(1/2)` within the combined tolerance.
pub fn triangle_inequality_check(
    r1: &MeasureFamily,
    r2: &MeasureFamily,
    r3: &MeasureFamily,
    opts: &ArchOptions,
) -> Result<TriangleReport> {
    let e = |x: &MeasureFamily, y: &MeasureFamily| -> Result<(f64, f64)> {
        let r = family_energy(x, y, opts)?;
        Ok((r.total, r.arch_tol + 1e-9))
    };
    let (e12, t12) = e(r1, r2)?;
    let (e13, t13) = e(r1, r3)?;
    let (e32, t32) = e(r3, r2)?;
    let holds = (e12 - t12).max(0.0).sqrt() <= (e13 + t13).max(0.0).sqrt() + (e32 + t32).max(0.0).sqrt();
    Ok(TriangleReport { e12, e13, e32, tol12: t12, tol13: t13, tol32: t32, holds })
}

/// Reduced fractions `n/d` with `0 < |n| <= h` and `1 <= d <= h`.
pub fn fractions_of_height(h: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    for d in 1..=h {
        for n in -h..=h {
            if n != 0 && n.gcd(&d) == 1 {
                out.push(Rational::new(n.into(), d.into()));
            }
        }
    }
    out
}

/// Uniform random configuration with entries from `pool`, resampled until non-degenerate.
pub fn random_config<R: Rng>(rng: &mut R, pool: &[Rational]) -> PairConfig {
    loop {
        let mut pick = || pool[rng.gen_range(0..pool.len())].clone();
        let a = [pick(), pick(), pick()];
        let b = [pick(), pick(), pick()];
        if let Ok(cfg) = PairConfig::new(a, b) {
            return cfg;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Outcome of a scan over random configurations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapScanReport {
    pub count: usize,
    pub min_total: Option<f64>,
    /// Smallest `total - arch_tol`.
    pub min_lower: Option<f64>,
    pub argmin: Option<PairConfig>,
    pub histogram: Vec<HistogramBin>,
    pub totals: Vec<f64>,
}

const BIN_WIDTH: f64 = 0.5;

/// Global energies of `count` random configurations with entries of height at most `height`.
pub fn gap_scan(count: usize, seed: u64, height: i64, opts: &ArchOptions) -> Result<GapScanReport> {
    let pool = fractions_of_height(height.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<PairConfig> = (0..count).map(|_| random_config(&mut rng, &pool)).collect();
    let results: Vec<(f64, f64)> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let o = ArchOptions { seed: splitmix(seed ^ (i as u64)), ..*opts };
            global_energy(cfg, &o).map(|r| (r.total, r.total - r.arch_tol))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if best.is_none_or(|b| r.1 < results[b].1) {
            best = Some(i);
        }
    }
    let mut histogram: Vec<HistogramBin> = Vec::new();
    for (t, _) in &results {
        let k = (t / BIN_WIDTH).floor().max(0.0) as usize;
        while histogram.len() <= k {
            let lo = histogram.len() as f64 * BIN_WIDTH;
            histogram.push(HistogramBin { lo, hi: lo + BIN_WIDTH, count: 0 });
        }
        histogram[k].count += 1;
    }
    Ok(GapScanReport {
        count,
        min_total: best.map(|b| results[b].0),
        min_lower: best.map(|b| results[b].1),
        argmin: best.map(|b| configs[b].clone()),
        histogram,
        totals: results.iter().map(|r| r.0).collect(),
    })
}

/// Common torsion images of two Lattès maps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BftReport {
    pub level: u32,
    pub count: usize,
    pub matched: Vec<CPoint>,
    pub size_a: usize,
    pub size_b: usize,
    /// Smallest distance between distinct finite points within each set.
    pub min_gap_a: f64,
    pub min_gap_b: f64,
}

fn min_gap(points: &[CPoint]) -> f64 {
    let fin: Vec<Complex64> = points.iter().filter_map(|p| p.finite()).collect();
    let mut best = f64::INFINITY;
    for i in 0..fin.len() {
        for j in 0..i {
            best = best.min((fin[i] - fin[j]).norm());
        }
    }
    best
}

/// Points of the level-`level` torsion image of `qa` within `tol` of one for `qb`.
pub fn bft_scan(qa: &Quadruple, qb: &Quadruple, level: u32, tol: f64) -> Result<BftReport> {
    let ta = torsion_images_quadruple(qa, level, tol)?;
    let tb = torsion_images_quadruple(qb, level, tol)?;
    let matched: Vec<CPoint> =
        ta.points.iter().filter(|p| tb.points.iter().any(|q| p.close_to(q, tol))).copied().collect();
    Ok(BftReport {
        level,
        count: matched.len(),
        matched,
        size_a: ta.points.len(),
        size_b: tb.points.len(),
        min_gap_a: min_gap(&ta.points),
        min_gap_b: min_gap(&tb.points),
    })
}
