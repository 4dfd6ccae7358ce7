//! Mutual energies of measures carried by segments of the Berkovich line over a finite place.
//!
//! Lengths are in natural-log units scaled by the place exponent. The energy of two
//! probability measures is `<m, n> = 1/2 (m - n, m - n)` with `(m, n) = -iint log kernel`.

use num_traits::Float;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattes::{lattes_segment, Quadruple};
use crate::places::{log_abs, Place};
use crate::tree::{
    classify_pair, hsia_log_kernel, path_length, segment_between, Arc, PairConfiguration, Segment, TreePoint,
};
use crate::Rational;

fn split_term<F: Float>(x: F, y: F) -> F {
    let s = x + y;
    if s == F::zero() {
        F::zero()
    } else {
        x * y / s
    }
}

fn c<F: Float>(x: f64) -> F {
    F::from(x).expect("float constant")
}

/// Energy of two segments meeting in at most one point.
pub fn disjoint_energy<F: Float>(a_pieces: (F, F), b_pieces: (F, F), gap: F) -> F {
    let la = a_pieces.0 + a_pieces.1;
    let lb = b_pieces.0 + b_pieces.1;
    la / c(6.0) + lb / c(6.0) + gap / c(2.0)
        - split_term(a_pieces.0, a_pieces.1) / c(2.0)
        - split_term(b_pieces.0, b_pieces.1) / c(2.0)
}

/// Energy of two segments overlapping along a piece of length `shared > 0`.
pub fn meeting_energy<F: Float>(shared: F, a_pieces: (F, F), b_pieces: (F, F)) -> F {
    let la = shared + a_pieces.0 + a_pieces.1;
    let lb = shared + b_pieces.0 + b_pieces.1;
    let prod = la * lb;
    la / c(6.0) + lb / c(6.0) - shared / c(2.0) + shared * shared * shared / (c::<F>(6.0) * prod)
        - a_pieces.0 * a_pieces.1 / (c::<F>(2.0) * la)
        - b_pieces.0 * b_pieces.1 / (c::<F>(2.0) * lb)
        - (a_pieces.0 * b_pieces.0 + a_pieces.1 * b_pieces.1) * shared / (c::<F>(2.0) * prod)
}

/// Two segments on one ray, facing each other across a gap.
pub fn aligned_energy<F: Float>(la: F, lb: F, gap: F) -> F {
    la / c(6.0) + lb / c(6.0) + gap / c(2.0)
}

/// A segment of length `inner` inside a segment cut by it into `outer_pieces`.
pub fn nested_energy<F: Float>(inner: F, outer_pieces: (F, F)) -> F {
    let lb = inner + outer_pieces.0 + outer_pieces.1;
    lb / c(6.0) - inner / c(3.0) + inner * inner / (c::<F>(6.0) * lb)
        - outer_pieces.0 * outer_pieces.1 / (c::<F>(2.0) * lb)
}

/// Energy read off a pair configuration.
pub fn configuration_energy(cfg: &PairConfiguration) -> f64 {
    match *cfg {
        PairConfiguration::Disjoint { a_pieces, b_pieces, gap } => disjoint_energy(a_pieces, b_pieces, gap),
        PairConfiguration::Meeting { shared, a_pieces, b_pieces } => meeting_energy(shared, a_pieces, b_pieces),
    }
}

/// Normalized Lebesgue measure on a segment, or a Dirac mass on a singleton.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentMeasure {
    pub support: Segment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MeasureKind {
    Dirac,
    Lebesgue,
}

impl SegmentMeasure {
    pub fn new(support: Segment) -> Self {
        SegmentMeasure { support }
    }

    pub fn between(x: &TreePoint, y: &TreePoint, v: &Place) -> Result<Self> {
        segment_between(x, y, v).map(Self::new)
    }

    pub fn kind(&self) -> MeasureKind {
        if self.support.is_singleton() {
            MeasureKind::Dirac
        } else {
            MeasureKind::Lebesgue
        }
    }

    pub fn place(&self) -> &Place {
        self.support.place()
    }

    pub fn length(&self) -> f64 {
        self.support.length()
    }

    pub fn to_arcs(&self) -> ArcMeasure {
        ArcMeasure::from_segment(&self.support)
    }
}

fn same_place(a: &SegmentMeasure, b: &SegmentMeasure, v: &Place) -> Result<()> {
    if a.place() != v || b.place() != v {
        return Err(Error::PlaceMismatch);
    }
    Ok(())
}

/// Closed-form energy of two segment measures.
pub fn energy_closed_form(ia: &SegmentMeasure, ib: &SegmentMeasure, v: &Place) -> Result<f64> {
    same_place(ia, ib, v)?;
    if ia.support.same_as(&ib.support, 0.0)? {
        return Ok(0.0);
    }
    let cfg = classify_pair(&ia.support, &ib.support)?;
    Ok(configuration_energy(&cfg))
}

/// Both sides of the splitting identity for a segment cut into two abutting pieces.
pub fn energy_union_check(
    ia: &SegmentMeasure,
    ib1: &SegmentMeasure,
    ib2: &SegmentMeasure,
    v: &Place,
) -> Result<(f64, f64)> {
    same_place(ia, ib1, v)?;
    same_place(ia, ib2, v)?;
    let (s1, s2) = (&ib1.support, &ib2.support);
    let tol = 1e-12 * (1.0 + s1.length() + s2.length());
    let ends1 = [s1.start(), s1.end()];
    let ends2 = [s2.start(), s2.end()];
    let mut joined = None;
    for (i, p) in ends1.iter().enumerate() {
        for (j, q) in ends2.iter().enumerate() {
            if crate::tree::same_point(p, q, v, tol)? {
                let far1 = ends1[1 - i];
                let far2 = ends2[1 - j];
                let total = path_length(far1, far2, v)?;
                if (total - s1.length() - s2.length()).abs() <= tol {
                    joined = Some(segment_between(far1, far2, v)?);
                }
            }
        }
    }
    let union = SegmentMeasure::new(joined.ok_or(Error::NotAbuttable)?);
    let lhs = energy_closed_form(ia, &union, v)?;
    let (l1, l2, l) = (s1.length(), s2.length(), union.length());
    let rhs = if l == 0.0 {
        energy_closed_form(ia, ib1, v)?
    } else {
        (l1 / l) * energy_closed_form(ia, ib1, v)? + (l2 / l) * energy_closed_form(ia, ib2, v)?
            - (l1 * l2 / (l * l)) * energy_closed_form(ib1, ib2, v)?
    };
    Ok((lhs, rhs))
}

struct Atoms {
    centers: Vec<usize>,
    radii: Vec<f64>,
    weight: f64,
}

fn discretize(m: &SegmentMeasure, n: usize, table: &mut Vec<Rational>) -> Atoms {
    let seg = &m.support;
    let count = if seg.is_singleton() { 1 } else { n };
    let mut centers = Vec::with_capacity(count);
    let mut radii = Vec::with_capacity(count);
    for k in 0..count {
        let t = (k as f64 + 0.5) * seg.length() / count as f64;
        let p = seg.point_at(t);
        let idx = match table.iter().position(|c| *c == p.center) {
            Some(i) => i,
            None => {
                table.push(p.center.clone());
                table.len() - 1
            }
        };
        centers.push(idx);
        radii.push(p.log_radius);
    }
    Atoms { centers, radii, weight: 1.0 / count as f64 }
}

fn atom_sum(x: &Atoms, y: &Atoms, table: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = (0..x.radii.len())
        .into_par_iter()
        .map(|i| {
            let row = &table[x.centers[i]];
            let ri = x.radii[i];
            let mut acc = 0.0;
            for j in 0..y.radii.len() {
                acc += ri.max(y.radii[j]).max(row[y.centers[j]]);
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() * x.weight * y.weight
}

/// Brute-force energy: midpoint discretization with `n` atoms per Lebesgue segment.
pub fn energy_oracle(ia: &SegmentMeasure, ib: &SegmentMeasure, v: &Place, n: usize) -> Result<f64> {
    same_place(ia, ib, v)?;
    let n = n.max(2);
    let mut centers = Vec::new();
    let a = discretize(ia, n, &mut centers);
    let b = discretize(ib, n, &mut centers);
    let table: Vec<Vec<f64>> = centers.iter().map(|x| centers.iter().map(|y| log_abs(&(x - y), v)).collect()).collect();
    let saa = atom_sum(&a, &a, &table);
    let sab = atom_sum(&a, &b, &table);
    let sbb = atom_sum(&b, &b, &table);
    Ok(0.5 * (2.0 * sab - saa - sbb))
}

/// Finite combination of uniform measures on vertical arcs and point masses.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArcMeasure {
    pub parts: Vec<(f64, Arc)>,
}

impl ArcMeasure {
    pub fn atom(p: &TreePoint, v: &Place) -> Result<Self> {
        let d = p.to_direct(v)?;
        Ok(ArcMeasure { parts: vec![(1.0, Arc { center: d.center, lo: d.log_radius, hi: d.log_radius })] })
    }

    pub fn from_segment(seg: &Segment) -> Self {
        if seg.is_singleton() {
            let p = seg.start();
            return ArcMeasure {
                parts: vec![(1.0, Arc { center: p.center.clone(), lo: p.log_radius, hi: p.log_radius })],
            };
        }
        let l = seg.length();
        let parts = seg.arcs().into_iter().filter(|a| a.length() > 0.0).map(|a| (a.length() / l, a)).collect();
        ArcMeasure { parts }
    }

    /// Weighted sum of measures.
    pub fn mixture(items: &[(f64, ArcMeasure)]) -> Self {
        let parts = items.iter().flat_map(|(w, m)| m.parts.iter().map(move |(u, a)| (w * u, a.clone()))).collect();
        ArcMeasure { parts }
    }

    pub fn mass(&self) -> f64 {
        self.parts.iter().map(|(w, _)| w).sum()
    }
}

const GAUSS_NODE: f64 = 0.577_350_269_189_625_8;

fn arc_cdf(a: &Arc, x: f64) -> f64 {
    if a.hi <= a.lo {
        if x >= a.lo {
            1.0
        } else {
            0.0
        }
    } else {
        ((x - a.lo) / (a.hi - a.lo)).clamp(0.0, 1.0)
    }
}

/// Mean of `max(S, T, floor)` for independent log radii uniform on two arcs.
pub fn expected_max(s: &Arc, t: &Arc, floor: f64) -> f64 {
    let low = s.lo.max(t.lo).max(floor);
    if low == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let high = s.hi.max(t.hi).max(low);
    if high <= low {
        return low;
    }
    let mut cuts = vec![low, high];
    cuts.extend([s.lo, s.hi, t.lo, t.hi].into_iter().filter(|&x| x > low && x < high));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = low;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        for x in [mid - half * GAUSS_NODE, mid + half * GAUSS_NODE] {
            total += half * (1.0 - arc_cdf(s, x) * arc_cdf(t, x));
        }
    }
    total
}

/// Mean log kernel between two arc measures; `-inf` only for coincident type-1 masses.
pub fn mean_log_kernel(m: &ArcMeasure, n: &ArcMeasure, v: &Place) -> f64 {
    let mut acc = 0.0;
    for (wa, a) in &m.parts {
        for (wb, b) in &n.parts {
            let floor = log_abs(&(&a.center - &b.center), v);
            acc += wa * wb * expected_max(a, b, floor);
        }
    }
    acc
}

/// `(m, n) = -iint log kernel`.
pub fn kernel_pairing(m: &ArcMeasure, n: &ArcMeasure, v: &Place) -> f64 {
    -mean_log_kernel(m, n, v)
}

/// `<m, n> = 1/2 (m - n, m - n)`.
pub fn kernel_energy(m: &ArcMeasure, n: &ArcMeasure, v: &Place) -> f64 {
    0.5 * (kernel_pairing(m, m, v) - 2.0 * kernel_pairing(m, n, v) + kernel_pairing(n, n, v))
}

/// Potential `int_{log r}^{log s} max(t, log|z - alpha|) dt` of the length-weighted arc measure.
pub fn sigma_potential(alpha: &Rational, log_r: f64, log_s: f64, z: &TreePoint, v: &Place) -> Result<f64> {
    if !(log_r.is_finite() && log_s.is_finite()) || log_r > log_s {
        return Err(Error::BadRadii);
    }
    let l = hsia_log_kernel(z, &TreePoint::classical(alpha.clone()), v)?;
    Ok(sigma_branch(log_r, log_s, l))
}

fn sigma_branch(lr: f64, ls: f64, l: f64) -> f64 {
    if l >= ls {
        (ls - lr) * l
    } else if l >= lr {
        0.5 * l * l - lr * l + 0.5 * ls * ls
    } else {
        0.5 * (ls * ls - lr * lr)
    }
}

/// `(mu_I, delta_z)` for the normalized measure of a segment.
pub fn segment_pairing_with_point(seg: &Segment, z: &TreePoint) -> Result<f64> {
    let v = *seg.place();
    if seg.is_singleton() {
        return Ok(-hsia_log_kernel(seg.start(), z, &v)?);
    }
    let mut sigma = 0.0;
    for arc in seg.arcs() {
        if arc.length() > 0.0 {
            sigma += sigma_potential(&arc.center, arc.lo, arc.hi, z, &v)?;
        }
    }
    Ok(-sigma / seg.length())
}

/// Evaluated lower bounds for the energy of two segment measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub energy: f64,
    pub config: PairConfiguration,
    /// `l_a/24 + l_b/24 + gap/2`, for at most one common point.
    pub disjoint_bound: Option<f64>,
    /// Quadratic form in the overhangs `(l_i - shared)/2`, for intersecting segments.
    pub overhang_bound: Option<f64>,
    /// `(l_a - l_b)^2 / (24 max)`, for intersecting segments.
    pub spread_bound: Option<f64>,
    /// `(l_a - l_b)^2 / (6 max)`: the same bound with constant 1/6. Not valid in general.
    pub spread_bound_sixth: Option<f64>,
    /// `(lambda, rho, lambda / (48 rho^2))`.
    pub scale_bound: Option<(f64, f64, f64)>,
    pub tolerance: f64,
}

impl LowerBoundReport {
    fn holds(&self, b: Option<f64>) -> bool {
        b.is_none_or(|b| self.energy >= b - self.tolerance)
    }

    /// Whether every valid bound holds.
    pub fn all_hold(&self) -> bool {
        self.holds(self.disjoint_bound)
            && self.holds(self.overhang_bound)
            && self.holds(self.spread_bound)
            && self.holds(self.scale_bound.map(|t| t.2))
    }

    pub fn sixth_holds(&self) -> bool {
        self.holds(self.spread_bound_sixth)
    }
}

/// Evaluates every applicable lower bound. `scale` fixes `(lambda, rho)`; otherwise the
/// largest admissible `lambda` is used with the smallest matching `rho`.
pub fn lower_bound_report(
    ia: &SegmentMeasure,
    ib: &SegmentMeasure,
    v: &Place,
    scale: Option<(f64, f64)>,
) -> Result<LowerBoundReport> {
    same_place(ia, ib, v)?;
    let energy = energy_closed_form(ia, ib, v)?;
    let config = if ia.support.same_as(&ib.support, 0.0)? {
        let l = ia.length();
        PairConfiguration::Meeting { shared: l, a_pieces: (0.0, 0.0), b_pieces: (0.0, 0.0) }
    } else {
        classify_pair(&ia.support, &ib.support)?
    };
    let (la, lb) = (ia.length(), ib.length());
    let tolerance = 1e-10 * (1.0 + la + lb);
    let mut report = LowerBoundReport {
        energy,
        config,
        disjoint_bound: None,
        overhang_bound: None,
        spread_bound: None,
        spread_bound_sixth: None,
        scale_bound: None,
        tolerance,
    };
    let shared = match config {
        PairConfiguration::Disjoint { gap, .. } => {
            report.disjoint_bound = Some(la / 24.0 + lb / 24.0 + gap / 2.0);
            (gap == 0.0).then_some(0.0)
        }
        PairConfiguration::Meeting { shared, .. } => Some(shared),
    };
    if let Some(shared) = shared {
        let top = la.max(lb);
        let (ma, mb) = ((la - shared) / 2.0, (lb - shared) / 2.0);
        if la > 0.0 && lb > 0.0 {
            report.overhang_bound =
                Some(ma * ma / (6.0 * la) + mb * mb / (6.0 * lb) - shared * ma * mb / (3.0 * la * lb));
        }
        if top > 0.0 {
            let d2 = (la - lb) * (la - lb);
            report.spread_bound = Some(d2 / (24.0 * top));
            report.spread_bound_sixth = Some(d2 / (6.0 * top));
        }
        let reach = (la - shared).max(lb - shared);
        let chosen = match scale {
            Some((lambda, rho)) => {
                let ok = lambda >= 0.0 && lambda <= reach + tolerance && rho > 0.0 && top <= rho * lambda + tolerance;
                if !ok {
                    return Err(Error::BadBoundParameters);
                }
                Some((lambda, rho))
            }
            None => (reach > 0.0).then(|| (reach, top / reach)),
        };
        report.scale_bound = chosen.map(|(lambda, rho)| (lambda, rho, lambda / (48.0 * rho * rho)));
    } else if scale.is_some() {
        return Err(Error::BadBoundParameters);
    }
    Ok(report)
}

/// `|(mu_P, delta_u - chi_{u,r})|` at an odd finite place, with `r` a real radius.
pub fn local_discrepancy(p: &Quadruple, u: &Rational, r: f64, v: &Place) -> Result<f64> {
    let prime = v.require_finite()?;
    if prime == 2 {
        return Err(Error::ResidueCharTwo);
    }
    if p.contains_finite(u) {
        return Err(Error::BranchPointCenter);
    }
    if r.is_nan() || r < 0.0 {
        return Err(Error::BadRadii);
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let seg = lattes_segment(p, v)?;
    let smooth = TreePoint::new(u.clone(), r.ln());
    let point = TreePoint::classical(u.clone());
    Ok((segment_pairing_with_point(&seg, &smooth)? - segment_pairing_with_point(&seg, &point)?).abs())
}
