//! Energies of measures on the complex projective line: Dirac masses, normalized circle
//! measures, and finite point clouds. `(m, n) = -iint log|z - w|` and `<m, n> = 1/2 (m - n, m - n)`.

use std::f64::consts::{PI, TAU};

use num_complex::{Complex, Complex64};
use num_traits::Float;
use quadrature::double_exponential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattes::{lattes_preimages, CPoint};

/// A probability measure at the archimedean place.
#[derive(Clone, Debug, PartialEq)]
pub enum ArchMeasure {
    Dirac(Complex64),
    Circle { center: Complex64, radius: f64 },
    Cloud(Vec<Complex64>),
}

/// `log max(|z - c|, r)`.
pub fn circle_potential<T: Float>(c: Complex<T>, r: T, z: Complex<T>) -> T {
    (z - c).norm().max(r).ln()
}

/// Options for the quadrature fallback.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    pub tol: f64,
    /// Use the two-dimensional angle quadrature even when a closed form applies.
    pub force: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tol: 1e-8, force: false }
    }
}

const MAX_DEPTH: u32 = 40;

/// Adaptive double-exponential quadrature with bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_rec(f, a, b, tol, MAX_DEPTH)
}

fn integrate_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let out = double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol && out.integral.is_finite() {
        return Ok(out.integral);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure);
    }
    let m = 0.5 * (a + b);
    Ok(integrate_rec(f, a, m, 0.5 * tol, depth - 1)? + integrate_rec(f, m, b, 0.5 * tol, depth - 1)?)
}

/// Angles on the first circle where it meets the second, sorted in `[0, 2 pi]`.
fn crossing_angles(c1: Complex64, r1: f64, c2: Complex64, r2: f64) -> Vec<f64> {
    let d = (c2 - c1).norm();
    let mut cuts = vec![0.0, TAU];
    if d > 0.0 && d < r1 + r2 && d > (r1 - r2).abs() {
        let base = (c2 - c1).arg();
        let cosine = ((r1 * r1 + d * d - r2 * r2) / (2.0 * r1 * d)).clamp(-1.0, 1.0);
        let half = cosine.acos();
        for t in [base - half, base + half] {
            cuts.push(t.rem_euclid(TAU));
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts
}

/// `(chi_1, chi_2)` when the circles do not cross.
pub fn circle_pair_closed(c1: Complex64, r1: f64, c2: Complex64, r2: f64) -> Option<f64> {
    let d = (c1 - c2).norm();
    let crossing = d < r1 + r2 && d > (r1 - r2).abs();
    (!crossing).then(|| -(r1.max(r2).max(d)).ln())
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, cuts: &[f64], tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += integrate(f, w[0], w[1], tol / cuts.len() as f64)?;
        }
    }
    Ok(total)
}

/// `(chi_1, chi_2)` by one-dimensional quadrature of the second circle's potential.
pub fn circle_pair_jensen(c1: Complex64, r1: f64, c2: Complex64, r2: f64, tol: f64) -> Result<f64> {
    let f = |t: f64| circle_potential(c2, r2, c1 + Complex64::from_polar(r1, t));
    let cuts = crossing_angles(c1, r1, c2, r2);
    Ok(-integrate_pieces(&f, &cuts, tol * TAU)? / TAU)
}

/// `(chi_1, chi_2)` by quadrature over both angles.
pub fn circle_pair_quadrature(c1: Complex64, r1: f64, c2: Complex64, r2: f64, tol: f64) -> Result<f64> {
    let inner = |theta: f64| -> f64 {
        let z = c1 + Complex64::from_polar(r1, theta);
        let rho = (z - c2).norm();
        // Rotated so that a coincidence of z with the second circle sits at psi = 0.
        let g = |psi: f64| {
            let s = (0.5 * psi).sin();
            0.5 * ((rho - r2) * (rho - r2) + 4.0 * rho * r2 * s * s).ln()
        };
        match integrate(&g, 0.0, PI, tol) {
            Ok(x) => x / PI,
            Err(_) => f64::NAN,
        }
    };
    let cuts = crossing_angles(c1, r1, c2, r2);
    let total = integrate_pieces(&inner, &cuts, tol * TAU)?;
    if !total.is_finite() {
        return Err(Error::QuadratureFailure);
    }
    Ok(-total / TAU)
}

fn mean_log_dist(xs: &[Complex64], ys: &[Complex64], skip_diagonal: bool) -> (f64, u64, u64) {
    let rows: Vec<(f64, u64)> = xs
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut acc = 0.0;
            let mut excluded = 0u64;
            for (j, y) in ys.iter().enumerate() {
                if skip_diagonal && i == j {
                    continue;
                }
                let d2 = (x - y).norm_sqr();
                if d2 == 0.0 {
                    excluded += 1;
                } else {
                    acc += 0.5 * d2.ln();
                }
            }
            (acc, excluded)
        })
        .collect();
    let total: u64 =
        if skip_diagonal { (xs.len() * (xs.len().saturating_sub(1))) as u64 } else { (xs.len() * ys.len()) as u64 };
    let excluded: u64 = rows.iter().map(|r| r.1).sum();
    let sum: f64 = rows.iter().map(|r| r.0).sum();
    (sum / (total - excluded).max(1) as f64, excluded, total)
}

fn check_exclusions(excluded: u64, total: u64) -> Result<()> {
    if excluded * 1000 > total {
        return Err(Error::CoincidentAtoms { excluded, total });
    }
    Ok(())
}

/// `(m1, m2)` for two measures; clouds paired with themselves use off-diagonal means.
pub fn mutual_pairing(m1: &ArchMeasure, m2: &ArchMeasure, opts: QuadratureOptions) -> Result<f64> {
    use ArchMeasure::*;
    match (m1, m2) {
        (Dirac(a), Dirac(b)) => {
            if a == b {
                Err(Error::SingularPair)
            } else {
                Ok(-(a - b).norm().ln())
            }
        }
        (Dirac(a), Circle { center, radius }) | (Circle { center, radius }, Dirac(a)) => {
            Ok(-circle_potential(*center, *radius, *a))
        }
        (Circle { center: c1, radius: r1 }, Circle { center: c2, radius: r2 }) => {
            if opts.force {
                return circle_pair_quadrature(*c1, *r1, *c2, *r2, opts.tol);
            }
            match circle_pair_closed(*c1, *r1, *c2, *r2) {
                Some(x) => Ok(x),
                None => circle_pair_jensen(*c1, *r1, *c2, *r2, opts.tol),
            }
        }
        (Cloud(xs), Circle { center, radius }) | (Circle { center, radius }, Cloud(xs)) => {
            Ok(-xs.iter().map(|z| circle_potential(*center, *radius, *z)).sum::<f64>() / xs.len() as f64)
        }
        (Cloud(xs), Dirac(a)) | (Dirac(a), Cloud(xs)) => {
            let (m, excluded, total) = mean_log_dist(xs, std::slice::from_ref(a), false);
            if excluded > 0 {
                return Err(Error::CoincidentAtoms { excluded, total });
            }
            Ok(-m)
        }
        (Cloud(xs), Cloud(ys)) => {
            let same = std::ptr::eq(xs, ys);
            let (m, excluded, total) = mean_log_dist(xs, ys, same);
            check_exclusions(excluded, total)?;
            Ok(-m)
        }
    }
}

fn self_pairing(m: &ArchMeasure, opts: QuadratureOptions) -> Result<f64> {
    match m {
        ArchMeasure::Dirac(_) => Ok(f64::INFINITY),
        ArchMeasure::Circle { radius, .. } if !opts.force => Ok(-radius.ln()),
        _ => mutual_pairing(m, m, opts),
    }
}

/// `<m1, m2> = 1/2 [(m1, m1) - 2 (m1, m2) + (m2, m2)]`.
pub fn pair_energy_arch(m1: &ArchMeasure, m2: &ArchMeasure, opts: QuadratureOptions) -> Result<f64> {
    if let (ArchMeasure::Dirac(a), ArchMeasure::Dirac(b)) = (m1, m2) {
        if a == b {
            return Err(Error::SingularPair);
        }
    }
    if matches!(m1, ArchMeasure::Dirac(_)) || matches!(m2, ArchMeasure::Dirac(_)) {
        return Ok(f64::INFINITY);
    }
    let cross = mutual_pairing(m1, m2, opts)?;
    Ok(0.5 * (self_pairing(m1, opts)? - 2.0 * cross + self_pairing(m2, opts)?))
}

/// Cloud energy estimate with its pair bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CloudEnergy {
    pub value: f64,
    pub excluded: u64,
    pub pairs: u64,
}

/// `1/2 [(A, A)' - 2 (A, B) + (B, B)']` with off-diagonal self terms.
pub fn cloud_energy(a: &[Complex64], b: &[Complex64]) -> Result<CloudEnergy> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    let (aa, ea, ta) = mean_log_dist(a, a, true);
    let (ab, eab, tab) = mean_log_dist(a, b, false);
    let (bb, eb, tb) = mean_log_dist(b, b, true);
    let (excluded, pairs) = (ea + eab + eb, ta + tab + tb);
    check_exclusions(excluded, pairs)?;
    Ok(CloudEnergy { value: 0.5 * (-aa + 2.0 * ab - bb), excluded, pairs })
}

/// Backward-orbit sample of the Lattès equilibrium measure for a complex parameter.
pub fn sample_lattes_complex(lambda: Complex64, n: usize, seed: u64, burn_in: usize) -> Result<Vec<Complex64>> {
    if n < 100 {
        return Err(Error::TooFewSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = CPoint::Finite(Complex64::new(std::f64::consts::FRAC_1_PI, 0.577_215_665));
    let mut out = Vec::with_capacity(n);
    for step in 0..(n + burn_in) {
        let pre = lattes_preimages(lambda, t)?;
        t = pre[rng.gen_range(0..4)];
        if step >= burn_in {
            out.push(t.finite().ok_or(Error::NonConvergentRoots)?);
        }
    }
    Ok(out)
}

/// Backward-orbit sample for a Legendre parameter.
pub fn sample_lattes_equilibrium(
    lambda: &crate::lattes::LegendreParam,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Vec<Complex64>> {
    sample_lattes_complex(lambda.to_complex(), n, seed, burn_in)
}
