//! Simultaneous root finding for complex polynomials (Aberth–Ehrlich iteration).

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITER: usize = 400;

fn eval(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of `sum coeffs[k] z^k`, leading coefficient nonzero.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len().saturating_sub(1);
    let lead = coeffs[deg];
    if deg == 0 || lead.norm() == 0.0 {
        return Err(Error::NonConvergentRoots);
    }
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = monic[..deg]
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm().powf(1.0 / (deg - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> =
        (0..deg).map(|k| Complex64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / deg as f64)).collect();
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut worst: f64 = 0.0;
        for k in 0..deg {
            let (p, dp) = eval(&monic, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                worst = worst.max(step.norm() / (1.0 + z[k].norm()));
            } else {
                z[k] += Complex64::new(1e-8 * radius, 1e-8 * radius);
                worst = 1.0;
            }
        }
        if worst < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        let scale: f64 = monic.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let ok = z.iter().all(|&r| {
            let (p, _) = eval(&monic, r);
            p.norm() <= 1e-8 * scale * (1.0 + r.norm()).powi(deg as i32)
        });
        if !ok {
            return Err(Error::NonConvergentRoots);
        }
    }
    Ok(z)
}
