//! Escape-rate potentials of the homogeneous lift of a Lattès map.
//!
//! The Legendre map lifts to `F(x, y) = ((x^2 - l y^2)^2, 4 x y (x - y)(x - l y))` with
//! `|Res F| = 2^8 |l|^4 |l - 1|^4`. Writing `G(w) = lim 4^-n log |F^n w|`, the equilibrium
//! measure satisfies, at every place,
//!
//! * `(mu, delta_z) = -G(z, 1) + G(1, 0)`,
//! * `(mu, mu) = 2 G(1, 0) - log|Res F| / 12`.
//!
//! A quadruple is handled through the Möbius frame `M` sending it to `(inf, 0, 1, l)`:
//! `G_M(w) = G(M w)` and the resultant picks up a factor `det(M)^12`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattes::{normalize_to_legendre, CPoint, LegendreParam, Mobius, ProjPoint, Quadruple};
use crate::places::{self, padic_valuation, Place, PlaceKind};
use crate::Rational;

const ARCH_STEPS: usize = 34;
const PADIC_STEPS: usize = 40;

/// Lattès dynamics in a fixed coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct LattesDynamics {
    lambda: LegendreParam,
    frame: Mobius,
    lambda_c: Complex64,
    frame_c: [f64; 4],
}

impl LattesDynamics {
    pub fn legendre(lambda: LegendreParam) -> Self {
        Self::with_frame(lambda, Mobius::identity())
    }

    pub fn from_quadruple(q: &Quadruple) -> Result<Self> {
        let (lambda, frame) = normalize_to_legendre(q)?;
        Ok(Self::with_frame(lambda, frame))
    }

    fn with_frame(lambda: LegendreParam, frame: Mobius) -> Self {
        let f = places::rational_to_f64;
        let frame_c = [f(&frame.a), f(&frame.b), f(&frame.c), f(&frame.d)];
        LattesDynamics { lambda_c: lambda.to_complex(), lambda, frame, frame_c }
    }

    pub fn lambda(&self) -> &LegendreParam {
        &self.lambda
    }

    pub fn frame(&self) -> &Mobius {
        &self.frame
    }

    /// Rationals whose primes carry all nontrivial local data.
    pub fn bad_data(&self) -> Vec<Rational> {
        let l = self.lambda.value();
        let m = &self.frame;
        vec![
            l.clone(),
            l - Rational::one(),
            Rational::from_integer(2.into()),
            m.det(),
            m.a.clone(),
            m.b.clone(),
            m.c.clone(),
            m.d.clone(),
        ]
    }

    fn log_abs_resultant(&self, v: &Place) -> f64 {
        let l = self.lambda.value();
        let two = Rational::from_integer(2.into());
        8.0 * places::log_abs(&two, v)
            + 4.0 * places::log_abs(l, v)
            + 4.0 * places::log_abs(&(l - Rational::one()), v)
            + 12.0 * places::log_abs(&self.frame.det(), v)
    }

    /// Archimedean escape rate of the lift at `(x, y)`.
    pub fn escape_rate_arch(&self, x: Complex64, y: Complex64) -> f64 {
        let [a, b, c, d] = self.frame_c;
        escape_arch(self.lambda_c, x * a + y * b, x * c + y * d)
    }

    /// `(mu, delta_z)` at the archimedean place.
    pub fn potential_arch(&self, z: CPoint) -> f64 {
        match z {
            CPoint::Infinity => f64::NEG_INFINITY,
            CPoint::Finite(z) => {
                let one = Complex64::new(1.0, 0.0);
                let zero = Complex64::new(0.0, 0.0);
                -self.escape_rate_arch(z, one) + self.escape_rate_arch(one, zero)
            }
        }
    }

    /// Escape rate at a rational point in homogeneous coordinates, at any nontrivial place.
    pub fn escape_rate(&self, x: &Rational, y: &Rational, v: &Place) -> Result<f64> {
        match v.kind() {
            PlaceKind::Trivial => Err(Error::NotFinitePlace),
            PlaceKind::Archimedean => {
                let f = places::rational_to_f64;
                Ok(v.epsilon() * self.escape_rate_arch(Complex64::new(f(x), 0.0), Complex64::new(f(y), 0.0)))
            }
            PlaceKind::Finite { p } => {
                let (u, w) = self.frame.apply_homogeneous(x, y);
                let units = escape_padic(self.lambda.value(), &u, &w, p)?;
                Ok(units * v.log_unit().unwrap_or(0.0))
            }
        }
    }

    /// `(mu, delta_x)` at any nontrivial place.
    pub fn point_pairing(&self, x: &ProjPoint, v: &Place) -> Result<f64> {
        let x = match x {
            ProjPoint::Infinity => return Ok(f64::NEG_INFINITY),
            ProjPoint::Finite(x) => x,
        };
        let (one, zero) = (Rational::one(), Rational::zero());
        Ok(-self.escape_rate(x, &one, v)? + self.escape_rate(&one, &zero, v)?)
    }

    /// `(mu, mu)` at any nontrivial place.
    pub fn self_pairing(&self, v: &Place) -> Result<f64> {
        let (one, zero) = (Rational::one(), Rational::zero());
        Ok(2.0 * self.escape_rate(&one, &zero, v)? - self.log_abs_resultant(v) / 12.0)
    }
}

fn lift_arch(l: Complex64, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    let s = x * x - l * y * y;
    (s * s, x * y * (x - y) * (x - l * y) * 4.0)
}

fn escape_arch(l: Complex64, x: Complex64, y: Complex64) -> f64 {
    let norm = |a: Complex64, b: Complex64| a.norm().max(b.norm());
    let n0 = norm(x, y);
    if n0 == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut g = n0.ln();
    let (mut u, mut w) = (x / n0, y / n0);
    let mut weight = 1.0;
    for _ in 0..ARCH_STEPS {
        weight *= 0.25;
        let (a, b) = lift_arch(l, u, w);
        let n = norm(a, b);
        g += weight * n.ln();
        u = a / n;
        w = b / n;
    }
    g
}

fn int_val_capped(n: &BigInt, p: &BigInt, cap: u32) -> u32 {
    if n.is_zero() {
        return cap;
    }
    let mut n = n.clone();
    let mut k = 0;
    while k < cap {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            break;
        }
        n = q;
        k += 1;
    }
    k
}

/// Residue of a `p`-integral rational modulo `modulus`.
fn reduce(x: &Rational, modulus: &BigInt) -> BigInt {
    let den = x.denom().mod_floor(modulus);
    let inv = den.modinv(modulus).expect("denominator is a unit");
    (x.numer() * inv).mod_floor(modulus)
}

fn shift(x: &Rational, p: u64, k: i64) -> Rational {
    let pk = Rational::from_integer(BigInt::from(p).pow(k.unsigned_abs() as u32));
    if k >= 0 {
        x * pk
    } else {
        x / pk
    }
}

/// Escape rate at a finite place in units of `ln p`.
fn escape_padic(lambda: &Rational, x: &Rational, y: &Rational, p: u64) -> Result<f64> {
    let val = |r: &Rational| padic_valuation(r, p).finite();
    let v0 = match (val(x), val(y)) {
        (None, None) => return Ok(f64::NEG_INFINITY),
        (Some(a), None) | (None, Some(a)) => a,
        (Some(a), Some(b)) => a.min(b),
    };
    let mut g = -(v0 as f64);
    let e = val(lambda).unwrap_or(0);
    let k = (-e).max(0);
    let lam_int = shift(lambda, p, k);
    let two = Rational::from_integer(2.into());
    let res_val = 16 * k + 8 * val(&two).unwrap_or(0) + 4 * e + 4 * val(&(lambda - Rational::one())).unwrap_or(0);
    let budget = res_val.max(0) as u32 + 1;
    let mut prec = 64 + PADIC_STEPS as u32 * budget;
    let pb = BigInt::from(p);
    let mut modulus = pb.pow(prec);
    let mut u = reduce(&shift(x, p, -v0), &modulus);
    let mut w = reduce(&shift(y, p, -v0), &modulus);
    let lam = reduce(&lam_int, &modulus);
    let pk = pb.pow(k as u32);
    let mut weight = 1.0;
    for _ in 0..PADIC_STEPS {
        weight *= 0.25;
        let s = &pk * &u * &u - &lam * &w * &w;
        let a = (&s * &s).mod_floor(&modulus);
        let b = (BigInt::from(4) * &u * &w * (&u - &w) * (&pk * &u - &lam * &w) * &pk).mod_floor(&modulus);
        let m = int_val_capped(&a, &pb, prec).min(int_val_capped(&b, &pb, prec));
        if m + 8 >= prec {
            return Err(Error::PrecisionExhausted);
        }
        g -= weight * m as f64;
        let pm = pb.pow(m);
        prec -= m;
        modulus = pb.pow(prec);
        u = (a / &pm).mod_floor(&modulus);
        w = (b / &pm).mod_floor(&modulus);
    }
    // Undo the integral rescaling of the lift by p^(2k).
    Ok(g + 2.0 * k as f64 / 3.0)
}
