//! Places of Q, normalized absolute values with a scaling exponent, and Weil heights.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

/// Which completion of Q a place describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlaceKind {
    Trivial,
    Finite { p: u64 },
    Archimedean,
}

/// A place of Q together with the exponent of its absolute value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Place {
    #[serde(flatten)]
    kind: PlaceKind,
    epsilon: f64,
}

impl Place {
    pub fn trivial() -> Self {
        Place { kind: PlaceKind::Trivial, epsilon: 1.0 }
    }

    pub fn archimedean() -> Self {
        Place { kind: PlaceKind::Archimedean, epsilon: 1.0 }
    }

    pub fn finite(p: u64) -> Result<Self> {
        if !num_prime::nt_funcs::is_prime64(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Place { kind: PlaceKind::Finite { p }, epsilon: 1.0 })
    }

    /// Same place with its absolute value raised to the power `epsilon`.
    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        let ok = epsilon.is_finite() && epsilon > 0.0 && (self.kind != PlaceKind::Archimedean || epsilon <= 1.0);
        if !ok {
            return Err(Error::BadEpsilon(epsilon));
        }
        Ok(Place { epsilon, ..self })
    }

    pub fn kind(&self) -> PlaceKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn prime(&self) -> Option<u64> {
        match self.kind {
            PlaceKind::Finite { p } => Some(p),
            _ => None,
        }
    }

    pub fn is_archimedean(&self) -> bool {
        self.kind == PlaceKind::Archimedean
    }

    /// Size of one valuation step in natural-log units, `epsilon * ln p`.
    pub fn log_unit(&self) -> Option<f64> {
        self.prime().map(|p| self.epsilon * (p as f64).ln())
    }

    /// Same place with exponent 1.
    pub fn unscaled(&self) -> Self {
        Place { epsilon: 1.0, ..*self }
    }

    pub(crate) fn require_finite(&self) -> Result<u64> {
        self.prime().ok_or(Error::NotFinitePlace)
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PlaceKind::Trivial => write!(f, "0")?,
            PlaceKind::Finite { p } => write!(f, "{p}")?,
            PlaceKind::Archimedean => write!(f, "inf")?,
        }
        if self.epsilon != 1.0 {
            write!(f, "^{}", self.epsilon)?;
        }
        Ok(())
    }
}

/// A p-adic valuation, `Infinite` for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(k) => Some(k),
            Valuation::Infinite => None,
        }
    }
}

fn int_valuation(n: &BigInt, p: &BigInt) -> i64 {
    let mut n = n.clone();
    let mut k = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return k;
        }
        n = q;
        k += 1;
    }
}

/// Exponent of `p` in `x`, for any integer `p >= 2`.
pub fn padic_valuation(x: &Rational, p: u64) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    let pb = BigInt::from(p);
    Valuation::Finite(int_valuation(x.numer(), &pb) - int_valuation(x.denom(), &pb))
}

/// Natural log of a positive big integer.
pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn ln_abs_rational(x: &Rational) -> f64 {
    ln_biguint(x.numer().magnitude()) - ln_biguint(x.denom().magnitude())
}

/// `epsilon * log|x|_v`, with `-inf` at zero for nontrivial places.
pub fn log_abs(x: &Rational, v: &Place) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    match v.kind {
        PlaceKind::Trivial => 0.0,
        PlaceKind::Archimedean => v.epsilon * ln_abs_rational(x),
        PlaceKind::Finite { p } => {
            let k = padic_valuation(x, p).finite().unwrap_or(0);
            v.epsilon * (-(k as f64) * (p as f64).ln())
        }
    }
}

/// `log|x|_v` in units of `epsilon * ln p`; exact integer, `None` at zero.
pub fn log_abs_units(x: &Rational, p: u64) -> Option<i64> {
    padic_valuation(x, p).finite().map(|k| -k)
}

fn factor_into(n: &BigUint, out: &mut BTreeSet<BigUint>) {
    if n <= &BigUint::one() {
        return;
    }
    for (q, _) in num_prime::nt_funcs::factorize(n.clone()) {
        out.insert(q);
    }
}

/// Primes dividing the numerator or denominator of any listed nonzero rational.
pub fn support_primes<'a, I>(xs: I) -> Vec<BigUint>
where
    I: IntoIterator<Item = &'a Rational>,
{
    let mut set = BTreeSet::new();
    for x in xs {
        if x.is_zero() {
            continue;
        }
        factor_into(x.numer().magnitude(), &mut set);
        factor_into(x.denom().magnitude(), &mut set);
    }
    set.into_iter().collect()
}

/// Finite places dividing any listed nonzero rational.
pub fn support_places<'a, I>(xs: I) -> Result<Vec<Place>>
where
    I: IntoIterator<Item = &'a Rational>,
{
    support_primes(xs)
        .into_iter()
        .map(|q| {
            let p = q.to_u64().ok_or(Error::PrimeTooLarge)?;
            Place::finite(p)
        })
        .collect()
}

fn big_valuation(x: &Rational, p: &BigUint) -> i64 {
    let pb = BigInt::from_biguint(Sign::Plus, p.clone());
    int_valuation(x.numer(), &pb) - int_valuation(x.denom(), &pb)
}

/// Sum of `log|x|_v` over the archimedean place and every prime of `x`.
pub fn product_formula_residual(x: &Rational) -> Result<f64> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut num_part = ln_biguint(x.numer().magnitude());
    let mut den_part = ln_biguint(x.denom().magnitude());
    for q in support_primes([x]) {
        let k = big_valuation(x, &q);
        let lq = ln_biguint(&q);
        if k > 0 {
            num_part -= k as f64 * lq;
        } else {
            den_part -= (-k) as f64 * lq;
        }
    }
    Ok(num_part - den_part)
}

/// Weil height of the projective point with the given coordinates, computed as
/// `ln max |c_i|` over the primitive integer representative.
pub fn projective_height(coords: &[Rational]) -> Result<f64> {
    let nonzero: Vec<&Rational> = coords.iter().filter(|x| !x.is_zero()).collect();
    if nonzero.is_empty() {
        return Err(Error::AllZero);
    }
    let common = nonzero.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = nonzero.iter().map(|x| (x.numer() * &common) / x.denom()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    let top = ints.iter().map(|c| c.magnitude()).max().expect("nonempty") / g.magnitude();
    Ok(ln_biguint(&top).max(0.0))
}

/// Height of the tuple viewed as the projective point `[1 : x_1 : ... : x_n]`.
pub fn affine_height(xs: &[Rational]) -> f64 {
    let mut coords = Vec::with_capacity(xs.len() + 1);
    coords.push(Rational::one());
    coords.extend_from_slice(xs);
    projective_height(&coords).unwrap_or(0.0)
}

/// Second largest entry; ties count separately.
pub fn submax<T: PartialOrd + Copy>(values: &[T]) -> Result<T> {
    if values.len() < 2 {
        return Err(Error::TooFewValues);
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(v[v.len() - 2])
}

/// Both sides of the bound `sum_v max_i |log|u_i|_v| <= (n+1) h(u)` for nonzero `u`.
pub fn abs_log_bound(u: &[Rational]) -> Result<(f64, f64)> {
    if u.iter().any(|x| x.is_zero()) {
        return Err(Error::ZeroInput);
    }
    let mut lhs = u.iter().map(|x| ln_abs_rational(x).abs()).fold(0.0, f64::max);
    for q in support_primes(u) {
        let worst = u.iter().map(|x| big_valuation(x, &q).abs()).max().unwrap_or(0);
        lhs += worst as f64 * ln_biguint(&q);
    }
    Ok((lhs, (u.len() as f64 + 1.0) * affine_height(u)))
}

/// Parses `"num/den"` or `"num"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Rational to f64 without overflow for huge numerators and denominators.
pub fn rational_to_f64(x: &Rational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * ln_abs_rational(x).exp()
}

/// Serde adapter storing rationals as strings.
pub mod rational_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
