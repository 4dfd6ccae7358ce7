#![allow(dead_code)]

use arakelov::Rational;
use num_bigint::BigInt;
use proptest::prelude::*;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Rational {
    q(n, 1)
}

pub fn nonzero_rational(bound: i64) -> impl Strategy<Value = Rational> {
    ((1..=bound), (1..=bound), any::<bool>()).prop_map(|(n, d, neg)| q(if neg { -n } else { n }, d))
}

pub fn rational(bound: i64) -> impl Strategy<Value = Rational> {
    ((-bound..=bound), (1..=bound)).prop_map(|(n, d)| q(n, d))
}

/// Independent trial-division factorization used as a test oracle.
pub fn factor_trial(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut k = 0;
        while n.is_multiple_of(p) {
            n /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
