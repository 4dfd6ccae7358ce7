mod common;

use arakelov::places::*;
use arakelov::Error;
use common::*;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn valuation_examples() {
    assert_eq!(padic_valuation(&qi(1), 5), Valuation::Finite(0));
    assert_eq!(padic_valuation(&qi(12), 2), Valuation::Finite(2));
    assert_eq!(padic_valuation(&qi(0), 7), Valuation::Infinite);
    assert_eq!(padic_valuation(&q(5, 72), 3), Valuation::Finite(-2));
}

#[test]
fn log_abs_examples() {
    let p3 = Place::finite(3).unwrap();
    assert!(close(log_abs(&q(1, 9), &p3), 2.0 * 3f64.ln(), 1e-15));
    assert_eq!(log_abs(&qi(7), &Place::trivial()), 0.0);
    let half = Place::archimedean().with_epsilon(0.5).unwrap();
    assert!(close(log_abs(&qi(2), &half), 0.5 * LN2, 1e-15));
    assert_eq!(log_abs(&qi(0), &p3), f64::NEG_INFINITY);
}

#[test]
fn place_validation() {
    assert_eq!(Place::finite(4), Err(Error::NotPrime(4)));
    assert!(Place::archimedean().with_epsilon(1.5).is_err());
    assert!(Place::finite(3).unwrap().with_epsilon(1.5).is_ok());
    assert!(Place::finite(3).unwrap().with_epsilon(0.0).is_err());
}

#[test]
fn product_formula_examples() {
    for x in [qi(6), qi(1), q(-35, 4)] {
        assert!(product_formula_residual(&x).unwrap().abs() <= 1e-12);
    }
    assert_eq!(product_formula_residual(&qi(0)), Err(Error::ZeroInput));
}

#[test]
fn height_examples() {
    assert!(close(projective_height(&[qi(1), qi(2)]).unwrap(), LN2, 1e-14));
    assert!(close(projective_height(&[qi(1), qi(1)]).unwrap(), 0.0, 1e-14));
    assert!(close(projective_height(&[qi(2), qi(4)]).unwrap(), LN2, 1e-14));
    assert_eq!(projective_height(&[qi(0), qi(0)]), Err(Error::AllZero));
    assert!(close(affine_height(&[q(1, 2)]), LN2, 1e-14));
    assert!(close(affine_height(&[qi(1)]), 0.0, 1e-14));
    assert!(close(affine_height(&[qi(2), qi(3)]), 3f64.ln(), 1e-14));
}

#[test]
fn submax_examples() {
    assert_eq!(submax(&[1.0, 3.0, 2.0]).unwrap(), 2.0);
    assert_eq!(submax(&[5.0, 5.0]).unwrap(), 5.0);
    assert_eq!(submax(&[-1.0, 0.0, -2.0, 7.0]).unwrap(), 0.0);
    assert_eq!(submax(&[1.0]), Err(Error::TooFewValues));
}

#[test]
fn rational_text_round_trip() {
    for s in ["3/4", "-7", "0", "10/-4"] {
        let x = parse_rational(s).unwrap();
        assert_eq!(parse_rational(&format_rational(&x)).unwrap(), x);
    }
    assert!(parse_rational("1/0").is_err());
    assert!(parse_rational("abc").is_err());
}

/// Height from an explicit sum over places using trial division.
fn height_oracle(coords: &[arakelov::Rational]) -> f64 {
    let nz: Vec<_> = coords.iter().filter(|x| !num_traits::Zero::is_zero(*x)).collect();
    let mut primes = std::collections::BTreeSet::new();
    for x in &nz {
        for n in [x.numer().abs(), x.denom().clone()] {
            for (p, _) in factor_trial(n.to_u64().unwrap()) {
                primes.insert(p);
            }
        }
    }
    let arch = nz.iter().map(|x| x.abs().to_f64().unwrap().ln()).fold(f64::MIN, f64::max);
    let fin: f64 = primes
        .iter()
        .map(|&p| {
            let v = Place::finite(p).unwrap();
            nz.iter().map(|x| log_abs(x, &v)).fold(f64::MIN, f64::max)
        })
        .sum();
    arch + fin
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn multiplicativity(x in nonzero_rational(500), y in nonzero_rational(500), p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13])) {
        let v = Place::finite(p).unwrap();
        let xy = &x * &y;
        prop_assert_eq!(log_abs_units(&xy, p).unwrap(), log_abs_units(&x, p).unwrap() + log_abs_units(&y, p).unwrap());
        prop_assert!(close(log_abs(&xy, &v), log_abs(&x, &v) + log_abs(&y, &v), 1e-12));
        let a = Place::archimedean();
        prop_assert!(close(log_abs(&xy, &a), log_abs(&x, &a) + log_abs(&y, &a), 1e-12));
    }

    #[test]
    fn flow_linearity(x in nonzero_rational(1000), eps in 0.01f64..1.0, p in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let v = Place::finite(p).unwrap();
        prop_assert_eq!(log_abs(&x, &v.with_epsilon(eps).unwrap()), eps * log_abs(&x, &v));
        let a = Place::archimedean();
        prop_assert_eq!(log_abs(&x, &a.with_epsilon(eps).unwrap()), eps * log_abs(&x, &a));
    }

    #[test]
    fn product_formula(x in nonzero_rational(1_000_000)) {
        prop_assert!(product_formula_residual(&x).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn height_symmetries(x in nonzero_rational(10_000), s in nonzero_rational(50), y in rational(300)) {
        prop_assert_eq!(affine_height(std::slice::from_ref(&x)), affine_height(&[x.recip()]));
        let h = projective_height(&[x.clone(), y.clone()]).unwrap();
        let hs = projective_height(&[&x * &s, &y * &s]).unwrap();
        prop_assert!(close(h, hs, 1e-10));
        prop_assert!(h >= 0.0);
        prop_assert!(close(h, height_oracle(&[x, y]), 1e-10));
    }

    #[test]
    fn abs_log_bound_holds(u in prop::collection::vec(nonzero_rational(400), 1..=6)) {
        let (lhs, rhs) = abs_log_bound(&u).unwrap();
        prop_assert!(lhs <= rhs + 1e-9, "{} > {}", lhs, rhs);
    }
}
