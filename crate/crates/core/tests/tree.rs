mod common;

use arakelov::places::Place;
use arakelov::tree::*;
use arakelov::{Error, Rational};
use common::*;
use proptest::prelude::*;

type PointMap<'a> = Box<dyn Fn(&TreePoint) -> TreePoint + 'a>;

fn pt(c: i64, lr: f64) -> TreePoint {
    TreePoint::from_int(c, lr)
}

#[test]
fn join_examples() {
    let p5 = Place::finite(5).unwrap();
    assert_eq!(join(&pt(0, 0.0), &pt(0, 2.0), &p5).unwrap(), pt(0, 2.0));
    let j = join(&pt(0, 0.0), &pt(5, 0.0), &p5).unwrap();
    assert!(same_point(&j, &pt(0, 0.0), &p5, 0.0).unwrap());
    let p7 = Place::finite(7).unwrap();
    let j = join(&pt(1, -1.0), &pt(2, -1.0), &p7).unwrap();
    assert!(same_point(&j, &pt(1, 0.0), &p7, 0.0).unwrap());
}

#[test]
fn kernel_examples() {
    let p3 = Place::finite(3).unwrap();
    assert_eq!(hsia_log_kernel(&pt(0, 0.0), &pt(0, 0.0), &p3).unwrap(), 0.0);
    assert_eq!(hsia_log_kernel(&pt(0, 1.0), &pt(0, 3.0), &p3).unwrap(), 3.0);
    let k = hsia_log_kernel(&TreePoint::classical(qi(0)), &TreePoint::classical(qi(3)), &p3).unwrap();
    assert!(close(k, -(3f64).ln(), 1e-15));
    assert_eq!(hsia_log_kernel(&pt(0, 0.0), &pt(0, 0.0), &Place::archimedean()), Err(Error::NotFinitePlace));
}

#[test]
fn path_length_examples() {
    let p5 = Place::finite(5).unwrap();
    assert_eq!(path_length(&pt(0, 0.0), &pt(0, 2.0), &p5).unwrap(), 2.0);
    assert_eq!(path_length(&pt(3, 0.5), &pt(3, 0.5), &p5).unwrap(), 0.0);
    assert_eq!(path_length(&pt(0, -1.0), &pt(1, -1.0), &p5).unwrap(), 2.0);
    assert_eq!(path_length(&TreePoint::classical(qi(0)), &pt(0, 0.0), &p5), Err(Error::Type1Endpoint));
}

#[test]
fn segment_examples() {
    let p5 = Place::finite(5).unwrap();
    assert_eq!(segment_between(&pt(0, 0.0), &pt(0, 1.0), &p5).unwrap().length(), 1.0);
    assert!(segment_between(&pt(2, 0.3), &pt(2, 0.3), &p5).unwrap().is_singleton());
    let s = segment_between(&pt(0, -1.0), &pt(1, -1.0), &p5).unwrap();
    assert_eq!(s.length(), 2.0);
    assert!(same_point(&s.point_at(1.0), &TreePoint::gauss(), &p5, 0.0).unwrap());
}

#[test]
fn inversion_law() {
    let p3 = Place::finite(3).unwrap();
    // |9|_3 = 1/9; radius below it moves to a disk around 1/9.
    let x = TreePoint::inverted(qi(9), -3.0 * 3f64.ln());
    let d = x.to_direct(&p3).unwrap();
    assert_eq!(d.center, q(1, 9));
    assert!(close(d.log_radius, -3.0 * 3f64.ln() + 4.0 * 3f64.ln(), 1e-12));
    let y = TreePoint::inverted(qi(0), 2.0).to_direct(&p3).unwrap();
    assert_eq!(y, TreePoint::new(qi(0), -2.0));
    assert_eq!(TreePoint::infinity().to_direct(&p3), Err(Error::ChartMismatch));
    let g = TreePoint::gauss().invert(&p3).unwrap();
    assert!(same_point(&g, &TreePoint::gauss(), &p3, 0.0).unwrap());
}

#[test]
fn classify_examples() {
    let p5 = Place::finite(5).unwrap();
    let ia = segment_between(&pt(0, 0.0), &pt(0, 1.0), &p5).unwrap();
    let ib = segment_between(&pt(0, 2.0), &pt(0, 3.0), &p5).unwrap();
    match classify_pair(&ia, &ib).unwrap() {
        PairConfiguration::Disjoint { a_pieces, b_pieces, gap } => {
            assert_eq!(a_pieces.0 * a_pieces.1, 0.0);
            assert_eq!(b_pieces.0 * b_pieces.1, 0.0);
            assert_eq!(a_pieces, (1.0, 0.0));
            assert_eq!(b_pieces, (0.0, 1.0));
            assert_eq!(gap, 1.0);
        }
        other => panic!("{other:?}"),
    }
    let c = classify_pair(&ia, &ia).unwrap();
    assert_eq!(c, PairConfiguration::Meeting { shared: 1.0, a_pieces: (0.0, 0.0), b_pieces: (0.0, 0.0) });
    let ia = segment_between(&pt(0, 0.0), &pt(0, 4.0), &p5).unwrap();
    let ib = segment_between(&pt(0, 1.0), &pt(0, 2.0), &p5).unwrap();
    assert_eq!(
        classify_pair(&ia, &ib).unwrap(),
        PairConfiguration::Meeting { shared: 1.0, a_pieces: (1.0, 2.0), b_pieces: (0.0, 0.0) }
    );
    let other = Segment::singleton(&pt(0, 0.0), &Place::finite(7).unwrap()).unwrap();
    assert_eq!(classify_pair(&ia, &other), Err(Error::PlaceMismatch));
}

#[test]
fn touching_segments_are_disjoint() {
    let p3 = Place::finite(3).unwrap();
    let ia = segment_between(&pt(0, -2.0), &pt(0, 0.0), &p3).unwrap();
    let ib = segment_between(&pt(0, 0.0), &pt(1, -1.0), &p3).unwrap();
    match classify_pair(&ia, &ib).unwrap() {
        PairConfiguration::Disjoint { gap, .. } => assert!(gap.abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    let i = intersection(&ia, &ib).unwrap().unwrap();
    assert!(i.is_singleton());
}

fn place_strategy() -> impl Strategy<Value = Place> {
    prop::sample::select(vec![3u64, 5, 7]).prop_map(|p| Place::finite(p).unwrap())
}

/// Type-2/3 points with small centers and bounded radii.
fn point_strategy() -> impl Strategy<Value = TreePoint> {
    (rational(30), -4.0f64..3.0, any::<bool>())
        .prop_map(|(c, lr, round)| TreePoint::new(c, if round { lr.round() } else { lr }))
}

fn tuple(c: &PairConfiguration) -> Vec<f64> {
    match *c {
        PairConfiguration::Disjoint { a_pieces, b_pieces, gap } => {
            vec![0.0, a_pieces.0, a_pieces.1, b_pieces.0, b_pieces.1, gap]
        }
        PairConfiguration::Meeting { shared, a_pieces, b_pieces } => {
            vec![1.0, shared, a_pieces.0, a_pieces.1, b_pieces.0, b_pieces.1]
        }
    }
}

fn moved(seg: &Segment, f: &dyn Fn(&TreePoint) -> TreePoint) -> Segment {
    segment_between(&f(seg.start()), &f(seg.end()), seg.place()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kernel_rules(x in point_strategy(), y in point_strategy(), v in place_strategy()) {
        let k = hsia_log_kernel(&x, &y, &v).unwrap();
        prop_assert_eq!(k, hsia_log_kernel(&y, &x, &v).unwrap());
        prop_assert_eq!(hsia_log_kernel(&x, &x, &v).unwrap(), x.log_radius);
        let j = join(&x, &y, &v).unwrap();
        prop_assert!(same_point(&j, &join(&y, &x, &v).unwrap(), &v, 1e-12).unwrap());
        prop_assert!(same_point(&join(&j, &x, &v).unwrap(), &j, &v, 1e-12).unwrap());
        let raised = TreePoint::new(x.center.clone(), x.log_radius + 1.0);
        prop_assert!(hsia_log_kernel(&raised, &y, &v).unwrap() >= k);
    }

    #[test]
    fn metric_axioms(x in point_strategy(), y in point_strategy(), z in point_strategy(), v in place_strategy()) {
        let dxy = path_length(&x, &y, &v).unwrap();
        let dyz = path_length(&y, &z, &v).unwrap();
        let dxz = path_length(&x, &z, &v).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-12);
        prop_assert_eq!(dxy, path_length(&y, &x, &v).unwrap());
        let s = segment_between(&x, &y, &v).unwrap();
        let t = 0.37 * s.length();
        let m = s.point_at(t);
        prop_assert!(close(path_length(&x, &m, &v).unwrap() + path_length(&m, &y, &v).unwrap(), dxy, 1e-12));
    }

    #[test]
    fn classify_reconstructs_lengths(a0 in point_strategy(), a1 in point_strategy(), b0 in point_strategy(), b1 in point_strategy(), v in place_strategy()) {
        let ia = segment_between(&a0, &a1, &v).unwrap();
        let ib = segment_between(&b0, &b1, &v).unwrap();
        let cfg = classify_pair(&ia, &ib).unwrap();
        let (la, lb) = cfg.lengths();
        prop_assert!(close(la, ia.length(), 1e-12 * (1.0 + la)));
        prop_assert!(close(lb, ib.length(), 1e-12 * (1.0 + lb)));
        for x in tuple(&cfg) {
            prop_assert!(x >= 0.0);
        }
    }

    #[test]
    fn classify_mobius_invariance(a0 in point_strategy(), a1 in point_strategy(), b0 in point_strategy(), b1 in point_strategy(), v in place_strategy(), c in nonzero_rational(20)) {
        let ia = segment_between(&a0, &a1, &v).unwrap();
        let ib = segment_between(&b0, &b1, &v).unwrap();
        let base = tuple(&classify_pair(&ia, &ib).unwrap());
        let maps: Vec<PointMap<'_>> = vec![
            Box::new(|p: &TreePoint| p.translate(&c, &v).unwrap()),
            Box::new(|p: &TreePoint| p.scale(&c, &v).unwrap()),
            Box::new(|p: &TreePoint| p.invert(&v).unwrap()),
        ];
        for f in &maps {
            let t = tuple(&classify_pair(&moved(&ia, f.as_ref()), &moved(&ib, f.as_ref())).unwrap());
            prop_assert_eq!(t[0], base[0]);
            for (x, y) in t.iter().zip(&base) {
                prop_assert!(close(*x, *y, 1e-12 * (1.0 + ia.length() + ib.length()) * 10.0), "{:?} vs {:?}", t, base);
            }
        }
    }
}

#[test]
fn json_round_trip() {
    let p = TreePoint::new(q(3, 4), -1.25);
    let c = TreePoint::classical(q(-2, 5));
    for x in [p, c] {
        let back: TreePoint = serde_json_value(&x);
        assert_eq!(back, x);
    }
    let _ = Rational::from_integer(0.into());
}

fn serde_json_value(x: &TreePoint) -> TreePoint {
    let s = serde_json::to_string(x).unwrap();
    serde_json::from_str(&s).unwrap()
}
