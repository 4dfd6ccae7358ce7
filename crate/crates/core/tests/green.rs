mod common;

use arakelov::energy_ua::{kernel_pairing, segment_pairing_with_point};
use arakelov::green::LattesDynamics;
use arakelov::lattes::{lattes_segment, LegendreParam, ProjPoint, Quadruple};
use arakelov::places::Place;
use arakelov::tree::TreePoint;
use common::*;
use proptest::prelude::*;

fn quad_strategy() -> impl Strategy<Value = Quadruple> {
    (prop::collection::vec(nonzero_rational(30), 3), any::<bool>()).prop_filter_map("distinct", |(xs, with_inf)| {
        let last = if with_inf { ProjPoint::Infinity } else { ProjPoint::int(0) };
        Quadruple::new([
            ProjPoint::Finite(xs[0].clone()),
            ProjPoint::Finite(xs[1].clone()),
            ProjPoint::Finite(xs[2].clone()),
            last,
        ])
        .ok()
    })
}

#[test]
fn legendre_identity_frame() {
    let dyn2 = LattesDynamics::legendre(LegendreParam::from_int(2).unwrap());
    // Preperiodic points have zero canonical height: local terms cancel over all places.
    let mut total = 0.0;
    for v in [Place::archimedean(), Place::finite(2).unwrap()] {
        total += dyn2.self_pairing(&v).unwrap() / 2.0 - dyn2.point_pairing(&ProjPoint::int(0), &v).unwrap();
    }
    assert!(total.abs() < 1e-10, "{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn escape_potential_matches_segment(g in quad_strategy(), x in rational(40), p in prop::sample::select(vec![3u64, 5, 7])) {
        prop_assume!(!g.contains_finite(&x));
        let v = Place::finite(p).unwrap();
        let d = LattesDynamics::from_quadruple(&g).unwrap();
        let seg = lattes_segment(&g, &v).unwrap();
        let via_segment = segment_pairing_with_point(&seg, &TreePoint::classical(x.clone())).unwrap();
        let via_green = d.point_pairing(&ProjPoint::Finite(x), &v).unwrap();
        prop_assert!(close(via_segment, via_green, 1e-9), "{} vs {}", via_segment, via_green);
        let arcs = arakelov::energy_ua::ArcMeasure::from_segment(&seg);
        let self_seg = kernel_pairing(&arcs, &arcs, &v);
        prop_assert!(close(self_seg, d.self_pairing(&v).unwrap(), 1e-9), "{} vs {}", self_seg, d.self_pairing(&v).unwrap());
    }
}
