//! Invariant battery run by `arakelov suite`.

use arakelov::adelic::{self, fractions_of_height, random_config};
use arakelov::energy_arch::{self, ArchMeasure, QuadratureOptions};
use arakelov::energy_ua::{self, SegmentMeasure};
use arakelov::lattes::{self, LegendreParam, ProjPoint, Quadruple};
use arakelov::places::{self, Place};
use arakelov::tree::{self, TreePoint};
use arakelov::{Complex, Rational};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::arch_options;
use crate::{Context, Failure};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn rational(rng: &mut ChaCha8Rng, h: i64) -> Rational {
    Rational::new(BigInt::from(rng.gen_range(-h..=h)), BigInt::from(rng.gen_range(1..=h)))
}

fn nonzero(rng: &mut ChaCha8Rng, h: i64) -> Rational {
    loop {
        let x = rational(rng, h);
        if x != Rational::from_integer(0.into()) {
            return x;
        }
    }
}

fn odd_place(rng: &mut ChaCha8Rng) -> Place {
    Place::finite([3u64, 5, 7][rng.gen_range(0..3)]).expect("prime")
}

fn tree_point(rng: &mut ChaCha8Rng) -> TreePoint {
    TreePoint::new(rational(rng, 12), rng.gen_range(-3.0..2.5))
}

fn segment(rng: &mut ChaCha8Rng, v: &Place) -> arakelov::Result<SegmentMeasure> {
    let a = tree_point(rng);
    let b = if rng.gen_bool(0.25) { a.clone() } else { tree_point(rng) };
    SegmentMeasure::between(&a, &b, v)
}

fn quadruple(rng: &mut ChaCha8Rng) -> Quadruple {
    loop {
        let mut pts: Vec<ProjPoint> = (0..4).map(|_| ProjPoint::Finite(rational(rng, 30))).collect();
        if rng.gen_bool(0.5) {
            pts[rng.gen_range(0..4)] = ProjPoint::Infinity;
        }
        if let Ok(q) = Quadruple::new([pts[0].clone(), pts[1].clone(), pts[2].clone(), pts[3].clone()]) {
            return q;
        }
    }
}

fn battery(ctx: &Context) -> arakelov::Result<Vec<Check>> {
    let quick = ctx.global.quick;
    let scale = |full: usize, small: usize| if quick { small } else { full };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut checks = Vec::new();

    let n = scale(1000, 100);
    let mut worst: f64 = 0.0;
    let mut asymmetric = 0;
    for _ in 0..n {
        let x = nonzero(&mut rng, 1_000_000);
        worst = worst.max(places::product_formula_residual(&x)?.abs());
        if places::affine_height(std::slice::from_ref(&x)) != places::affine_height(&[x.recip()]) {
            asymmetric += 1;
        }
    }
    checks.push(Check {
        name: "product_formula",
        pass: worst <= 1e-12,
        detail: format!("{n} rationals, max residual {worst:.2e}"),
    });
    checks.push(Check { name: "height_inversion", pass: asymmetric == 0, detail: format!("{asymmetric}/{n} differ") });

    let n = scale(100, 20);
    let oracle_n = if quick { ctx.global.oracle_n.min(200) } else { ctx.global.oracle_n };
    let (mut bad_oracle, mut bad_bounds, mut worst_union) = (0, 0, 0f64);
    for _ in 0..n {
        let v = odd_place(&mut rng);
        let (a, b) = (segment(&mut rng, &v)?, segment(&mut rng, &v)?);
        let closed = energy_ua::energy_closed_form(&a, &b, &v)?;
        let oracle = energy_ua::energy_oracle(&a, &b, &v, oracle_n)?;
        let gap = match tree::classify_pair(&a.support, &b.support)? {
            tree::PairConfiguration::Disjoint { gap, .. } => gap,
            tree::PairConfiguration::Meeting { .. } => 0.0,
        };
        if (closed - oracle).abs() > 1e-2f64.max(3.0 * (a.length() + b.length() + gap) / oracle_n as f64) {
            bad_oracle += 1;
        }
        if !energy_ua::lower_bound_report(&a, &b, &v, None)?.all_hold() {
            bad_bounds += 1;
        }
        let whole = tree::segment_between(&tree_point(&mut rng), &tree_point(&mut rng), &v)?;
        let mid = whole.point_at(rng.gen_range(0.0..1.0) * whole.length());
        let p1 = SegmentMeasure::between(whole.start(), &mid, &v)?;
        let p2 = SegmentMeasure::between(&mid, whole.end(), &v)?;
        let (l, r) = energy_ua::energy_union_check(&a, &p1, &p2, &v)?;
        worst_union = worst_union.max((l - r).abs());
    }
    checks.push(Check {
        name: "closed_form_vs_oracle",
        pass: bad_oracle == 0,
        detail: format!("{bad_oracle}/{n} outside tolerance, oracle n = {oracle_n}"),
    });
    checks.push(Check {
        name: "valid_lower_bounds",
        pass: bad_bounds == 0,
        detail: format!("{bad_bounds}/{n} violated"),
    });
    checks.push(Check {
        name: "union_recursion",
        pass: worst_union <= 1e-10,
        detail: format!("max difference {worst_union:.2e}"),
    });

    let n = scale(500, 50);
    let mut mismatched = 0;
    for _ in 0..n {
        let q = quadruple(&mut rng);
        let p = [3u64, 5, 7, 11][rng.gen_range(0..4)];
        let v = Place::finite(p)?;
        let seg = lattes::lattes_segment(&q, &v)?;
        if tree::length_units(seg.length(), &v) != Some(lattes::lattes_length_units(&q, p)) {
            mismatched += 1;
        }
    }
    checks.push(Check {
        name: "segment_length_units",
        pass: mismatched == 0,
        detail: format!("{mismatched}/{n} mismatched"),
    });

    let n = scale(100, 20);
    let pool = fractions_of_height(20);
    let (mut nonzero_outside, mut flow_worst, mut ineq_bad) = (0, 0f64, 0);
    for _ in 0..n {
        let cfg = random_config(&mut rng, &pool);
        let relevant: Vec<u64> = adelic::relevant_places(&cfg)?.iter().filter_map(|v| v.prime()).collect();
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let v = Place::finite(p)?;
            let e = adelic::local_config_energy(&cfg, &v)?;
            if !relevant.contains(&p) && e != 0.0 {
                nonzero_outside += 1;
            }
            for eps in [0.5, 2.0] {
                flow_worst =
                    flow_worst.max((adelic::local_config_energy(&cfg, &v.with_epsilon(eps)?)? - eps * e).abs());
            }
        }
        if !adelic::inequality_suite(&cfg)?.all_hold() {
            ineq_bad += 1;
        }
    }
    checks.push(Check {
        name: "almost_all_places_vanish",
        pass: nonzero_outside == 0,
        detail: format!("{nonzero_outside} nonzero entries outside relevant places"),
    });
    checks.push(Check {
        name: "flow_linearity",
        pass: flow_worst <= 1e-12,
        detail: format!("max deviation {flow_worst:.2e}"),
    });
    checks.push(Check { name: "height_inequalities", pass: ineq_bad == 0, detail: format!("{ineq_bad}/{n} violated") });

    let o = Complex::new(0.0, 0.0);
    let unit = ArchMeasure::Circle { center: o, radius: 1.0 };
    let small = ArchMeasure::Circle { center: o, radius: (-1.0f64).exp() };
    let closed = energy_arch::pair_energy_arch(&unit, &small, QuadratureOptions::default())?;
    let quad = energy_arch::pair_energy_arch(&unit, &small, QuadratureOptions { tol: 1e-9, force: true })?;
    checks.push(Check {
        name: "circle_closed_form",
        pass: (closed - 0.5).abs() <= 1e-15 && (quad - 0.5).abs() <= 1e-6,
        detail: format!("closed {closed}, quadrature {quad:.9}"),
    });

    let n = scale(100, 20);
    let mut escaped = 0;
    for _ in 0..n {
        let lam = nonzero(&mut rng, 1000);
        let Ok(l) = LegendreParam::new(lam.clone()) else { continue };
        for p in [ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Finite(lam), ProjPoint::Infinity] {
            if lattes::legendre_lattes_eval(&l, &p) != ProjPoint::Infinity {
                escaped += 1;
            }
        }
    }
    checks.push(Check {
        name: "postcritical_set",
        pass: escaped == 0,
        detail: format!("{escaped} branch points not sent to infinity"),
    });

    let (qa, qb) = (LegendreParam::from_int(2)?.quadruple(), LegendreParam::from_int(3)?.quadruple());
    let level0 = adelic::bft_scan(&qa, &qb, 0, ctx.global.tol)?.count;
    checks.push(Check {
        name: "common_branch_points",
        pass: level0 == 3,
        detail: format!("{level0} common points at level 0"),
    });

    let samples = arch_options(ctx).samples;
    let two = Complex::new(2.0, 0.0);
    let a = energy_arch::sample_lattes_complex(two, samples, ctx.seed, 200)?;
    let b = energy_arch::sample_lattes_complex(two, samples, ctx.seed.wrapping_add(1), 200)?;
    let same = energy_arch::cloud_energy(&a, &b)?.value;
    checks.push(Check {
        name: "sampled_self_energy",
        pass: same.abs() <= 0.05,
        detail: format!("{samples} samples, energy {same:.2e}"),
    });

    Ok(checks)
}

pub fn run(ctx: &Context) -> Result<Value, Failure> {
    let checks = battery(ctx)?;
    let all_pass = checks.iter().all(|c| c.pass);
    let list: Vec<Value> =
        checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail })).collect();
    let out = json!({ "quick": ctx.global.quick, "checks": list, "all_pass": all_pass });
    if all_pass {
        Ok(out)
    } else {
        Err(Failure::Checks(out))
    }
}

/// Explicit-constant inequalities over `count` random configurations.
pub fn inequalities(count: usize, height: i64, seed: u64) -> Result<Value, Failure> {
    let pool = fractions_of_height(height.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut failed, mut worst_ratio) = (Vec::new(), 0f64);
    for _ in 0..count {
        let cfg = random_config(&mut rng, &pool);
        let r = adelic::inequality_suite(&cfg)?;
        if r.h_f2 > 0.0 {
            worst_ratio = worst_ratio.max(r.h_ab / r.h_f2);
        }
        if !r.all_hold() {
            failed.push(serde_json::to_value(&cfg).expect("serializable"));
        }
    }
    let out =
        json!({ "count": count, "failed": failed, "max_h_ab_over_h_f2": worst_ratio, "all_hold": failed.is_empty() });
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(Failure::Checks(out))
    }
}
