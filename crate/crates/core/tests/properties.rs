//! Property tests for invariants that hold for every input, not just the fixtures.

use std::collections::BTreeSet;

use fanforge::analyze::{interval_hausdorff, label_partition, partition_battery, Scheme};
use fanforge::closedset::{classify_feasibility, parse_set_expr, ClosedSetDesc, FeasibilityVerdict};
use fanforge::comb::{validate_comb, Comb, FanPoint};
use fanforge::construct::build_epg_comb;
use fanforge::geometry::{hausdorff_arc_distance, EmbeddedArc};
use fanforge::homeo::{endpoint_swap, self_similar_map, verify_tip_shift_identity};
use fanforge::io::{decode_comb, encode_comb};
use fanforge::pwl::PiecewiseLinearMap;
use fanforge::rational::{parse_q, to_decimal, to_f64};
use fanforge::Q;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Strictly increasing rationals in `(0, 1)` with denominator 64.
fn interior_points(max: usize) -> impl Strategy<Value = Vec<Q>> {
    proptest::collection::btree_set(1i64..64, 1..=max).prop_map(|s| s.into_iter().map(|n| q(n, 64)).collect())
}

fn pwl_map() -> impl Strategy<Value = PiecewiseLinearMap> {
    (interior_points(5), interior_points(5)).prop_map(|(mut xs, mut ys)| {
        let k = xs.len().min(ys.len());
        xs.truncate(k);
        ys.truncate(k);
        let mut pts = vec![(q(0, 1), q(0, 1))];
        pts.extend(xs.into_iter().zip(ys));
        pts.push((q(1, 1), q(1, 1)));
        PiecewiseLinearMap::new(pts).unwrap()
    })
}

/// `{0} ∪ F` for a finite `F ⊂ (0, 1)`.
fn zero_set() -> impl Strategy<Value = ClosedSetDesc> {
    interior_points(3).prop_map(|pts| {
        let body: Vec<String> = pts.iter().map(|p| format!("pt({p})")).collect();
        parse_set_expr(&format!("pt(0)+{}", body.join("+"))).unwrap()
    })
}

fn unit() -> impl Strategy<Value = Q> {
    (0i64..=96).prop_map(|n| q(n, 96))
}

fn arc() -> impl Strategy<Value = EmbeddedArc> {
    proptest::collection::vec((0i64..=32, 0i64..=32, 0i64..=8), 1..4).prop_map(|pts| {
        let mut points = vec![[q(1, 2), q(0, 1), q(0, 1)]];
        points.extend(pts.into_iter().map(|(x, y, z)| [q(x, 32), q(y, 32), q(z, 32)]));
        EmbeddedArc { points }
    })
}

fn tips(c: &Comb) -> Vec<FanPoint> {
    c.blades().iter().map(|b| FanPoint::on(b.index.clone(), b.tip.clone())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pwl_inverse_undoes_eval(f in pwl_map(), x in unit()) {
        let y = f.eval(&x).unwrap();
        prop_assert_eq!(f.inverse_eval(&y).unwrap(), x.clone());
        prop_assert_eq!(f.inverse().eval(&y).unwrap(), x);
    }

    #[test]
    fn pwl_composition_matches_pointwise(f in pwl_map(), g in pwl_map(), x in unit()) {
        let h = f.then(&g).unwrap();
        prop_assert_eq!(h.eval(&x).unwrap(), g.eval(&f.eval(&x).unwrap()).unwrap());
    }

    #[test]
    fn pwl_is_strictly_increasing(f in pwl_map(), a in unit(), b in unit()) {
        prop_assume!(a < b);
        prop_assert!(f.eval(&a).unwrap() < f.eval(&b).unwrap());
    }

    #[test]
    fn set_expressions_round_trip(x in zero_set()) {
        prop_assert_eq!(parse_set_expr(&x.to_string()).unwrap(), x);
    }

    #[test]
    fn zero_without_one_is_feasible(x in zero_set()) {
        prop_assert!(matches!(classify_feasibility(&x), FeasibilityVerdict::Feasible(_)));
    }

    #[test]
    fn decimals_are_within_half_ulp(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
        let v = q(n, d);
        let text = to_decimal(&v, 12);
        let back = parse_decimal(&text);
        let tol = q(1, 2_000_000_000_000);
        let d = back - v;
        prop_assert!(d <= tol && d >= -tol.clone());
    }

    #[test]
    fn hausdorff_interval_is_symmetric(a in arc(), b in arc()) {
        let (lo1, hi1) = hausdorff_arc_distance(&a, &b, 1e-4);
        let (lo2, hi2) = hausdorff_arc_distance(&b, &a, 1e-4);
        prop_assert!(lo1 <= hi1 && lo2 <= hi2);
        prop_assert!(lo1 <= hi2 + 1e-12 && lo2 <= hi1 + 1e-12);
        prop_assert!(hi1 - lo1 <= 1e-4 + 1e-9);
    }

    #[test]
    fn hausdorff_triangle_inequality(a in arc(), b in arc(), c in arc()) {
        let (lo_ac, _) = hausdorff_arc_distance(&a, &c, 1e-4);
        let (_, hi_ab) = hausdorff_arc_distance(&a, &b, 1e-4);
        let (_, hi_bc) = hausdorff_arc_distance(&b, &c, 1e-4);
        prop_assert!(lo_ac <= hi_ab + hi_bc + 1e-9);
    }

    #[test]
    fn hausdorff_bounds_endpoint_distance(a in arc(), b in arc()) {
        // Each vertex of `a` lies within the upper bound of `b`.
        let (_, hi) = hausdorff_arc_distance(&a, &b, 1e-4);
        let far = a.points.iter().map(|p| {
            b.points.windows(2).map(|w| seg_dist(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
                .min(if b.points.len() == 1 { dist(p, &b.points[0]) } else { f64::INFINITY })
        }).fold(0.0, f64::max);
        prop_assert!(far <= hi + 1e-9);
    }

    #[test]
    fn interval_hausdorff_is_symmetric_and_triangular(
        a in interior_points(4), b in interior_points(4), c in interior_points(4)
    ) {
        let iv = |v: &[Q]| v.iter().map(|x| (x.clone(), x.clone())).collect::<Vec<_>>();
        let (a, b, c) = (iv(&a), iv(&b), iv(&c));
        let ab = interval_hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab.clone(), interval_hausdorff(&b, &a).unwrap());
        prop_assert!(interval_hausdorff(&a, &c).unwrap() <= ab + interval_hausdorff(&b, &c).unwrap());
        prop_assert_eq!(interval_hausdorff(&a, &a).unwrap(), q(0, 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn built_combs_are_valid_and_round_trip(x in zero_set(), depth in 1usize..=3, branch in 2usize..=4) {
        let c = build_epg_comb(&x, depth, branch).unwrap();
        prop_assert!(validate_comb(&c).is_empty());
        let text = encode_comb(&c);
        let back = decode_comb(&text).unwrap();
        prop_assert_eq!(encode_comb(&back), text);
        prop_assert_eq!(back, c);
    }

    #[test]
    fn swaps_are_tip_involutions(x in zero_set(), i in 0usize..40, j in 0usize..40) {
        let c = build_epg_comb(&x, 2, 3).unwrap();
        let idx: Vec<_> = c.blades().iter().map(|b| b.index.clone()).collect();
        let (a, b) = (&idx[i % idx.len()], &idx[j % idx.len()]);
        prop_assume!(a != b);
        let h = endpoint_swap(&c, a, b).unwrap();
        let all = tips(&c);
        let key = |p: &FanPoint| format!("{p:?}");
        let before: BTreeSet<String> = all.iter().map(key).collect();
        let after: BTreeSet<String> = all.iter().map(|p| key(&h.apply(p))).collect();
        prop_assert_eq!(before, after);
        for p in &all {
            prop_assert_eq!(&h.apply(&h.apply(p)), p);
        }
    }

    #[test]
    fn self_similar_map_sends_tip_to_top_blade(x in zero_set(), n in 1u32..=3) {
        let c = build_epg_comb(&x, 3, 3).unwrap();
        let b = c.blade(&[n]).unwrap();
        let (u, v) = self_similar_map(&c, &[n], (&b.x, &b.tip)).unwrap();
        prop_assert_eq!((u, v), (q(0, 1), q(1, 1)));
    }

    #[test]
    fn tip_shift_identity_holds(x in zero_set(), n in 1u32..=3) {
        let c = build_epg_comb(&x, 3, 3).unwrap();
        prop_assert!(verify_tip_shift_identity(&c, &[n], 3).unwrap().pass);
    }

    #[test]
    fn swaps_preserve_odd_labels(i in 0usize..60, j in 0usize..60) {
        let c = build_epg_comb(&parse_set_expr("pt(0)+pt(1/3)+pt(2/3)").unwrap(), 3, 4).unwrap();
        let idx: Vec<_> = c.blades().iter().map(|b| b.index.clone()).collect();
        let (a, b) = (&idx[i % idx.len()], &idx[j % idx.len()]);
        prop_assume!(a != b);
        let h = endpoint_swap(&c, a, b).unwrap();
        for p in partition_battery(&c, Scheme::Odd(2), 40).unwrap() {
            prop_assert_eq!(
                label_partition(&c, &h.apply(&p), Scheme::Odd(2)).unwrap(),
                label_partition(&c, &p, Scheme::Odd(2)).unwrap()
            );
        }
    }
}

fn parse_decimal(s: &str) -> Q {
    let neg = s.starts_with('-');
    let body = s.trim_start_matches('-');
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = format!("{int}{frac}");
    let v = parse_q(&format!("{digits}/1{}", "0".repeat(frac.len()))).unwrap();
    if neg {
        -v
    } else {
        v
    }
}

fn dist(p: &[Q; 3], r: &[Q; 3]) -> f64 {
    (0..3).map(|k| (to_f64(&p[k]) - to_f64(&r[k])).powi(2)).sum::<f64>().sqrt()
}

fn seg_dist(p: &[Q; 3], a: &[Q; 3], b: &[Q; 3]) -> f64 {
    let f = |v: &[Q; 3]| [to_f64(&v[0]), to_f64(&v[1]), to_f64(&v[2])];
    let (p, a, b) = (f(p), f(a), f(b));
    let ab: Vec<f64> = (0..3).map(|k| b[k] - a[k]).collect();
    let ap: Vec<f64> = (0..3).map(|k| p[k] - a[k]).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 == 0.0 { 0.0 } else { (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0) };
    (0..3).map(|k| (a[k] + t * ab[k] - p[k]).powi(2)).sum::<f64>().sqrt()
}
