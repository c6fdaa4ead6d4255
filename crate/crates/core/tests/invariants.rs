use std::f64::consts::PI;

use hypervol::extension::greedy_packing;
use hypervol::hull::{contains, convex_hull};
use hypervol::klein::{dist, KleinPoint};
use hypervol::rng::stream_rng;
use hypervol::volume::{hull_volume, triangle_area_2d, TriangleVertex};
use hypervol::{Budget, IdealPoint, Isometry, VolumeMethod};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn point(n: usize) -> impl Strategy<Value = KleinPoint> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("inside", |v| v.iter().map(|x| x * x).sum::<f64>() < 0.97)
        .prop_map(|v| KleinPoint::new(v).unwrap())
}

fn cloud(n: usize, lo: usize, hi: usize) -> impl Strategy<Value = Vec<KleinPoint>> {
    prop::collection::vec(point(n), lo..hi)
}

/// Brute-force membership: `p` lies in the hull iff it lies in a simplex
/// spanned by some `n + 1` of the points.
fn in_some_simplex(points: &[KleinPoint], p: &[f64]) -> bool {
    let n = p.len();
    let k = points.len();
    let mut idx: Vec<usize> = (0..=n).collect();
    loop {
        let base = points[idx[0]].coords();
        let m = DMatrix::from_fn(n, n, |r, c| points[idx[c + 1]].coords()[r] - base[r]);
        let rhs = DVector::from_fn(n, |r, _| p[r] - base[r]);
        if let Some(w) = m.lu().solve(&rhs) {
            let sum: f64 = w.iter().sum();
            if w.iter().all(|&x| x >= -1e-9) && sum <= 1.0 + 1e-9 {
                return true;
            }
        }
        // Next combination.
        let mut i = n;
        loop {
            if idx[i] < k - (n + 1 - i) {
                idx[i] += 1;
                for j in i + 1..=n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return false;
            }
            i -= 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(p in point(3), q in point(3), r in point(3)) {
        let pq = dist(&p, &q).unwrap();
        prop_assert!((pq - dist(&q, &p).unwrap()).abs() <= 1e-9 * pq.max(1.0));
        prop_assert!(dist(&p, &p).unwrap().abs() < 1e-7);
        prop_assert!(pq <= dist(&p, &r).unwrap() + dist(&r, &q).unwrap() + 1e-9);
    }

    #[test]
    fn isometries_preserve_distance(p in point(3), q in point(3), seed in 0u64..1000) {
        let iso = Isometry::random(&mut stream_rng(seed, 0), 3, 2.0);
        prop_assert!(iso.minkowski_defect() < 1e-9);
        let before = dist(&p, &q).unwrap();
        let after = dist(&iso.apply(&p).unwrap(), &iso.apply(&q).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-7 * before.max(1.0));
    }

    #[test]
    fn planar_hull_matches_brute_force_membership(pts in cloud(2, 3, 9), probes in prop::collection::vec(point(2), 20)) {
        let Ok(poly) = convex_hull(&pts) else { return Ok(()) };
        for p in &pts {
            prop_assert!(contains(&poly, p));
        }
        for q in &probes {
            // Skip probes within rounding distance of the boundary.
            let slack = poly.max_slack(q.coords());
            if slack.abs() > 1e-7 {
                prop_assert_eq!(slack < 0.0, in_some_simplex(&pts, q.coords()));
            }
        }
    }

    #[test]
    fn spatial_hull_matches_brute_force_membership(pts in cloud(3, 4, 9), probes in prop::collection::vec(point(3), 20)) {
        let Ok(poly) = convex_hull(&pts) else { return Ok(()) };
        for q in &probes {
            let slack = poly.max_slack(q.coords());
            if slack.abs() > 1e-7 {
                prop_assert_eq!(slack < 0.0, in_some_simplex(&pts, q.coords()));
            }
        }
    }

    #[test]
    fn planar_hull_volume_is_monotone(pts in cloud(2, 4, 12), extra in point(2)) {
        let budget = Budget::default();
        let small = hull_volume(&pts, VolumeMethod::Exact2d, &budget, 0).unwrap().value;
        let mut more = pts.clone();
        more.push(extra);
        let large = hull_volume(&more, VolumeMethod::Exact2d, &budget, 0).unwrap().value;
        prop_assert!(large >= small - 1e-9 * small.max(1.0));
        prop_assert!(large <= (more.len() as f64 - 2.0) * PI);
    }

    #[test]
    fn triangle_area_is_below_pi(a in point(2), b in point(2), c in point(2)) {
        let area = triangle_area_2d(&a.into(), &b.into(), &c.into()).unwrap();
        prop_assert!((0.0..PI).contains(&area));
    }

    #[test]
    fn greedy_packing_is_maximal(pts in cloud(2, 1, 40), eps in 0.2f64..2.0, seed in 0u64..100) {
        let pack = greedy_packing(&pts, eps, seed).unwrap();
        prop_assert!(pack.is_separated());
        prop_assert!(pack.covers(&pts));
        prop_assert!(!pack.is_empty() && pack.len() <= pts.len());
    }
}

#[test]
fn ideal_triangle_has_area_pi() {
    let v: Vec<TriangleVertex> = [0.3f64, 2.0, 4.4]
        .iter()
        .map(|a| IdealPoint::new(vec![a.cos(), a.sin()]).unwrap().into())
        .collect();
    assert!((triangle_area_2d(&v[0], &v[1], &v[2]).unwrap() - PI).abs() < 1e-12);
}
