use bosonize::lattice::*;
use bosonize::model::Radius;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn n2(p: IVec3) -> i64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

fn cube(b: i64) -> impl Iterator<Item = IVec3> {
    (-b..=b).flat_map(move |x| (-b..=b).flat_map(move |y| (-b..=b).map(move |z| [x, y, z])))
}

fn radius(r2: i64) -> Radius {
    Radius::new((r2 as f64).sqrt()).unwrap()
}

fn brute_support(k: IVec3, r2: i64) -> Vec<IVec3> {
    let b = (r2 as f64).sqrt().ceil() as i64 + 4;
    let mut v: Vec<IVec3> = cube(b).filter(|&p| n2(p) > r2 && n2(sub(p, k)) <= r2).collect();
    v.sort_unstable();
    v
}

fn nonzero() -> impl Strategy<Value = IVec3> {
    (-3i64..=3, -3i64..=3, -3i64..=3).prop_map(|(a, b, c)| [a, b, c]).prop_filter("k != 0", |k| *k != [0, 0, 0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ball_and_shells_match_enumeration(r2 in 0i64..=144) {
        let b = (r2 as f64).sqrt().ceil() as i64 + 1;
        let mut inside: Vec<IVec3> = cube(b).filter(|&p| n2(p) <= r2).collect();
        inside.sort_unstable();
        let r = radius(r2);
        prop_assert_eq!(ball_count(r), inside.len() as u64);
        prop_assert_eq!(fermi_ball(r).points, inside.clone());
        let mut shells = vec![0u64; r2 as usize + 1];
        for p in &inside {
            shells[n2(*p) as usize] += 1;
        }
        prop_assert_eq!(shell_counts(r2), shells);
    }

    #[test]
    fn support_and_gaps_match_enumeration(r2 in 0i64..=100, k in nonzero()) {
        let r = radius(r2);
        let support = brute_support(k, r2);
        prop_assert_eq!(pair_support(k, r).points, support.clone());
        let mut hist = BTreeMap::new();
        for &p in &support {
            *hist.entry(n2(p) - n2(sub(p, k))).or_insert(0u64) += 1;
        }
        prop_assert_eq!(inverse_gap_histogram(k, r), hist);
    }

    #[test]
    fn plane_counts_match_enumeration(r2 in 0i64..=100, k in nonzero(), m in 1i64..=40) {
        let b = ((r2 + m) as f64).sqrt().ceil() as i64 + 1;
        let exact = cube(b)
            .filter(|&p| 2 * dot(p, k) - n2(k) == m && n2(p) > r2 && n2(p) <= r2 + m)
            .count() as u64;
        prop_assert_eq!(count_bm(k, m, radius(r2)).unwrap().exact, exact);
    }

    #[test]
    fn ellipse_annulus_matches_enumeration(
        a in 0.3f64..3.0,
        r_out in 0.0f64..150.0,
        frac in 0.0f64..=1.0,
        s0 in -1.0f64..1.0,
        s1 in -1.0f64..1.0,
    ) {
        let r_in = frac * r_out;
        let b = (r_out.sqrt() / a.min(1.0)).ceil() as i64 + 4;
        let mut exact = 0u64;
        for q2 in -b..=b {
            for q3 in -b..=b {
                let x = q2 as f64 + s0;
                let y = q3 as f64 + s1;
                let v = a * a * x * x + y * y;
                if v >= r_in && v <= r_out {
                    exact += 1;
                }
            }
        }
        prop_assert_eq!(ellipse_annulus_count(a, r_in, r_out, [s0, s1]).unwrap().exact, exact);
    }
}

#[test]
fn inverse_gap_sum_matches_exact_rational() {
    for (r2, k) in [(9, [0, 0, 1]), (10, [1, 1, 0]), (25, [1, 2, 3]), (50, [2, 0, -1])] {
        let support = brute_support(k, r2);
        let mut exact = BigRational::from_integer(BigInt::from(0));
        for &p in &support {
            let m = n2(p) - n2(sub(p, k));
            assert!(m >= 1 && (m - n2(k)) % 2 == 0, "gap {m} for k = {k:?}");
            exact += BigRational::new(BigInt::from(1), BigInt::from(m));
        }
        let want = exact.to_f64().unwrap();
        let got = sum_inverse_gap(k, radius(r2));
        assert!((got - want).abs() <= 1e-13 * want, "k = {k:?}: {got} vs {want}");
    }
}

#[test]
fn disk_counts() {
    assert_eq!(ellipse_annulus_count(1.0, 0.0, 25.0, [0.0, 0.0]).unwrap().exact, 81);
    assert_eq!(ellipse_annulus_count(1.0, 0.0, 100.0, [0.0, 0.0]).unwrap().exact, 317);
    assert!(ellipse_annulus_count(1.0, 5.0, 4.0, [0.0, 0.0]).is_err());
}

fn synthetic(r: f64, err: f64) -> (f64, CountReport) {
    (r, CountReport { exact: 0, predicted: -err, error: err, params: BTreeMap::new() })
}

#[test]
fn exponent_fit_on_synthetic_errors() {
    let linear: Vec<_> = [10.0, 100.0, 1000.0, 10000.0].iter().map(|&r| synthetic(r, 2.5 * r)).collect();
    assert!((fit_error_exponent(&linear).unwrap() - 1.0).abs() < 1e-6);
    let root: Vec<_> = [10.0, 40.0, 160.0].iter().map(|&r| synthetic(r, r.sqrt())).collect();
    assert!((fit_error_exponent(&root).unwrap() - 0.5).abs() < 1e-9);
    let narrow: Vec<_> = [10.0, 20.0, 40.0].iter().map(|&r| synthetic(r, r)).collect();
    assert!(fit_error_exponent(&narrow).is_err());
    let zeros: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|&r| synthetic(r, 0.0)).collect();
    assert!(fit_error_exponent(&zeros).is_err());
}

#[test]
fn circle_error_grows_slower_than_radius() {
    let data: Vec<_> = [32.0, 64.0, 128.0, 256.0, 512.0]
        .iter()
        .map(|&r: &f64| (r, ellipse_annulus_count(1.0, 0.0, r * r, [0.0, 0.0]).unwrap()))
        .collect();
    assert!(fit_error_exponent(&data).unwrap() < 1.0);
}

#[test]
fn north_rule_splits_every_pair() {
    for k in cube(3).filter(|&k| k != [0, 0, 0]) {
        assert!(is_north(k) ^ is_north(neg(k)), "{k:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Half-widths whose boundary spheres never pass through a lattice point
    // when k_F² is an integer.
    #[test]
    fn equator_strip_matches_enumeration(r2 in 0i64..=100, k in nonzero(), m in -10i64..=30, wi in 0usize..4) {
        let w = [0.25, 0.75, 1.25, 2.25][wi];
        let s = (r2 as f64).sqrt();
        let outer = (s + w) * (s + w);
        let inner = (s > w).then_some((s - w) * (s - w));
        let b = (s + w).ceil() as i64 + 1;
        let exact = cube(b)
            .filter(|&q| {
                let q2 = n2(q) as f64;
                2 * dot(q, k) - n2(k) == m && q2 <= outer && inner.is_none_or(|i| q2 >= i)
            })
            .count() as u64;
        prop_assert_eq!(count_equator_strip(k, m, w, radius(r2)).unwrap().exact, exact);
    }
}
