use bosonize::lattice::{is_north, neg, norm2, sub};
use bosonize::model::FermiSetup;
use bosonize::patches::*;
use std::collections::BTreeSet;

fn cfg(m: usize) -> PatchConfig {
    PatchConfig { m, shell_halfwidth: 2.0, corridor: 1.6, delta: 0.4, r_cut: 1.5 }
}

#[test]
fn mirrors_are_point_reflections() {
    let s = FermiSetup::new(8.0).unwrap();
    let dec = build_decomposition(&cfg(12), &s).unwrap();
    for a in 0..dec.m() {
        let b = dec.mirror(a);
        assert_ne!(a, b);
        assert_eq!(dec.mirror(b), a);
        let (ca, cb) = (dec.center(a), dec.center(b));
        for i in 0..3 {
            assert!((ca[i] + cb[i]).abs() < 1e-15);
        }
    }
}

#[test]
fn index_sets_are_mirror_images() {
    let s = FermiSetup::new(10.0).unwrap();
    let dec = build_decomposition(&cfg(20), &s).unwrap();
    for k in gamma_nor(1.5).unwrap().points {
        let (plus, minus) = index_sets(k, &dec, &s);
        assert_eq!(minus, plus.iter().map(|&a| dec.mirror(a)).collect::<Vec<_>>());
        let p: BTreeSet<_> = plus.iter().collect();
        assert!(minus.iter().all(|a| !p.contains(a)));
        for &a in &plus {
            assert!(kdot(k, dec.center(a)) > 0.0);
        }
    }
}

#[test]
fn pair_counts_agree_with_pair_lists_and_mirrors() {
    let s = FermiSetup::new(8.0).unwrap();
    let dec = build_decomposition(&cfg(12), &s).unwrap();
    let labels = dec.labels();
    for k in gamma_nor(1.5).unwrap().points {
        let counts = labels.pair_counts(k);
        let (plus, _) = index_sets(k, &dec, &s);
        for a in plus {
            let pairs = labels.pairs(k, a);
            assert_eq!(counts[a], pairs.len() as u64);
            assert_eq!(pair_count(k, a, &labels, &dec), counts[a]);
            assert_eq!(pair_count(k, dec.mirror(a), &labels, &dec), counts[a], "k = {k:?}, α = {a}");
            for (p, h) in pairs {
                assert_eq!(sub(p, h), k);
                assert!(norm2(p) > 64 && norm2(h) <= 64);
            }
        }
    }
}

#[test]
fn pairs_of_distinct_patches_share_no_momenta() {
    let s = FermiSetup::new(8.0).unwrap();
    let dec = build_decomposition(&cfg(12), &s).unwrap();
    let labels = dec.labels();
    let ks = gamma_nor(1.5).unwrap().points;
    let mut owner = std::collections::BTreeMap::new();
    for &k in &ks {
        for a in 0..dec.m() {
            for (p, h) in labels.pairs(k, a) {
                for q in [p, h] {
                    let prev = owner.insert(q, a);
                    assert!(prev.is_none() || prev == Some(a), "{q:?} used by patches {prev:?} and {a}");
                }
            }
        }
    }
}

#[test]
fn half_ball_has_one_of_each_pair() {
    let g = gamma_nor(1.5).unwrap();
    assert_eq!(g.len(), 9);
    assert!(g.points.iter().all(|&k| is_north(k) && !g.points.contains(&neg(k))));
    assert_eq!(gamma_nor(1.0).unwrap().len(), 0);
    assert_eq!(gamma_nor(1.01).unwrap().len(), 3);
}

#[test]
fn semiclassical_counts_follow_the_leading_term() {
    let s = FermiSetup::new(12.0).unwrap();
    let dec = build_decomposition(&cfg(16), &s).unwrap();
    let idx = pair_index([0, 0, 1], &dec, &s, PairMode::Semiclassical, None).unwrap();
    assert!(!idx.plus.is_empty());
    for e in &idx.plus {
        let want = 4.0 * std::f64::consts::PI * 144.0 * e.k_dot_omega.abs() / 16.0;
        assert!((e.n_sq - want).abs() <= 1e-12 * want);
        assert_eq!(e.n_sq, e.n_asym_sq);
    }
    assert!(pair_index([0, 0, 1], &dec, &s, PairMode::ExactLattice, None).is_err());
}

#[test]
fn invalid_configs_rejected() {
    assert!(cfg(7).validate().is_err());
    assert!(PatchConfig { corridor: 1.0, ..cfg(12) }.validate().is_err());
    assert!(PatchConfig { delta: -0.1, ..cfg(12) }.validate().is_err());
    let s = FermiSetup::new(2.0).unwrap();
    assert!(build_decomposition(&cfg(64), &s).is_err());
}

#[test]
fn cache_round_trips_and_rejects_other_versions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.json");
    let s = FermiSetup::new(8.0).unwrap();
    let dec = build_decomposition(&cfg(12), &s).unwrap();
    let labels = dec.labels();
    let mut c = PairCache::load(&path).unwrap();
    assert!(c.entries.is_empty());
    let counts = c.counts(&labels, &dec, [0, 0, 1]);
    assert_eq!(counts, labels.pair_counts([0, 0, 1]));
    c.save(&path).unwrap();
    let back = PairCache::load(&path).unwrap();
    assert_eq!(back, c);
    let mut stale = c.clone();
    stale.header.tool_version = "0.0.0-other".into();
    stale.save(&path).unwrap();
    assert!(PairCache::load(&path).unwrap().entries.is_empty());
}

#[test]
fn regime_diagnostics_warn_outside_the_asymptotic_window() {
    let s = FermiSetup::new(8.0).unwrap();
    let d = validate_regime(&cfg(12), &s);
    assert!(d.r1 > 0.1 && !d.warnings.is_empty());
    let calm = validate_regime(&PatchConfig { delta: 0.0, r_cut: 0.1, corridor: 0.2, ..cfg(400) }, &s);
    assert!(calm.warnings.is_empty(), "{:?}", calm.warnings);
}
