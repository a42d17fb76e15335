use bosonize::energy::*;
use bosonize::model::{Family, FermiSetup, Potential};
use bosonize::patches::{PairCache, PairMode, PatchConfig};
use bosonize::quad::QuadControl;

fn cfg(family: Family) -> RunConfig {
    RunConfig {
        k_f: 8.0,
        patch: PatchConfig { m: 12, shell_halfwidth: 2.0, corridor: 1.6, delta: 0.4, r_cut: 1.5 },
        potential: Potential::new(family, 40.0).unwrap(),
        mode: PairMode::ExactLattice,
        quad: QuadControl::default(),
        k_set: None,
        rpa_tail_tol: 1e-6,
    }
}

fn exp() -> RunConfig {
    cfg(Family::Exponential { c: 1.0, a: 1.0 })
}

#[test]
fn zero_potential_gives_zero_correlation() {
    let r = correlation_energy_trace(&cfg(Family::Zero), None).unwrap();
    assert_eq!(r.e_trace, 0.0);
    assert_eq!(r.e_rpa_closed, 0.0);
    assert!(r.rows.iter().all(|row| row.trace_term == 0.0 && row.closed_term == 0.0));
}

#[test]
fn totals_are_row_sums_and_negative() {
    let r = correlation_energy_trace(&exp(), None).unwrap();
    assert_eq!(r.rows.len() + r.skipped.len(), 9);
    let trace: f64 = r.rows.iter().map(|x| x.trace_term).sum();
    let closed: f64 = r.rows.iter().map(|x| x.closed_term).sum::<f64>() + r.skipped.iter().map(|s| s.closed_term).sum::<f64>();
    assert!((r.e_trace - trace).abs() <= 1e-15 * trace.abs());
    assert!((r.e_rpa_closed - closed).abs() <= 1e-15 * closed.abs());
    assert!(r.e_trace < 0.0 && r.e_rpa_closed < 0.0);
    assert!(r.rows.windows(2).all(|w| w[0].k < w[1].k));
    for row in &r.rows {
        assert!(row.trace_term < 0.0 && row.closed_term < 0.0);
        assert!((row.rel_gap - (row.trace_term - row.closed_term).abs() / row.closed_term.abs()).abs() < 1e-15);
    }
}

#[test]
fn results_do_not_depend_on_the_thread_pool() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| hf_plus_rpa(&exp(), None).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn cache_does_not_change_results() {
    let mut cache = PairCache::default();
    let with = correlation_energy_trace(&exp(), Some(&mut cache)).unwrap();
    assert!(!cache.entries.is_empty());
    let again = correlation_energy_trace(&exp(), Some(&mut cache)).unwrap();
    let without = correlation_energy_trace(&exp(), None).unwrap();
    assert_eq!(with.e_trace.to_bits(), without.e_trace.to_bits());
    assert_eq!(again.e_trace.to_bits(), without.e_trace.to_bits());
}

#[test]
fn explicit_momenta_replace_the_half_ball() {
    let mut c = exp();
    c.k_set = Some(vec![[0, 0, 1], [1, 0, 0], [0, 0, 1]]);
    assert_eq!(momenta(&c).unwrap().len(), 3);
    let r = correlation_energy_trace(&c, None).unwrap();
    assert_eq!(r.rows.len() + r.skipped.len(), 2);
    c.k_set = Some(vec![[0, 0, 0]]);
    assert!(momenta(&c).is_err());
}

#[test]
fn report_round_trips_through_json() {
    let r = hf_plus_rpa(&exp(), None).unwrap();
    assert_eq!(r.schema_version, REPORT_SCHEMA_VERSION);
    assert!(r.e_rpa_full.unwrap() < 0.0);
    let back: EnergyReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn sweeps_need_two_points() {
    let one = [SchedulePoint { k_f: 8.0, m: 12 }];
    assert!(converge_sweep(&exp(), &one, None).is_err());
    assert!(converge_sweep(&exp(), &[], None).is_err());
    let two = [SchedulePoint { k_f: 8.0, m: 12 }, SchedulePoint { k_f: 8.0, m: 16 }];
    let s = converge_sweep(&exp(), &two, None).unwrap();
    assert_eq!(s.rows.len(), 2);
    assert_eq!(s.strictly_decreasing, s.rows[1].rel_gap < s.rows[0].rel_gap);
}

#[test]
fn patch_counts_are_even() {
    for k_f in [1.0, 3.0, 8.0, 20.0, 50.0] {
        let s = FermiSetup::new(k_f).unwrap();
        for c in [0.01, 0.5, 1.0, 2.0] {
            let m = patches_for(&s, c);
            assert!(m >= 2 && m.is_multiple_of(2));
            assert!((m as f64 - c * s.n_f64().cbrt()).abs() <= 1.0 || m == 2);
        }
    }
}

#[test]
fn count_asymptotics_reports_worst_patch() {
    let c = exp();
    let a = count_asymptotics(8.0, &c.patch, &[[0, 0, 1], [1, 1, 0]], None).unwrap();
    assert!(a.max_deviation > 0.0 && a.worst.is_some());
}
