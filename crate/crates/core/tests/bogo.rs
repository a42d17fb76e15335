use bosonize::bogo::*;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `tr(E − D − W)` from the eigenvalues of `u(d + 2g vvᵀ)u`, with no
/// reference to the library's matrix pipeline.
fn trace_oracle(b: &BlockData) -> f64 {
    let u = DMatrix::from_diagonal(&b.u);
    let d: DVector<f64> = b.u.map(|x| x * x);
    let m = &u * (DMatrix::from_diagonal(&d) + &b.v * b.v.transpose() * (2.0 * b.g)) * &u;
    let ev = m.symmetric_eigenvalues();
    2.0 * ev.iter().map(|x| x.max(0.0).sqrt()).sum::<f64>() - 2.0 * d.sum() - 2.0 * b.g * b.v.norm_squared()
}

fn instances(seed: u64, count: usize, i_max: usize) -> Vec<BlockData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_block(&mut rng, i_max)).collect()
}

#[test]
fn random_instances_satisfy_the_decomposition() {
    for b in instances(11, 60, 24) {
        let qd = analyze(&b).unwrap();
        let dg = &qd.diagnostics;
        assert!(verify_decomposition(&qd) < 1e-9, "reconstruction {}", verify_decomposition(&qd));
        assert!(dg.e_factor_residual < 1e-9);
        assert!(dg.e_rotated_residual < 1e-9);
        assert!(dg.o_orthogonality < 1e-9 && dg.ot_orthogonality < 1e-9);
        assert!(dg.exp_l_residual < 1e-9);
        assert!(dg.min_eig_p_minus_d > -1e-10);
        assert!(dg.min_eig_frak_k > 0.0);
        assert!(qd.e.clone().symmetric_eigenvalues().min() > 0.0);
        let n = qd.e.nrows();
        assert!((&qd.k - qd.k.transpose()).amax() < 1e-12);
        assert!((&qd.l + qd.l.transpose()).amax() < 1e-12);
        assert!((qd.o.transpose() * &qd.o - DMatrix::identity(n, n)).amax() < 1e-9);
    }
}

#[test]
fn sign_flipped_reconstruction_fails_when_coupled() {
    let b = BlockData::new(DVector::from_vec(vec![0.6, 0.9, 0.4]), DVector::from_vec(vec![0.5, -0.3, 0.7]), 2.0).unwrap();
    let qd = analyze(&b).unwrap();
    assert!(reconstruction_residual(&qd, -1.0) < 1e-10);
    assert!(reconstruction_residual(&qd, 1.0) > 1e-3);
}

#[test]
fn traces_agree_with_an_eigenvalue_oracle() {
    for b in instances(12, 80, 40) {
        let want = trace_oracle(&b);
        let qd = analyze(&b).unwrap();
        let scale = 1.0 + b.g * b.v.norm_squared();
        assert!((trace_correction(&qd) - want).abs() <= 1e-9 * scale, "dense {} vs {want}", trace_correction(&qd));
        assert!((trace_correction_secular(&b) - want).abs() <= 1e-9 * scale);
        assert!(want <= 1e-12);
        let p_trace = qd.p.trace();
        assert!((trace_p_secular(&b) - p_trace).abs() <= 1e-9 * (1.0 + p_trace.abs()));
    }
}

#[test]
fn relabelling_patches_leaves_traces_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for b in instances(14, 30, 16) {
        let mut perm: Vec<usize> = (0..b.i()).collect();
        perm.shuffle(&mut rng);
        let pb = b.permuted(&perm);
        let (q, pq) = (analyze(&b).unwrap(), analyze(&pb).unwrap());
        assert!((trace_correction(&q) - trace_correction(&pq)).abs() < 1e-10);
        assert!((q.k.norm() - pq.k.norm()).abs() < 1e-10);
        let mut ev = q.e.clone().symmetric_eigenvalues().as_slice().to_vec();
        let mut pev = pq.e.clone().symmetric_eigenvalues().as_slice().to_vec();
        ev.sort_by(f64::total_cmp);
        pev.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&pev) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn weak_coupling_correction_is_second_order() {
    let u = DVector::from_vec(vec![0.5, 0.8, 1.0]);
    let v = DVector::from_vec(vec![0.4, 0.2, -0.6]);
    let c = |g: f64| trace_correction_secular(&BlockData::new(u.clone(), v.clone(), g).unwrap());
    let (a, b) = (c(1e-3), c(2e-3));
    assert!(a < 0.0 && b < 0.0);
    assert!((b / a - 4.0).abs() < 0.02, "ratio {}", b / a);
}

#[test]
fn log_recovers_small_rotations() {
    let theta = 0.3f64;
    let mut q = DMatrix::identity(4, 4);
    q[(0, 0)] = theta.cos();
    q[(1, 1)] = theta.cos();
    q[(0, 1)] = -theta.sin();
    q[(1, 0)] = theta.sin();
    let (l, sym) = log_special_orthogonal(&q).unwrap();
    assert!(sym < 1e-14);
    assert!((l[(1, 0)] - theta).abs() < 1e-14 && (l[(0, 1)] + theta).abs() < 1e-14);
    assert!((l.exp() - q).amax() < 1e-14);
    let reflect = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
    assert!(log_special_orthogonal(&reflect).is_err());
}

#[test]
fn invalid_blocks_rejected() {
    let one = DVector::from_element(1, 1.0);
    assert!(BlockData::new(DVector::zeros(0), DVector::zeros(0), 1.0).is_err());
    assert!(BlockData::new(one.clone(), DVector::from_element(2, 1.0), 1.0).is_err());
    assert!(BlockData::new(one.clone(), one.clone(), -1.0).is_err());
    assert!(BlockData::new(DVector::from_element(1, 0.0), one, 1.0).is_err());
}
