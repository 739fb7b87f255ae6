use mblo::graph::brickwork_graph;
use mblo::io_relation::{assemble_mblo_gram, eval_gram, Schedule};
use mblo::noise::{
    analytic_floor, determinant_ratio_check, easiness_threshold, gaussian_fidelity,
    hardness_threshold, inverse_frobenius, lambda_floor, multiplicative_gap_check, noise_gram,
    squeezing_db, haar_sweep, threshold_report, tvd_bound, GapParams,
};
use mblo::numerics::{haar_unitary, min_eigenvalue_sym, symplectic_of_unitary};
use mblo::oracle::{embed_worst_case, sigma_q, squeezed_covariance};
use mblo::synthesis::{brick_schedule, Brick};
use mblo::RealMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gram_dominates_identity() {
    for (m, seed) in [(2, 1), (4, 2), (6, 3)] {
        let u = haar_unitary::<f64>(m, seed).unwrap();
        let g = noise_gram(&u).unwrap();
        let shifted = &g - RealMatrix::identity(2 * m, 2 * m);
        assert!(min_eigenvalue_sym(&shifted).unwrap() >= -1e-9);
        let k = m / 2 + 1;
        let per = g.norm() / (m * k) as f64;
        assert!(per < 1e4, "M={m}: {per}");
    }
}

#[test]
fn easiness_above_floor() {
    for seed in 0..4 {
        let u = haar_unitary::<f64>(4, seed).unwrap();
        let rep = easiness_threshold(&u).unwrap();
        assert!(rep.r_easiness >= analytic_floor(4) - 1e-9);
        assert!((rep.r_easiness_db - squeezing_db(rep.r_easiness)).abs() < 1e-12);
        assert!(rep.r_hardness.is_empty());
    }
}

#[test]
fn tvd_bound_by_hand() {
    let u = haar_unitary::<f64>(4, 9).unwrap();
    let vac = RealMatrix::identity(8, 8) * 0.5;
    let frob = noise_gram(&u).unwrap().norm();
    // ||(I/2)^{-1}||_F = 2 sqrt(8).
    let want = (-3.0f64).exp() * (frob * 2.0 * 8f64.sqrt() / 8.0).sqrt();
    let got = tvd_bound(3.0, &u, &vac).unwrap();
    assert!((got - want).abs() < 1e-12 * want);
    assert!(tvd_bound(-1.0, &u, &vac).is_err());
    assert!(tvd_bound(1.0, &u, &RealMatrix::identity(6, 6)).is_err());
}

#[test]
fn hardness_consistency() {
    let u = haar_unitary::<f64>(4, 5).unwrap();
    let vac = RealMatrix::identity(8, 8) * 0.5;
    let r = hardness_threshold(&u, &vac, 0.01).unwrap();
    assert!((tvd_bound(r, &u, &vac).unwrap() - 0.01).abs() < 1e-12);
    let rep = threshold_report(&u, None, &[0.01, 0.1]).unwrap();
    assert!((rep.r_hardness[0].r - r).abs() < 1e-12);
    assert!(rep.r_hardness[1].r < r);
    assert!(hardness_threshold(&u, &vac, 1.5).is_err());
    assert!((inverse_frobenius(&vac).unwrap() - 2.0 * 8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn fidelity_two_modes() {
    let u = haar_unitary::<f64>(2, 4).unwrap();
    let g = symplectic_of_unitary(&u).unwrap();
    let vac = RealMatrix::identity(4, 4) * 0.5;
    let v_id = &g * &vac * g.transpose();
    let gram = noise_gram(&u).unwrap();
    let r = 2.0_f64;
    let noisy = &v_id + &gram * (0.5 * (-2.0 * r).exp());
    let f = gaussian_fidelity(&noisy, &v_id).unwrap();
    let tvd = (1.0 - f).sqrt();
    assert!(f > 0.0 && f <= 1.0);
    assert!(tvd <= tvd_bound(r, &u, &vac).unwrap() + 1e-12);
    assert!(gaussian_fidelity(&noisy, &(&vac * 3.0)).is_err());
}

#[test]
fn sweep_shapes_and_determinism() {
    let a = haar_sweep(&[2, 4], 1, 7).unwrap();
    for rec in &a.records {
        assert_eq!(rec.r_min, rec.r_max);
        assert_eq!(rec.trials, 1);
    }
    let b = haar_sweep(&[2, 4], 3, 7).unwrap();
    let c = haar_sweep(&[2, 4], 3, 7).unwrap();
    assert_eq!(b.to_json(), c.to_json());
    assert_eq!(b.trials.len(), 6);
    let mut csv = Vec::new();
    b.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("M,trial,r_easiness,lambda_min,frob"));
    assert_eq!(text.lines().count(), 7);
    let d = haar_sweep(&[2, 4], 3, 8).unwrap();
    assert_ne!(b.to_json(), d.to_json());
}

fn gap_setup(m: usize, r: f64) -> mblo::noise::GapReport {
    let wp = RealMatrix::from_element(1, 1, 1.0);
    let emb = embed_worst_case(&wp, 2, m).unwrap();
    let v_in = squeezed_covariance(m, 2, 0.5);
    let mut n = vec![0; m];
    n[0] = 1;
    n[1] = 1;
    let params = GapParams {
        n0: 1,
        w_norm: emb.w_norm,
        r0: 0.5,
    };
    multiplicative_gap_check(r, &emb.u, &v_in, &n, &params).unwrap()
}

#[test]
fn gap_vanishes_at_high_squeezing() {
    let rep = gap_setup(4, 20.0);
    assert!(rep.gap < 1e-12, "gap {}", rep.gap);
    assert!(rep.within_bound());
}

#[test]
fn gap_within_bound() {
    let rep = gap_setup(4, 5.0);
    assert!(rep.within_bound(), "{} > {}", rep.gap, rep.bound);
    assert!(rep.det_ratio_gap <= 2.0 * rep.det_ratio_bound + 1e-15);
    assert!(!rep.zero_branch);
    assert!(rep.to_json()["gap"].is_number());
}

#[test]
fn determinant_ratio_small_perturbation() {
    let v = squeezed_covariance(2, 2, 0.4);
    let sq = sigma_q(&v).unwrap();
    let delta = sigma_q(&(&v + RealMatrix::identity(4, 4) * 1e-3)).unwrap() - &sq;
    let (lhs, rhs) = determinant_ratio_check(&sq, &delta).unwrap();
    assert!(rhs < 1.0 / 3.0);
    assert!(lhs <= 2.0 * rhs);
}

fn random_layers_gram(m: usize, k: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_brick = || {
        let b = Brick::new(
            rng.random_range(0.0..6.28),
            rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        )
        .unwrap();
        brick_schedule(&b).unwrap().angles
    };
    let mut angles = Vec::new();
    for _ in 0..k {
        for _ in (0..m).step_by(2) {
            angles.extend(rand_brick());
        }
        angles.extend([0.0; 12]);
        for _ in (1..m - 1).step_by(2) {
            angles.extend(rand_brick());
        }
        angles.extend([0.0; 12]);
    }
    let term = brickwork_graph(m, k).unwrap().term;
    let g = eval_gram(&term, &Schedule::for_term(&term, angles).unwrap()).unwrap();
    min_eigenvalue_sym(&g.gram).unwrap()
}

#[test]
fn layers_add_noise() {
    let per_layer = 6.0 - 4.0 * 2f64.sqrt();
    for m in [2, 4] {
        for k in 1..=3 {
            for seed in 0..3 {
                let lam = random_layers_gram(m, k, seed);
                assert!(lam >= k as f64 * per_layer - 1e-9, "M={m} k={k}: {lam}");
            }
        }
    }
}

#[test]
fn assembled_floor() {
    for m in [2, 4, 6] {
        let u = haar_unitary::<f64>(m, 100 + m as u64).unwrap();
        let lam = min_eigenvalue_sym(&assemble_mblo_gram(&u).unwrap().gram).unwrap();
        assert!(lam >= lambda_floor(m) - 1e-8);
    }
}
