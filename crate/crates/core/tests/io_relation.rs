use mblo::graph::{bracket, brick, brickwork_graph, chain_h, concat, sum};
use mblo::io_relation::{
    assemble_mblo, assemble_mblo_gram, base_horizontal, base_vertical, bell_coupling,
    compose_concat, compose_sum, eval, eval_gram, Schedule,
};
use mblo::numerics::{haar_unitary, min_eigenvalue_sym, symplecticity_deviation};
use mblo::noise::lambda_floor;
use mblo::synthesis::{brick_angles_a, brick_angles_b, brick_schedule, Brick};
use mblo::{ComplexMatrix, RealMatrix};

fn close(a: &RealMatrix, b: &RealMatrix, tol: f64) -> bool {
    (a - b).norm() < tol
}

#[test]
fn vertical_base_is_shear() {
    for phi in [-1.2, -0.3, 0.0, 0.8] {
        let r = base_vertical(phi).unwrap();
        assert!(symplecticity_deviation(&r.g) < 1e-12);
        assert_eq!(r.c(), 1);
    }
    // tan(phi) = -sin(pi/2) = -1 couples the two modes with weight -1.
    let r = base_vertical((-1.0f64).atan()).unwrap();
    assert!((r.g[(2, 1)] + 1.0).abs() < 1e-15 && (r.g[(3, 0)] + 1.0).abs() < 1e-15);
}

#[test]
fn fourier_pair_relation() {
    let f = base_horizontal(0.0).unwrap();
    let two = compose_concat(&f, &f).unwrap();
    assert!(close(&two.g, &(-RealMatrix::identity(2, 2)), 1e-15));
    assert!(close(&two.n, &RealMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]), 1e-15));
    let s = compose_sum(&f, &f);
    let mut want = RealMatrix::zeros(4, 4);
    want[(0, 2)] = -1.0;
    want[(2, 0)] = 1.0;
    want[(1, 3)] = -1.0;
    want[(3, 1)] = 1.0;
    assert!(close(&s.g, &want, 1e-15));
    assert_eq!(s.c(), 2);
}

#[test]
fn concat_is_associative() {
    let a = base_horizontal(0.3).unwrap();
    let b = base_horizontal(-0.7).unwrap();
    let c = base_horizontal(1.1).unwrap();
    let l = compose_concat(&compose_concat(&a, &b).unwrap(), &c).unwrap();
    let r = compose_concat(&a, &compose_concat(&b, &c).unwrap()).unwrap();
    assert!(close(&l.g, &r.g, 1e-14) && close(&l.n, &r.n, 1e-14) && close(&l.d, &r.d, 1e-14));
}

#[test]
fn bracket_relations() {
    let term = bracket();
    for theta in [0.0, 0.4, 1.0, std::f64::consts::FRAC_PI_2] {
        let (s, c) = f64::sin_cos(theta);
        let ga = eval(&term, &Schedule::for_term(&term, brick_angles_a(theta).to_vec()).unwrap())
            .unwrap()
            .g;
        let want = RealMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, -c, -s, 0.0, -1.0, -s, c],
        );
        assert!(close(&ga, &want, 1e-12), "theta {theta}");
        for beta in [0.0, 0.9, 2.5, 4.4] {
            let gb = eval(&term, &Schedule::for_term(&term, brick_angles_b(theta, beta).unwrap().to_vec()).unwrap())
                .unwrap()
                .g;
            let (sb, cb) = f64::sin_cos(beta);
            let phase = RealMatrix::from_row_slice(
                4,
                4,
                &[cb, 0.0, -sb, 0.0, 0.0, -1.0, 0.0, 0.0, sb, 0.0, cb, 0.0, 0.0, 0.0, 0.0, -1.0],
            );
            assert!(close(&gb, &(&ga * phase), 1e-12), "theta {theta} beta {beta}");
        }
    }
}

#[test]
fn brick_special_cases() {
    let t = brick();
    let id = eval(&t, &brick_schedule(&Brick::new(0.0, 0.0).unwrap()).unwrap()).unwrap();
    assert!(close(&id.g, &RealMatrix::identity(4, 4), 1e-12));
    let beta = std::f64::consts::FRAC_PI_3;
    let ph = eval(&t, &brick_schedule(&Brick::new(beta, 0.0).unwrap()).unwrap()).unwrap();
    let (s, c) = beta.sin_cos();
    let want = RealMatrix::from_row_slice(
        4,
        4,
        &[c, 0.0, -s, 0.0, 0.0, 1.0, 0.0, 0.0, s, 0.0, c, 0.0, 0.0, 0.0, 0.0, 1.0],
    );
    assert!(close(&ph.g, &want, 1e-12));
}

#[test]
fn zero_angle_thirteen_chain_is_identity() {
    let h = chain_h(13).unwrap();
    let r = eval(&h, &Schedule::zeros(&h)).unwrap();
    assert!(close(&r.g, &RealMatrix::identity(2, 2), 1e-15));
}

#[test]
fn single_brick_noise_floor() {
    let t = brick();
    for (beta, theta) in [(0.0, 0.0), (1.0, 0.3), (4.0, 1.5), (2.2, 0.785)] {
        let r = eval(&t, &brick_schedule(&Brick::new(beta, theta).unwrap()).unwrap()).unwrap();
        let lam = min_eigenvalue_sym(&r.noise_gram()).unwrap();
        assert!(lam >= 3.0 - 2.0 * 2f64.sqrt() - 1e-12, "lambda {lam}");
    }
}

#[test]
fn gram_fold_matches_explicit_noise() {
    let term = brickwork_graph(4, 2).unwrap().term;
    let angles: Vec<f64> = (0..term.measured_count()).map(|i| ((i * 37 % 23) as f64 - 11.0) / 9.0).collect();
    let s = Schedule::for_term(&term, angles).unwrap();
    let full = eval(&term, &s).unwrap();
    let g = eval_gram(&term, &s).unwrap();
    assert!(close(&full.g, &g.g, 1e-9));
    assert!((&full.noise_gram() - &g.gram).norm() < 1e-9 * full.noise_gram().norm());
    assert_eq!(full.c(), term.measured_count());
}

#[test]
fn bell_block() {
    let b = bell_coupling::<f64>(1).unwrap();
    assert_eq!(b.n, RealMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]));
    assert_eq!(b.d, RealMatrix::from_row_slice(2, 2, &[-1.0, -1.0, -1.0, 1.0]));
    let b3 = bell_coupling::<f64>(3).unwrap();
    assert_eq!(b3.g, RealMatrix::identity(6, 6));
    let h = chain_h(3).unwrap();
    let r = eval::<f64>(&h, &Schedule::zeros(&h)).unwrap();
    let joined = compose_concat(&bell_coupling(1).unwrap(), &r).unwrap();
    assert_eq!(joined.c(), r.c() + 2);
}

#[test]
fn assembly_properties() {
    let id = ComplexMatrix::identity(2, 2);
    let r = assemble_mblo(&id).unwrap();
    assert!(close(&r.g, &RealMatrix::identity(4, 4), 1e-9));
    let u = haar_unitary::<f64>(4, 77).unwrap();
    let full = assemble_mblo(&u).unwrap();
    let gram = assemble_mblo_gram(&u).unwrap();
    assert!((full.noise_gram() - &gram.gram).norm() < 1e-9 * gram.gram.norm());
    let lam = min_eigenvalue_sym(&gram.gram).unwrap();
    assert!(lam >= lambda_floor(4) - 1e-8);
    assert!(assemble_mblo(&haar_unitary::<f64>(3, 1).unwrap()).is_err());
}

#[test]
fn sum_then_concat_terms_evaluate() {
    let h5 = chain_h(5).unwrap();
    let two = sum(&h5, &h5);
    let both = concat(&two, &two).unwrap();
    let r = eval(&both, &Schedule::zeros(&both)).unwrap();
    assert!(close(&r.g, &RealMatrix::identity(4, 4), 1e-15));
}
