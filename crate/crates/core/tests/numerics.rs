use mblo::numerics::{
    complex_basis_s, haar_unitary, min_eigenvalue_sym, symplectic_of_unitary,
    symplecticity_deviation, orthogonality_deviation, unitarity_deviation,
    xxpp_interleave_permutation, direct_sum, symplectic_form, derive_seed,
};
use mblo::{Complex64, ComplexMatrix, RealMatrix};

#[test]
fn haar_small_cases() {
    let u = haar_unitary::<f64>(1, 3).unwrap();
    assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    let u = haar_unitary::<f64>(4, 7).unwrap();
    assert!(unitarity_deviation(&u) < 1e-12);
    assert_eq!(u, haar_unitary::<f64>(4, 7).unwrap());
    assert!(haar_unitary::<f64>(0, 1).is_err());
}

#[test]
fn haar_second_moment() {
    let draws = 10_000;
    let mean: f64 = (0..draws)
        .map(|i| haar_unitary::<f64>(8, derive_seed(11, &[i])).unwrap()[(0, 0)].norm_sqr())
        .sum::<f64>()
        / draws as f64;
    // Var |U_11|^2 = (m - 1) / (m^2 (m + 1)) for Haar measure.
    let sigma = (7.0 / (64.0 * 9.0) / draws as f64).sqrt();
    assert!((mean - 0.125).abs() < 5.0 * sigma, "mean {mean}");
}

#[test]
fn single_precision_unitary() {
    let u = haar_unitary::<f32>(3, 5).unwrap();
    assert!(unitarity_deviation(&u) < 1e-5);
    let g = symplectic_of_unitary(&u).unwrap();
    assert!(symplecticity_deviation(&g) < 1e-5);
}

#[test]
fn symplectic_images() {
    let g = symplectic_of_unitary(&ComplexMatrix::identity(2, 2)).unwrap();
    assert_eq!(g, RealMatrix::identity(4, 4));
    let i = ComplexMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
    let g = symplectic_of_unitary(&i).unwrap();
    assert_eq!(g, RealMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    let u = haar_unitary::<f64>(4, 2).unwrap();
    let g = symplectic_of_unitary(&u).unwrap();
    assert!(orthogonality_deviation(&g) < 1e-12);
    assert!(symplecticity_deviation(&g) < 1e-12);
    let mut bad = u.clone();
    bad[(0, 0)] += Complex64::new(0.1, 0.0);
    assert!(symplectic_of_unitary(&bad).is_err());
}

#[test]
fn interleave_permutation() {
    let p = xxpp_interleave_permutation::<f64>(1, 1).unwrap();
    let rows: Vec<usize> = (0..4)
        .map(|i| (0..4).find(|&j| p[(i, j)] == 1.0).unwrap())
        .collect();
    assert_eq!(rows, vec![0, 2, 1, 3]);
    for (m1, m2) in [(1, 2), (2, 1), (3, 2)] {
        let p = xxpp_interleave_permutation::<f64>(m1, m2).unwrap();
        let n = 2 * (m1 + m2);
        assert_eq!(&p * p.transpose(), RealMatrix::identity(n, n));
    }
    let g1 = symplectic_of_unitary(&haar_unitary::<f64>(2, 1).unwrap()).unwrap();
    let g2 = symplectic_of_unitary(&haar_unitary::<f64>(1, 2).unwrap()).unwrap();
    let p = xxpp_interleave_permutation::<f64>(2, 1).unwrap();
    let g = &p * direct_sum(&g1, &g2) * p.transpose();
    let w = symplectic_form::<f64>(3);
    assert!((&g * &w * g.transpose() - w).norm() < 1e-12);
}

#[test]
fn complex_basis() {
    let s = complex_basis_s::<f64>(1).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((s[(0, 1)] - Complex64::new(0.0, h)).norm() < 1e-15);
    assert!((s[(1, 1)] - Complex64::new(0.0, -h)).norm() < 1e-15);
    for m in 1..5 {
        assert!(unitarity_deviation(&complex_basis_s::<f64>(m).unwrap()) < 1e-14);
    }
    let s = complex_basis_s::<f64>(2).unwrap();
    let vac = ComplexMatrix::identity(4, 4).scale(0.5);
    let sq = &s * vac * s.adjoint() + ComplexMatrix::identity(4, 4).scale(0.5);
    assert!((sq - ComplexMatrix::identity(4, 4)).norm() < 1e-15);
}

#[test]
fn min_eigenvalues() {
    assert_eq!(min_eigenvalue_sym(&RealMatrix::identity(4, 4)).unwrap(), 1.0);
    let d = RealMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 0.2]));
    assert!((min_eigenvalue_sym(&d).unwrap() - 0.2).abs() < 1e-15);
    let asym = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    assert!(min_eigenvalue_sym(&asym).is_err());
}
