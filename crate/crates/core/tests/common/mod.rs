#![allow(dead_code)]

use mblo::numerics::{haar_unitary, symplectic_form, symplectic_of_unitary, symplecticity_deviation};
use mblo::oracle::{hafnian, permanent};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn small_int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<i64>> {
    prop::collection::vec(-2i64..=2, rows * cols)
        .prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

pub fn symmetric_int(dim: usize) -> impl Strategy<Value = DMatrix<i64>> {
    small_int_matrix(dim, dim).prop_map(|m| {
        let n = m.nrows();
        DMatrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] })
    })
}

pub fn real_matrix(dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim * dim)
        .prop_map(move |v| DMatrix::from_row_slice(dim, dim, &v))
}

/// `Tr((AB)^k) <= Tr(AB)^k` for PSD `A = X X^T`, `B = Y Y^T`.
pub fn trace_power(x: &DMatrix<f64>, y: &DMatrix<f64>, k: u32) -> Result<(), TestCaseError> {
    let a = x * x.transpose();
    let b = y * y.transpose();
    let ab = &a * &b;
    let mut p = DMatrix::<f64>::identity(ab.nrows(), ab.nrows());
    for _ in 0..k {
        p = &p * &ab;
    }
    let lhs = p.trace();
    let rhs = ab.trace().powi(k as i32);
    prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "Tr((AB)^{}) = {} > {}", k, lhs, rhs);
    Ok(())
}

/// `Haf(A ⊕ B) = Haf(A) Haf(B)`, exactly over the integers.
pub fn hafnian_block(a: &DMatrix<i64>, b: &DMatrix<i64>) -> Result<(), TestCaseError> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut s = DMatrix::<i64>::zeros(n + m, n + m);
    s.view_mut((0, 0), (n, n)).copy_from(a);
    s.view_mut((n, n), (m, m)).copy_from(b);
    prop_assert_eq!(
        hafnian(&s).unwrap(),
        hafnian(a).unwrap() * hafnian(b).unwrap()
    );
    Ok(())
}

/// `Haf([[0, W], [W^T, 0]]) = Per(W)`, exactly over the integers.
pub fn haf_per_bridge(w: &DMatrix<i64>) -> Result<(), TestCaseError> {
    let n = w.nrows();
    let mut s = DMatrix::<i64>::zeros(2 * n, 2 * n);
    s.view_mut((0, n), (n, n)).copy_from(w);
    s.view_mut((n, 0), (n, n)).copy_from(&w.transpose());
    prop_assert_eq!(hafnian(&s).unwrap(), permanent(w).unwrap());
    Ok(())
}

/// `S(U1 U2) = S(U1) S(U2)`, and `S(U)` is symplectic and orthogonal.
pub fn symplectic_homomorphism(m: usize, s1: u64, s2: u64) -> Result<(), TestCaseError> {
    let u1 = haar_unitary::<f64>(m, s1).unwrap();
    let u2 = haar_unitary::<f64>(m, s2).unwrap();
    let g1 = symplectic_of_unitary(&u1).unwrap();
    let g2 = symplectic_of_unitary(&u2).unwrap();
    let g12 = symplectic_of_unitary(&(&u1 * &u2)).unwrap();
    prop_assert!((&g12 - &g1 * &g2).norm() < 1e-12);
    prop_assert!(symplecticity_deviation(&g1) < 1e-12);
    let omega = symplectic_form::<f64>(m);
    prop_assert!((&g1 * &omega * g1.transpose() - &omega).norm() < 1e-12);
    prop_assert!((&g1 * g1.transpose() - DMatrix::<f64>::identity(2 * m, 2 * m)).norm() < 1e-12);
    Ok(())
}
