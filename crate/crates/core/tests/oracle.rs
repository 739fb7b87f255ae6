mod common;

use common::hafnian_block;
use mblo::numerics::{haar_unitary, symplectic_of_unitary, unitarity_deviation};
use mblo::oracle::{
    embed_worst_case, fock_probabilities, gbs_probability, haf_sum_expansion,
    haf_sum_expansion_check, hafnian, permanent, squeezed_covariance, HafnianInput,
};
use mblo::{Complex64, ComplexMatrix, RealMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_permanent(w: &DMatrix<i64>) -> i64 {
    fn rec(w: &DMatrix<i64>, row: usize, used: &mut Vec<bool>) -> i64 {
        if row == w.nrows() {
            return 1;
        }
        let mut s = 0;
        for c in 0..w.ncols() {
            if !used[c] {
                used[c] = true;
                s += w[(row, c)] * rec(w, row + 1, used);
                used[c] = false;
            }
        }
        s
    }
    rec(w, 0, &mut vec![false; w.ncols()])
}

fn random_complex(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn symmetrize(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.transpose()).scale(0.5)
}

#[test]
fn permanent_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let w = DMatrix::<i64>::from_fn(4, 4, |_, _| rng.random_range(-3..=3));
        assert_eq!(permanent(&w).unwrap(), brute_permanent(&w));
    }
    let c = random_complex(5, &mut rng);
    let via_haf = {
        let mut s = ComplexMatrix::zeros(10, 10);
        s.view_mut((0, 5), (5, 5)).copy_from(&c);
        s.view_mut((5, 0), (5, 5)).copy_from(&c.transpose());
        hafnian(&s).unwrap()
    };
    assert!((via_haf - permanent(&c).unwrap()).norm() < 1e-10);
}

#[test]
fn hafnian_rejects_bad_shapes() {
    assert!(hafnian(&DMatrix::<i64>::zeros(3, 3)).is_err());
    assert!(hafnian(&DMatrix::<i64>::zeros(2, 4)).is_err());
    assert!(HafnianInput::new(ComplexMatrix::zeros(22, 22)).is_err());
    assert_eq!(hafnian(&DMatrix::<i64>::zeros(0, 0)).unwrap(), 1);
}

fn ideal_probability(wp: &RealMatrix, n: usize, m: usize, r0: f64) -> (f64, f64) {
    let emb = embed_worst_case(wp, n, m).unwrap();
    assert!(unitarity_deviation(&emb.u) < 1e-10);
    let g = symplectic_of_unitary(&emb.u).unwrap();
    let v = &g * squeezed_covariance(m, n, r0) * g.transpose();
    let mut pattern = vec![0; m];
    pattern[..n].iter_mut().for_each(|x| *x = 1);
    let q = gbs_probability(&v, &pattern).unwrap();
    let per = permanent(&wp.map(|x| x as i64)).unwrap() as f64;
    let want = (r0.tanh() / emb.w_norm).powi(n as i32) * per * per / r0.cosh().powi(n as i32);
    (q, want)
}

#[test]
fn worst_case_probability_formula() {
    let wp = RealMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let (q, want) = ideal_probability(&wp, 4, 8, 0.6);
    assert!((q - want).abs() < 1e-10 * want.max(1e-300), "{q} vs {want}");
    let (q, _) = ideal_probability(&RealMatrix::zeros(1, 1), 4, 8, 0.6);
    assert!(q.abs() < 1e-14);
    let wp = RealMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let (q, want) = ideal_probability(&wp, 4, 8, 0.3);
    assert!((q - want).abs() < 1e-10 * want);
}

#[test]
fn embedding_invariants() {
    let wp = RealMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0]);
    let emb = embed_worst_case(&wp, 6, 12).unwrap();
    assert_eq!((emb.n(), emb.n0()), (6, 2));
    let w = emb.w.map(|x| Complex64::new(x, 0.0));
    assert!((&emb.y * emb.y.transpose() - &w).norm() < 1e-10);
    let top = emb.u.view((0, 0), (6, 6)).into_owned();
    assert!((top - emb.y.unscale(emb.w_norm.sqrt())).norm() < 1e-10);
    assert!((emb.w.transpose() - &emb.w).norm() == 0.0);
    assert!(embed_worst_case(&RealMatrix::from_element(1, 1, 2.0), 2, 4).is_err());
    assert!(embed_worst_case(&wp, 3, 12).is_err());
    assert!(embed_worst_case(&wp, 2, 12).is_err());
    assert!(embed_worst_case(&wp, 4, 6).is_err());
}

#[test]
fn squared_permanent_is_block_hafnian() {
    let wp = DMatrix::<i64>::from_row_slice(2, 2, &[1, 1, 0, 1]);
    let n = 2;
    let mut w = DMatrix::<i64>::zeros(2 * n, 2 * n);
    w.view_mut((0, n), (n, n)).copy_from(&wp);
    w.view_mut((n, 0), (n, n)).copy_from(&wp.transpose());
    let per = permanent(&wp).unwrap();
    assert_eq!(hafnian(&w).unwrap(), per);
    hafnian_block(&w, &w).unwrap();
}

#[test]
fn fock_agrees_with_gaussian_formula() {
    let u = haar_unitary::<f64>(2, 31).unwrap();
    let r = [0.4, 0.25];
    let fock = fock_probabilities(&u, &r, 6).unwrap();
    let g = symplectic_of_unitary(&u).unwrap();
    let mut v = squeezed_covariance(2, 2, 0.0);
    for (i, &ri) in r.iter().enumerate() {
        v[(i, i)] = 0.5 * (-2.0 * ri).exp();
        v[(i + 2, i + 2)] = 0.5 * (2.0 * ri).exp();
    }
    let v = &g * v * g.transpose();
    for (pattern, p) in &fock {
        if pattern.iter().sum::<usize>() <= 4 {
            let q = gbs_probability(&v, pattern).unwrap();
            assert!((p - q).abs() < 1e-10, "{pattern:?}: {p} vs {q}");
        }
    }
    let total: f64 = fock.values().sum();
    assert!(total <= 1.0 + 1e-12 && total > 0.95);
    assert!(fock_probabilities(&haar_unitary::<f64>(4, 1).unwrap(), &[0.1; 4], 2).is_err());
}

#[test]
fn sum_expansion_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let b = symmetrize(&random_complex(6, &mut rng));
    let c = symmetrize(&random_complex(6, &mut rng));
    let zero = ComplexMatrix::zeros(6, 6);
    let (lhs, rhs) = haf_sum_expansion(&b, &zero).unwrap();
    assert!((lhs - rhs).norm() < 1e-10 && (lhs - hafnian(&b).unwrap()).norm() < 1e-10);
    let (lhs, _) = haf_sum_expansion(&zero, &c).unwrap();
    assert!((lhs - hafnian(&c).unwrap()).norm() < 1e-10);
    assert!(haf_sum_expansion_check(&b, &c));
    assert!(!haf_sum_expansion_check(&b, &ComplexMatrix::zeros(4, 4)));
}

#[test]
fn hafnian_is_multilinear_in_a_row_column_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = symmetrize(&random_complex(6, &mut rng));
    let mut x = a.clone();
    let mut y = a.clone();
    let v: Vec<Complex64> = (0..6).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    for j in 1..6 {
        x[(0, j)] = v[j];
        x[(j, 0)] = v[j];
        y[(0, j)] = a[(0, j)] + v[j];
        y[(j, 0)] = a[(0, j)] + v[j];
    }
    let lhs = hafnian(&y).unwrap();
    let rhs = hafnian(&a).unwrap() + hafnian(&x).unwrap();
    assert!((lhs - rhs).norm() < 1e-10);
}
