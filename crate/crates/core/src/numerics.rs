//! Dense matrix substrate: Haar unitaries, the unitary-to-symplectic map,
//! quadrature permutations, the complex basis change and symmetric eigenvalues.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Real, Result, Seed};

/// Real dense matrix over `T`.
pub type Matrix<T> = DMatrix<T>;
/// Complex dense matrix over `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts `T` back to `f64` (used for diagnostics and error payloads).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    nalgebra::try_convert::<T, f64>(x).unwrap_or(f64::NAN)
}

/// Tolerance `x`, widened to a few hundred ulps for low-precision scalars.
#[inline]
pub fn tol<T: Real>(x: f64) -> T {
    let floor = T::default_epsilon() * lit::<T>(1e3);
    let t = lit::<T>(x);
    if t > floor {
        t
    } else {
        floor
    }
}

/// `e^{i a}`.
#[inline]
pub fn cis<T: Real>(a: T) -> Complex<T> {
    Complex::new(a.cos(), a.sin())
}

/// Modulus of a complex number without requiring `num_traits::Float`.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.modulus()
}

/// Argument of a complex number in `(-pi, pi]`.
#[inline]
pub fn carg<T: Real>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// Deterministic child seed from a parent seed and a path of indices (splitmix64 mixing).
pub fn derive_seed(seed: Seed, path: &[u64]) -> Seed {
    let mut s = seed;
    for &p in path {
        s = splitmix64(s ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix64(s)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// RNG for an independent stream `stream` under `seed`.
pub fn stream_rng(seed: Seed, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-random `m x m` unitary: QR of a complex Ginibre matrix with the
/// diagonal of `R` rotated to the positive real axis.
pub fn haar_unitary<T: Real>(m: usize, seed: Seed) -> Result<CMatrix<T>> {
    if m == 0 {
        return Err(Error::TooSmall {
            what: "mode count",
            value: 0,
            min: 1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = CMatrix::<T>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z[(i, j)] = Complex::new(lit(re * scale), lit(im * scale));
        }
    }
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        let d = r[(j, j)];
        let a = cabs(d);
        if a > T::zero() {
            let phase = d.unscale(a);
            for i in 0..m {
                q[(i, j)] *= phase;
            }
        }
    }
    Ok(q)
}

/// `||U^dagger U - I||_F`.
pub fn unitarity_deviation<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    let p = u.adjoint() * u;
    (p - CMatrix::<T>::identity(n, n)).norm()
}

/// Checks that `u` is square and unitary within `tolerance` (Frobenius).
pub fn check_unitary<T: Real>(u: &CMatrix<T>, tolerance: f64) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::NotSquare(u.nrows(), u.ncols()));
    }
    if u.nrows() == 0 {
        return Err(Error::TooSmall {
            what: "mode count",
            value: 0,
            min: 1,
        });
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dev = unitarity_deviation(u);
    if dev > tol::<T>(tolerance) {
        return Err(Error::NotUnitary(to_f64(dev)));
    }
    Ok(())
}

/// Orthogonal-symplectic image `[[U_R, -U_I], [U_I, U_R]]` of a unitary, xxpp ordering.
pub fn symplectic_of_unitary<T: Real>(u: &CMatrix<T>) -> Result<Matrix<T>> {
    check_unitary(u, 1e-8)?;
    Ok(symplectic_of_unitary_unchecked(u))
}

pub(crate) fn symplectic_of_unitary_unchecked<T: Real>(u: &CMatrix<T>) -> Matrix<T> {
    let m = u.nrows();
    let mut g = Matrix::<T>::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let z = u[(i, j)];
            g[(i, j)] = z.re;
            g[(i, j + m)] = -z.im;
            g[(i + m, j)] = z.im;
            g[(i + m, j + m)] = z.re;
        }
    }
    g
}

/// Symplectic form `[[0, I], [-I, 0]]` in xxpp ordering.
pub fn symplectic_form<T: Real>(m: usize) -> Matrix<T> {
    let mut w = Matrix::<T>::zeros(2 * m, 2 * m);
    for i in 0..m {
        w[(i, i + m)] = T::one();
        w[(i + m, i)] = -T::one();
    }
    w
}

/// `||G Omega G^T - Omega||_F`.
pub fn symplecticity_deviation<T: Real>(g: &Matrix<T>) -> T {
    let m = g.nrows() / 2;
    let w = symplectic_form::<T>(m);
    (g * &w * g.transpose() - w).norm()
}

/// `||G^T G - I||_F`.
pub fn orthogonality_deviation<T: Real>(g: &Matrix<T>) -> T {
    let n = g.nrows();
    (g.transpose() * g - Matrix::<T>::identity(n, n)).norm()
}

/// Row selection of the xxpp interleave: entry `i` is the source index that
/// output coordinate `i` reads from `(q1, p1, q2, p2)`.
pub fn interleave_indices(m1: usize, m2: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(2 * (m1 + m2));
    idx.extend(0..m1);
    idx.extend(2 * m1..2 * m1 + m2);
    idx.extend(m1..2 * m1);
    idx.extend(2 * m1 + m2..2 * m1 + 2 * m2);
    idx
}

/// Permutation matrix taking `(q1, p1, q2, p2)` block order to `(q1, q2, p1, p2)`.
pub fn xxpp_interleave_permutation<T: Real>(m1: usize, m2: usize) -> Result<Matrix<T>> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::TooSmall {
            what: "interleave block size",
            value: 0,
            min: 1,
        });
    }
    let idx = interleave_indices(m1, m2);
    let n = idx.len();
    let mut p = Matrix::<T>::zeros(n, n);
    for (row, &col) in idx.iter().enumerate() {
        p[(row, col)] = T::one();
    }
    Ok(p)
}

/// `(1/sqrt 2) [[I, iI], [I, -iI]]`, taking xxpp quadratures to `(alpha, alpha*)`.
pub fn complex_basis_s<T: Real>(m: usize) -> Result<CMatrix<T>> {
    if m == 0 {
        return Err(Error::TooSmall {
            what: "mode count",
            value: 0,
            min: 1,
        });
    }
    let h = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let mut s = CMatrix::<T>::zeros(2 * m, 2 * m);
    for i in 0..m {
        s[(i, i)] = Complex::new(h, T::zero());
        s[(i, i + m)] = Complex::new(T::zero(), h);
        s[(i + m, i)] = Complex::new(h, T::zero());
        s[(i + m, i + m)] = Complex::new(T::zero(), -h);
    }
    Ok(s)
}

/// Block-diagonal direct sum.
pub fn direct_sum<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::<T>::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

fn check_symmetric<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = a.amax().max(T::one());
    let asym = (a - a.transpose()).amax();
    if asym > tol::<T>(1e-10) * scale {
        return Err(Error::NotSymmetric(to_f64(asym)));
    }
    Ok((a + a.transpose()) * lit::<T>(0.5))
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix, after
/// symmetrising `(A + A^T)/2`.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> Result<(DVector<T>, Matrix<T>)> {
    let s = check_symmetric(a)?;
    let eig = s.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::<T>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym<T: Real>(a: &Matrix<T>) -> Result<T> {
    if a.nrows() == 0 {
        return Err(Error::TooSmall {
            what: "matrix dimension",
            value: 0,
            min: 1,
        });
    }
    let (values, _) = symmetric_eigen(a)?;
    Ok(values[0])
}

/// Symmetric positive-semidefinite square root; eigenvalues in `[-clip, 0)` are
/// treated as zero, anything more negative is an error.
pub fn psd_sqrt<T: Real>(a: &Matrix<T>, clip: f64) -> Result<Matrix<T>> {
    let (values, vectors) = symmetric_eigen(a)?;
    let clip = lit::<T>(clip);
    let mut d = DVector::<T>::zeros(values.len());
    for (k, &v) in values.iter().enumerate() {
        if v < -clip {
            return Err(Error::NotPositiveDefinite("negative eigenvalue below clipping range"));
        }
        d[k] = if v > T::zero() { v.sqrt() } else { T::zero() };
    }
    Ok(&vectors * Matrix::<T>::from_diagonal(&d) * vectors.transpose())
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(a: &Matrix<T>) -> T {
    a.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |m, &s| if s > m { s } else { m })
}

/// Largest singular value of a complex matrix.
pub fn spectral_norm_c<T: Real>(a: &CMatrix<T>) -> T {
    a.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |m, &s| if s > m { s } else { m })
}

/// Lifts a real matrix to a complex one.
pub fn complexify<T: Real>(a: &Matrix<T>) -> CMatrix<T> {
    a.map(|x| Complex::new(x, T::zero()))
}
