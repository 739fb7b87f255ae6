//! Exact small-scale ground truth: hafnian and permanent kernels, Gaussian
//! photon-pattern probabilities, the worst-case embedding of a `{-1,0,1}`
//! permanent into a Gaussian boson sampling amplitude, and a truncated Fock-space
//! simulator for cross-checks.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::numerics::{
    check_unitary, complex_basis_s, complexify, spectral_norm_c, symmetric_eigen, CMatrix, Matrix,
};
use crate::{Error, Result};

/// Commutative ring the combinatorial kernels run over. Integer rings give
/// exact values.
pub trait Ring: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + Sub<Output = Self> {}
impl<R> Ring for R where R: Clone + Zero + One + Add<Output = R> + Mul<Output = R> + Sub<Output = R> {}

/// Largest hafnian dimension accepted (`2N` with `N <= 10`).
pub const HAFNIAN_MAX_DIM: usize = 20;
/// Largest permanent size accepted.
pub const PERMANENT_MAX_DIM: usize = 12;

/// Hafnian by pairing the lowest remaining index, memoised on the remaining
/// index set.
pub fn hafnian<R: Ring>(a: &DMatrix<R>) -> Result<R> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotSquare(n, a.ncols()));
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n > HAFNIAN_MAX_DIM {
        return Err(Error::TooLarge {
            what: "hafnian dimension",
            value: n,
            max: HAFNIAN_MAX_DIM,
        });
    }
    if n == 0 {
        return Ok(R::one());
    }
    let mut memo: Vec<Option<R>> = vec![None; 1 << n];
    Ok(haf_rec(a, (1usize << n) - 1, &mut memo))
}

fn haf_rec<R: Ring>(a: &DMatrix<R>, mask: usize, memo: &mut [Option<R>]) -> R {
    if mask == 0 {
        return R::one();
    }
    if let Some(v) = &memo[mask] {
        return v.clone();
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << i);
    let mut total = R::zero();
    let mut m = rest;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        m &= m - 1;
        let sub = haf_rec(a, rest & !(1 << j), memo);
        total = total + a[(i, j)].clone() * sub;
    }
    memo[mask] = Some(total.clone());
    total
}

/// Validated complex symmetric hafnian argument.
#[derive(Clone, Debug, PartialEq)]
pub struct HafnianInput {
    a: CMatrix<f64>,
}

impl HafnianInput {
    pub fn new(a: CMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::NotSquare(n, a.ncols()));
        }
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        if n > HAFNIAN_MAX_DIM {
            return Err(Error::TooLarge {
                what: "hafnian dimension",
                value: n,
                max: HAFNIAN_MAX_DIM,
            });
        }
        let asym = (&a - a.transpose()).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if asym > 1e-10 {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(HafnianInput { a })
    }

    pub fn matrix(&self) -> &CMatrix<f64> {
        &self.a
    }

    pub fn hafnian(&self) -> Complex64 {
        hafnian(&self.a).expect("validated input")
    }
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order.
pub fn permanent<R: Ring>(w: &DMatrix<R>) -> Result<R> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::NotSquare(n, w.ncols()));
    }
    if n > PERMANENT_MAX_DIM {
        return Err(Error::TooLarge {
            what: "permanent size",
            value: n,
            max: PERMANENT_MAX_DIM,
        });
    }
    if n == 0 {
        return Ok(R::one());
    }
    let mut row_sums = vec![R::zero(); n];
    let mut in_set = vec![false; n];
    // Accumulate sum_S (-1)^{|S|} prod_i rowsum_i(S) with the sign split in two.
    let mut plus = R::zero();
    let mut minus = R::zero();
    let mut size = 0usize;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        in_set[j] = !in_set[j];
        if in_set[j] {
            size += 1;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s = s.clone() + w[(i, j)].clone();
            }
        } else {
            size -= 1;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s = s.clone() - w[(i, j)].clone();
            }
        }
        let prod = row_sums.iter().fold(R::one(), |p, s| p * s.clone());
        if size % 2 == 0 {
            plus = plus + prod;
        } else {
            minus = minus + prod;
        }
    }
    Ok(if n % 2 == 0 { plus - minus } else { minus - plus })
}

/// `Sigma_Q = S V S^dagger + I/2` for an xxpp covariance `V`.
pub fn sigma_q(cov: &Matrix<f64>) -> Result<CMatrix<f64>> {
    let dim = cov.nrows();
    if dim != cov.ncols() {
        return Err(Error::NotSquare(dim, cov.ncols()));
    }
    if dim == 0 || dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    let s = complex_basis_s::<f64>(dim / 2)?;
    let mut sq = &s * complexify(cov) * s.adjoint();
    for i in 0..dim {
        sq[(i, i)] += Complex64::new(0.5, 0.0);
    }
    Ok(sq)
}

/// `Sigma_Q^{-1}` and `det Sigma_Q`, requiring `Sigma_Q` Hermitian positive definite.
pub fn sigma_q_inverse(sq: &CMatrix<f64>) -> Result<(CMatrix<f64>, f64)> {
    let herm = (sq + sq.adjoint()).scale(0.5);
    let chol = herm
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("Sigma_Q"))?;
    let det = (0..sq.nrows()).map(|i| chol.l()[(i, i)].re.powi(2)).product();
    Ok((chol.inverse(), det))
}

/// `X_{2M} (I - Sigma_Q^{-1})`.
pub fn a_matrix(sq_inv: &CMatrix<f64>) -> CMatrix<f64> {
    let dim = sq_inv.nrows();
    let m = dim / 2;
    let inner = CMatrix::<f64>::identity(dim, dim) - sq_inv;
    let mut a = CMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let src = if i < m { i + m } else { i - m };
        a.set_row(i, &inner.row(src));
    }
    a
}

/// Row/column indices of `A_{n ⊕ n}`: mode `i` repeated `n_i` times, then
/// `i + M` repeated `n_i` times.
pub fn pattern_indices(n: &[usize]) -> Vec<usize> {
    let m = n.len();
    let mut idx = Vec::new();
    for (i, &k) in n.iter().enumerate() {
        idx.extend(std::iter::repeat_n(i, k));
    }
    for (i, &k) in n.iter().enumerate() {
        idx.extend(std::iter::repeat_n(i + m, k));
    }
    idx
}

/// Principal submatrix on `idx` (indices may repeat).
pub fn select<T: Clone + nalgebra::Scalar>(a: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])].clone())
}

fn check_pattern(n: &[usize], modes: usize) -> Result<()> {
    if n.len() != modes {
        return Err(Error::InvalidPattern(format!(
            "pattern has {} entries for {modes} modes",
            n.len()
        )));
    }
    let total: usize = n.iter().sum();
    if 2 * total > HAFNIAN_MAX_DIM {
        return Err(Error::InvalidPattern(format!(
            "{total} photons exceeds the hafnian limit of {}",
            HAFNIAN_MAX_DIM / 2
        )));
    }
    Ok(())
}

/// Probability of photon pattern `n` for a zero-mean Gaussian state with xxpp
/// covariance `cov`: `Haf(A_{n ⊕ n}) / (prod n_i! sqrt det Sigma_Q)`.
/// Patterns with repeated photons in a mode are allowed.
pub fn gbs_probability(cov: &Matrix<f64>, n: &[usize]) -> Result<f64> {
    let sq = sigma_q(cov)?;
    check_pattern(n, cov.nrows() / 2)?;
    let (inv, det) = sigma_q_inverse(&sq)?;
    let a = a_matrix(&inv);
    let haf = hafnian(&select(&a, &pattern_indices(n)))?;
    let fact: f64 = n
        .iter()
        .map(|&k| (1..=k).map(|x| x as f64).product::<f64>())
        .product();
    Ok(haf.re / (fact * det.sqrt()))
}

/// Worst-case embedding of `W'` into an `M`-mode circuit.
#[derive(Clone, Debug)]
pub struct EmbeddingResult {
    pub wprime: Matrix<f64>,
    /// `[[0, W' ⊕ I], [W'^T ⊕ I, 0]]`, `N x N`.
    pub w: Matrix<f64>,
    /// Complex factor with `W = Y Y^T`.
    pub y: CMatrix<f64>,
    /// `M x M` unitary whose top-left `N x N` block is `Y / ||Y||_2`.
    pub u: CMatrix<f64>,
    /// `||W||_2 = ||Y||_2^2`.
    pub w_norm: f64,
}

impl EmbeddingResult {
    /// `N`, the number of modes carrying the encoding.
    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn n0(&self) -> usize {
        self.wprime.nrows()
    }
}

/// Hermitian positive-semidefinite square root.
fn herm_sqrt(a: &CMatrix<f64>) -> CMatrix<f64> {
    let h = (a + a.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let d = eig
        .eigenvalues
        .map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Builds `W`, factors `W = Y Y^T` through the real eigendecomposition, and
/// dilates `Y / ||Y||_2` to an `M x M` unitary.
pub fn embed_worst_case(wprime: &Matrix<f64>, n: usize, modes: usize) -> Result<EmbeddingResult> {
    let n0 = wprime.nrows();
    if n0 != wprime.ncols() {
        return Err(Error::NotSquare(n0, wprime.ncols()));
    }
    if n0 == 0 {
        return Err(Error::TooSmall {
            what: "W' size",
            value: 0,
            min: 1,
        });
    }
    if let Some(x) = wprime.iter().find(|&&x| x != -1.0 && x != 0.0 && x != 1.0) {
        return Err(Error::OutOfRange {
            what: "W' entry",
            value: *x,
        });
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n < 2 * n0 {
        return Err(Error::TooSmall {
            what: "N",
            value: n,
            min: 2 * n0,
        });
    }
    if modes < 2 * n {
        return Err(Error::TooSmall {
            what: "mode count",
            value: modes,
            min: 2 * n,
        });
    }
    let h = n / 2;
    let mut block = Matrix::<f64>::identity(h, h);
    block.view_mut((0, 0), (n0, n0)).copy_from(wprime);
    let mut w = Matrix::<f64>::zeros(n, n);
    w.view_mut((0, h), (h, h)).copy_from(&block);
    w.view_mut((h, 0), (h, h)).copy_from(&block.transpose());

    let (values, q) = symmetric_eigen(&w)?;
    let roots = values.map(|v| {
        if v >= 0.0 {
            Complex64::new(v.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-v).sqrt())
        }
    });
    let y = complexify(&q) * CMatrix::from_diagonal(&roots);
    let y_norm = spectral_norm_c(&y);
    let a0 = y.unscale(y_norm);

    let id = CMatrix::<f64>::identity(n, n);
    let mut dil = CMatrix::<f64>::identity(modes, modes);
    dil.view_mut((0, 0), (n, n)).copy_from(&a0);
    dil.view_mut((0, n), (n, n))
        .copy_from(&herm_sqrt(&(&id - &a0 * a0.adjoint())));
    dil.view_mut((n, 0), (n, n))
        .copy_from(&herm_sqrt(&(&id - a0.adjoint() * &a0)));
    dil.view_mut((n, n), (n, n)).copy_from(&(-a0.adjoint()));

    // Remove rounding drift: QR, with R's diagonal phases folded back into Q.
    let qr = dil.qr();
    let r = qr.r();
    let mut u = qr.q();
    for j in 0..modes {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..modes {
                u[(i, j)] *= phase;
            }
        }
    }
    check_unitary(&u, 1e-10)?;
    let block_err = (u.view((0, 0), (n, n)).scale(y_norm) - &y).norm();
    if block_err > 1e-10 {
        return Err(Error::Synthesis(format!(
            "embedded block deviates from Y by {block_err:.3e}"
        )));
    }
    Ok(EmbeddingResult {
        wprime: wprime.clone(),
        w_norm: y_norm * y_norm,
        w,
        y,
        u,
    })
}

/// xxpp covariance with single-mode squeezing `r0` (reduced `x` variance) on
/// the first `count` of `modes` modes and vacuum elsewhere.
pub fn squeezed_covariance(modes: usize, count: usize, r0: f64) -> Matrix<f64> {
    let mut v = Matrix::<f64>::identity(2 * modes, 2 * modes) * 0.5;
    for i in 0..count.min(modes) {
        v[(i, i)] = 0.5 * (-2.0 * r0).exp();
        v[(i + modes, i + modes)] = 0.5 * (2.0 * r0).exp();
    }
    v
}

/// Both sides of `Haf(B + C) = sum_J Haf(B_J) Haf(C_{J^c})` over even subsets `J`.
pub fn haf_sum_expansion(b: &CMatrix<f64>, c: &CMatrix<f64>) -> Result<(Complex64, Complex64)> {
    let n = b.nrows();
    if b.shape() != c.shape() {
        return Err(Error::DimensionMismatch {
            context: "hafnian sum expansion",
            expected: n,
            found: c.nrows(),
        });
    }
    if n > 8 {
        return Err(Error::TooLarge {
            what: "hafnian sum expansion dimension",
            value: n,
            max: 8,
        });
    }
    let lhs = hafnian(&(b + c))?;
    let mut rhs = Complex64::zero();
    for mask in 0usize..(1 << n) {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let j: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let jc: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 0).collect();
        rhs += hafnian(&select(b, &j))? * hafnian(&select(c, &jc))?;
    }
    Ok((lhs, rhs))
}

/// True iff the sum expansion holds to `1e-9` relative (false for invalid input).
pub fn haf_sum_expansion_check(b: &CMatrix<f64>, c: &CMatrix<f64>) -> bool {
    match haf_sum_expansion(b, c) {
        Ok((lhs, rhs)) => (lhs - rhs).norm() <= 1e-9 * lhs.norm().max(rhs.norm()).max(1.0),
        Err(_) => false,
    }
}

/// Largest mode count for the Fock-space simulator.
pub const FOCK_MAX_MODES: usize = 3;
/// Largest total photon number for the Fock-space simulator.
pub const FOCK_MAX_PHOTONS: usize = 8;

type Poly = BTreeMap<Vec<usize>, Complex64>;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Exact photon-pattern probabilities, for every pattern with at most `cutoff`
/// photons, of single-mode squeezed vacua (`x`-squeezed by `r_i`) sent through
/// the passive circuit `U`. Evaluated by expanding creation-operator polynomials.
pub fn fock_probabilities(
    u: &CMatrix<f64>,
    squeezing: &[f64],
    cutoff: usize,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    check_unitary(u, 1e-8)?;
    let m = u.nrows();
    if m > FOCK_MAX_MODES {
        return Err(Error::TooLarge {
            what: "Fock oracle mode count",
            value: m,
            max: FOCK_MAX_MODES,
        });
    }
    if cutoff > FOCK_MAX_PHOTONS {
        return Err(Error::TooLarge {
            what: "Fock oracle photon cutoff",
            value: cutoff,
            max: FOCK_MAX_PHOTONS,
        });
    }
    if squeezing.len() != m {
        return Err(Error::DimensionMismatch {
            context: "squeezing parameters",
            expected: m,
            found: squeezing.len(),
        });
    }
    // Single-mode amplitudes c_{2k} = (-tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r).
    let single: Vec<Vec<(usize, f64)>> = squeezing
        .iter()
        .map(|&r| {
            let t = -r.tanh();
            let norm = 1.0 / r.cosh().sqrt();
            (0..=cutoff / 2)
                .map(|k| {
                    let c = t.powi(k as i32) * factorial(2 * k).sqrt()
                        / (2f64.powi(k as i32) * factorial(k))
                        * norm;
                    (2 * k, c)
                })
                .collect()
        })
        .collect();
    // Product input state in the occupation basis.
    let mut input: Vec<(Vec<usize>, f64)> = vec![(vec![], 1.0)];
    for amps in &single {
        let mut next = Vec::new();
        for (occ, c) in &input {
            let used: usize = occ.iter().sum();
            for &(k, a) in amps {
                if used + k <= cutoff {
                    let mut o = occ.clone();
                    o.push(k);
                    next.push((o, c * a));
                }
            }
        }
        input = next;
    }
    // |n> = prod (a_i^dag)^{n_i} / sqrt(n_i!) |0>, with a_i^dag -> sum_j U_ji a_j^dag.
    let mut out: Poly = BTreeMap::new();
    for (occ, c) in input {
        let mut poly: Poly = BTreeMap::new();
        poly.insert(vec![0; m], Complex64::new(c / occ.iter().map(|&k| factorial(k).sqrt()).product::<f64>(), 0.0));
        for (i, &k) in occ.iter().enumerate() {
            for _ in 0..k {
                let mut next: Poly = BTreeMap::new();
                for (mono, coef) in &poly {
                    for j in 0..m {
                        let mut e = mono.clone();
                        e[j] += 1;
                        *next.entry(e).or_insert(Complex64::zero()) += coef * u[(j, i)];
                    }
                }
                poly = next;
            }
        }
        for (mono, coef) in poly {
            *out.entry(mono).or_insert(Complex64::zero()) += coef;
        }
    }
    let mut probs = BTreeMap::new();
    for (mono, coef) in out {
        let amp = coef * mono.iter().map(|&k| factorial(k).sqrt()).product::<f64>();
        probs.insert(mono, amp.norm_sqr());
    }
    // Fill patterns that never appeared.
    let mut pattern = vec![0usize; m];
    loop {
        if pattern.iter().sum::<usize>() <= cutoff {
            probs.entry(pattern.clone()).or_insert(0.0);
        }
        let mut i = 0;
        loop {
            if i == m {
                return Ok(probs);
            }
            pattern[i] += 1;
            if pattern[i] <= cutoff {
                break;
            }
            pattern[i] = 0;
            i += 1;
        }
    }
}
