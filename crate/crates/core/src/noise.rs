//! Finite-squeezing noise analysis: easiness and hardness squeezing levels,
//! the fidelity-based TVD bound, Haar sweeps, and the multiplicative gap
//! between noisy and ideal pattern probabilities.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::format::num;
use crate::io_relation::{assemble_mblo_gram, GramRelation};
use crate::numerics::{derive_seed, haar_unitary, min_eigenvalue_sym, CMatrix, Matrix};
use crate::oracle::{a_matrix, hafnian, pattern_indices, select, sigma_q, sigma_q_inverse};
use crate::{Error, Real, Result, Seed};

/// `(3 - 2 sqrt 2) M + 2`, the guaranteed lower bound on `lambda_min(N_U N_U^T)`.
pub fn lambda_floor(modes: usize) -> f64 {
    (3.0 - 2.0 * std::f64::consts::SQRT_2) * modes as f64 + 2.0
}

/// `1/2 ln((3 - 2 sqrt 2) M + 2)`.
pub fn analytic_floor(modes: usize) -> f64 {
    0.5 * lambda_floor(modes).ln()
}

/// `10 log10(e^{2r})`.
pub fn squeezing_db(r: f64) -> f64 {
    10.0 * (2.0 * r).exp().log10()
}

/// Inverse of [`squeezing_db`].
pub fn squeezing_from_db(db: f64) -> f64 {
    0.5 * (db / 10.0 * std::f64::consts::LN_10)
}

/// `N_U N_U^T` of the MBLO assembly for `U` (Bell block included).
pub fn noise_gram<T: Real>(u: &CMatrix<T>) -> Result<Matrix<T>> {
    Ok(assemble_mblo_gram(u)?.gram)
}

/// Squeezing needed for a TVD target `beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardnessPoint {
    pub beta: f64,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub modes: usize,
    pub lambda_min: f64,
    /// `1/2 ln lambda_min`.
    pub r_easiness: f64,
    pub r_easiness_db: f64,
    pub frobenius_nnt: f64,
    pub analytic_floor: f64,
    pub r_hardness: Vec<HardnessPoint>,
}

impl ThresholdReport {
    pub fn to_json(&self) -> Value {
        json!({
            "M": self.modes,
            "lambda_min": num(self.lambda_min),
            "r_easiness": num(self.r_easiness),
            "r_easiness_db": num(self.r_easiness_db),
            "frobenius_NNt": num(self.frobenius_nnt),
            "analytic_floor": num(self.analytic_floor),
            "r_hardness": self.r_hardness.iter().map(|h| json!({"beta": num(h.beta), "r": num(h.r)})).collect::<Vec<_>>(),
        })
    }
}

/// Report from a precomputed noise Gram.
pub fn report_from_gram(
    gram: &Matrix<f64>,
    v_in: Option<&Matrix<f64>>,
    betas: &[f64],
) -> Result<ThresholdReport> {
    let modes = gram.nrows() / 2;
    let lambda_min = min_eigenvalue_sym(gram)?;
    if lambda_min <= 0.0 {
        return Err(Error::NotPositiveDefinite("noise Gram"));
    }
    let r = 0.5 * lambda_min.ln();
    let frob = gram.norm();
    let mut r_hardness = Vec::with_capacity(betas.len());
    if !betas.is_empty() {
        let vacuum = Matrix::identity(2 * modes, 2 * modes) * 0.5;
        let inv = inverse_frobenius(v_in.unwrap_or(&vacuum))?;
        for &beta in betas {
            r_hardness.push(HardnessPoint {
                beta,
                r: hardness_from_norms(frob, inv, beta)?,
            });
        }
    }
    Ok(ThresholdReport {
        modes,
        lambda_min,
        r_easiness: r,
        r_easiness_db: squeezing_db(r),
        frobenius_nnt: frob,
        analytic_floor: analytic_floor(modes),
        r_hardness,
    })
}

/// Easiness threshold `1/2 ln lambda_min(N_U N_U^T)` and related quantities.
pub fn easiness_threshold(u: &CMatrix<f64>) -> Result<ThresholdReport> {
    report_from_gram(&noise_gram(u)?, None, &[])
}

/// As [`easiness_threshold`], adding hardness levels for each TVD target
/// (vacuum input if `v_in` is `None`).
pub fn threshold_report(
    u: &CMatrix<f64>,
    v_in: Option<&Matrix<f64>>,
    betas: &[f64],
) -> Result<ThresholdReport> {
    report_from_gram(&noise_gram(u)?, v_in, betas)
}

/// `||V^{-1}||_F` for a symmetric positive-definite `V`.
pub fn inverse_frobenius(v: &Matrix<f64>) -> Result<f64> {
    if v.nrows() != v.ncols() {
        return Err(Error::NotSquare(v.nrows(), v.ncols()));
    }
    let chol = v
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("input covariance"))?;
    Ok(chol.inverse().norm())
}

/// `e^{-r} sqrt(||N N^T||_F ||V_in^{-1}||_F / 8)` from precomputed norms.
pub fn tvd_bound_from_norms(r: f64, frob_nnt: f64, inv_frob: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::OutOfRange {
            what: "squeezing r",
            value: r,
        });
    }
    Ok((-r).exp() * (frob_nnt * inv_frob / 8.0).sqrt())
}

/// Upper bound on the TVD between the noisy and ideal output distributions.
pub fn tvd_bound(r: f64, u: &CMatrix<f64>, v_in: &Matrix<f64>) -> Result<f64> {
    let gram = noise_gram(u)?;
    check_dim(v_in, gram.nrows())?;
    tvd_bound_from_norms(r, gram.norm(), inverse_frobenius(v_in)?)
}

fn check_dim(v: &Matrix<f64>, dim: usize) -> Result<()> {
    if v.nrows() != dim || v.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "input covariance",
            expected: dim,
            found: v.nrows(),
        });
    }
    Ok(())
}

/// `1/2 ln(||N N^T||_F ||V_in^{-1}||_F / (8 beta^2))`, floored at 0.
pub fn hardness_from_norms(frob_nnt: f64, inv_frob: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::OutOfRange {
            what: "TVD target beta",
            value: beta,
        });
    }
    Ok((0.5 * (frob_nnt * inv_frob / (8.0 * beta * beta)).ln()).max(0.0))
}

/// Smallest squeezing level whose [`tvd_bound`] is at most `beta`.
pub fn hardness_threshold(u: &CMatrix<f64>, v_in: &Matrix<f64>, beta: f64) -> Result<f64> {
    let gram = noise_gram(u)?;
    check_dim(v_in, gram.nrows())?;
    hardness_from_norms(gram.norm(), inverse_frobenius(v_in)?, beta)
}

/// Fidelity `1 / sqrt det(V + V_id)` between a zero-mean Gaussian state and a
/// pure zero-mean Gaussian state `V_id`.
pub fn gaussian_fidelity(v: &Matrix<f64>, v_id: &Matrix<f64>) -> Result<f64> {
    check_dim(v, v_id.nrows())?;
    let purity_det = (v_id * 2.0).determinant();
    if (purity_det - 1.0).abs() > 1e-6 {
        return Err(Error::OutOfRange {
            what: "det(2 V_id) for the reference state (must be pure)",
            value: purity_det,
        });
    }
    let d = (v + v_id).determinant();
    if !(d > 0.0) {
        return Err(Error::NotPositiveDefinite("V + V_id"));
    }
    Ok(1.0 / d.sqrt())
}

/// One Haar trial of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialRecord {
    pub modes: usize,
    pub trial: usize,
    pub r_easiness: f64,
    pub lambda_min: f64,
    pub frob: f64,
}

/// Per-`M` summary of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRecord {
    pub modes: usize,
    pub trials: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub r_mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub seed: Seed,
    pub records: Vec<SweepRecord>,
    pub trials: Vec<TrialRecord>,
}

impl SweepResult {
    /// Per-trial CSV: `M,trial,r_easiness,lambda_min,frob`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["M", "trial", "r_easiness", "lambda_min", "frob"])
            .map_err(io)?;
        for t in &self.trials {
            out.write_record(&[
                t.modes.to_string(),
                t.trial.to_string(),
                crate::format::fmt_f64(t.r_easiness),
                crate::format::fmt_f64(t.lambda_min),
                crate::format::fmt_f64(t.frob),
            ])
            .map_err(io)?;
        }
        out.flush().map_err(|e| Error::Io(e.to_string()))
    }

    /// Summary JSON `{seed, records: [{M, trials, r_min, r_max, r_mean, analytic_floor}]}`.
    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "records": self.records.iter().map(|r| json!({
                "M": r.modes,
                "trials": r.trials,
                "r_min": num(r.r_min),
                "r_max": num(r.r_max),
                "r_mean": num(r.r_mean),
                "analytic_floor": num(analytic_floor(r.modes)),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Easiness thresholds of `trials` Haar unitaries per mode count. Trial `t` at
/// `M` draws its unitary from `derive_seed(seed, [M, t])`.
pub fn haar_sweep(modes_list: &[usize], trials: usize, seed: Seed) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::TooSmall {
            what: "trials",
            value: 0,
            min: 1,
        });
    }
    let jobs: Vec<(usize, usize)> = modes_list
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect();
    let results: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(m, t)| {
            let u = haar_unitary::<f64>(m, derive_seed(seed, &[m as u64, t as u64]))?;
            let gram = noise_gram(&u)?;
            let lambda_min = min_eigenvalue_sym(&gram)?;
            Ok(TrialRecord {
                modes: m,
                trial: t,
                r_easiness: 0.5 * lambda_min.ln(),
                lambda_min,
                frob: gram.norm(),
            })
        })
        .collect::<Result<_>>()?;
    let records = modes_list
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let rs: Vec<f64> = results[i * trials..(i + 1) * trials]
                .iter()
                .map(|t| t.r_easiness)
                .collect();
            SweepRecord {
                modes: m,
                trials,
                r_min: rs.iter().copied().fold(f64::INFINITY, f64::min),
                r_max: rs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                r_mean: rs.iter().sum::<f64>() / trials as f64,
            }
        })
        .collect();
    Ok(SweepResult {
        seed,
        records,
        trials: results,
    })
}

/// `|1 - sqrt(|Sigma_Q| / |Sigma_Q + delta|)|` and `||delta||_F ||Sigma_Q^{-1}||_F`.
pub fn determinant_ratio_check(sq: &CMatrix<f64>, delta: &CMatrix<f64>) -> Result<(f64, f64)> {
    let (inv, det) = sigma_q_inverse(sq)?;
    let (_, det_p) = sigma_q_inverse(&(sq + delta))?;
    Ok(((1.0 - (det / det_p).sqrt()).abs(), delta.norm() * inv.norm()))
}

/// Parameters of the worst-case encoding that enter the gap bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapParams {
    /// Size of `W'`.
    pub n0: usize,
    /// `||W||_2`.
    pub w_norm: f64,
    /// Input squeezing on the encoding modes.
    pub r0: f64,
}

#[derive(Clone, Debug)]
pub struct GapReport {
    /// Noisy probability.
    pub p: f64,
    /// Ideal probability.
    pub q: f64,
    /// `|1 - p/q|`, or in the zero branch `sqrt|Sigma_Q| p (||W||/tanh r0)^N`.
    pub gap: f64,
    pub bound: f64,
    /// `q(n) = 0`.
    pub zero_branch: bool,
    pub delta_norm: f64,
    pub sigma_inv_norm: f64,
    /// Largest entry modulus of `C`.
    pub c_max: f64,
    /// `||delta||_F ||Sigma_Q^{-1}||_F <= 1/3` and `N^2 C_max < 1/2`.
    pub conditions_hold: bool,
    pub det_ratio_gap: f64,
    pub det_ratio_bound: f64,
    /// `(||W|| / tanh r0) A_{n ⊕ n}`.
    pub b: CMatrix<f64>,
    /// `(||W|| / tanh r0) (A' - A)_{n ⊕ n}`.
    pub c: CMatrix<f64>,
}

impl GapReport {
    pub fn within_bound(&self) -> bool {
        self.gap <= self.bound
    }

    pub fn to_json(&self) -> Value {
        json!({
            "p": num(self.p),
            "q": num(self.q),
            "gap": num(self.gap),
            "bound": num(self.bound),
            "zero_branch": self.zero_branch,
            "delta_norm": num(self.delta_norm),
            "sigma_inv_norm": num(self.sigma_inv_norm),
            "c_max": num(self.c_max),
            "conditions_hold": self.conditions_hold,
            "det_ratio_gap": num(self.det_ratio_gap),
            "det_ratio_bound": num(self.det_ratio_bound),
        })
    }
}

/// Compares the noisy and ideal probabilities of a collision-free pattern `n`
/// for the MBLO circuit of `U` at squeezing `r`, against the worst-case perturbation bound.
pub fn multiplicative_gap_check(
    r: f64,
    u: &CMatrix<f64>,
    v_in: &Matrix<f64>,
    n: &[usize],
    params: &GapParams,
) -> Result<GapReport> {
    let rel = assemble_mblo_gram(u)?;
    gap_check_from(&rel, r, v_in, n, params)
}

/// [`multiplicative_gap_check`] with a precomputed relation.
pub fn gap_check_from(
    rel: &GramRelation<f64>,
    r: f64,
    v_in: &Matrix<f64>,
    n: &[usize],
    params: &GapParams,
) -> Result<GapReport> {
    let dim = rel.g.nrows();
    check_dim(v_in, dim)?;
    if n.len() != dim / 2 || n.iter().any(|&k| k > 1) {
        return Err(Error::InvalidPattern(
            "gap check needs a collision-free pattern over all modes".into(),
        ));
    }
    let photons: usize = n.iter().sum();
    if !(params.r0 > 0.0) || !(params.w_norm > 0.0) {
        return Err(Error::OutOfRange {
            what: "encoding parameters",
            value: params.r0.min(params.w_norm),
        });
    }
    let v_id = &rel.g * v_in * rel.g.transpose();
    let v_noisy = &v_id + &rel.gram * (0.5 * (-2.0 * r).exp());
    let sq = sigma_q(&v_id)?;
    let sq_noisy = sigma_q(&v_noisy)?;
    let delta = &sq_noisy - &sq;
    let (inv, det) = sigma_q_inverse(&sq)?;
    let (inv_noisy, det_noisy) = sigma_q_inverse(&sq_noisy)?;
    let idx = pattern_indices(n);
    let a = select(&a_matrix(&inv), &idx);
    let a_noisy = select(&a_matrix(&inv_noisy), &idx);
    let q = hafnian(&a)?.re / det.sqrt();
    let p = hafnian(&a_noisy)?.re / det_noisy.sqrt();

    let scale = params.w_norm / params.r0.tanh();
    let b = a.scale(scale);
    let c = (&a_noisy - &a).scale(scale);
    let c_max = c.iter().fold(0.0_f64, |m, z: &Complex64| m.max(z.norm()));
    let delta_norm = delta.norm();
    let sigma_inv_norm = inv.norm();
    let nn = (photons * photons) as f64;
    let fact = (1..=params.n0).map(|x| x as f64).product::<f64>().powi(2);
    let core = fact * nn * scale * sigma_inv_norm.powi(2) * delta_norm;
    let zero_branch = hafnian(&b)?.norm() < 1e-12;
    let (gap, bound) = if zero_branch {
        let scaled = det.sqrt() * p * scale.powi(photons as i32);
        (scaled.abs(), (1.0 + delta_norm * sigma_inv_norm) * 6.0 * core)
    } else {
        ((1.0 - p / q).abs(), 9.0 * core)
    };
    let (det_ratio_gap, det_ratio_bound) = determinant_ratio_check(&sq, &delta)?;
    Ok(GapReport {
        p,
        q,
        gap,
        bound,
        zero_branch,
        delta_norm,
        sigma_inv_norm,
        c_max,
        conditions_hold: delta_norm * sigma_inv_norm <= 1.0 / 3.0 && nn * c_max < 0.5,
        det_ratio_gap,
        det_ratio_bound,
        b,
        c,
    })
}
