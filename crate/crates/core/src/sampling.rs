//! MBLO output states and the easy-regime sampler.
//!
//! When `V - I/2` is positive definite the Glauber-Sudarshan function of the
//! state is a Gaussian over `alpha = (q + i p)/sqrt 2` with covariance
//! `V - I/2`, so a photon pattern is drawn by sampling `alpha` and then
//! independent Poisson counts with means `|alpha_i|^2`.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::format::{fmt_f64, num, to_json_string};
use crate::io_relation::{assemble_mblo_gram, GramRelation};
use crate::numerics::{
    min_eigenvalue_sym, psd_sqrt, stream_rng, symplectic_form, CMatrix, Matrix,
};
use crate::oracle::gbs_probability;
use crate::{Error, Result, Seed};

/// Margin for the strict simulability test.
pub const SIMULABLE_MARGIN: f64 = 1e-12;

/// Gaussian state in xxpp ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: Matrix<f64>,
    pub modes: usize,
}

impl GaussianState {
    /// Checks shapes, symmetry and `V + (i/2) Omega >= 0` to `1e-8`.
    pub fn new(mean: DVector<f64>, cov: Matrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim != cov.ncols() {
            return Err(Error::NotSquare(dim, cov.ncols()));
        }
        if dim == 0 || dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        if mean.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "mean vector",
                expected: dim,
                found: mean.len(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let cov = {
            let lam = min_eigenvalue_sym(&cov)?; // also checks symmetry
            if lam <= 0.0 {
                return Err(Error::NotPositiveDefinite("covariance"));
            }
            (&cov + cov.transpose()) * 0.5
        };
        let omega = symplectic_form::<f64>(dim / 2);
        let h: CMatrix<f64> = CMatrix::from_fn(dim, dim, |i, j| {
            Complex64::new(cov[(i, j)], 0.5 * omega[(i, j)])
        });
        let lam = h
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if lam < -1e-8 {
            return Err(Error::NotPositiveDefinite("V + (i/2) Omega (uncertainty principle)"));
        }
        Ok(GaussianState {
            mean,
            cov,
            modes: dim / 2,
        })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::thermal(modes, 0.0)
    }

    /// `x`-squeezed vacuum with parameter `r0` on the first `count` modes.
    pub fn squeezed(modes: usize, count: usize, r0: f64) -> Result<Self> {
        if count > modes {
            return Err(Error::TooLarge {
                what: "squeezed mode count",
                value: count,
                max: modes,
            });
        }
        Self::new(
            DVector::zeros(2 * modes),
            crate::oracle::squeezed_covariance(modes, count, r0),
        )
    }

    /// Thermal state with mean photon number `nbar` per mode.
    pub fn thermal(modes: usize, nbar: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::TooSmall {
                what: "mode count",
                value: 0,
                min: 1,
            });
        }
        if !(nbar >= 0.0) {
            return Err(Error::OutOfRange {
                what: "mean photon number",
                value: nbar,
            });
        }
        Self::new(
            DVector::zeros(2 * modes),
            Matrix::identity(2 * modes, 2 * modes) * (nbar + 0.5),
        )
    }

    /// Exact probability of pattern `n` (zero-mean states only).
    pub fn pattern_probability(&self, n: &[usize]) -> Result<f64> {
        if self.mean.iter().any(|&x| x != 0.0) {
            return Err(Error::NonZeroMean);
        }
        gbs_probability(&self.cov, n)
    }

    /// `lambda_min(V - I/2)`.
    pub fn excess_min_eigenvalue(&self) -> Result<f64> {
        let dim = 2 * self.modes;
        min_eigenvalue_sym(&(&self.cov - Matrix::identity(dim, dim) * 0.5))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "modes": self.modes,
            "mean": self.mean.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "cov": crate::format::matrix_json(&self.cov),
        })
    }
}

/// Output state from a precomputed `G` and noise Gram:
/// mean `G mu`, covariance `G V G^T + (e^{-2r}/2) N N^T`.
pub fn output_state_from(rel: &GramRelation<f64>, rho_in: &GaussianState, r: f64) -> Result<GaussianState> {
    let dim = rel.g.nrows();
    if rho_in.cov.nrows() != dim {
        return Err(Error::DimensionMismatch {
            context: "input state",
            expected: dim,
            found: rho_in.cov.nrows(),
        });
    }
    if !r.is_finite() {
        return Err(Error::OutOfRange {
            what: "squeezing r",
            value: r,
        });
    }
    let cov = &rel.g * &rho_in.cov * rel.g.transpose() + &rel.gram * (0.5 * (-2.0 * r).exp());
    GaussianState::new(&rel.g * &rho_in.mean, cov)
}

/// MBLO output state for `U` at squeezing `r`.
pub fn output_state(u: &CMatrix<f64>, rho_in: &GaussianState, r: f64) -> Result<GaussianState> {
    let rel = assemble_mblo_gram(u)?;
    output_state_from(&rel, rho_in, r)
}

/// True iff `lambda_min(V - I/2) > 1e-12`.
pub fn simulable(state: &GaussianState) -> bool {
    state
        .excess_min_eigenvalue()
        .map(|l| l > SIMULABLE_MARGIN)
        .unwrap_or(false)
}

/// One sampled photon pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhotonSample {
    pub counts: Vec<usize>,
}

impl PhotonSample {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Draws `shots` patterns. Shot `i` uses its own RNG stream `(seed, i)`, so the
/// output does not depend on the thread schedule.
pub fn sample(state: &GaussianState, shots: usize, seed: Seed) -> Result<Vec<PhotonSample>> {
    let lam = state.excess_min_eigenvalue()?;
    if lam <= SIMULABLE_MARGIN {
        return Err(Error::NotSimulable(lam));
    }
    let m = state.modes;
    let dim = 2 * m;
    let l = psd_sqrt(&(&state.cov - Matrix::identity(dim, dim) * 0.5), 1e-12)?;
    (0..shots as u64)
        .into_par_iter()
        .map(|shot| {
            let mut rng = stream_rng(seed, shot);
            let z = DVector::<f64>::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let x = &state.mean + &l * z;
            let mut counts = Vec::with_capacity(m);
            for i in 0..m {
                let intensity = 0.5 * (x[i] * x[i] + x[i + m] * x[i + m]);
                let k = if intensity > 0.0 {
                    let p = Poisson::new(intensity).map_err(|_| Error::OutOfRange {
                        what: "Poisson mean",
                        value: intensity,
                    })?;
                    p.sample(&mut rng) as usize
                } else {
                    0
                };
                counts.push(k);
            }
            Ok(PhotonSample { counts })
        })
        .collect()
}

/// Empirical pattern frequencies.
pub fn empirical_frequencies(samples: &[PhotonSample]) -> BTreeMap<Vec<usize>, f64> {
    let mut freq = BTreeMap::new();
    for s in samples {
        *freq.entry(s.counts.clone()).or_insert(0.0) += 1.0;
    }
    let n = samples.len().max(1) as f64;
    for v in freq.values_mut() {
        *v /= n;
    }
    freq
}

/// Half L1 distance over `patterns`, plus half the difference of the masses
/// left outside the set.
pub fn distribution_tvd<F>(empirical: &BTreeMap<Vec<usize>, f64>, exact: F, patterns: &[Vec<usize>]) -> f64
where
    F: Fn(&[usize]) -> f64,
{
    let mut l1 = 0.0;
    let (mut emp_mass, mut exact_mass) = (0.0, 0.0);
    for p in patterns {
        let e = empirical.get(p).copied().unwrap_or(0.0);
        let q = exact(p);
        l1 += (e - q).abs();
        emp_mass += e;
        exact_mass += q;
    }
    0.5 * l1 + 0.5 * ((1.0 - emp_mass) - (1.0 - exact_mass)).abs()
}

/// All patterns on `modes` modes with at most `max_total` photons, in
/// lexicographic order.
pub fn patterns_up_to(modes: usize, max_total: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, modes: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == modes {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, modes, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), modes, max_total, &mut out);
    out
}

/// CSV rows `shot,n1,...,nM`.
pub fn write_samples_csv<W: Write>(w: W, samples: &[PhotonSample]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut out = csv::Writer::from_writer(w);
    let m = samples.first().map(|s| s.counts.len()).unwrap_or(0);
    let mut header = vec!["shot".to_string()];
    header.extend((1..=m).map(|i| format!("n{i}")));
    out.write_record(&header).map_err(io)?;
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(s.counts.iter().map(|c| c.to_string()));
        out.write_record(&row).map_err(io)?;
    }
    out.flush().map_err(|e| Error::Io(e.to_string()))
}

/// One JSON object `{"shot": i, "counts": [...]}` per line.
pub fn write_samples_jsonl<W: Write>(mut w: W, samples: &[PhotonSample]) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        let line = to_json_string(&json!({"shot": i, "counts": s.counts}));
        writeln!(w, "{line}").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

/// Summary `{shots, patterns: [{pattern, frequency}]}`.
pub fn summary_json(samples: &[PhotonSample]) -> Value {
    let freq = empirical_frequencies(samples);
    json!({
        "shots": samples.len(),
        "patterns": freq.iter().map(|(p, f)| json!({"pattern": p, "frequency": num(*f)})).collect::<Vec<_>>(),
    })
}

/// Human-readable one-line description of a state's simulability margin.
pub fn describe_margin(state: &GaussianState) -> String {
    match state.excess_min_eigenvalue() {
        Ok(l) => format!("lambda_min(V - I/2) = {}", fmt_f64(l)),
        Err(e) => e.to_string(),
    }
}
