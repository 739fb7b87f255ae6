//! Quadrature input-output relations `x_out = G x_in + N p_anc + D m`.
//!
//! `G` is the implemented symplectic map, `N` carries the finite-squeezing
//! noise of the ancilla momenta and `D` the homodyne outcomes that feed-forward
//! cancels. Relations are built from two base cases and folded over a
//! [`GraphTerm`] with the concatenation and direct-sum rules.

use serde_json::{json, Value};

use crate::format::{matrix_json, num};
use crate::graph::{brickwork_graph, Basis, GraphTerm, Structure};
use crate::numerics::{check_unitary, interleave_indices, lit, to_f64, CMatrix, Matrix};
use crate::synthesis::universal_schedule;
use crate::{Error, Real, Result};

/// Measurement angles with basis tags, in canonical measurement order.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T> {
    pub angles: Vec<T>,
    pub bases: Vec<Basis>,
}

/// Rejects non-finite angles and angles within `1e-6` of a pole of `tan`.
pub fn check_angle<T: Real>(index: usize, phi: T) -> Result<()> {
    if !phi.is_finite() {
        return Err(Error::SingularAngle {
            index,
            angle: to_f64(phi),
        });
    }
    let pi = T::pi();
    let shifted = phi - T::frac_pi_2();
    let k = (shifted / pi).round();
    if (shifted - k * pi).abs() < lit::<T>(1e-6) {
        return Err(Error::SingularAngle {
            index,
            angle: to_f64(phi),
        });
    }
    Ok(())
}

impl<T: Real> Schedule<T> {
    /// Schedule with explicit tags; lengths must agree and angles be regular.
    pub fn new(angles: Vec<T>, bases: Vec<Basis>) -> Result<Self> {
        if angles.len() != bases.len() {
            return Err(Error::ScheduleMismatch {
                expected: bases.len(),
                found: angles.len(),
            });
        }
        for (i, &a) in angles.iter().enumerate() {
            check_angle(i, a)?;
        }
        Ok(Schedule { angles, bases })
    }

    /// Schedule for `term`, taking the basis tags from the term structure.
    pub fn for_term(term: &GraphTerm, angles: Vec<T>) -> Result<Self> {
        let bases = term.measurement_bases();
        if angles.len() != bases.len() {
            return Err(Error::ScheduleMismatch {
                expected: bases.len(),
                found: angles.len(),
            });
        }
        Schedule::new(angles, bases)
    }

    /// All-zero schedule for `term`.
    pub fn zeros(term: &GraphTerm) -> Self {
        let bases = term.measurement_bases();
        Schedule {
            angles: vec![T::zero(); bases.len()],
            bases,
        }
    }

    /// Sequence concatenation `phi1 · phi2`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut angles = self.angles.clone();
        angles.extend_from_slice(&other.angles);
        let mut bases = self.bases.clone();
        bases.extend_from_slice(&other.bases);
        Schedule { angles, bases }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// JSON `{angles, bases}` with bases as `"p"`/`"q"`.
    pub fn to_json(&self) -> Value {
        json!({
            "angles": self.angles.iter().map(|&a| num(to_f64(a))).collect::<Vec<_>>(),
            "bases": self.bases.iter().map(|b| match b { Basis::P => "p", Basis::Q => "q" }).collect::<Vec<_>>(),
        })
    }
}

/// Input-output triple. `G` is `2m x 2m`, `N` and `D` are `2m x c`.
#[derive(Clone, Debug, PartialEq)]
pub struct IoRelation<T: Real> {
    pub g: Matrix<T>,
    pub n: Matrix<T>,
    pub d: Matrix<T>,
}

impl<T: Real> IoRelation<T> {
    /// Output mode count.
    pub fn m(&self) -> usize {
        self.g.nrows() / 2
    }

    /// Accumulated measured-mode count.
    pub fn c(&self) -> usize {
        self.n.ncols()
    }

    /// `N N^T`.
    pub fn noise_gram(&self) -> Matrix<T> {
        &self.n * self.n.transpose()
    }

    /// JSON `{m, c, G, N, D}`, row-major.
    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m(),
            "c": self.c(),
            "G": matrix_json(&self.g),
            "N": matrix_json(&self.n),
            "D": matrix_json(&self.d),
        })
    }
}

/// Two-vertex teleportation step at angle `phi`: `G = [[-tan, -1], [1, 0]]`,
/// `N = (0, 1)^T`, `D = sec(phi) (1, 0)^T`.
pub fn base_horizontal<T: Real>(phi: T) -> Result<IoRelation<T>> {
    check_angle(0, phi)?;
    let t = phi.tan();
    let sec = T::one() / phi.cos();
    Ok(IoRelation {
        g: Matrix::from_row_slice(2, 2, &[-t, -T::one(), T::one(), T::zero()]),
        n: Matrix::from_row_slice(2, 1, &[T::zero(), T::one()]),
        d: Matrix::from_row_slice(2, 1, &[sec, T::zero()]),
    })
}

/// Three-vertex vertical chain, middle vertex measured at `phi` in the q basis:
/// a controlled shear `p_i += tan(phi) (q_1 + q_2)`.
pub fn base_vertical<T: Real>(phi: T) -> Result<IoRelation<T>> {
    check_angle(0, phi)?;
    let t = phi.tan();
    let s = T::one() / phi.cos();
    let (o, z) = (T::one(), T::zero());
    Ok(IoRelation {
        g: Matrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, t, t, o, z, t, t, z, o]),
        n: Matrix::from_row_slice(4, 1, &[z, z, t, t]),
        d: Matrix::from_row_slice(4, 1, &[z, z, s, s]),
    })
}

/// Two-vertex vertical chain: a plain CZ, nothing measured.
pub fn cz_vertical<T: Real>() -> IoRelation<T> {
    let (o, z) = (T::one(), T::zero());
    IoRelation {
        g: Matrix::from_row_slice(4, 4, &[o, z, z, z, z, o, z, z, z, o, o, z, o, z, z, o]),
        n: Matrix::zeros(4, 0),
        d: Matrix::zeros(4, 0),
    }
}

/// Relation of `G1 ∘ G2`: `G = G2 G1`, `N = [G2 N1 | N2]`, `D = [G2 D1 | D2]`.
pub fn compose_concat<T: Real>(r1: &IoRelation<T>, r2: &IoRelation<T>) -> Result<IoRelation<T>> {
    if r1.g.nrows() != r2.g.ncols() {
        return Err(Error::DimensionMismatch {
            context: "concatenation",
            expected: r2.g.ncols(),
            found: r1.g.nrows(),
        });
    }
    let rows = r2.g.nrows();
    let mut n = Matrix::zeros(rows, r1.c() + r2.c());
    n.columns_mut(0, r1.c()).copy_from(&(&r2.g * &r1.n));
    n.columns_mut(r1.c(), r2.c()).copy_from(&r2.n);
    let mut d = Matrix::zeros(rows, r1.d.ncols() + r2.d.ncols());
    d.columns_mut(0, r1.d.ncols()).copy_from(&(&r2.g * &r1.d));
    d.columns_mut(r1.d.ncols(), r2.d.ncols()).copy_from(&r2.d);
    Ok(IoRelation {
        g: &r2.g * &r1.g,
        n,
        d,
    })
}

/// `P (A ⊕ B) P^T` for square blocks, with `P` the xxpp interleave.
fn interleave_square<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (m1, m2) = (a.nrows() / 2, b.nrows() / 2);
    let p = interleave_indices(m1, m2);
    let n = p.len();
    let mut out = Matrix::zeros(n, n);
    let na = a.nrows();
    for (i, &pi) in p.iter().enumerate() {
        for (j, &pj) in p.iter().enumerate() {
            out[(i, j)] = if pi < na && pj < na {
                a[(pi, pj)]
            } else if pi >= na && pj >= na {
                b[(pi - na, pj - na)]
            } else {
                T::zero()
            };
        }
    }
    out
}

/// `P (A ⊕ B)` for column blocks.
fn interleave_rows<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (m1, m2) = (a.nrows() / 2, b.nrows() / 2);
    let p = interleave_indices(m1, m2);
    let na = a.nrows();
    let mut out = Matrix::zeros(p.len(), a.ncols() + b.ncols());
    for (i, &pi) in p.iter().enumerate() {
        if pi < na {
            out.view_mut((i, 0), (1, a.ncols())).copy_from(&a.row(pi));
        } else {
            out.view_mut((i, a.ncols()), (1, b.ncols()))
                .copy_from(&b.row(pi - na));
        }
    }
    out
}

/// Relation of `G1 ⊕ G2`.
pub fn compose_sum<T: Real>(r1: &IoRelation<T>, r2: &IoRelation<T>) -> IoRelation<T> {
    IoRelation {
        g: interleave_square(&r1.g, &r2.g),
        n: interleave_rows(&r1.n, &r2.n),
        d: interleave_rows(&r1.d, &r2.d),
    }
}

fn check_schedule<T: Real>(term: &GraphTerm, sched: &Schedule<T>) -> Result<()> {
    let bases = term.measurement_bases();
    if bases.len() != sched.len() {
        return Err(Error::ScheduleMismatch {
            expected: bases.len(),
            found: sched.len(),
        });
    }
    if let Some(i) = (0..bases.len()).find(|&i| bases[i] != sched.bases[i]) {
        return Err(Error::BasisMismatch(i));
    }
    for (i, &a) in sched.angles.iter().enumerate() {
        check_angle(i, a)?;
    }
    if term.begin_len() != term.end_len() {
        return Err(Error::InterfaceMismatch {
            left: term.begin_len(),
            right: term.end_len(),
        });
    }
    Ok(())
}

/// Folds the term with the base cases and composition rules. Angles are
/// consumed depth-first, left to right.
pub fn eval<T: Real>(term: &GraphTerm, sched: &Schedule<T>) -> Result<IoRelation<T>> {
    check_schedule(term, sched)?;
    let mut pos = 0;
    eval_rec(term, &sched.angles, &mut pos)
}

fn eval_rec<T: Real>(term: &GraphTerm, angles: &[T], pos: &mut usize) -> Result<IoRelation<T>> {
    match term.structure() {
        Structure::ChainH(l) => {
            let mut r = base_horizontal(angles[*pos])?;
            for k in 1..l - 1 {
                r = compose_concat(&r, &base_horizontal(angles[*pos + k])?)?;
            }
            *pos += l - 1;
            Ok(r)
        }
        Structure::ChainV(2) => Ok(cz_vertical()),
        Structure::ChainV(3) => {
            let r = base_vertical(angles[*pos])?;
            *pos += 1;
            Ok(r)
        }
        Structure::ChainV(l) => Err(Error::NotEvaluable(format!(
            "vertical chain of length {l} has no input-output relation"
        ))),
        Structure::Concat(a, b) => {
            let ra = eval_rec(a, angles, pos)?;
            let rb = eval_rec(b, angles, pos)?;
            compose_concat(&ra, &rb)
        }
        Structure::Sum(a, b) => {
            let ra = eval_rec(a, angles, pos)?;
            let rb = eval_rec(b, angles, pos)?;
            Ok(compose_sum(&ra, &rb))
        }
        Structure::Flat(_) => Err(Error::NotEvaluable(
            "flat graph without compositional structure".into(),
        )),
    }
}

/// `G` together with the noise Gram `N N^T`, without materialising `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramRelation<T: Real> {
    pub g: Matrix<T>,
    pub gram: Matrix<T>,
}

/// Same fold as [`eval`], tracking `N N^T` through
/// `Gram(a ∘ b) = G_b Gram(a) G_b^T + Gram(b)`.
pub fn eval_gram<T: Real>(term: &GraphTerm, sched: &Schedule<T>) -> Result<GramRelation<T>> {
    check_schedule(term, sched)?;
    let mut pos = 0;
    gram_rec(term, &sched.angles, &mut pos)
}

fn gram_concat<T: Real>(a: GramRelation<T>, b: GramRelation<T>) -> GramRelation<T> {
    let gram = &b.g * &a.gram * b.g.transpose() + &b.gram;
    GramRelation {
        g: &b.g * &a.g,
        gram,
    }
}

fn gram_rec<T: Real>(term: &GraphTerm, angles: &[T], pos: &mut usize) -> Result<GramRelation<T>> {
    let from = |r: IoRelation<T>| {
        let gram = r.noise_gram();
        GramRelation { g: r.g, gram }
    };
    match term.structure() {
        Structure::ChainH(l) => {
            let mut r = from(base_horizontal(angles[*pos])?);
            for k in 1..l - 1 {
                r = gram_concat(r, from(base_horizontal(angles[*pos + k])?));
            }
            *pos += l - 1;
            Ok(r)
        }
        Structure::ChainV(2) => Ok(from(cz_vertical())),
        Structure::ChainV(3) => {
            let r = from(base_vertical(angles[*pos])?);
            *pos += 1;
            Ok(r)
        }
        Structure::ChainV(l) => Err(Error::NotEvaluable(format!(
            "vertical chain of length {l} has no input-output relation"
        ))),
        Structure::Concat(a, b) => {
            let ra = gram_rec(a, angles, pos)?;
            let rb = gram_rec(b, angles, pos)?;
            Ok(gram_concat(ra, rb))
        }
        Structure::Sum(a, b) => {
            let ra = gram_rec(a, angles, pos)?;
            let rb = gram_rec(b, angles, pos)?;
            Ok(GramRelation {
                g: interleave_square(&ra.g, &rb.g),
                gram: interleave_square(&ra.gram, &rb.gram),
            })
        }
        Structure::Flat(_) => Err(Error::NotEvaluable(
            "flat graph without compositional structure".into(),
        )),
    }
}

/// Bell-measurement coupling of `M` input modes into the cluster:
/// `G = I`, `N = (-I) ⊕ I`, `D = [[-I, -I], [-I, I]]`.
pub fn bell_coupling<T: Real>(modes: usize) -> Result<IoRelation<T>> {
    if modes == 0 {
        return Err(Error::TooSmall {
            what: "mode count",
            value: 0,
            min: 1,
        });
    }
    let dim = 2 * modes;
    let mut n = Matrix::zeros(dim, dim);
    let mut d = Matrix::zeros(dim, dim);
    for i in 0..modes {
        n[(i, i)] = -T::one();
        n[(i + modes, i + modes)] = T::one();
        d[(i, i)] = -T::one();
        d[(i, i + modes)] = -T::one();
        d[(i + modes, i)] = -T::one();
        d[(i + modes, i + modes)] = T::one();
    }
    Ok(IoRelation {
        g: Matrix::identity(dim, dim),
        n,
        d,
    })
}

/// Full MBLO triple for `U`: Bell coupling followed by the universal brickwork
/// graph driven by the universal schedule of `U`.
pub fn assemble_mblo<T: Real>(u: &CMatrix<T>) -> Result<IoRelation<T>> {
    check_unitary(u, 1e-8)?;
    let modes = u.nrows();
    if modes % 2 == 1 {
        return Err(Error::OddModeCount(modes));
    }
    let sched = universal_schedule(u)?;
    let bw = brickwork_graph(modes, modes / 2 + 1)?;
    let r = eval(&bw.term, &sched)?;
    compose_concat(&bell_coupling(modes)?, &r)
}

/// `G_U` and `N_U N_U^T` of the MBLO assembly for `U`, via [`eval_gram`].
pub fn assemble_mblo_gram<T: Real>(u: &CMatrix<T>) -> Result<GramRelation<T>> {
    check_unitary(u, 1e-8)?;
    let modes = u.nrows();
    if modes % 2 == 1 {
        return Err(Error::OddModeCount(modes));
    }
    let sched = universal_schedule(u)?;
    let bw = brickwork_graph(modes, modes / 2 + 1)?;
    let mut r = eval_gram(&bw.term, &sched)?;
    for i in 0..2 * modes {
        r.gram[(i, i)] += T::one();
    }
    Ok(r)
}
