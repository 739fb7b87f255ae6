//! Compilation of unitaries into brickwork measurement schedules.
//!
//! A unitary is factored into a rectangular mesh of bricks
//! `T(beta, theta) = [[e^{i beta} cos, -sin], [e^{i beta} sin, cos]]` followed by
//! output phases. Each brick becomes 27 angles on a brick graph, and the output
//! phases are placed on the leading five-vertex rails of one extra layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::format::num;
use crate::graph::{brick, brickwork_graph, chain_h};
use crate::io_relation::Schedule;
use crate::numerics::{carg, cabs, check_unitary, cis, lit, to_f64, CMatrix};
use crate::{Error, Real, Result};
use num_complex::Complex;

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_2pi<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x - two_pi * (x / two_pi).floor();
    if y >= two_pi || y < T::zero() {
        y = T::zero();
    }
    y
}

/// Brick beam-splitter parameters: `beta` in `[0, 2 pi)`, `theta` in `[0, pi/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Brick<T> {
    pub beta: T,
    pub theta: T,
}

impl<T: Real> Brick<T> {
    /// Validates `theta` and wraps `beta`.
    pub fn new(beta: T, theta: T) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::OutOfRange {
                what: "beta",
                value: to_f64(beta),
            });
        }
        let eps = lit::<T>(1e-12);
        if !theta.is_finite() || theta < -eps || theta > T::frac_pi_2() + eps {
            return Err(Error::OutOfRange {
                what: "theta",
                value: to_f64(theta),
            });
        }
        let theta = theta.max(T::zero()).min(T::frac_pi_2());
        Ok(Brick {
            beta: wrap_2pi(beta),
            theta,
        })
    }

    pub fn identity() -> Self {
        Brick {
            beta: T::zero(),
            theta: T::zero(),
        }
    }

    /// The 2x2 unitary `T(beta, theta)`.
    pub fn unitary(&self) -> CMatrix<T> {
        let e = cis(self.beta);
        let (s, c) = self.theta.sin_cos();
        let r = |x: T| Complex::new(x, T::zero());
        CMatrix::from_row_slice(2, 2, &[e * c, r(-s), e * s, r(c)])
    }
}

/// A brick placed in the mesh. `layer` counts unit-depth layers; `row` is the
/// upper mode of the pair (even rows form the first sublayer, odd rows the second).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlacedBrick<T> {
    pub layer: usize,
    pub row: usize,
    pub brick: Brick<T>,
}

/// Rectangular-mesh factorisation `U = diag(e^{i beta_m}) U_{M/2} ... U_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan<T> {
    pub modes: usize,
    /// All `M(M-1)/2` mesh slots in application order.
    pub bricks: Vec<PlacedBrick<T>>,
    pub final_phases: Vec<T>,
}

impl<T: Real> Plan<T> {
    fn slot(modes: usize, layer: usize, row: usize) -> usize {
        let within = if row % 2 == 0 {
            row / 2
        } else {
            modes / 2 + (row - 1) / 2
        };
        layer * (modes - 1) + within
    }

    /// Brick in the given slot.
    pub fn brick(&self, layer: usize, row: usize) -> Brick<T> {
        self.bricks[Self::slot(self.modes, layer, row)].brick
    }

    /// Multiplies the mesh back out.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let m = self.modes;
        let mut v = CMatrix::<T>::identity(m, m);
        for pb in &self.bricks {
            let t = pb.brick.unitary();
            let a = pb.row;
            for col in 0..m {
                let (x, y) = (v[(a, col)], v[(a + 1, col)]);
                v[(a, col)] = t[(0, 0)] * x + t[(0, 1)] * y;
                v[(a + 1, col)] = t[(1, 0)] * x + t[(1, 1)] * y;
            }
        }
        for i in 0..m {
            let e = cis(self.final_phases[i]);
            for col in 0..m {
                v[(i, col)] *= e;
            }
        }
        v
    }

    /// JSON `{M, bricks: [{layer, row, beta, theta}], final_phases}`.
    pub fn to_json(&self) -> Value {
        json!({
            "M": self.modes,
            "bricks": self.bricks.iter().map(|b| json!({
                "layer": b.layer,
                "row": b.row,
                "beta": num(to_f64(b.brick.beta)),
                "theta": num(to_f64(b.brick.theta)),
            })).collect::<Vec<_>>(),
            "final_phases": self.final_phases.iter().map(|&p| num(to_f64(p))).collect::<Vec<_>>(),
        })
    }
}

fn is_zero<T: Real>(z: Complex<T>) -> bool {
    z.re == T::zero() && z.im == T::zero()
}

/// `W <- W T(beta, theta)^dagger` on columns `(a, a+1)`.
fn apply_right<T: Real>(w: &mut CMatrix<T>, a: usize, beta: T, theta: T) {
    let em = cis(-beta);
    let (s, c) = theta.sin_cos();
    for r in 0..w.nrows() {
        let (x, y) = (w[(r, a)], w[(r, a + 1)]);
        w[(r, a)] = x * em.scale(c) - y.scale(s);
        w[(r, a + 1)] = x * em.scale(s) + y.scale(c);
    }
}

/// `W <- T(beta, theta) W` on rows `(a, a+1)`.
fn apply_left<T: Real>(w: &mut CMatrix<T>, a: usize, beta: T, theta: T) {
    let e = cis(beta);
    let (s, c) = theta.sin_cos();
    for col in 0..w.ncols() {
        let (x, y) = (w[(a, col)], w[(a + 1, col)]);
        w[(a, col)] = x * e.scale(c) - y.scale(s);
        w[(a + 1, col)] = x * e.scale(s) + y.scale(c);
    }
}

/// Brick on columns `(a, a+1)` whose inverse, applied on the right, zeroes `ua`.
fn null_right<T: Real>(ua: Complex<T>, ub: Complex<T>) -> (T, T) {
    let theta = cabs(ua).atan2(cabs(ub));
    let beta = if is_zero(ua) || is_zero(ub) {
        T::zero()
    } else {
        carg(ua) - carg(ub)
    };
    (beta, theta)
}

/// Brick on rows `(a, a+1)` that, applied on the left, zeroes `ub`.
fn null_left<T: Real>(ua: Complex<T>, ub: Complex<T>) -> (T, T) {
    let theta = cabs(ub).atan2(cabs(ua));
    let beta = if is_zero(ua) || is_zero(ub) {
        T::zero()
    } else {
        carg(-ub) - carg(ua)
    };
    (beta, theta)
}

/// Rectangular-mesh decomposition of an even-dimensional unitary.
pub fn clements_decompose<T: Real>(u: &CMatrix<T>) -> Result<Plan<T>> {
    check_unitary(u, 1e-8)?;
    let m = u.nrows();
    if m % 2 == 1 {
        return Err(Error::OddModeCount(m));
    }
    let mut w = u.clone();
    // (upper mode, beta, theta) in the order they were applied.
    let mut right = Vec::new();
    let mut left = Vec::new();
    for i in 0..m - 1 {
        if i % 2 == 0 {
            for j in 0..=i {
                let (row, col) = (m - 1 - j, i - j);
                let (beta, theta) = null_right(w[(row, col)], w[(row, col + 1)]);
                apply_right(&mut w, col, beta, theta);
                right.push((col, beta, theta));
            }
        } else {
            for j in 1..=i + 1 {
                let (row, col) = (m + j - i - 2, j - 1);
                let (beta, theta) = null_left(w[(row - 1, col)], w[(row, col)]);
                apply_left(&mut w, row - 1, beta, theta);
                left.push((row - 1, beta, theta));
            }
        }
    }
    let mut d: Vec<Complex<T>> = (0..m).map(|i| w[(i, i)]).collect();
    // Move the left factors through the diagonal:
    // T(b, t)^{-1} diag(d1, d2) = diag(d1', d2') T(b', t).
    let mut ordered = right;
    let tiny = lit::<T>(1e-14);
    for &(a, beta, theta) in left.iter().rev() {
        let (d1, d2) = (d[a], d[a + 1]);
        let em = cis(-beta);
        if theta.sin().abs() < tiny {
            d[a] = em * d1;
            ordered.push((a, T::zero(), theta));
        } else {
            let ratio = -d1 / d2;
            d[a] = -(em * d2);
            ordered.push((a, carg(ratio), theta));
        }
    }

    // As-soon-as-possible placement into M columns; column parity matches row parity.
    let mut next_col = vec![0usize; m];
    let mut slots: Vec<Option<Brick<T>>> = vec![None; m * (m - 1) / 2];
    for &(a, beta, theta) in &ordered {
        let mut c = next_col[a].max(next_col[a + 1]);
        if c % 2 != a % 2 {
            c += 1;
        }
        if c >= m {
            return Err(Error::Synthesis(format!(
                "brick on modes ({a}, {}) does not fit in {m} mesh columns",
                a + 1
            )));
        }
        next_col[a] = c + 1;
        next_col[a + 1] = c + 1;
        slots[Plan::<T>::slot(m, c / 2, a)] = Some(Brick::new(beta, theta)?);
    }
    let mut bricks = Vec::with_capacity(slots.len());
    for layer in 0..m / 2 {
        for row in (0..m - 1).step_by(2).chain((1..m - 1).step_by(2)) {
            bricks.push(PlacedBrick {
                layer,
                row,
                brick: slots[Plan::<T>::slot(m, layer, row)].unwrap_or_else(Brick::identity),
            });
        }
    }
    let plan = Plan {
        modes: m,
        bricks,
        final_phases: d.iter().map(|&z| wrap_2pi(carg(z))).collect(),
    };
    let err = (plan.reconstruct() - u).norm();
    let tol = lit::<T>(1e-8).max(T::default_epsilon() * lit::<T>((100 * m * m) as f64));
    if err > tol {
        return Err(Error::Synthesis(format!(
            "mesh reconstruction error {:.3e}",
            to_f64(err)
        )));
    }
    Ok(plan)
}

/// Angles `(phi_{1,1..4}, phi_{2,1..4}, phi_int)` realising a beam splitter of
/// angle `theta` (with an extra pi phase on the lower mode) on one bracket.
pub fn brick_angles_a<T: Real>(theta: T) -> [T; 9] {
    let half = lit::<T>(0.5);
    let (s, c) = theta.sin_cos();
    let rail = |x: T| {
        let den = T::one() - half * x;
        [-half, -(T::one() - x) / den, -T::one() + half * x, -half / den]
    };
    let r1 = rail(-c + s);
    let r2 = rail(c + s);
    let t = [r1[0], r1[1], r1[2], r1[3], r2[0], r2[1], r2[2], r2[3], -s];
    t.map(|x| x.atan())
}

/// Angles for one bracket realising `G(phi_a(theta))` preceded by a phase
/// `beta` on the upper mode and `pi` on the lower mode.
///
/// Two entries are evaluated in a rearranged but equal form,
/// `(|X| - K)/Y = -Y/(|X| + K)` with `X^2 + Y^2 = K^2`, which stays finite
/// where the literal quotients become `0/0`.
pub fn brick_angles_b<T: Real>(theta: T, beta: T) -> Result<[T; 9]> {
    if !theta.is_finite() || !beta.is_finite() {
        return Err(Error::SingularParameter(
            "non-finite theta or beta".to_string(),
        ));
    }
    let half = lit::<T>(0.5);
    let sqrt2 = lit::<T>(2.0).sqrt();
    let (sb, cb) = beta.sin_cos();
    let (st, ct) = theta.sin_cos();
    let s = (theta - T::frac_pi_4()).sin();
    let k = (T::one() + lit::<T>(2.0) * s * s).sqrt();
    let x = -cb + sqrt2 * s * sb;
    let y = sb + sqrt2 * s * cb;
    let sg = if x < T::zero() { -T::one() } else { T::one() };
    let ax = x.abs();
    let den = ax + k;
    if den < lit::<T>(1e-12) {
        return Err(Error::SingularParameter(
            "|-cos(beta) + sqrt2 sin(theta - pi/4) sin(beta)| + sqrt(1 + 2 sin^2(theta - pi/4))"
                .to_string(),
        ));
    }
    let t11 = -sg * y / den;
    let t12 = sg * (T::one() - y) / k;
    let t13 = sg * k;
    let t14 = sg / k - sqrt2 * s / (k * k) - sg * y / (k * k * den);
    let z = ct + st;
    let zd = T::one() + half * z;
    let t = [
        t11,
        t12,
        t13,
        t14,
        half,
        (T::one() + z) / zd,
        zd,
        half / zd,
        -st,
    ];
    Ok(t.map(|v| v.atan()))
}

/// 27-angle schedule `phi_b · phi_a · phi_a` for the brick graph.
pub fn brick_schedule<T: Real>(p: &Brick<T>) -> Result<Schedule<T>> {
    let b = brick_angles_b(p.theta, p.beta)?;
    let a = brick_angles_a(p.theta);
    let mut angles = Vec::with_capacity(27);
    angles.extend_from_slice(&b);
    angles.extend_from_slice(&a);
    angles.extend_from_slice(&a);
    Schedule::for_term(&brick(), angles)
}

/// Product of `n` teleportation steps with tangents `t` (first applied first),
/// followed by `extra` zero-angle steps.
fn chain_product(t: &[f64], extra: usize) -> [f64; 4] {
    let mut m = [1.0, 0.0, 0.0, 1.0];
    let step = |m: [f64; 4], t: f64| {
        // [[-t, -1], [1, 0]] * m
        [
            -t * m[0] - m[2],
            -t * m[1] - m[3],
            m[0],
            m[1],
        ]
    };
    for &ti in t {
        m = step(m, ti);
    }
    for _ in 0..extra {
        m = step(m, 0.0);
    }
    m
}

fn chain_residual(t: &[f64; 4], extra: usize, target: &[f64; 4]) -> [f64; 4] {
    let m = chain_product(t, extra);
    [m[0] - target[0], m[1] - target[1], m[2] - target[2], m[3] - target[3]]
}

fn norm4(r: &[f64; 4]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Levenberg-Marquardt on the 4x4 residual system.
fn polish(mut t: [f64; 4], extra: usize, target: &[f64; 4], tol: f64) -> Option<[f64; 4]> {
    let mut lambda = 1e-6;
    let mut r = chain_residual(&t, extra, target);
    for _ in 0..200 {
        let f = norm4(&r);
        if f < tol {
            return Some(t);
        }
        let h = 1e-7;
        let mut jac = nalgebra::Matrix4::<f64>::zeros();
        for k in 0..4 {
            let (mut tp, mut tm) = (t, t);
            tp[k] += h;
            tm[k] -= h;
            let rp = chain_residual(&tp, extra, target);
            let rm = chain_residual(&tm, extra, target);
            for i in 0..4 {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = nalgebra::Vector4::from_row_slice(&r);
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * rv;
        let mut improved = false;
        for _ in 0..30 {
            let a = jtj + nalgebra::Matrix4::identity() * lambda;
            if let Some(delta) = a.lu().solve(&(-g)) {
                let cand = [t[0] + delta[0], t[1] + delta[1], t[2] + delta[2], t[3] + delta[3]];
                let rc = chain_residual(&cand, extra, target);
                if norm4(&rc) < f {
                    t = cand;
                    r = rc;
                    lambda = (lambda * 0.3).max(1e-15);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (norm4(&r) < tol).then_some(t)
}

/// Shear factorisation `R = U(-t4) L(t3) U(-t2) L(t1)` for a chosen `t1`:
/// returns `None` when `t1` makes the middle shear degenerate.
fn shear_guess(beta: f64, t1: f64) -> Option<[f64; 4]> {
    let (s, c) = beta.sin_cos();
    let m21 = s - t1 * c;
    if m21.abs() < 1e-3 {
        return None;
    }
    let a = (c + t1 * s - 1.0) / m21;
    let cc = (c - 1.0) / m21;
    Some([t1, -cc, m21, -a])
}

/// Angles for `chain_h(l)`, `5 <= l <= 13`, whose relation is the rotation
/// `[[cos, -sin], [sin, cos]]` (a phase `beta`). Only the first four angles
/// are free; the rest are zero.
///
/// A closed-form shear factorisation seeds a Levenberg-Marquardt polish; seeded
/// random restarts are the fallback.
pub fn phase_chain_schedule<T: Real>(beta: T, l: usize) -> Result<Schedule<T>> {
    if !(5..=13).contains(&l) {
        return Err(Error::OutOfRange {
            what: "phase chain length",
            value: l as f64,
        });
    }
    let b = to_f64(beta);
    if !b.is_finite() {
        return Err(Error::OutOfRange {
            what: "beta",
            value: b,
        });
    }
    let extra = l - 5;
    let target = [b.cos(), -b.sin(), b.sin(), b.cos()];
    // The zero-angle tail contributes a rotation by extra * pi/2.
    let eff = b - extra as f64 * std::f64::consts::FRAC_PI_2;
    let tol = 1e-12;
    let best_guess = (-300..=300)
        .filter_map(|k| shear_guess(eff, k as f64 * 0.01))
        .min_by(|x, y| {
            let mx = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let my = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            mx.total_cmp(&my)
        });
    let mut found = best_guess.and_then(|g| polish(g, extra, &target, tol));
    if found.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(b.to_bits());
        for _ in 0..20 {
            let start = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ];
            if let Some(t) = polish(start, extra, &target, tol) {
                found = Some(t);
                break;
            }
        }
    }
    let t = found.ok_or_else(|| {
        Error::Synthesis(format!("phase chain solver did not converge for beta = {b}"))
    })?;
    let mut angles: Vec<T> = t.iter().map(|&x| lit::<T>(x.atan())).collect();
    angles.resize(l - 1, T::zero());
    Schedule::for_term(&chain_h(l)?, angles)
}

/// Full schedule for `brickwork_graph(M, M/2 + 1)` realising `U`: the first
/// `M/2` layers carry the mesh bricks, the last layer the output phases.
pub fn universal_schedule<T: Real>(u: &CMatrix<T>) -> Result<Schedule<T>> {
    let plan = clements_decompose(u)?;
    schedule_from_plan(&plan)
}

/// Universal schedule for an existing plan.
pub fn schedule_from_plan<T: Real>(plan: &Plan<T>) -> Result<Schedule<T>> {
    let m = plan.modes;
    let depth = m / 2 + 1;
    let bw = brickwork_graph(m, depth)?;
    let mut angles: Vec<T> = Vec::with_capacity(bw.term.measured_count());
    let zeros = |angles: &mut Vec<T>, n: usize| angles.extend(std::iter::repeat_n(T::zero(), n));
    for layer in 0..m / 2 {
        for row in (0..m).step_by(2) {
            angles.extend(brick_schedule(&plan.brick(layer, row))?.angles);
        }
        zeros(&mut angles, 12);
        for row in (1..m - 1).step_by(2) {
            angles.extend(brick_schedule(&plan.brick(layer, row))?.angles);
        }
        zeros(&mut angles, 12);
    }
    for pair in (0..m).step_by(2) {
        angles.extend(phase_chain_schedule(plan.final_phases[pair], 5)?.angles);
        angles.extend(phase_chain_schedule(plan.final_phases[pair + 1], 5)?.angles);
        zeros(&mut angles, 1 + 18);
    }
    zeros(&mut angles, 12 + 27 * (m / 2 - 1) + 12);
    Schedule::for_term(&bw.term, angles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap() {
        let x: f64 = wrap_2pi(-0.5);
        assert!((x - (2.0 * std::f64::consts::PI - 0.5)).abs() < 1e-15);
        assert_eq!(wrap_2pi(0.0_f64), 0.0);
    }

    #[test]
    fn brick_a_first_entries() {
        let a = brick_angles_a(0.0_f64);
        assert!((a[0].tan() + 0.5).abs() < 1e-15);
        assert!((a[2].tan() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn stable_forms_match_displayed_quotients() {
        for &(theta, beta) in &[(0.3_f64, 1.1_f64), (1.2, 4.0), (0.05, 2.9), (0.7, 5.5)] {
            let b = brick_angles_b(theta, beta).unwrap();
            let s = (theta - std::f64::consts::FRAC_PI_4).sin();
            let k = (1.0 + 2.0 * s * s).sqrt();
            let x = -beta.cos() + 2f64.sqrt() * s * beta.sin();
            let y = beta.sin() + 2f64.sqrt() * s * beta.cos();
            let sg = if x < 0.0 { -1.0 } else { 1.0 };
            let t11 = sg * (x.abs() - k) / y;
            let t14 = -beta.cos() / y - sg * (1.0 - y) / (y * k);
            assert!((b[0].tan() - t11).abs() < 1e-12);
            assert!((b[3].tan() - t14).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_plan_is_zero() {
        let u = CMatrix::<f64>::identity(4, 4);
        let p = clements_decompose(&u).unwrap();
        assert_eq!(p.bricks.len(), 6);
        assert!(p.bricks.iter().all(|b| b.brick.beta == 0.0 && b.brick.theta == 0.0));
        assert!(p.final_phases.iter().all(|&x| x == 0.0));
    }
}
