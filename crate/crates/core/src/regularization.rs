//! Collision regularization of the magnified lunar Hamiltonian through the
//! Moebius-type transform on the rank-two Jordan algebra.
//!
//! States of the regularized system are laid out as `[Q, P, t]`, optionally
//! followed by the 36 entries of the fundamental matrix in column-major order.

use crate::dynamics::{tidal, EnergyValue, Frame, FrameKind, PhaseState};
use crate::error::{Error, Result};
use crate::expr::{dot, norm_sq, Program, Scalar, Tape, Var};
use nalgebra::{Matrix6, SMatrix};
use serde::{Deserialize, Serialize};
use std::ops::Mul;

/// Element `z0 + i1 z1 + i2 z2` of the Jordan algebra with `i_a i_b = -delta_ab`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jordan2 {
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
}

impl Jordan2 {
    pub const ONE: Jordan2 = Jordan2::new(1.0, 0.0, 0.0);

    pub const fn new(z0: f64, z1: f64, z2: f64) -> Self {
        Self { z0, z1, z2 }
    }

    pub fn norm_sq(self) -> f64 {
        self.z0 * self.z0 + self.z1 * self.z1 + self.z2 * self.z2
    }

    pub fn conj(self) -> Self {
        Self::new(self.z0, -self.z1, -self.z2)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(c * self.z0, c * self.z1, c * self.z2)
    }

    pub fn inv(self) -> Result<Self> {
        let n = self.norm_sq();
        if n == 0.0 {
            return Err(Error::ChartExcluded("inverse of zero"));
        }
        Ok(self.conj().scale(1.0 / n))
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.z0 - o.z0, self.z1 - o.z1, self.z2 - o.z2)
    }

    /// `x (y z) - (x y) z`
    pub fn associator(x: Self, y: Self, z: Self) -> Self {
        (x * (y * z)).sub((x * y) * z)
    }
}

impl Mul for Jordan2 {
    type Output = Jordan2;

    fn mul(self, y: Jordan2) -> Jordan2 {
        let x = self;
        Jordan2::new(
            x.z0 * y.z0 - x.z1 * y.z1 - x.z2 * y.z2,
            x.z0 * y.z1 + x.z1 * y.z0,
            x.z0 * y.z2 + x.z2 * y.z0,
        )
    }
}

fn swap<S: Copy>(v: &[S; 3]) -> [S; 3] {
    [v[1], v[0], v[2]]
}

fn forward_swapped<S: Scalar>(q: &[S; 3], p: &[S; 3]) -> ([S; 3], [S; 3]) {
    let n = norm_sq(p);
    let qp = dot(q, p);
    let d = (p[0] + 1.0) * (p[0] + 1.0) + p[1] * p[1] + p[2] * p[2];
    let half_plus = (n + 1.0) * 0.5;
    let big_q = [
        (-n + 1.0) * 0.5 * q[0] + qp * (p[0] + 1.0),
        half_plus * q[1] + p[0] * q[1] - p[1] * q[0] - qp * p[1],
        half_plus * q[2] + p[0] * q[2] - p[2] * q[0] - qp * p[2],
    ];
    let big_p = [(n - 1.0) / d, p[1] * 2.0 / d, p[2] * 2.0 / d];
    (big_q, big_p)
}

/// Position and the numerator of the momentum, `p = pi / (|P - 1|^2 / 2)`, on the
/// swapped axes.
fn inverse_swapped_parts<S: Scalar>(big_q: &[S; 3], big_p: &[S; 3]) -> ([S; 3], [S; 3]) {
    let n = norm_sq(big_p);
    let qp = dot(big_q, big_p);
    let half_plus = (n + 1.0) * 0.5;
    let q = [
        (-n + 1.0) * 0.5 * big_q[0] + qp * (big_p[0] - 1.0),
        half_plus * big_q[1] - big_p[0] * big_q[1] + big_p[1] * big_q[0] - qp * big_p[1],
        half_plus * big_q[2] - big_p[0] * big_q[2] + big_p[2] * big_q[0] - qp * big_p[2],
    ];
    let pi = [(-n + 1.0) * 0.5, big_p[1], big_p[2]];
    (q, pi)
}

fn collision_distance_sq<S: Scalar>(big_p: &[S; 3]) -> S {
    (big_p[0] - 1.0) * (big_p[0] - 1.0) + big_p[1] * big_p[1] + big_p[2] * big_p[2]
}

/// Regularizing coordinates of a magnified-chart state.
pub fn belbruno_forward(q: &[f64; 3], p: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let (qs, ps) = (swap(q), swap(p));
    let d = (ps[0] + 1.0).powi(2) + ps[1] * ps[1] + ps[2] * ps[2];
    if d == 0.0 {
        return Err(Error::ChartExcluded("at infinity"));
    }
    Ok(forward_swapped(&qs, &ps))
}

pub fn belbruno_inverse(big_q: &[f64; 3], big_p: &[f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let d = collision_distance_sq(big_p);
    if d == 0.0 {
        return Err(Error::ChartExcluded("at collision"));
    }
    let (q, pi) = inverse_swapped_parts(big_q, big_p);
    let p = pi.map(|v| 2.0 * v / d);
    Ok((swap(&q), swap(&p)))
}

/// Parameters fixing one regularized energy level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegParams {
    pub mu: f64,
    /// Value of the magnified Hamiltonian on the level.
    pub h: f64,
    pub omega: f64,
}

impl RegParams {
    pub fn new(mu: f64, h: f64) -> Self {
        Self { mu, h, omega: 1.0 }
    }

    pub fn energy(&self) -> Result<EnergyValue> {
        Ok(EnergyValue::new(self.h, Frame::hill(self.mu)?))
    }
}

/// `|q| = |P - 1|^2 |Q| / 2`, the rate of physical time in fictitious time.
pub fn time_rate<S: Scalar>(x: &[S; 6]) -> S {
    let big_q = [x[0], x[1], x[2]];
    let big_p = [x[3], x[4], x[5]];
    collision_distance_sq(&big_p) * norm_sq(&big_q).sqrt() * 0.5
}

/// The regularized Hamiltonian `|q| (H - h)` written in `(Q, P)`, with the Kepler
/// singularity cancelled by hand so that it is smooth at `P = (1, 0, 0)`.
pub fn gamma<S: Scalar>(params: &RegParams, x: &[S; 6]) -> S {
    let big_q = [x[0], x[1], x[2]];
    let big_p = [x[3], x[4], x[5]];
    let nq = norm_sq(&big_q).sqrt();
    let plus = (big_p[0] + 1.0) * (big_p[0] + 1.0) + big_p[1] * big_p[1] + big_p[2] * big_p[2];
    let (qs, pis) = inverse_swapped_parts(&big_q, &big_p);
    let q = swap(&qs);
    let pi = swap(&pis);
    let rate = collision_distance_sq(&big_p) * nq * 0.5;
    nq * plus * 0.25 - 1.0
        + nq * (q[0] * pi[1] - q[1] * pi[0]) * params.omega
        + rate * (tidal(params.mu, &q) - params.h)
}

/// Regularized state with its fictitious and physical clocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegState {
    pub q: [f64; 3],
    pub p: [f64; 3],
    pub s: f64,
    pub t: f64,
    pub h: EnergyValue,
    pub mu: f64,
}

impl RegState {
    pub fn coords(&self) -> [f64; 6] {
        let (q, p) = (self.q, self.p);
        [q[0], q[1], q[2], p[0], p[1], p[2]]
    }
}

/// Maps a magnified-chart state to regularized coordinates.
pub fn regularize(state: &PhaseState) -> Result<[f64; 6]> {
    if state.frame.kind != FrameKind::HillRescaled {
        return Err(Error::Parameter("regularization acts on the magnified chart".into()));
    }
    let (a, b) = belbruno_forward(&state.q, &state.p)?;
    Ok([a[0], a[1], a[2], b[0], b[1], b[2]])
}

pub fn unregularize(x: &[f64], frame: Frame) -> Result<PhaseState> {
    let (q, p) = belbruno_inverse(&[x[0], x[1], x[2]], &[x[3], x[4], x[5]])?;
    Ok(PhaseState::new(q, p, frame))
}

/// Magnified-chart position of a regularized state; defined at collision too.
pub fn regularized_position(x: &[f64]) -> [f64; 3] {
    let (q, _) = inverse_swapped_parts(&[x[0], x[1], x[2]], &[x[3], x[4], x[5]]);
    swap(&q)
}

/// Compiled regularized flow for one energy level.
#[derive(Clone, Debug)]
pub struct RegularizedSystem {
    params: RegParams,
    gradient: Program,
    flow: Program,
    variational: Program,
}

pub const STATE_DIM: usize = 6;
/// Index of the physical time in a regularized state vector.
pub const TIME_INDEX: usize = 6;
pub const FLOW_DIM: usize = 7;
pub const VARIATIONAL_DIM: usize = 43;

fn record<'t>(tape: &'t Tape, params: &RegParams) -> (Vec<Var<'t>>, Var<'t>, Vec<Var<'t>>, Var<'t>) {
    let x = tape.inputs(6);
    let xa = [x[0], x[1], x[2], x[3], x[4], x[5]];
    let g = gamma(params, &xa);
    let grad = tape.gradient(g, &x);
    let field = vec![grad[3], grad[4], grad[5], -grad[0], -grad[1], -grad[2]];
    (x, g, field, time_rate(&xa))
}

impl RegularizedSystem {
    pub fn new(params: RegParams) -> Self {
        // each program gets its own tape so that its inputs are exactly its state
        let grad_tape = Tape::new();
        let (_, g, f, _) = record(&grad_tape, &params);
        let grad_out = [g, -f[3], -f[4], -f[5], f[0], f[1], f[2]];

        let flow_tape = Tape::new();
        let (_, _, mut flow_out, rate) = record(&flow_tape, &params);
        let _t = flow_tape.input();
        flow_out.push(rate);

        let var_tape = Tape::new();
        let (x, _, field, rate) = record(&var_tape, &params);
        let _t = var_tape.input();
        let m = var_tape.inputs(36);
        let mut var_out = field.clone();
        var_out.push(rate);
        for j in 0..6 {
            var_out.extend(var_tape.directional(&field, &x, &m[6 * j..6 * j + 6]));
        }

        Self {
            params,
            gradient: grad_tape.compile(&grad_out),
            flow: flow_tape.compile(&flow_out),
            variational: var_tape.compile(&var_out),
        }
    }

    pub fn params(&self) -> &RegParams {
        &self.params
    }

    /// Field on `[Q, P, t]`.
    pub fn flow_program(&self) -> &Program {
        &self.flow
    }

    /// Field on `[Q, P, t, M]`.
    pub fn variational_program(&self) -> &Program {
        &self.variational
    }

    pub fn gamma(&self, x: &[f64]) -> f64 {
        let xa = [x[0], x[1], x[2], x[3], x[4], x[5]];
        gamma(&self.params, &xa)
    }

    /// `(Gamma, dGamma/dQ, dGamma/dP)`.
    pub fn gamma_and_gradient(&self, x: &[f64]) -> (f64, [f64; 6]) {
        let mut out = [0.0; 7];
        self.gradient.eval(&x[..6], &mut out);
        (out[0], [out[1], out[2], out[3], out[4], out[5], out[6]])
    }

    /// `(Q', P')` and `dt/ds`.
    pub fn vector_field(&self, x: &[f64]) -> ([f64; 6], f64) {
        let mut input = [0.0; 7];
        input[..6].copy_from_slice(&x[..6]);
        let mut out = [0.0; 7];
        self.flow.eval(&input, &mut out);
        ([out[0], out[1], out[2], out[3], out[4], out[5]], out[6])
    }

    pub fn jacobian(&self, x: &[f64]) -> Matrix6<f64> {
        let mut input = vec![0.0; VARIATIONAL_DIM];
        input[..6].copy_from_slice(&x[..6]);
        input[7..].copy_from_slice(Matrix6::<f64>::identity().as_slice());
        let out = self.variational.eval_vec(&input);
        Matrix6::from_column_slice(&out[7..])
    }
}

/// Initial vector `[x, t0, I]` for variational integration.
pub fn with_identity(x: &[f64], t0: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(VARIATIONAL_DIM);
    v.extend_from_slice(&x[..6]);
    v.push(t0);
    v.extend_from_slice(Matrix6::<f64>::identity().as_slice());
    v
}

pub fn fundamental_matrix(v: &[f64]) -> Matrix6<f64> {
    Matrix6::from_column_slice(&v[7..VARIATIONAL_DIM])
}

/// Reversing symmetry of the regularized flow: `Q_1, P_2, P_3` change sign.
pub fn involution() -> Matrix6<f64> {
    Matrix6::from_diagonal(&SMatrix::<f64, 6, 1>::from_column_slice(&[
        -1.0, 1.0, 1.0, 1.0, -1.0, -1.0,
    ]))
}

pub fn apply_involution(x: &[f64]) -> [f64; 6] {
    [-x[0], x[1], x[2], x[3], -x[4], -x[5]]
}

/// Standard symplectic matrix `[[0, I], [-I, 0]]`.
pub fn symplectic_form() -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    for i in 0..3 {
        j[(i, i + 3)] = 1.0;
        j[(i + 3, i)] = -1.0;
    }
    j
}
