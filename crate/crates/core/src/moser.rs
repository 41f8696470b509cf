//! Moser regularization: the momentum space is compactified to the 3-sphere by
//! stereographic projection, and the flow is a constrained Hamiltonian flow on
//! the cotangent bundle of the sphere inside `R^8`. Used to cross-check the
//! Belbruno chart.

use crate::dynamics::{tidal, Frame, PhaseState};
use crate::error::{Error, Result};
use crate::expr::{Program, Scalar, Tape};
use crate::regularization::RegParams;
use serde::{Deserialize, Serialize};

/// Point of the ambient space `R^4 x R^4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserState {
    pub xi: [f64; 4],
    pub eta: [f64; 4],
}

impl MoserState {
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            xi: [v[0], v[1], v[2], v[3]],
            eta: [v[4], v[5], v[6], v[7]],
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&self.xi);
        out[4..].copy_from_slice(&self.eta);
        out
    }

    /// `(|xi|^2 / 2 - 1/2, <xi, eta>)`, both zero on the unit sphere bundle.
    pub fn constraints(&self) -> (f64, f64) {
        (sphere_constraint(&self.xi), fibre_constraint(&self.xi, &self.eta))
    }
}

fn dot4<S: Scalar>(a: &[S; 4], b: &[S; 4]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn sphere_constraint<S: Scalar>(xi: &[S; 4]) -> S {
    dot4(xi, xi) * 0.5 - 0.5
}

fn fibre_constraint<S: Scalar>(xi: &[S; 4], eta: &[S; 4]) -> S {
    dot4(xi, eta)
}

/// Stereographic lift of `(x, y)`, with `x` projected to the sphere and `y`
/// carried along as a covector.
pub fn chart_to_sphere(x: &[f64; 3], y: &[f64; 3]) -> MoserState {
    let n = x.iter().map(|v| v * v).sum::<f64>();
    let xy = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let d = n + 1.0;
    let mut xi = [(n - 1.0) / d, 0.0, 0.0, 0.0];
    let mut eta = [-xy, 0.0, 0.0, 0.0];
    for i in 0..3 {
        xi[i + 1] = -2.0 * x[i] / d;
        eta[i + 1] = 0.5 * d * y[i] - xy * x[i];
    }
    MoserState { xi, eta }
}

/// Inverse of [`chart_to_sphere`], defined away from the pole `xi_0 = 1`.
pub fn sphere_to_chart(state: &MoserState) -> Result<([f64; 3], [f64; 3])> {
    let (xi, eta) = (&state.xi, &state.eta);
    let m = 1.0 - xi[0];
    if m.abs() <= f64::EPSILON {
        return Err(Error::ChartExcluded("pole of the stereographic chart"));
    }
    let x = std::array::from_fn(|i| -xi[i + 1] / m);
    let y = std::array::from_fn(|i| eta[0] * xi[i + 1] + m * eta[i + 1]);
    Ok((x, y))
}

/// Physical state in the magnified chart to the sphere bundle. Momentum plays
/// the role of the base point and position that of the covector.
pub fn from_phase(state: &PhaseState) -> MoserState {
    chart_to_sphere(&state.p, &state.q)
}

pub fn to_phase(state: &MoserState, frame: Frame) -> Result<PhaseState> {
    let (p, q) = sphere_to_chart(state)?;
    Ok(PhaseState::new(q, p, frame))
}

/// Hamiltonian on the ambient space, generic over the arithmetic so that it
/// can be differentiated on a tape.
pub trait AmbientHamiltonian {
    fn eval<S: Scalar>(&self, xi: &[S; 4], eta: &[S; 4]) -> S;
}

/// Position recovered from sphere coordinates.
fn position<S: Scalar>(xi: &[S; 4], eta: &[S; 4]) -> [S; 3] {
    let m = -xi[0] + 1.0;
    std::array::from_fn(|i| eta[0] * xi[i + 1] + m * eta[i + 1])
}

/// `|q| (H - h)` for the magnified lunar Hamiltonian, written on the sphere
/// bundle. The Kepler singularity becomes the constant `-1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LunarMoserHamiltonian {
    pub params: RegParams,
}

impl AmbientHamiltonian for LunarMoserHamiltonian {
    fn eval<S: Scalar>(&self, xi: &[S; 4], eta: &[S; 4]) -> S {
        let norm = dot4(eta, eta).sqrt();
        let q = position(xi, eta);
        let m = -xi[0] + 1.0;
        // |q| times the rotation term; the eta_0 part of q drops out
        let rotation = (q[0] * xi[2] - q[1] * xi[1]) * norm * (-self.params.omega);
        (xi[0] + 1.0) * norm * 0.5 - 1.0 + rotation + norm * m * (tidal(self.params.mu, &q) - self.params.h)
    }
}

pub const MOSER_FLOW_DIM: usize = 9;

/// Constrained vector field of an ambient Hamiltonian, on `[xi, eta, t]`. The
/// multiples of the constraint fields are chosen so that the result is tangent
/// to the sphere bundle. Physical time runs at `|q| = (1 - xi_0) |eta|`.
pub struct ConstrainedField {
    program: Program,
}

impl ConstrainedField {
    pub fn new<H: AmbientHamiltonian>(hamiltonian: &H) -> Self {
        let tape = Tape::new();
        let v = tape.inputs(8);
        let _t = tape.input();
        let xi = [v[0], v[1], v[2], v[3]];
        let eta = [v[4], v[5], v[6], v[7]];
        let h = hamiltonian.eval(&xi, &eta);
        let grad = tape.gradient(h, &v);
        let h_xi = [grad[0], grad[1], grad[2], grad[3]];
        let h_eta = [grad[4], grad[5], grad[6], grad[7]];
        let xi_sq = dot4(&xi, &xi);
        // tangency: d f1 (X) = d f2 (X) = 0
        let c_sphere = (dot4(&eta, &h_eta) - dot4(&xi, &h_xi)) / xi_sq;
        let c_fibre = -dot4(&xi, &h_eta) / xi_sq;

        let mut out = Vec::with_capacity(MOSER_FLOW_DIM);
        for i in 0..4 {
            out.push(h_eta[i] + xi[i] * c_fibre);
        }
        for i in 0..4 {
            out.push(-h_xi[i] - xi[i] * c_sphere - eta[i] * c_fibre);
        }
        out.push((-xi[0] + 1.0) * dot4(&eta, &eta).sqrt());
        Self {
            program: tape.compile(&out),
        }
    }

    pub fn lunar(params: RegParams) -> Self {
        Self::new(&LunarMoserHamiltonian { params })
    }

    /// Field on `[xi, eta, t]`.
    pub fn program(&self) -> &Program {
        &self.program
    }

    /// Velocity of `state` in the ambient space, failing off the bundle.
    pub fn eval(&self, state: &MoserState, tol: f64) -> Result<[f64; 8]> {
        let (f1, f2) = state.constraints();
        let violation = f1.abs().max(f2.abs());
        if !(violation <= tol) {
            return Err(Error::Constraint { violation });
        }
        let mut input = [0.0; MOSER_FLOW_DIM];
        input[..8].copy_from_slice(&state.to_array());
        let mut out = [0.0; MOSER_FLOW_DIM];
        self.program.eval(&input, &mut out);
        Ok(std::array::from_fn(|i| out[i]))
    }
}
