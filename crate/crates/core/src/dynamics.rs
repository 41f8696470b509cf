//! Hamiltonians of the restricted three-body problem in the three charts used
//! here, their vector fields and variational fields, and chart conversions.

use crate::error::{Error, Result};
use crate::expr::{dot, norm_sq, Program, Scalar, Tape};
use nalgebra::{Matrix6, Vector3};
use serde::{Deserialize, Serialize};

/// Mass of the light primary relative to the total mass.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MassRatio(f64);

impl MassRatio {
    pub fn new(mu: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&mu) {
            Ok(Self(mu))
        } else {
            Err(Error::Parameter(format!("mass ratio {mu} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn cbrt(self) -> f64 {
        self.0.cbrt()
    }

    /// Mass of the heavy primary.
    pub fn heavy(self) -> f64 {
        1.0 - self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    /// Rotating frame centred at the barycentre.
    Barycentric,
    /// Rotating frame centred at the light primary.
    MoonCentered,
    /// Moon-centred frame magnified by the inverse cube root of the mass ratio.
    HillRescaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub kind: FrameKind,
    pub mu: MassRatio,
    pub omega: f64,
}

impl Frame {
    pub fn new(kind: FrameKind, mu: f64) -> Result<Self> {
        Ok(Self {
            kind,
            mu: MassRatio::new(mu)?,
            omega: 1.0,
        })
    }

    pub fn barycentric(mu: f64) -> Result<Self> {
        Self::new(FrameKind::Barycentric, mu)
    }

    pub fn moon_centered(mu: f64) -> Result<Self> {
        Self::new(FrameKind::MoonCentered, mu)
    }

    pub fn hill(mu: f64) -> Result<Self> {
        Self::new(FrameKind::HillRescaled, mu)
    }

    fn with_kind(self, kind: FrameKind) -> Self {
        Self { kind, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: [f64; 3],
    pub p: [f64; 3],
    pub frame: Frame,
}

impl PhaseState {
    pub fn new(q: [f64; 3], p: [f64; 3], frame: Frame) -> Self {
        Self { q, p, frame }
    }

    pub fn from_slice(x: &[f64], frame: Frame) -> Self {
        Self {
            q: [x[0], x[1], x[2]],
            p: [x[3], x[4], x[5]],
            frame,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let (q, p) = (self.q, self.p);
        [q[0], q[1], q[2], p[0], p[1], p[2]]
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::from(self.q)
    }

    /// Re-expresses the state in another chart of the same problem.
    pub fn to_frame(&self, kind: FrameKind) -> Result<PhaseState> {
        use FrameKind::*;
        match (self.frame.kind, kind) {
            (a, b) if a == b => Ok(*self),
            (Barycentric, _) => to_moon_centered(self)?.to_frame(kind),
            (MoonCentered, Barycentric) => from_moon_centered(self),
            (MoonCentered, HillRescaled) => rescale_hill(self),
            (HillRescaled, _) => unrescale_hill(self)?.to_frame(kind),
            _ => unreachable!(),
        }
    }
}

/// Value of a Hamiltonian together with the chart it is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub frame: Frame,
}

impl EnergyValue {
    pub fn new(value: f64, frame: Frame) -> Self {
        Self { value, frame }
    }

    /// The same energy level expressed in the Hamiltonian of another chart.
    pub fn to_frame(&self, kind: FrameKind) -> Result<EnergyValue> {
        use FrameKind::*;
        let mu = self.frame.mu;
        let shift = 0.5 * mu.heavy() * mu.heavy();
        let value = match (self.frame.kind, kind) {
            (a, b) if a == b => self.value,
            (Barycentric, MoonCentered) => self.value + shift,
            (MoonCentered, Barycentric) => self.value - shift,
            (MoonCentered, HillRescaled) => {
                require_positive(mu)?;
                (self.value + mu.heavy()) / mu.value().powf(2.0 / 3.0)
            }
            (HillRescaled, MoonCentered) => {
                require_positive(mu)?;
                self.value * mu.value().powf(2.0 / 3.0) - mu.heavy()
            }
            (Barycentric, HillRescaled) | (HillRescaled, Barycentric) => {
                return self.to_frame(MoonCentered)?.to_frame(kind);
            }
            _ => unreachable!(),
        };
        Ok(EnergyValue::new(value, self.frame.with_kind(kind)))
    }

    /// Value in the magnified lunar chart, where orbits are computed.
    pub fn hill_value(&self) -> Result<f64> {
        if self.frame.kind == FrameKind::HillRescaled {
            return Ok(self.value);
        }
        Ok(self.to_frame(FrameKind::HillRescaled)?.value)
    }
}

fn require_positive(mu: MassRatio) -> Result<()> {
    if mu.value() > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter("magnification is undefined for mass ratio 0".into()))
    }
}

fn rotation<S: Scalar>(omega: f64, q: &[S; 3], p: &[S; 3]) -> S {
    (q[0] * p[1] - q[1] * p[0]) * omega
}

/// Heavy-primary perturbation in the magnified chart, written without the
/// cancellation of the naive expansion. Its expansion starts with
/// `|q|^2 / 2 - 3 q_1^2 / 2`.
pub fn tidal<S: Scalar>(mu: f64, q: &[S; 3]) -> S {
    let c = mu.cbrt();
    let r2 = norm_sq(q);
    let y = q[0] * 2.0 + r2 * c;
    let w = (y * c + 1.0).sqrt();
    let w1 = w + 1.0;
    -(q[0] * y * (w + 2.0) / (w * w1 * w1) - r2 / (w * w1)) * (1.0 - mu)
}

pub fn barycentric_hamiltonian<S: Scalar>(mu: f64, omega: f64, q: &[S; 3], p: &[S; 3]) -> S {
    let to_moon = [q[0] - (1.0 - mu), q[1], q[2]];
    let to_earth = [q[0] + mu, q[1], q[2]];
    let one = q[0].lift(1.0);
    norm_sq(p) * 0.5 - one / norm_sq(&to_moon).sqrt() * mu - one / norm_sq(&to_earth).sqrt() * (1.0 - mu)
        + rotation(omega, q, p)
}

pub fn moon_centered_hamiltonian<S: Scalar>(mu: f64, omega: f64, q: &[S; 3], p: &[S; 3]) -> S {
    let to_earth = [q[0] + 1.0, q[1], q[2]];
    let one = q[0].lift(1.0);
    norm_sq(p) * 0.5 - one / norm_sq(q).sqrt() * mu + rotation(omega, q, p)
        - (one / norm_sq(&to_earth).sqrt() + q[0]) * (1.0 - mu)
}

pub fn hill_hamiltonian<S: Scalar>(mu: f64, omega: f64, q: &[S; 3], p: &[S; 3]) -> S {
    let one = q[0].lift(1.0);
    norm_sq(p) * 0.5 - one / norm_sq(q).sqrt() + rotation(omega, q, p) + tidal(mu, q)
}

/// Leading-order expansion of the magnified Hamiltonian in the cube root of
/// the mass ratio; only used for cross-checks.
pub fn hill_hamiltonian_truncated<S: Scalar>(mu: f64, omega: f64, q: &[S; 3], p: &[S; 3]) -> S {
    let one = q[0].lift(1.0);
    let c = mu.cbrt();
    let r2 = norm_sq(q);
    norm_sq(p) * 0.5 - one / r2.sqrt() + rotation(omega, q, p) - q[0] * q[0] * 1.5 + r2 * 0.5
        + (q[0] * q[0] * q[0] * 2.5 - q[0] * r2 * 1.5) * c
}

pub fn hamiltonian<S: Scalar>(frame: &Frame, q: &[S; 3], p: &[S; 3]) -> S {
    let (mu, omega) = (frame.mu.value(), frame.omega);
    match frame.kind {
        FrameKind::Barycentric => barycentric_hamiltonian(mu, omega, q, p),
        FrameKind::MoonCentered => moon_centered_hamiltonian(mu, omega, q, p),
        FrameKind::HillRescaled => hill_hamiltonian(mu, omega, q, p),
    }
}

fn check_domain(state: &PhaseState) -> Result<()> {
    let frame = state.frame;
    let mu = frame.mu.value();
    let q = state.q;
    let moon = Error::Collision { body: "Moon" };
    let earth = Error::Collision { body: "Earth" };
    if !state.is_finite() {
        return Err(Error::Parameter("non-finite phase state".into()));
    }
    match frame.kind {
        FrameKind::Barycentric => {
            if norm_sq(&[q[0] - (1.0 - mu), q[1], q[2]]) == 0.0 {
                return Err(moon);
            }
            if norm_sq(&[q[0] + mu, q[1], q[2]]) == 0.0 {
                return Err(earth);
            }
        }
        FrameKind::MoonCentered => {
            if norm_sq(&q) == 0.0 {
                return Err(moon);
            }
            if norm_sq(&[q[0] + 1.0, q[1], q[2]]) == 0.0 {
                return Err(earth);
            }
        }
        FrameKind::HillRescaled => {
            if norm_sq(&q) == 0.0 {
                return Err(moon);
            }
            let c = mu.cbrt();
            if 1.0 + c * (2.0 * q[0] + c * norm_sq(&q)) <= 0.0 {
                return Err(earth);
            }
        }
    }
    Ok(())
}

pub fn eval_energy(state: &PhaseState) -> Result<f64> {
    check_domain(state)?;
    Ok(hamiltonian(&state.frame, &state.q, &state.p))
}

pub fn energy(state: &PhaseState) -> Result<EnergyValue> {
    Ok(EnergyValue::new(eval_energy(state)?, state.frame))
}

/// Records `H` on a tape and returns `(inputs, H, Hamiltonian field)`.
fn record_field<'t>(tape: &'t Tape, frame: &Frame) -> (Vec<crate::expr::Var<'t>>, Vec<crate::expr::Var<'t>>) {
    let x = tape.inputs(6);
    let q = [x[0], x[1], x[2]];
    let p = [x[3], x[4], x[5]];
    let h = hamiltonian(frame, &q, &p);
    let g = tape.gradient(h, &x);
    let field = vec![g[3], g[4], g[5], -g[0], -g[1], -g[2]];
    (x, field)
}

/// Compiled vector field and variational system of one chart.
#[derive(Clone, Debug)]
pub struct Dynamics {
    frame: Frame,
    field: Program,
    variational: Program,
}

impl Dynamics {
    pub fn new(frame: Frame) -> Self {
        let tape = Tape::new();
        let (x, f) = record_field(&tape, &frame);
        let field = tape.compile(&f);

        let m = tape.inputs(36);
        let mut outputs = f.clone();
        for j in 0..6 {
            outputs.extend(tape.directional(&f, &x, &m[6 * j..6 * j + 6]));
        }
        let variational = tape.compile(&outputs);
        Self {
            frame,
            field,
            variational,
        }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// `x' = J grad H(x)` on six inputs.
    pub fn field_program(&self) -> &Program {
        &self.field
    }

    /// The field together with the first variational equations, acting on the
    /// state followed by the 36 entries of the fundamental matrix (column-major).
    pub fn variational_program(&self) -> &Program {
        &self.variational
    }

    pub fn vector_field(&self, x: &[f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        self.field.eval(x, &mut out);
        out
    }

    pub fn variational(&self, x: &[f64; 6], m: &Matrix6<f64>) -> Matrix6<f64> {
        let mut input = x.to_vec();
        input.extend(m.iter());
        let out = self.variational.eval_vec(&input);
        Matrix6::from_column_slice(&out[6..])
    }
}

pub fn vector_field(state: &PhaseState) -> Result<[f64; 6]> {
    check_domain(state)?;
    Ok(Dynamics::new(state.frame).vector_field(&state.to_array()))
}

/// Right-hand side `J Hess H M` of the first variational equations.
pub fn variational_field(state: &PhaseState, m: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    check_domain(state)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("non-finite variational matrix".into()));
    }
    Ok(Dynamics::new(state.frame).variational(&state.to_array(), m))
}

fn expect_kind(state: &PhaseState, kind: FrameKind) -> Result<()> {
    if state.frame.kind == kind {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "expected a {kind:?} state, got {:?}",
            state.frame.kind
        )))
    }
}

/// Moves the origin to the light primary. The momentum shift keeps the
/// rotation term in canonical form, so the Hamiltonians differ by the constant
/// `(1 - mu)^2 / 2`.
pub fn to_moon_centered(state: &PhaseState) -> Result<PhaseState> {
    expect_kind(state, FrameKind::Barycentric)?;
    let m1 = state.frame.mu.heavy();
    let (mut q, mut p) = (state.q, state.p);
    q[0] -= m1;
    p[1] += state.frame.omega * m1;
    Ok(PhaseState::new(q, p, state.frame.with_kind(FrameKind::MoonCentered)))
}

pub fn from_moon_centered(state: &PhaseState) -> Result<PhaseState> {
    expect_kind(state, FrameKind::MoonCentered)?;
    let m1 = state.frame.mu.heavy();
    let (mut q, mut p) = (state.q, state.p);
    q[0] += m1;
    p[1] -= state.frame.omega * m1;
    Ok(PhaseState::new(q, p, state.frame.with_kind(FrameKind::Barycentric)))
}

pub fn rescale_hill(state: &PhaseState) -> Result<PhaseState> {
    expect_kind(state, FrameKind::MoonCentered)?;
    require_positive(state.frame.mu)?;
    let k = 1.0 / state.frame.mu.cbrt();
    Ok(PhaseState::new(
        state.q.map(|v| v * k),
        state.p.map(|v| v * k),
        state.frame.with_kind(FrameKind::HillRescaled),
    ))
}

pub fn unrescale_hill(state: &PhaseState) -> Result<PhaseState> {
    expect_kind(state, FrameKind::HillRescaled)?;
    require_positive(state.frame.mu)?;
    let k = state.frame.mu.cbrt();
    Ok(PhaseState::new(
        state.q.map(|v| v * k),
        state.p.map(|v| v * k),
        state.frame.with_kind(FrameKind::MoonCentered),
    ))
}

/// Distance scale between the primaries used for physical output, in km.
pub const EARTH_MOON_DISTANCE_KM: f64 = 386_000.0;
pub const MOON_RADIUS_KM: f64 = 1716.0;

/// Position relative to the centre of the light primary, in km.
pub fn to_physical_km(state: &PhaseState, distance_km: f64) -> Result<Vector3<f64>> {
    let moon = state.to_frame(FrameKind::MoonCentered)?;
    Ok(moon.position() * distance_km)
}

/// Distance in km of a magnified-chart radius.
pub fn hill_radius_to_km(radius: f64, mu: f64, distance_km: f64) -> f64 {
    radius * mu.cbrt() * distance_km
}

/// Angular momentum about the third axis, `q_1 p_2 - q_2 p_1`.
pub fn axial_momentum(state: &PhaseState) -> f64 {
    let (q, p) = (state.q, state.p);
    q[0] * p[1] - q[1] * p[0]
}

pub fn radial_velocity(state: &PhaseState) -> f64 {
    dot(&state.q, &state.p) / norm_sq(&state.q).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hill0() -> Frame {
        Frame::hill(0.0).unwrap()
    }

    #[test]
    fn hill_energy_examples() {
        let e = |q, p| eval_energy(&PhaseState::new(q, p, hill0())).unwrap();
        assert_abs_diff_eq!(e([0.0, 0.0, 1.0], [0.0; 3]), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e([1.0, 0.0, 0.0], [0.0; 3]), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn hill_critical_point() {
        let a = 3f64.powf(-1.0 / 3.0);
        let s = PhaseState::new([a, 0.0, 0.0], [0.0, -a, 0.0], hill0());
        assert_abs_diff_eq!(eval_energy(&s).unwrap(), -(3f64.powf(4.0 / 3.0)) / 2.0, epsilon = 1e-14);
        for v in vector_field(&s).unwrap() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn z_axis_field() {
        // finite differences of the energy at (0,0,1; 0,0,0): dp3 = -dH/dq3 = -(1/z^2 + z) = -2
        let f = vector_field(&PhaseState::new([0.0, 0.0, 1.0], [0.0; 3], hill0())).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.0, 0.0, -2.0];
        for (a, b) in f.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn collisions_are_named() {
        let moon = PhaseState::new([0.0; 3], [1.0, 0.0, 0.0], hill0());
        assert_eq!(eval_energy(&moon), Err(Error::Collision { body: "Moon" }));
        let f = Frame::barycentric(0.1).unwrap();
        let earth = PhaseState::new([-0.1, 0.0, 0.0], [0.0; 3], f);
        assert_eq!(eval_energy(&earth), Err(Error::Collision { body: "Earth" }));
    }

    #[test]
    fn moon_at_rest_maps_to_origin() {
        let mu = 0.3;
        let s = PhaseState::new([1.0 - mu, 0.0, 0.0], [0.0, 1.0 - mu, 0.0], Frame::barycentric(mu).unwrap());
        let m = to_moon_centered(&s).unwrap();
        assert_eq!(m.q, [0.0; 3]);
        assert!(matches!(eval_energy(&m), Err(Error::Collision { body: "Moon" })));
    }

    #[test]
    fn rescale_needs_positive_mass() {
        let s = PhaseState::new([0.0, 0.0, 0.1], [0.0; 3], Frame::moon_centered(0.0).unwrap());
        assert!(rescale_hill(&s).is_err());
        let s = PhaseState::new([0.0, 0.0, 0.1], [0.0; 3], Frame::moon_centered(1e-3).unwrap());
        let r = rescale_hill(&s).unwrap();
        assert_abs_diff_eq!(r.q[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn physical_distances() {
        let s = PhaseState::new([0.0, 0.01, 0.0], [0.0; 3], Frame::moon_centered(0.01215).unwrap());
        assert_abs_diff_eq!(to_physical_km(&s, 386_000.0).unwrap().norm(), 3860.0, epsilon = 1e-9);
        let s = PhaseState::new([0.0, 0.0, 1.0], [0.0; 3], Frame::hill(0.01215).unwrap());
        let km = to_physical_km(&s, 386_000.0).unwrap().norm();
        // 386000 * 0.01215^(1/3)
        assert_abs_diff_eq!(km, 386_000.0 * (0.01215f64.ln() / 3.0).exp(), epsilon = 1e-8);
        assert_abs_diff_eq!(km, 88_738.63, epsilon = 0.01);
        assert_abs_diff_eq!(hill_radius_to_km(1.0, 0.01215, 386_000.0), km, epsilon = 1e-9);
    }

    #[test]
    fn energy_value_conversions() {
        let mu = 0.01215;
        let bary = EnergyValue::new(-1.52, Frame::barycentric(mu).unwrap());
        let hill = bary.to_frame(FrameKind::HillRescaled).unwrap();
        let back = hill.to_frame(FrameKind::Barycentric).unwrap();
        assert_abs_diff_eq!(back.value, -1.52, epsilon = 1e-13);
        let expected = (-1.52 + 0.5 * (1.0 - mu) * (1.0 - mu) + 1.0 - mu) / mu.powf(2.0 / 3.0);
        assert_abs_diff_eq!(hill.value, expected, epsilon = 1e-12);
        let at_one = EnergyValue::new(-0.3, Frame::moon_centered(1.0).unwrap());
        assert_abs_diff_eq!(at_one.hill_value().unwrap(), -0.3, epsilon = 1e-15);
    }

    #[test]
    fn truncation_error_is_small() {
        let mu = 1e-6;
        let q = [0.3, -0.2, 0.5];
        let p = [0.1, 0.4, -0.3];
        let full = hill_hamiltonian(mu, 1.0, &q, &p);
        let trunc = hill_hamiltonian_truncated(mu, 1.0, &q, &p);
        assert!((full - trunc).abs() < 1e-3);
    }
}
