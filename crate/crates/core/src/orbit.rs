//! Symmetric polar orbits: the collision orbit on the third axis, elimination of
//! `Q_3` from the section, and Newton shooting on the half period.

use crate::dynamics::{Frame, FrameKind, PhaseState};
use crate::error::{Error, Result};
use crate::integrator::{Direction, IntegratorConfig, Section, TaylorIntegrator, Trajectory};
use crate::regularization::{
    apply_involution, fundamental_matrix, regularized_position, time_rate, unregularize, with_identity, RegParams,
    RegularizedSystem, TIME_INDEX,
};
use nalgebra::{Matrix3, Vector3};
use std::f64::consts::FRAC_PI_2;

/// Potential of the lunar problem restricted to the positive third axis.
pub fn axis_potential(z: f64) -> f64 {
    -1.0 / z + 0.5 * z * z
}

/// Turning height of the collision orbit at energy `h`: the positive root of
/// `z^3 - 2 h z - 2 = 0`.
pub fn amplitude(h: f64) -> f64 {
    let f = |z: f64| z * z * z - 2.0 * h * z - 2.0;
    let df = |z: f64| 3.0 * z * z - 2.0 * h;
    // f(0) = -2 and the positive root is simple
    let mut lo = 0.0;
    let mut hi = 1.0f64;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut z = if h < 0.0 { (1.0 / -h).min(hi) } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let fz = f(z);
        if fz == 0.0 {
            return z;
        }
        if fz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - fz / df(z);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 2.0 * f64::EPSILON * z {
            return next;
        }
        z = next;
    }
    z
}

/// Physical period of the collision orbit at energy `h`, by quadrature of the
/// turning-point-free form of `2 int_0^d dz / sqrt(2 (h - V(z)))`.
pub fn collision_period(h: f64) -> f64 {
    let d = amplitude(h);
    let integrand = |phi: f64| {
        let c2 = phi.cos().powi(2);
        c2 / (2.0 / (d * d) + d * c2 * (1.0 + c2)).sqrt()
    };
    let scale = d * d.sqrt();
    let out = quadrature::double_exponential::integrate(integrand, 0.0, FRAC_PI_2, 1e-16 * scale.max(1e-300));
    4.0 * d.sqrt() * out.integral
}

/// Free coordinates of a point on the symmetric section `Q_1 = P_2 = P_3 = 0`,
/// with `Q_3` fixed by the energy constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionPoint {
    pub q2: f64,
    pub p1: f64,
    pub q3: f64,
    pub params: RegParams,
}

impl SectionPoint {
    pub fn coords(&self) -> [f64; 6] {
        [0.0, self.q2, self.q3, self.p1, 0.0, 0.0]
    }
}

/// Section point together with a half period in fictitious time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitGuess {
    pub section: SectionPoint,
    pub half_period_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub section: SectionPoint,
    /// Half period in fictitious time.
    pub half_period_s: f64,
    /// Full period in physical time.
    pub period_t: f64,
    /// Shooting Jacobian determinant with respect to the full fictitious period.
    pub delta: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Maximum height above the plane of the primaries' orbit (magnified units).
    pub amplitude: f64,
    pub periapsis: f64,
    pub apoapsis: f64,
    /// Fundamental matrix over the half period.
    pub half_stm: nalgebra::Matrix6<f64>,
}

impl OrbitRecord {
    pub fn params(&self) -> RegParams {
        self.section.params
    }

    pub fn guess(&self) -> OrbitGuess {
        OrbitGuess {
            section: self.section,
            half_period_s: self.half_period_s,
        }
    }

    /// True when `|delta|` is so small that the orbit is close to a degeneracy.
    pub fn near_degenerate(&self) -> bool {
        self.delta.abs() < DEGENERACY_WARNING
    }
}

pub const DEGENERACY_WARNING: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingConfig {
    pub integrator: IntegratorConfig,
    pub max_iterations: usize,
    /// Accepted residual.
    pub tolerance: f64,
    /// Residual at which iteration stops early.
    pub target: f64,
    /// Samples per half period when locating apsides.
    pub apsis_samples: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            max_iterations: 25,
            tolerance: 1e-10,
            target: 1e-13,
            apsis_samples: 400,
        }
    }
}

const MAX_HALF_PERIOD: f64 = 1e3;

/// Collision point `(0, 0, -1; 1, 0, 0)`, which lies on every energy level.
pub fn collision_point() -> [f64; 6] {
    [0.0, 0.0, -1.0, 1.0, 0.0, 0.0]
}

/// The collision orbit along the third axis, available when the heavy primary
/// is absent from the magnified chart (mass ratio 0 or 1). The half period is
/// the fictitious time to the next downward crossing of `Q_1 = 0`.
pub fn collision_seed(h: f64, mu: f64, config: &IntegratorConfig) -> Result<OrbitGuess> {
    if mu != 0.0 && mu != 1.0 {
        return Err(Error::Parameter(format!(
            "the axis collision orbit exists only for mass ratio 0 or 1, not {mu}"
        )));
    }
    let params = RegParams::new(mu, h);
    let sys = RegularizedSystem::new(params);
    let mut ig = TaylorIntegrator::new(config.clone())?;
    let x0 = collision_point();
    let mut start = x0.to_vec();
    start.push(0.0);
    let crossing = ig.integrate_to_section(
        sys.flow_program(),
        &start,
        0.0,
        &Section::coordinate(0, 0.0),
        Direction::Decreasing,
        MAX_HALF_PERIOD,
    )?;
    Ok(OrbitGuess {
        section: SectionPoint {
            q2: 0.0,
            p1: 1.0,
            q3: -1.0,
            params,
        },
        half_period_s: crossing.t,
    })
}

/// Solves the energy constraint on the section for `Q_3` by safeguarded Newton.
pub fn solve_q3(sys: &RegularizedSystem, q2: f64, p1: f64, q3_guess: f64) -> Result<f64> {
    let eval = |q3: f64| sys.gamma_and_gradient(&[0.0, q2, q3, p1, 0.0, 0.0]);
    let mut q3 = q3_guess;
    let (mut g, mut grad) = eval(q3);
    for it in 0..60 {
        if g.abs() <= 1e-15 {
            return Ok(q3);
        }
        let dg = grad[2];
        if dg == 0.0 || !dg.is_finite() {
            return Err(Error::Root {
                iterations: it,
                residual: g.abs(),
            });
        }
        let mut step = -g / dg;
        let mut accepted = false;
        for _ in 0..30 {
            let (g_new, grad_new) = eval(q3 + step);
            if g_new.is_finite() && g_new.abs() < g.abs() {
                q3 += step;
                g = g_new;
                grad = grad_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // cannot decrease the residual further: at rounding level
            break;
        }
        if step.abs() <= 4.0 * f64::EPSILON * q3.abs().max(1.0) {
            break;
        }
    }
    if g.abs() <= 1e-13 {
        Ok(q3)
    } else {
        Err(Error::Root {
            iterations: 60,
            residual: g.abs(),
        })
    }
}

struct HalfOrbit {
    end: Vec<f64>,
    residual: Vector3<f64>,
    jacobian: Matrix3<f64>,
    delta: f64,
}

fn shoot(
    sys: &RegularizedSystem,
    ig: &mut TaylorIntegrator,
    x0: &[f64; 6],
    sigma: f64,
) -> Result<HalfOrbit> {
    let start = with_identity(x0, 0.0);
    let end = ig.integrate(sys.variational_program(), &start, 0.0, sigma)?;
    let a = fundamental_matrix(&end);
    let (_, grad) = sys.gamma_and_gradient(x0);
    let (f_end, _) = sys.vector_field(&end);

    // section directions with Q_3 following the constraint
    let mut v_q2 = nalgebra::Vector6::zeros();
    v_q2[1] = 1.0;
    v_q2[2] = -grad[1] / grad[2];
    let mut v_p1 = nalgebra::Vector6::zeros();
    v_p1[3] = 1.0;
    v_p1[2] = -grad[3] / grad[2];
    let d_q2 = a * v_q2;
    let d_p1 = a * v_p1;

    let pick = |v: &[f64]| Vector3::new(v[0], v[4], v[5]);
    let col_sigma = pick(&f_end);
    let jacobian = Matrix3::from_columns(&[col_sigma, pick(d_q2.as_slice()), pick(d_p1.as_slice())]);
    let scaled = Matrix3::from_columns(&[0.5 * col_sigma, jacobian.column(1).into(), jacobian.column(2).into()]);
    Ok(HalfOrbit {
        residual: pick(&end),
        end,
        jacobian,
        delta: scaled.determinant(),
    })
}

/// Shooting residual `(Q_1, P_2, P_3)` at the half period and its Jacobian
/// with respect to `(half period, Q_2, P_1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootingResidual {
    pub residual: Vector3<f64>,
    pub jacobian: Matrix3<f64>,
    /// `Q_3` solving the energy constraint.
    pub q3: f64,
}

pub fn shooting_residual(
    params: RegParams,
    sigma: f64,
    q2: f64,
    p1: f64,
    q3_guess: f64,
    config: &IntegratorConfig,
) -> Result<ShootingResidual> {
    let sys = RegularizedSystem::new(params);
    let mut ig = TaylorIntegrator::new(config.clone())?;
    let q3 = solve_q3(&sys, q2, p1, q3_guess)?;
    let half = shoot(&sys, &mut ig, &[0.0, q2, q3, p1, 0.0, 0.0], sigma)?;
    Ok(ShootingResidual {
        residual: half.residual,
        jacobian: half.jacobian,
        q3,
    })
}

/// Minimum-norm least-squares solution, ignoring directions with negligible
/// singular values.
fn truncated_solve(j: &Matrix3<f64>, rhs: &Vector3<f64>) -> Vector3<f64> {
    let svd = j.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12;
    svd.solve(rhs, eps).unwrap_or_else(|_| Vector3::zeros())
}

/// Refines a symmetric periodic orbit from `guess` by Newton iteration on
/// `(half period, Q_2, P_1)` with targets `Q_1 = P_2 = P_3 = 0` at the half period.
pub fn find_polar_orbit(guess: &OrbitGuess, config: &ShootingConfig) -> Result<OrbitRecord> {
    let params = guess.section.params;
    let sys = RegularizedSystem::new(params);
    let mut ig = TaylorIntegrator::new(config.integrator.clone())?;

    let (mut sigma, mut q2, mut p1) = (guess.half_period_s, guess.section.q2, guess.section.p1);
    let mut q3 = guess.section.q3;
    let mut best: Option<(f64, usize)> = None;
    let mut last_norm = f64::INFINITY;

    for it in 0..config.max_iterations {
        q3 = solve_q3(&sys, q2, p1, q3)?;
        let x0 = [0.0, q2, q3, p1, 0.0, 0.0];
        if !(sigma > 0.0) {
            return Err(Error::Shooting {
                iterations: it,
                residual: f64::NAN,
            });
        }
        let half = shoot(&sys, &mut ig, &x0, sigma)?;
        let norm = half.residual.amax();
        let stalled = norm <= config.tolerance && norm > 0.5 * last_norm;
        if norm <= config.target || stalled {
            best = Some((norm, it + 1));
            return finish(&sys, &mut ig, config, x0, sigma, half, best.unwrap());
        }
        last_norm = norm;
        let step = truncated_solve(&half.jacobian, &(-half.residual));
        // keep the update inside a trust region
        let scale = (0.5 / step.amax()).min(1.0);
        sigma += scale * step[0];
        q2 += scale * step[1];
        p1 += scale * step[2];
        best = Some((norm, it + 1));
    }

    let residual = best.map_or(f64::INFINITY, |b| b.0);
    Err(Error::Shooting {
        iterations: config.max_iterations,
        residual,
    })
}

fn finish(
    sys: &RegularizedSystem,
    ig: &mut TaylorIntegrator,
    config: &ShootingConfig,
    x0: [f64; 6],
    sigma: f64,
    half: HalfOrbit,
    (residual, iterations): (f64, usize),
) -> Result<OrbitRecord> {
    let params = *sys.params();
    let mut start = x0.to_vec();
    start.push(0.0);
    let traj = ig.integrate_dense(sys.flow_program(), &start, 0.0, sigma)?;
    let apsides = apsides(&traj, config.apsis_samples);
    Ok(OrbitRecord {
        section: SectionPoint {
            q2: x0[1],
            p1: x0[3],
            q3: x0[2],
            params,
        },
        half_period_s: sigma,
        period_t: 2.0 * half.end[TIME_INDEX],
        delta: half.delta,
        residual,
        iterations,
        amplitude: apsides.height,
        periapsis: apsides.min_radius,
        apoapsis: apsides.max_radius,
        half_stm: fundamental_matrix(&half.end),
    })
}

struct Apsides {
    min_radius: f64,
    max_radius: f64,
    height: f64,
}

/// Extremum of `f` near the sample `s_mid` by golden-section search on the
/// dense output, `sense = 1` for a maximum and `-1` for a minimum.
fn refine_extremum(f: &dyn Fn(f64) -> f64, a: f64, b: f64, sense: f64) -> f64 {
    let g = |s: f64| sense * f(s);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    sense * g(0.5 * (a + b)).max(fc).max(fd)
}

/// Extremal distance and height over a half orbit. The reversing symmetry maps
/// the other half onto this one with the same distances.
fn apsides(traj: &Trajectory, n: usize) -> Apsides {
    let n = n.max(8);
    let (a, b) = (traj.t_start, traj.t_end());
    let s_at = |k: usize| a + (b - a) * k as f64 / n as f64;
    let radius = |s: f64| time_rate(&first6(&traj.eval(s)));
    let height = |s: f64| regularized_position(&traj.eval(s))[2].abs();

    let extremum = |f: &dyn Fn(f64) -> f64, sense: f64| {
        let values: Vec<f64> = (0..=n).map(|k| sense * f(s_at(k))).collect();
        let (k, _) = values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let lo = s_at(k.saturating_sub(1));
        let hi = s_at((k + 1).min(n));
        let refined = refine_extremum(f, lo, hi, sense);
        if sense > 0.0 {
            refined.max(f(s_at(k)))
        } else {
            refined.min(f(s_at(k)))
        }
    };

    Apsides {
        min_radius: extremum(&radius, -1.0),
        max_radius: extremum(&radius, 1.0),
        height: extremum(&height, 1.0),
    }
}

fn first6(v: &[f64]) -> [f64; 6] {
    [v[0], v[1], v[2], v[3], v[4], v[5]]
}

/// One sample of a dense orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSample {
    pub s: f64,
    pub t: f64,
    /// Regularized coordinates.
    pub regularized: [f64; 6],
    /// State in the requested chart. Momenta are infinite at collision.
    pub state: PhaseState,
}

/// Full-period trajectory with `n_samples` points equally spaced in fictitious
/// time, expressed in `frame`.
pub fn dense_orbit(
    record: &OrbitRecord,
    n_samples: usize,
    frame: FrameKind,
    config: &IntegratorConfig,
) -> Result<Vec<OrbitSample>> {
    let params = record.params();
    let sys = RegularizedSystem::new(params);
    let mut ig = TaylorIntegrator::new(config.clone())?;
    let mut start = record.section.coords().to_vec();
    start.push(0.0);
    let traj = ig.integrate_dense(sys.flow_program(), &start, 0.0, 2.0 * record.half_period_s)?;
    let hill = Frame::hill(params.mu)?;
    traj.sample_uniform(n_samples)
        .into_iter()
        .map(|sample| {
            let x = first6(&sample.state);
            let state = match unregularize(&x, hill) {
                Ok(s) => s,
                Err(_) => PhaseState::new(regularized_position(&x), [f64::INFINITY; 3], hill),
            };
            let state = if frame == FrameKind::HillRescaled {
                state
            } else {
                to_chart(&state, frame)?
            };
            Ok(OrbitSample {
                s: sample.t,
                t: sample.state[TIME_INDEX],
                regularized: x,
                state,
            })
        })
        .collect()
}

/// Consistency measures of a converged orbit over one full period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitDiagnostics {
    /// `max |x(2 sigma) - x(0)|` in regularized coordinates.
    pub closure: f64,
    /// `max |x(2 sigma - s) - R x(s)|` over the samples, `R` the reversing involution.
    pub symmetry: f64,
    /// Largest `|Gamma|` over the samples; `Gamma` vanishes on the energy level.
    pub energy_drift: f64,
}

pub fn diagnose(record: &OrbitRecord, n_samples: usize, config: &IntegratorConfig) -> Result<OrbitDiagnostics> {
    let sys = RegularizedSystem::new(record.params());
    let mut ig = TaylorIntegrator::new(config.clone())?;
    let mut start = record.section.coords().to_vec();
    start.push(0.0);
    let period = 2.0 * record.half_period_s;
    let traj = ig.integrate_dense(sys.flow_program(), &start, 0.0, period)?;
    let end = traj.final_state();
    let closure = (0..6).map(|i| (end[i] - start[i]).abs()).fold(0.0, f64::max);

    let n = n_samples.max(2);
    let mut symmetry = 0.0f64;
    let mut energy_drift = 0.0f64;
    for k in 0..=n {
        let s = period * k as f64 / n as f64;
        let x = traj.eval(s);
        let mirrored = apply_involution(&traj.eval(period - s));
        symmetry = (0..6).map(|i| (x[i] - mirrored[i]).abs()).fold(symmetry, f64::max);
        energy_drift = energy_drift.max(sys.gamma(&x).abs());
    }
    Ok(OrbitDiagnostics {
        closure,
        symmetry,
        energy_drift,
    })
}

fn to_chart(state: &PhaseState, frame: FrameKind) -> Result<PhaseState> {
    if state.p.iter().all(|v| v.is_finite()) {
        return state.to_frame(frame);
    }
    // collision: only the position is meaningful
    let probe = PhaseState::new(state.q, [0.0; 3], state.frame).to_frame(frame)?;
    Ok(PhaseState::new(probe.q, [f64::INFINITY; 3], probe.frame))
}
