//! Families of symmetric periodic orbits followed in energy or in mass ratio.

use crate::dynamics::{EnergyValue, Frame, FrameKind};
use crate::error::{Error, Result};
use crate::orbit::{collision_seed, find_polar_orbit, shooting_residual, OrbitGuess, OrbitRecord, SectionPoint, ShootingConfig};
use crate::regularization::RegParams;
use crate::stability::{monodromy, reduce_spectrum, MonodromySpectrum, StabilityClass, TestFunctions};
use serde::{Deserialize, Serialize};

/// The quantity varied along a run, with the other one held fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Parameter {
    /// Energy varies at fixed mass ratio. Energies are measured in the
    /// Hamiltonian of `convention`.
    Energy { mu: f64, convention: FrameKind },
    /// Mass ratio varies at a fixed energy measured in `convention`.
    MassRatio { energy: f64, convention: FrameKind },
}

impl Parameter {
    /// Regularized system parameters at parameter value `value`.
    pub fn params_at(&self, value: f64) -> Result<RegParams> {
        let (mu, energy, convention) = match *self {
            Parameter::Energy { mu, convention } => (mu, value, convention),
            Parameter::MassRatio { energy, convention } => (value, energy, convention),
        };
        let frame = Frame::new(convention, mu)?;
        let h = EnergyValue::new(energy, frame).hill_value()?;
        Ok(RegParams::new(mu, h))
    }

    pub fn fixed_value(&self) -> f64 {
        match *self {
            Parameter::Energy { mu, .. } => mu,
            Parameter::MassRatio { energy, .. } => energy,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Parameter::Energy { .. } => "h",
            Parameter::MassRatio { .. } => "mu",
        }
    }

    /// Coordinate used for stepping. Mass ratios are stepped in their cube
    /// root, which is the natural scale of the magnified chart.
    fn to_step(&self, value: f64) -> f64 {
        match self {
            Parameter::Energy { .. } => value,
            Parameter::MassRatio { .. } => value.cbrt(),
        }
    }

    fn from_step(&self, v: f64) -> f64 {
        match self {
            Parameter::Energy { .. } => v,
            Parameter::MassRatio { .. } => v * v * v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepConfig {
    pub shooting: ShootingConfig,
    /// Initial step in the stepping coordinate.
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Newton iterations at or below which the step grows.
    pub fast_iterations: usize,
    /// Largest accepted distance between predicted and corrected section
    /// coordinates, relative to their size.
    pub max_correction: f64,
    /// Largest change in the arguments of the nontrivial multipliers between
    /// consecutive orbits, so that no event is stepped over.
    pub max_rotation: Option<f64>,
    /// Stop after this many orbits.
    pub max_records: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            shooting: ShootingConfig::default(),
            initial: 0.05,
            min: 1e-9,
            max: 0.1,
            grow: 1.3,
            shrink: 0.5,
            fast_iterations: 3,
            max_correction: 0.05,
            max_rotation: Some(0.5),
            max_records: 100_000,
        }
    }
}

impl StepConfig {
    pub fn with_steps(initial: f64, max: f64) -> Self {
        Self {
            initial,
            max,
            ..Self::default()
        }
    }
}

/// Why a run stopped before its end value.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub at: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationRun {
    pub parameter: Parameter,
    /// Parameter value of each orbit on the path.
    pub values: Vec<f64>,
    pub path: Vec<OrbitRecord>,
    pub events: Vec<BifurcationEvent>,
    /// Accepted steps in the stepping coordinate.
    pub step_history: Vec<f64>,
    pub truncated: Option<Truncation>,
}

impl ContinuationRun {
    pub fn is_complete(&self) -> bool {
        self.truncated.is_none()
    }

    pub fn last(&self) -> Option<(f64, &OrbitRecord)> {
        self.values.last().copied().zip(self.path.last())
    }

    pub fn max_residual(&self) -> f64 {
        self.path.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Degeneracy,
    PeriodDoubling,
    KreinCollision,
    Fold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationEvent {
    pub kind: EventKind,
    pub bracket: [f64; 2],
    /// The relevant test function at the two ends of the bracket.
    pub test_values: [f64; 2],
    /// False when the bracket could not be narrowed to the requested width.
    pub resolved: bool,
}

impl BifurcationEvent {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.bracket[0] + self.bracket[1])
    }

    pub fn width(&self) -> f64 {
        (self.bracket[1] - self.bracket[0]).abs()
    }
}

/// Follows a family in energy at fixed mass ratio, starting from a guess at
/// `h_start`. Energies are in the Hamiltonian of `convention`.
pub fn continue_in_h(
    mu: f64,
    convention: FrameKind,
    guess: &OrbitGuess,
    h_start: f64,
    h_end: f64,
    config: &StepConfig,
) -> Result<ContinuationRun> {
    run(Parameter::Energy { mu, convention }, guess, h_start, h_end, config)
}

/// Follows a family in mass ratio at an energy fixed in `convention`.
pub fn continue_in_mu(
    energy: f64,
    convention: FrameKind,
    guess: &OrbitGuess,
    mu_start: f64,
    mu_end: f64,
    config: &StepConfig,
) -> Result<ContinuationRun> {
    if !(0.0..=1.0).contains(&mu_start) || !(0.0..=1.0).contains(&mu_end) {
        return Err(Error::Parameter(format!(
            "mass ratios must lie in [0, 1], got {mu_start} and {mu_end}"
        )));
    }
    run(Parameter::MassRatio { energy, convention }, guess, mu_start, mu_end, config)
}

/// Section coordinates and half period, the quantities extrapolated along a path.
fn unknowns(r: &OrbitRecord) -> [f64; 4] {
    [r.half_period_s, r.section.q2, r.section.p1, r.section.q3]
}

fn guess_from(u: [f64; 4], params: RegParams) -> OrbitGuess {
    OrbitGuess {
        section: SectionPoint {
            q2: u[1],
            p1: u[2],
            q3: u[3],
            params,
        },
        half_period_s: u[0],
    }
}

/// Linear extrapolation through the last two points of `(v, unknowns)`.
fn predict(history: &[(f64, [f64; 4])], v: f64) -> [f64; 4] {
    match history {
        [.., (v0, u0), (v1, u1)] if v1 != v0 => {
            let s = (v - v1) / (v1 - v0);
            std::array::from_fn(|i| u1[i] + s * (u1[i] - u0[i]))
        }
        [.., (_, u)] => *u,
        [] => unreachable!("prediction needs a converged orbit"),
    }
}

/// Sorted `|arg|` of the nontrivial multipliers, or `None` when the spectrum
/// cannot be reduced.
fn multiplier_angles(rec: &OrbitRecord) -> Option<[f64; 4]> {
    let sp = reduce_spectrum(&monodromy(rec)).ok()?;
    let mut a = sp.eigenvalues.map(|z| z.arg().abs());
    a.sort_by(f64::total_cmp);
    Some(a)
}

fn rotation_between(a: &Option<[f64; 4]>, b: &Option<[f64; 4]>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        _ => 0.0,
    }
}

fn correction_size(predicted: &[f64; 4], corrected: &[f64; 4]) -> f64 {
    predicted
        .iter()
        .zip(corrected)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max)
}

/// Corrects an orbit at parameter value `value`.
fn solve_at(parameter: &Parameter, u: [f64; 4], value: f64, shooting: &ShootingConfig) -> Result<OrbitRecord> {
    let params = parameter.params_at(value)?;
    let rec = find_polar_orbit(&guess_from(u, params), shooting)?;
    if rec.residual > shooting.tolerance {
        return Err(Error::Shooting {
            iterations: rec.iterations,
            residual: rec.residual,
        });
    }
    Ok(rec)
}

fn run(parameter: Parameter, guess: &OrbitGuess, start: f64, end: f64, config: &StepConfig) -> Result<ContinuationRun> {
    if !(config.min > 0.0 && config.initial >= config.min && config.max >= config.initial) {
        return Err(Error::Parameter("step sizes must satisfy 0 < min <= initial <= max".into()));
    }
    let first = solve_at(&parameter, unknowns_of_guess(guess), start, &config.shooting)?;

    let v_end = parameter.to_step(end);
    let mut v = parameter.to_step(start);
    let dir = if v_end >= v { 1.0 } else { -1.0 };
    let mut history = vec![(v, unknowns(&first))];
    let mut out = ContinuationRun {
        parameter,
        values: vec![start],
        path: vec![first],
        events: Vec::new(),
        step_history: Vec::new(),
        truncated: None,
    };
    let mut step = config.initial;
    let mut angles = multiplier_angles(&out.path[0]);

    while dir * (v_end - v) > 0.0 {
        if out.path.len() >= config.max_records {
            out.truncated = Some(Truncation {
                at: parameter.from_step(v),
                reason: format!("record limit {} reached", config.max_records),
            });
            break;
        }
        let remaining = (v_end - v).abs();
        let last_step = remaining <= step;
        let v_next = if last_step { v_end } else { v + dir * step };
        let value = if last_step { end } else { parameter.from_step(v_next) };
        let predicted = predict(&history, v_next);

        let attempt = solve_at(&parameter, predicted, value, &config.shooting).and_then(|rec| {
            let size = correction_size(&predicted, &unknowns(&rec));
            if size > config.max_correction {
                return Err(Error::Shooting {
                    iterations: rec.iterations,
                    residual: size,
                });
            }
            let next_angles = multiplier_angles(&rec);
            if let Some(limit) = config.max_rotation {
                let turn = rotation_between(&angles, &next_angles);
                if turn > limit && step > config.min {
                    return Err(Error::Parameter(format!("multipliers turned by {turn:.3} in one step")));
                }
            }
            Ok((rec, next_angles))
        });

        match attempt {
            Ok((rec, next_angles)) => {
                angles = next_angles;
                out.step_history.push(v_next - v);
                v = v_next;
                history.push((v, unknowns(&rec)));
                if rec.iterations <= config.fast_iterations {
                    step = (step * config.grow).min(config.max);
                }
                out.values.push(value);
                out.path.push(rec);
            }
            Err(err) => {
                step *= config.shrink;
                if step < config.min {
                    let at = parameter.from_step(v);
                    match round_fold(&parameter, &history, dir, config) {
                        Some(fold) => {
                            for (value, rec) in fold.before_turn {
                                out.step_history.push(parameter.to_step(value) - v);
                                v = parameter.to_step(value);
                                out.values.push(value);
                                out.path.push(rec);
                            }
                            out.truncated = Some(Truncation {
                                at: fold.event.midpoint(),
                                reason: format!("the family turns back at {:.9}", fold.event.midpoint()),
                            });
                            out.events.push(fold.event);
                        }
                        None => {
                            let delta = out.path.last().map_or(f64::NAN, |r| r.delta);
                            out.truncated = Some(Truncation {
                                at,
                                reason: format!("step floor reached ({err}); last shooting determinant {delta:.3e}"),
                            });
                        }
                    }
                    break;
                }
            }
        }
    }
    Ok(out)
}

struct Fold {
    before_turn: Vec<(f64, OrbitRecord)>,
    event: BifurcationEvent,
}

/// Pseudo-arclength steps from the last two path points, in the unknowns
/// `(half period, Q_2, P_1)` and the stepping coordinate, until the parameter
/// turns back. `None` when no turn is found.
fn round_fold(parameter: &Parameter, history: &[(f64, [f64; 4])], dir: f64, config: &StepConfig) -> Option<Fold> {
    type V4 = nalgebra::Vector4<f64>;
    let [.., (v0, u0), (v1, u1)] = history else { return None };
    let point = |v: f64, u: &[f64; 4]| V4::new(u[0], u[1], u[2], v);
    let mut z_prev = point(*v0, u0);
    let mut z = point(*v1, u1);
    let mut q3 = u1[3];
    let mut ds = (z - z_prev).norm().clamp(1e-7, 1e-2);
    let mut before_turn = Vec::new();
    let integrator = &config.shooting.integrator;

    let residual_at = |z: &V4, q3: f64| -> Result<(nalgebra::Vector3<f64>, nalgebra::Matrix3<f64>, f64)> {
        let params = parameter.params_at(parameter.from_step(z[3]))?;
        let r = shooting_residual(params, z[0], z[1], z[2], q3, integrator)?;
        Ok((r.residual, r.jacobian, r.q3))
    };

    for _ in 0..60 {
        let tangent = (z - z_prev).normalize();
        let predicted = z + tangent * ds;
        let mut trial = predicted;
        let mut trial_q3 = q3;
        let mut converged = false;
        for _ in 0..12 {
            let Ok((r, j, q)) = residual_at(&trial, trial_q3) else { break };
            trial_q3 = q;
            if r.amax() <= config.shooting.target {
                converged = true;
                break;
            }
            let eps = 1e-7 * (1.0 + trial[3].abs());
            let mut shifted = trial;
            shifted[3] += eps;
            let Ok((r2, _, _)) = residual_at(&shifted, trial_q3) else { break };
            let dr = (r2 - r) / eps;
            let mut jac = nalgebra::Matrix4::zeros();
            jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
            jac.fixed_view_mut::<3, 1>(0, 3).copy_from(&dr);
            jac.set_row(3, &tangent.transpose());
            let rhs = V4::new(-r[0], -r[1], -r[2], -tangent.dot(&(trial - predicted)));
            let Some(step) = jac.lu().solve(&rhs) else { break };
            trial += step;
        }
        if !converged {
            ds *= 0.5;
            if ds < 1e-12 {
                return None;
            }
            continue;
        }
        if dir * (trial[3] - z[3]) < 0.0 {
            // fold between the last two points; locate the turning value from
            // a parabola through the last three points in arclength
            let (a, b, c) = (z_prev[3], z[3], trial[3]);
            let (s1, s2) = ((z - z_prev).norm(), (trial - z).norm());
            let vertex = parabola_extremum([-s1, 0.0, s2], [a, b, c]).unwrap_or(b);
            let tip = if dir * (vertex - b) >= 0.0 { vertex } else { b };
            let (lo, hi) = if b <= tip { (b, tip) } else { (tip, b) };
            let (lo, hi) = (parameter.from_step(lo), parameter.from_step(hi));
            let delta = before_turn.last().map_or(f64::NAN, |(_, r): &(f64, OrbitRecord)| r.delta);
            return Some(Fold {
                before_turn,
                event: BifurcationEvent {
                    kind: EventKind::Fold,
                    bracket: [lo.min(hi), lo.max(hi)],
                    test_values: [delta, f64::NAN],
                    resolved: (hi - lo).abs() <= 1e-5,
                },
            });
        }
        let value = parameter.from_step(trial[3]);
        let guess = [trial[0], trial[1], trial[2], trial_q3];
        let rec = solve_at(parameter, guess, value, &config.shooting).ok()?;
        before_turn.push((value, rec));
        z_prev = z;
        z = trial;
        q3 = trial_q3;
        ds = (ds * 1.3).min(1e-2);
    }
    None
}

/// Extreme value of the parabola through three points.
fn parabola_extremum(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if curvature == 0.0 || !curvature.is_finite() {
        return None;
    }
    // y = y1 + slope (x - x1) + curvature (x - x0)(x - x1)
    let xe = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature);
    let ye = y[1] + d1 * (xe - x[1]) + curvature * (xe - x[0]) * (xe - x[1]);
    Some(ye)
}

fn unknowns_of_guess(g: &OrbitGuess) -> [f64; 4] {
    [g.half_period_s, g.section.q2, g.section.p1, g.section.q3]
}

/// Settings for locating events along a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct EventConfig {
    /// Requested bracket width in the parameter.
    pub tolerance: f64,
    /// A local minimum of `|test function|` below this value counts as a
    /// touching event when no sign change brackets it.
    pub touch_threshold: f64,
    pub max_bisections: usize,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            touch_threshold: 1e-10,
            max_bisections: 80,
        }
    }
}


fn test_value(kind: EventKind, t: &TestFunctions) -> f64 {
    match kind {
        EventKind::Degeneracy => t.degeneracy,
        EventKind::PeriodDoubling => t.period_doubling,
        EventKind::KreinCollision => t.krein,
        EventKind::Fold => f64::NAN,
    }
}

/// Locates bifurcations along `run`. Sign changes of the degeneracy and
/// period-doubling test functions, and of the Krein discriminant between the
/// elliptic and complex hyperbolic regimes, are bisected to the requested
/// width. Places where a test function touches zero without changing sign are
/// located by golden-section search. Fold events recorded by the run are kept.
pub fn detect_events<F>(run: &ContinuationRun, stability: F, config: &StepConfig, events: &EventConfig) -> Vec<BifurcationEvent>
where
    F: Fn(&OrbitRecord) -> Result<MonodromySpectrum>,
{
    let spectra: Vec<Option<MonodromySpectrum>> = run.path.iter().map(|r| stability(r).ok()).collect();
    let locator = Locator {
        run,
        stability: &stability,
        config,
        events,
    };
    let mut found = Vec::new();

    for i in 1..run.path.len() {
        let (Some(a), Some(b)) = (&spectra[i - 1], &spectra[i]) else { continue };
        let (ta, tb) = (a.tests(), b.tests());
        for kind in [EventKind::PeriodDoubling, EventKind::Degeneracy, EventKind::KreinCollision] {
            let (fa, fb) = (test_value(kind, &ta), test_value(kind, &tb));
            if fa.signum() == fb.signum() {
                continue;
            }
            let (event, classes) = locator.bisect(kind, i, (fa, a.class), (fb, b.class));
            // the discriminant also changes sign where two real pairs meet, and
            // flickers around zero when the pairs coincide identically; only a
            // departure from the unit circle is a Krein collision
            if kind == EventKind::KreinCollision
                && !(classes.contains(&StabilityClass::EllipticElliptic)
                    && classes.contains(&StabilityClass::ComplexHyperbolic))
            {
                continue;
            }
            found.push(event);
        }
    }

    // touching zeros: interior local minima of |f| with no sign change nearby
    for kind in [EventKind::Degeneracy, EventKind::PeriodDoubling] {
        let f: Vec<Option<f64>> = spectra
            .iter()
            .map(|s| s.as_ref().map(|s| test_value(kind, &s.tests())))
            .collect();
        for i in 1..f.len().saturating_sub(1) {
            let (Some(l), Some(m), Some(r)) = (f[i - 1], f[i], f[i + 1]) else { continue };
            let same_sign = l.signum() == m.signum() && m.signum() == r.signum();
            if same_sign && m.abs() <= l.abs() && m.abs() <= r.abs() {
                if let Some(ev) = locator.touch(kind, i) {
                    found.push(ev);
                }
            }
        }
    }

    found.extend(run.events.iter().filter(|e| e.kind == EventKind::Fold).cloned());
    found.sort_by(|a, b| a.midpoint().total_cmp(&b.midpoint()));
    found.dedup_by(|b, a| a.kind == b.kind && (a.midpoint() - b.midpoint()).abs() <= events.tolerance);
    found
}

struct Locator<'a, F> {
    run: &'a ContinuationRun,
    stability: &'a F,
    config: &'a StepConfig,
    events: &'a EventConfig,
}

impl<F> Locator<'_, F>
where
    F: Fn(&OrbitRecord) -> Result<MonodromySpectrum>,
{
    /// Test functions at parameter `value`, starting Newton from the path
    /// orbit with index `near`.
    fn tests_at(&self, value: f64, near: usize) -> Option<(TestFunctions, StabilityClass)> {
        let rec = &self.run.path[near];
        let rec = solve_at(&self.run.parameter, unknowns(rec), value, &self.config.shooting).ok()?;
        let sp = (self.stability)(&rec).ok()?;
        Some((sp.tests(), sp.class))
    }

    /// Bisects a sign change between path orbits `i - 1` and `i`, returning
    /// the event and the classes at the two ends of the final bracket.
    fn bisect(
        &self,
        kind: EventKind,
        i: usize,
        (fa, ca): (f64, StabilityClass),
        (fb, cb): (f64, StabilityClass),
    ) -> (BifurcationEvent, [StabilityClass; 2]) {
        let values = &self.run.values;
        let (mut lo, mut hi) = (values[i - 1], values[i]);
        let (mut f_lo, mut f_hi) = (fa, fb);
        let (mut c_lo, mut c_hi) = (ca, cb);
        let mut resolved = true;
        for _ in 0..self.events.max_bisections {
            if (hi - lo).abs() <= self.events.tolerance {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let near = if (mid - values[i - 1]).abs() < (mid - values[i]).abs() { i - 1 } else { i };
            match self.tests_at(mid, near) {
                Some((t, class)) => {
                    let fm = test_value(kind, &t);
                    if fm.signum() == f_lo.signum() {
                        lo = mid;
                        f_lo = fm;
                        c_lo = class;
                    } else {
                        hi = mid;
                        f_hi = fm;
                        c_hi = class;
                    }
                }
                None => {
                    resolved = false;
                    break;
                }
            }
        }
        resolved &= (hi - lo).abs() <= self.events.tolerance;
        let (a, b, fa, fb) = if lo <= hi { (lo, hi, f_lo, f_hi) } else { (hi, lo, f_hi, f_lo) };
        let event = BifurcationEvent {
            kind,
            bracket: [a, b],
            test_values: [fa, fb],
            resolved,
        };
        (event, [c_lo, c_hi])
    }

    /// Golden-section search for a minimum of `|f|` between the neighbours of
    /// path orbit `i`; accepted when the minimum is below the touch threshold.
    fn touch(&self, kind: EventKind, i: usize) -> Option<BifurcationEvent> {
        let values = &self.run.values;
        let eval = |x: f64| {
            let near = if (x - values[i]).abs() <= 0.5 * (values[i + 1] - values[i - 1]).abs() { i } else { i - 1 };
            self.tests_at(x, near).map(|(t, _)| test_value(kind, &t).abs())
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (values[i - 1], values[i + 1]);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (eval(c)?, eval(d)?);
        for _ in 0..self.events.max_bisections {
            if (b - a).abs() <= self.events.tolerance {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d)?;
            }
        }
        let best = fc.min(fd);
        if best > self.events.touch_threshold {
            return None;
        }
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Some(BifurcationEvent {
            kind,
            bracket: [lo, hi],
            test_values: [fc, fd],
            resolved: (b - a).abs() <= self.events.tolerance,
        })
    }
}

/// Orbits with their spectra, skipping those whose spectrum cannot be reduced.
pub fn spectra<F>(run: &ContinuationRun, stability: F) -> Vec<Option<MonodromySpectrum>>
where
    F: Fn(&OrbitRecord) -> Result<MonodromySpectrum>,
{
    run.path.iter().map(stability).map(Result::ok).collect()
}

/// Magnified energy at which the homotopy in the mass ratio is known to run
/// through without folds; used when the direct homotopy turns back.
const ANCHOR_ENERGY: f64 = -2.0;

/// Orbit of the family through the axis collision orbit at mass ratio `mu` and
/// magnified energy `h`. Reached by homotopy in the mass ratio at fixed `h`
/// from the nearer collision limit (mass ratio 0 or 1); if that path folds,
/// the homotopy runs at a low anchor energy and the family is then continued
/// in energy up to `h`.
pub fn orbit_at(mu: f64, h: f64, config: &StepConfig) -> Result<OrbitRecord> {
    let direct = homotopy(mu, h, config);
    if !matches!(direct, Err(Error::Continuation(_))) || h == ANCHOR_ENERGY {
        return direct;
    }
    let anchor = homotopy(mu, ANCHOR_ENERGY, config)?;
    let run = continue_in_h(mu, FrameKind::HillRescaled, &anchor.guess(), ANCHOR_ENERGY, h, config)?;
    finished(run, || format!("continuation in energy from {ANCHOR_ENERGY}"))
}

fn homotopy(mu: f64, h: f64, config: &StepConfig) -> Result<OrbitRecord> {
    let seed_mu = if mu <= 0.5 { 0.0 } else { 1.0 };
    let seed = collision_seed(h, seed_mu, &config.shooting.integrator)?;
    let run = continue_in_mu(h, FrameKind::HillRescaled, &seed, seed_mu, mu, config)?;
    finished(run, || format!("homotopy from mass ratio {seed_mu}"))
}

/// Last orbit of a run that reached its end value.
fn finished(run: ContinuationRun, what: impl FnOnce() -> String) -> Result<OrbitRecord> {
    match run.truncated {
        None => Ok(run.path.into_iter().last().expect("a run holds at least its first orbit")),
        Some(t) => Err(Error::Continuation(format!("{} stopped at {}: {}", what(), t.at, t.reason))),
    }
}

/// Family in energy at mass ratio `mu`, energies measured in `convention`,
/// starting from [`orbit_at`].
pub fn family(mu: f64, convention: FrameKind, h_start: f64, h_end: f64, config: &StepConfig) -> Result<ContinuationRun> {
    let params = Parameter::Energy { mu, convention }.params_at(h_start)?;
    let first = orbit_at(mu, params.h, config)?;
    continue_in_h(mu, convention, &first.guess(), h_start, h_end, config)
}

/// Family in mass ratio at fixed moon-centred energy `h_m`, starting from
/// [`orbit_at`] at `mu_start`.
pub fn bridge(h_m: f64, mu_start: f64, mu_end: f64, config: &StepConfig) -> Result<ContinuationRun> {
    let parameter = Parameter::MassRatio {
        energy: h_m,
        convention: FrameKind::MoonCentered,
    };
    let first = orbit_at(mu_start, parameter.params_at(mu_start)?.h, config)?;
    continue_in_mu(h_m, FrameKind::MoonCentered, &first.guess(), mu_start, mu_end, config)
}
