//! Variable-order, variable-step Taylor series integration of autonomous fields
//! given as compiled [`Program`]s, with dense output and section location.

use crate::error::{Error, Result};
use crate::expr::{Program, TaylorJet};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub order_min: usize,
    pub order_max: usize,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            order_min: 20,
            order_max: 30,
            max_step: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tol_ok = self.abs_tol > 0.0 && self.rel_tol > 0.0;
        let order_ok = 4 <= self.order_min && self.order_min <= self.order_max && self.order_max <= 40;
        if !tol_ok || !order_ok || !(self.max_step > 0.0) || self.max_steps == 0 {
            return Err(Error::Parameter(format!("bad integrator configuration {self:?}")));
        }
        Ok(())
    }

    /// Taylor order used for the configured tolerance.
    pub fn order(&self) -> usize {
        let eps = self.abs_tol.min(self.rel_tol);
        let p = (-0.5 * eps.ln() + 1.0).ceil() as usize;
        p.clamp(self.order_min, self.order_max)
    }
}

/// One accepted step: the Taylor polynomial of every component about `t0`.
#[derive(Clone, Debug)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    order: usize,
    coefs: Vec<f64>,
}

impl Segment {
    fn width(&self) -> usize {
        self.order + 1
    }

    pub fn dim(&self) -> usize {
        self.coefs.len() / self.width()
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn component(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.coefs[i * w..(i + 1) * w]
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let tau = t - self.t0;
        for (i, o) in out.iter_mut().enumerate() {
            *o = horner(self.component(i), tau);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    /// Time derivative of the dense output.
    pub fn derivative(&self, t: f64) -> Vec<f64> {
        let tau = t - self.t0;
        (0..self.dim())
            .map(|i| horner_derivative(self.component(i), tau))
            .collect()
    }
}

fn horner(c: &[f64], tau: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * tau + a)
}

fn horner_derivative(c: &[f64], tau: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &a)| acc * tau + k as f64 * a)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Piecewise-polynomial dense output of an integration.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t_start: f64,
    pub initial: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(self.t_start, Segment::t1)
    }

    pub fn final_state(&self) -> Vec<f64> {
        match self.segments.last() {
            Some(seg) => seg.eval(seg.t1()),
            None => self.initial.clone(),
        }
    }

    fn segment_at(&self, t: f64) -> Option<&Segment> {
        if self.segments.is_empty() {
            return None;
        }
        let forward = self.segments[0].h >= 0.0;
        let idx = self.segments.partition_point(|s| {
            if forward {
                s.t1() < t
            } else {
                s.t1() > t
            }
        });
        Some(&self.segments[idx.min(self.segments.len() - 1)])
    }

    /// State at time `t`; times outside the covered span are extrapolated from the
    /// nearest segment.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self.segment_at(t) {
            Some(seg) => seg.eval(t),
            None => self.initial.clone(),
        }
    }

    pub fn derivative(&self, t: f64) -> Option<Vec<f64>> {
        self.segment_at(t).map(|seg| seg.derivative(t))
    }

    /// `n` samples equally spaced over the covered span, endpoints included.
    pub fn sample_uniform(&self, n: usize) -> Vec<TrajectorySample> {
        let (a, b) = (self.t_start, self.t_end());
        match n {
            0 => Vec::new(),
            1 => vec![TrajectorySample {
                t: a,
                state: self.initial.clone(),
            }],
            _ => (0..n)
                .map(|k| {
                    let t = a + (b - a) * k as f64 / (n - 1) as f64;
                    let state = if k == 0 { self.initial.clone() } else { self.eval(t) };
                    TrajectorySample { t, state }
                })
                .collect(),
        }
    }
}

/// Linear section `sum c_i x_i = offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    terms: Vec<(usize, f64)>,
    offset: f64,
}

impl Section {
    pub fn new(terms: Vec<(usize, f64)>, offset: f64) -> Self {
        Self { terms, offset }
    }

    /// The hyperplane `x_index = value`.
    pub fn coordinate(index: usize, value: f64) -> Self {
        Self::new(vec![(index, 1.0)], value)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() - self.offset
    }

    fn polynomial(&self, seg: &Segment, out: &mut Vec<f64>) {
        out.clear();
        out.resize(seg.width(), 0.0);
        for &(i, c) in &self.terms {
            for (o, a) in out.iter_mut().zip(seg.component(i)) {
                *o += c * a;
            }
        }
        out[0] -= self.offset;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
    Either,
}

impl Direction {
    fn admits(self, from: f64, to: f64) -> bool {
        match self {
            Direction::Increasing => from < 0.0 && to >= 0.0,
            Direction::Decreasing => from > 0.0 && to <= 0.0,
            Direction::Either => (from < 0.0 && to >= 0.0) || (from > 0.0 && to <= 0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Crossing {
    pub t: f64,
    pub state: Vec<f64>,
    pub steps: usize,
}

/// Integration failure together with the trajectory computed up to that point.
#[derive(Clone, Debug)]
pub struct IntegrationFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl std::fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (partial trajectory to t = {})", self.error, self.partial.t_end())
    }
}

impl std::error::Error for IntegrationFailure {}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        f.error
    }
}

/// Section crossings closer than this to the start of a search are treated as
/// the departure point itself.
const SECTION_TOL: f64 = 1e-12;
const SUBSAMPLES: usize = 16;

/// Reusable Taylor integrator. Holds scratch buffers only; one per thread.
#[derive(Clone, Debug)]
pub struct TaylorIntegrator {
    config: IntegratorConfig,
    jet: TaylorJet,
    gpoly: Vec<f64>,
}

enum Stop<'a> {
    At(f64),
    Section {
        section: &'a Section,
        direction: Direction,
        t_limit: f64,
    },
}

impl TaylorIntegrator {
    pub fn new(config: IntegratorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            jet: TaylorJet::default(),
            gpoly: Vec::new(),
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    /// Final state of `x' = field(x)` at `t1`.
    pub fn integrate(&mut self, field: &Program, x0: &[f64], t0: f64, t1: f64) -> Result<Vec<f64>> {
        let run = self.run(field, x0, t0, Stop::At(t1), false).map_err(|f| f.error)?;
        Ok(run.final_state)
    }

    /// Like [`integrate`](Self::integrate) but keeps every step for dense output.
    pub fn integrate_dense(
        &mut self,
        field: &Program,
        x0: &[f64],
        t0: f64,
        t1: f64,
    ) -> std::result::Result<Trajectory, IntegrationFailure> {
        self.run(field, x0, t0, Stop::At(t1), true).map(|r| r.trajectory)
    }

    /// Integrates until the first crossing of `section` in the requested direction.
    /// A start point lying on the section is left in the direction of the flow
    /// before crossings are counted.
    pub fn integrate_to_section(
        &mut self,
        field: &Program,
        x0: &[f64],
        t0: f64,
        section: &Section,
        direction: Direction,
        t_limit: f64,
    ) -> Result<Crossing> {
        let stop = Stop::Section {
            section,
            direction,
            t_limit,
        };
        let run = self.run(field, x0, t0, stop, false).map_err(|f| f.error)?;
        run.crossing.ok_or(Error::NoCrossing {
            steps: self.config.max_steps,
        })
    }

    /// Dense version of [`integrate_to_section`](Self::integrate_to_section); the
    /// returned trajectory ends at the crossing.
    pub fn integrate_to_section_dense(
        &mut self,
        field: &Program,
        x0: &[f64],
        t0: f64,
        section: &Section,
        direction: Direction,
        t_limit: f64,
    ) -> Result<(Trajectory, Crossing)> {
        let stop = Stop::Section {
            section,
            direction,
            t_limit,
        };
        let run = self.run(field, x0, t0, stop, true).map_err(|f| f.error)?;
        let (traj, crossing) = (run.trajectory, run.crossing);
        let crossing = crossing.ok_or(Error::NoCrossing {
            steps: self.config.max_steps,
        })?;
        Ok((traj, crossing))
    }

    fn step_size(&self, dim: usize, order: usize, x: &[f64]) -> f64 {
        let norm_inf = |k: usize| {
            (0..dim)
                .map(|i| self.jet.component(i)[k].abs())
                .fold(0.0, f64::max)
        };
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = self.config.abs_tol.max(self.config.rel_tol * xn);
        let tail = |k: usize| {
            let c = norm_inf(k);
            if c > 0.0 {
                (eps / c).powf(1.0 / k as f64)
            } else {
                f64::INFINITY
            }
        };
        0.9 * tail(order - 1).min(tail(order))
    }

    fn run(
        &mut self,
        field: &Program,
        x0: &[f64],
        t0: f64,
        stop: Stop<'_>,
        keep: bool,
    ) -> std::result::Result<Run, IntegrationFailure> {
        let dim = x0.len();
        let order = self.config.order();
        let mut traj = Trajectory {
            t_start: t0,
            initial: x0.to_vec(),
            segments: Vec::new(),
        };
        let fail = |traj: Trajectory, t: f64, reason: String| IntegrationFailure {
            error: Error::Integration { t, reason },
            partial: traj,
        };
        if field.n_inputs() != dim || field.n_outputs() != dim {
            return Err(fail(traj, t0, format!("field dimension does not match state of length {dim}")));
        }

        let t_end = match stop {
            Stop::At(t1) => t1,
            Stop::Section { t_limit, .. } => t_limit,
        };
        let sign = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut x = x0.to_vec();
        let mut memory = SignMemory {
            last: None,
            departing: true,
        };
        if let Stop::Section { section, .. } = stop {
            let g0 = section.eval(x0);
            if g0.abs() > SECTION_TOL {
                memory = SignMemory {
                    last: Some(g0),
                    departing: false,
                };
            }
        }

        for steps in 0..self.config.max_steps {
            let remaining = (t_end - t) * sign;
            if remaining <= 0.0 {
                break;
            }
            field.taylor_jet(&x, order, &mut self.jet);
            if self.jet.coefficients().iter().any(|c| !c.is_finite()) {
                return Err(fail(traj, t, "non-finite Taylor coefficients".into()));
            }
            let mut h = self.step_size(dim, order, &x).min(self.config.max_step);
            if !(h > 1e-300) {
                return Err(fail(traj, t, format!("step size underflow ({h:e})")));
            }
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let seg = Segment {
                t0: t,
                h: sign * h,
                order,
                coefs: self.jet.coefficients().to_vec(),
            };

            if let Stop::Section { section, direction, .. } = stop {
                if let Some(tau) = self.find_crossing(&seg, section, direction, &mut memory) {
                    let tc = t + tau;
                    let state = seg.eval(tc);
                    if keep {
                        traj.segments.push(Segment { h: tau, ..seg });
                    }
                    return Ok(Run {
                        trajectory: traj,
                        final_state: state.clone(),
                        crossing: Some(Crossing { t: tc, state, steps: steps + 1 }),
                    });
                }
            }

            x = seg.eval(seg.t1());
            t = if last { t_end } else { seg.t1() };
            if keep {
                traj.segments.push(seg);
            }
        }

        let done = (t_end - t) * sign <= 0.0;
        match done {
            true => Ok(Run {
                trajectory: traj,
                final_state: x,
                crossing: None,
            }),
            false => {
                let n = self.config.max_steps;
                Err(fail(traj, t, format!("maximum number of steps ({n}) exceeded")))
            }
        }
    }

    /// Offset within the segment of the first admissible root of the section
    /// polynomial, updating the running sign memory.
    fn find_crossing(
        &mut self,
        seg: &Segment,
        section: &Section,
        direction: Direction,
        memory: &mut SignMemory,
    ) -> Option<f64> {
        section.polynomial(seg, &mut self.gpoly);
        let g = &self.gpoly;
        if memory.last.is_none() {
            // the departure sign is that of the first non-vanishing derivative
            if let Some(c) = g[1..].iter().find(|c| **c != 0.0) {
                memory.last = Some(c.signum() * f64::MIN_POSITIVE);
            }
        }
        let mut tau_a = 0.0;
        for j in 1..=SUBSAMPLES {
            let tau_b = seg.h * j as f64 / SUBSAMPLES as f64;
            let g_b = horner(g, tau_b);
            if let Some(g_a) = memory.last {
                if !memory.departing && direction.admits(g_a, g_b) {
                    return Some(refine_root(g, tau_a, tau_b));
                }
            }
            if memory.departing {
                if g_b.abs() > SECTION_TOL {
                    memory.departing = false;
                    memory.last = Some(g_b);
                }
            } else if g_b != 0.0 {
                memory.last = Some(g_b);
            }
            tau_a = tau_b;
        }
        None
    }
}

struct Run {
    trajectory: Trajectory,
    final_state: Vec<f64>,
    crossing: Option<Crossing>,
}

/// Sign of the section function at the last sample, and whether the search is
/// still leaving a start point that lies on the section.
struct SignMemory {
    last: Option<f64>,
    departing: bool,
}

/// Root of the polynomial `g` in the bracket `[a, b]` (either order) by Newton
/// steps safeguarded with bisection.
fn refine_root(g: &[f64], a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let mut g_lo = horner(g, lo);
    if g_lo == 0.0 {
        return lo;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = horner(g, x);
        if gx == 0.0 {
            return x;
        }
        if gx.signum() == g_lo.signum() {
            lo = x;
            g_lo = gx;
        } else {
            hi = x;
        }
        let dg = horner_derivative(g, x);
        let newton = x - gx / dg;
        let inside = (newton - lo) * (newton - hi) < 0.0;
        let next = if dg != 0.0 && inside { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
    }
    x
}

/// Explicit Runge-Kutta 8(5,3) reference solution of the same field, for
/// cross-checking the Taylor integrator.
pub fn integrate_reference(
    field: &Program,
    x0: &[f64],
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    use ode_solvers::{DVector, Dop853, OutputType};

    struct Adapter<'a>(&'a Program, std::cell::RefCell<Vec<f64>>);

    impl ode_solvers::System<f64, DVector<f64>> for Adapter<'_> {
        fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
            let mut scratch = self.1.borrow_mut();
            self.0.eval_with(y.as_slice(), dy.as_mut_slice(), &mut scratch);
        }
    }

    if t1 == t0 {
        return Ok(x0.to_vec());
    }
    let y0 = DVector::from_column_slice(x0);
    let adapter = Adapter(field, std::cell::RefCell::new(Vec::new()));
    let mut stepper = Dop853::new(adapter, t0, t1, t1 - t0, y0, tol, tol);
    stepper.set_output(OutputType::Sparse);
    stepper.integrate().map_err(|e| Error::Integration {
        t: t0,
        reason: e.to_string(),
    })?;
    let last = stepper.y_out().last().ok_or(Error::Integration {
        t: t0,
        reason: "reference integrator produced no output".into(),
    })?;
    Ok(last.iter().copied().collect())
}
