use lunar_polar::continuation::{self, ContinuationRun, EventConfig, Parameter, StepConfig};
use lunar_polar::dynamics::{hill_radius_to_km, FrameKind, EARTH_MOON_DISTANCE_KM};
use lunar_polar::error::Error;
use lunar_polar::orbit::{dense_orbit, OrbitRecord};
use lunar_polar::stability::{monodromy, reduce_spectrum, MonodromySpectrum};
use serde::Serialize;

use crate::args::{BifurcationArgs, BridgeArgs, FamilyArgs, MoonEarthArgs, OrbitArgs};
use crate::output::{num, write_json, Table};
use crate::CliError;

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Complete,
    Truncated(String),
}

impl Status {
    fn of(run: &ContinuationRun) -> Self {
        match &run.truncated {
            None => Status::Complete,
            Some(t) => Status::Truncated(format!("stopped at {}: {}", t.at, t.reason)),
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Complete => f.write_str("complete"),
            Status::Truncated(why) => write!(f, "truncated: {why}"),
        }
    }
}

pub const FAMILY_COLUMNS: [&str; 20] = [
    "h",
    "Q2",
    "P1",
    "Q3",
    "half_period_s",
    "period_t",
    "amplitude",
    "s1",
    "s2",
    "re_lambda_1",
    "re_lambda_2",
    "re_lambda_3",
    "re_lambda_4",
    "im_lambda_1",
    "im_lambda_2",
    "im_lambda_3",
    "im_lambda_4",
    "class",
    "delta_det",
    "residual",
];

fn spectrum(rec: &OrbitRecord) -> lunar_polar::error::Result<MonodromySpectrum> {
    reduce_spectrum(&monodromy(rec))
}

fn family_row(h: f64, rec: &OrbitRecord) -> Vec<String> {
    let sec = &rec.section;
    let mut row = vec![
        num(h),
        num(sec.q2),
        num(sec.p1),
        num(sec.q3),
        num(rec.half_period_s),
        num(rec.period_t),
        num(rec.amplitude),
    ];
    match spectrum(rec) {
        Ok(sp) => {
            row.extend([num(sp.s1), num(sp.s2)]);
            row.extend(sp.eigenvalues.iter().map(|z| num(z.re)));
            row.extend(sp.eigenvalues.iter().map(|z| num(z.im)));
            row.push(sp.class.label().to_string());
        }
        Err(_) => {
            row.extend(std::iter::repeat_n(num(f64::NAN), 10));
            row.push("unreduced".to_string());
        }
    }
    row.extend([num(rec.delta), num(rec.residual)]);
    row
}

fn energy_label(kind: FrameKind) -> &'static str {
    match kind {
        FrameKind::HillRescaled => "hill",
        FrameKind::MoonCentered => "moon-centered",
        FrameKind::Barycentric => "barycentric",
    }
}

pub fn family(args: &FamilyArgs, step: &StepConfig) -> Result<Status, CliError> {
    let energy = FrameKind::from(args.energy);
    let run = continuation::family(args.mu, energy, args.h_min, args.h_max, step)?;
    let mut table = Table::new(&FAMILY_COLUMNS);
    table.comment("mu", num(args.mu));
    table.comment("energy", energy_label(energy));
    for (h, rec) in run.values.iter().zip(&run.path) {
        table.push(family_row(*h, rec));
    }
    table.write(&args.out)?;
    Ok(Status::of(&run))
}

pub fn orbit(args: &OrbitArgs, step: &StepConfig) -> Result<Status, CliError> {
    if args.samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let energy = FrameKind::from(args.energy);
    let hill_h = Parameter::Energy { mu: args.mu, convention: energy }.params_at(args.h)?.h;
    let rec = continuation::orbit_at(args.mu, hill_h, step)?;
    let samples = dense_orbit(&rec, args.samples, args.frame.into(), &step.shooting.integrator)?;

    let mut table = Table::new(&["s", "t", "q1", "q2", "q3", "p1", "p2", "p3"]);
    table.comment("mu", num(args.mu));
    table.comment("h", num(args.h));
    table.comment("energy", energy_label(energy));
    table.comment("frame", energy_label(args.frame.into()));
    table.comment("periapsis", num(rec.periapsis));
    table.comment("apoapsis", num(rec.apoapsis));
    if args.mu > 0.0 {
        let km = |r| hill_radius_to_km(r, args.mu, EARTH_MOON_DISTANCE_KM);
        table.comment("periapsis_km", num(km(rec.periapsis)));
        table.comment("apoapsis_km", num(km(rec.apoapsis)));
    }
    table.comment("period_t", num(rec.period_t));
    table.comment("residual", num(rec.residual));
    for s in &samples {
        let mut row = vec![num(s.s), num(s.t)];
        row.extend(s.state.q.iter().chain(&s.state.p).map(|v| num(*v)));
        table.push(row);
    }
    table.write(&args.out)?;
    Ok(Status::Complete)
}

pub fn bridge(args: &BridgeArgs, step: &StepConfig) -> Result<Status, CliError> {
    let run = continuation::bridge(args.h_unrescaled, args.mu_start, args.mu_end, step)?;
    let mut header = vec!["mu"];
    header.extend(FAMILY_COLUMNS);
    let mut table = Table::new(&header);
    table.comment("energy", "moon-centered");
    for (mu, rec) in run.values.iter().zip(&run.path) {
        let mut row = vec![num(*mu)];
        row.extend(family_row(args.h_unrescaled, rec));
        table.push(row);
    }
    table.write(&args.out)?;
    Ok(Status::of(&run))
}

#[derive(Serialize)]
struct EventRecord {
    kind: continuation::EventKind,
    bracket: [f64; 2],
    midpoint: f64,
    test_values: [f64; 2],
    resolved: bool,
}

pub fn bifurcations(args: &BifurcationArgs, step: &StepConfig) -> Result<Status, CliError> {
    if !(args.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let run = continuation::family(args.mu, args.energy.into(), args.h_min, args.h_max, step)?;
    let config = EventConfig {
        tolerance: args.tol,
        ..EventConfig::default()
    };
    let events: Vec<EventRecord> = continuation::detect_events(&run, spectrum, step, &config)
        .into_iter()
        .map(|e| EventRecord {
            kind: e.kind,
            bracket: e.bracket,
            midpoint: e.midpoint(),
            test_values: e.test_values,
            resolved: e.resolved,
        })
        .collect();
    write_json(&args.out, &events)?;
    Ok(Status::of(&run))
}

/// Thresholds whose crossing is flagged in the Moon-Earth table.
fn crossings(prev: f64, cur: f64, thresholds: &[(f64, &str)]) -> String {
    thresholds
        .iter()
        .filter(|(r, _)| (prev < *r) != (cur < *r))
        .map(|(_, name)| *name)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn moon_earth(args: &MoonEarthArgs, step: &StepConfig) -> Result<Status, CliError> {
    if !(args.distance_km > 0.0 && args.moon_radius_km > 0.0) {
        return Err(CliError::Usage("distances must be positive".into()));
    }
    let run = continuation::family(args.mu, FrameKind::Barycentric, args.h_min, args.h_max, step)?;
    let km = |r| hill_radius_to_km(r, args.mu, args.distance_km);
    let thresholds = [(args.moon_radius_km, "surface"), (args.moon_radius_km + 50.0, "surface+50km")];

    let mut table = Table::new(&["h", "periapsis_km", "apoapsis_km", "class", "crossing"]);
    table.comment("mu", num(args.mu));
    table.comment("energy", "barycentric");
    table.comment("distance_km", num(args.distance_km));
    table.comment("moon_radius_km", num(args.moon_radius_km));
    let mut prev = None;
    for (h, rec) in run.values.iter().zip(&run.path) {
        let peri = km(rec.periapsis);
        let class = spectrum(rec).map_or("unreduced", |sp| sp.class.label());
        let flag = prev.map_or(String::new(), |p| crossings(p, peri, &thresholds));
        table.push(vec![num(*h), num(peri), num(km(rec.apoapsis)), class.to_string(), flag]);
        prev = Some(peri);
    }
    table.write(&args.out)?;
    Ok(Status::of(&run))
}

/// Maps library failures onto the exit-code classes.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(msg) => CliError::Usage(msg),
            other => CliError::Solver(other),
        }
    }
}
