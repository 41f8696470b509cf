use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha1::{Digest, Sha1};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lunar-polar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

struct Csv {
    comments: HashMap<String, String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let text = std::fs::read_to_string(path).unwrap();
        let mut comments = HashMap::new();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix("# ") {
                Some(c) => {
                    let (k, v) = c.split_once(": ").unwrap();
                    comments.insert(k.to_string(), v.to_string());
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let header = reader.headers().unwrap().iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.unwrap().iter().map(String::from).collect())
            .collect();
        Self { comments, header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn floats(&self, name: &str) -> Vec<f64> {
        let i = self.col(name);
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }

    fn strings(&self, name: &str) -> Vec<String> {
        let i = self.col(name);
        self.rows.iter().map(|r| r[i].clone()).collect()
    }
}

fn out_path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn manifest(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path.with_extension("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const FAMILY_HEADER: &str = "h,Q2,P1,Q3,half_period_s,period_t,amplitude,s1,s2,\
re_lambda_1,re_lambda_2,re_lambda_3,re_lambda_4,im_lambda_1,im_lambda_2,im_lambda_3,im_lambda_4,class,delta_det,residual";

#[test]
fn family_classes_change_only_at_known_events() {
    // brackets of the events along the family at mass ratio zero
    let events = [-1.025235, -0.855555, 0.0438435, 0.0909615, 0.1099895];
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "family.csv");
    let o = run(&["family", "--mu", "0", "--h-min", "-2", "--h-max", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let table = Csv::read(&out);
    assert_eq!(table.header.join(","), FAMILY_HEADER);
    let h = table.floats("h");
    let class = table.strings("class");
    let changes: Vec<(f64, f64)> = (1..h.len()).filter(|&i| class[i] != class[i - 1]).map(|i| (h[i - 1], h[i])).collect();
    assert_eq!(changes.len(), events.len(), "{changes:?}");
    for ((lo, hi), e) in changes.iter().zip(events) {
        assert!(*lo <= e && e <= *hi, "event {e} outside [{lo}, {hi}]");
    }
    assert_eq!(class[0], "elliptic-elliptic");
    assert_eq!(class.last().unwrap(), "complex-hyperbolic");
    assert_eq!(*h.last().unwrap(), 0.5);
}

#[test]
fn tiny_mass_ratio_family_converges() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "f.csv");
    let o = run(&["family", "--mu", "1e-10", "--h-min", "-2", "--h-max", "-1.4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = Csv::read(&out);
    assert!(table.rows.len() > 1);
    assert!(table.floats("residual").iter().all(|&r| r <= 1e-10));
}

#[test]
fn empty_range_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "f.csv");
    let o = run(&["family", "--mu", "0", "--h-min", "-1", "--h-max", "-1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = Csv::read(&out);
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.floats("h"), vec![-1.0]);
}

#[test]
fn outputs_are_deterministic_and_hashed() {
    let dir = TempDir::new().unwrap();
    let a = out_path(&dir, "a.csv");
    let b = out_path(&dir, "b.csv");
    for p in [&a, &b] {
        let o = run(&["family", "--mu", "1e-3", "--h-min", "-2", "--h-max", "-1.7", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let body = |p: &Path| {
        let text = std::fs::read_to_string(p).unwrap();
        text.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    // identical apart from the line naming the manifest
    assert_eq!(body(&a), body(&b));

    let m = manifest(&a);
    assert_eq!(m["command"], "family");
    assert_eq!(m["parameters"]["mu"], 1e-3);
    assert_eq!(m["integrator"]["abs_tol"], 1e-14);
    assert_eq!(m["status"], "complete");
    assert!(m["wall_time_s"].as_f64().unwrap() > 0.0);
    let bytes = std::fs::read(&a).unwrap();
    let mut sha = Sha1::new();
    sha.update(format!("blob {}\0", bytes.len()).as_bytes());
    sha.update(&bytes);
    let id: String = sha.finalize().iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(m["output"]["git_blob_id"], id.as_str());
    assert_eq!(m["output"]["path"], "a.csv");
    assert!(std::fs::read_to_string(&a).unwrap().starts_with("# manifest: a.manifest.json\n"));
}

#[test]
fn orbit_closes_and_reports_apsides() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "o.csv");
    let o = run(&["orbit", "--mu", "0", "--h", "-2", "--samples", "101", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = Csv::read(&out);
    assert_eq!(table.header, ["s", "t", "q1", "q2", "q3", "p1", "p2", "p3"]);
    assert_eq!(table.rows.len(), 101);
    // positions only: at mass ratio zero the orbit starts on the collision,
    // where the physical momentum is infinite
    let first: Vec<f64> = table.rows[0][2..5].iter().map(|v| v.parse().unwrap()).collect();
    let last: Vec<f64> = table.rows[100][2..5].iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(table.rows[0][5], "inf");
    for (a, b) in first.iter().zip(&last) {
        assert!((a - b).abs() <= 1e-9, "{first:?} vs {last:?}");
    }
    let peri: f64 = table.comments["periapsis"].parse().unwrap();
    let apo: f64 = table.comments["apoapsis"].parse().unwrap();
    assert!(0.0 <= peri && peri < apo);
    let period: f64 = table.comments["period_t"].parse().unwrap();
    assert!((table.floats("t")[100] - period).abs() <= 1e-9);
}

#[test]
fn orbit_in_the_barycentric_frame_surrounds_the_moon() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "o.csv");
    let o = run(&[
        "orbit", "--mu", "0.01215", "--h", "-1.52", "--energy", "barycentric", "--frame", "barycentric", "--samples", "64",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = Csv::read(&out);
    let peri_km: f64 = table.comments["periapsis_km"].parse().unwrap();
    assert!((peri_km - 4389.0).abs() <= 0.1 * 4389.0, "{peri_km}");
    // the Moon sits at (1 - mu, 0, 0)
    let q1 = table.floats("q1");
    assert!(q1.iter().all(|x| (x - (1.0 - 0.01215)).abs() < 0.2));
}

#[test]
fn bifurcations_at_mass_ratio_zero() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "ev.json");
    let o = run(&["bifurcations", "--mu", "0", "--h-min", "-2", "--h-max", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let events: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let kinds: Vec<&str> = events.iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(
        kinds,
        ["PeriodDoubling", "Degeneracy", "Degeneracy", "PeriodDoubling", "KreinCollision"]
    );
    for e in &events {
        let lo = e["bracket"][0].as_f64().unwrap();
        let hi = e["bracket"][1].as_f64().unwrap();
        assert!(hi - lo <= 1e-5 && e["resolved"].as_bool().unwrap());
    }
    assert_eq!(manifest(&out)["command"], "bifurcations");
}

#[test]
fn bifurcations_on_an_empty_interval() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "ev.json");
    let o = run(&["bifurcations", "--mu", "0", "--h-min", "-1", "--h-max", "-1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().trim(), "[]");
}

#[test]
fn moon_earth_period_doubling_is_found() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "ev.json");
    let o = run(&[
        "bifurcations", "--mu", "0.01215", "--energy", "barycentric", "--h-min", "-1.535", "--h-max", "-1.52", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let events: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(events.iter().any(|e| e["kind"] == "PeriodDoubling"), "{events:?}");
}

#[test]
fn bridge_with_one_mass_ratio() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "b.csv");
    let o = run(&[
        "bridge", "--h-unrescaled", "-2", "--mu-start", "0.01", "--mu-end", "0.01", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let table = Csv::read(&out);
    assert_eq!(table.header[0], "mu");
    assert_eq!(table.header[1..].join(","), FAMILY_HEADER);
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.floats("mu"), vec![0.01]);
    assert_eq!(table.floats("h"), vec![-2.0]);
}

#[test]
fn moon_earth_table_flags_thresholds_and_truncates_at_the_fold() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "me.csv");
    let o = run(&[
        "moon-earth", "--h-min", "-1.535", "--h-max", "-1.50", "--h-step", "0.002", "--out", out.to_str().unwrap(),
    ]);
    // the family turns back before -1.50, so the scan is partial
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let table = Csv::read(&out);
    assert_eq!(table.header, ["h", "periapsis_km", "apoapsis_km", "class", "crossing"]);
    let flags = table.strings("crossing");
    let peri = table.floats("periapsis_km");
    let at = |name: &str| flags.iter().position(|f| f.split(';').any(|x| x == name)).unwrap();
    let (surface, clear) = (at("surface"), at("surface+50km"));
    assert!(surface <= clear);
    assert!(peri[surface - 1] < 1716.0 && peri[surface] >= 1716.0);
    assert!(peri[clear - 1] < 1766.0 && peri[clear] >= 1766.0);
    assert!(manifest(&out)["status"].as_str().unwrap().starts_with("truncated"));
}

#[test]
fn bad_arguments_exit_with_4() {
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(code(&run(&[])), 4);
    assert_eq!(code(&run(&["family", "--mu", "0", "--h-min", "nope", "--h-max", "0", "--out", out])), 4);
    assert_eq!(code(&run(&["family", "--mu", "2", "--h-min", "-2", "--h-max", "-2", "--out", out])), 4);
    assert_eq!(code(&run(&["family", "--mu", "0", "--h-min", "-2", "--h-max", "-1", "--h-step", "0", "--out", out])), 4);
    assert_eq!(code(&run(&["orbit", "--mu", "0", "--h", "-2", "--samples", "1", "--out", out])), 4);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn solver_failure_exits_with_3() {
    // unbound Kepler energy at mass ratio one has no periodic collision orbit
    let dir = TempDir::new().unwrap();
    let out = out_path(&dir, "o.csv");
    let o = run(&["orbit", "--mu", "1", "--h", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
