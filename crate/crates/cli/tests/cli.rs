use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
seed = 7

[params]
truncation_m = 40

[verify]
invariance_samples = 900
rotation_iterates = 5000
structural_samples = 200
scan_points = 1000
wandering_steps = 10

[portrait]
orbits = 2
steps = 10
curve_points = 20

[manifolds]
k_max = 12

[diffusion]
iterations = 300
checkpoints = 5
"#;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let out_dir = format!("output.dir={}", toml_string(&dir.join("out")));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_denjoy-twist"));
    cmd.arg(args[0]).arg("--config").arg(&cfg).arg("--set").arg(out_dir);
    for a in &args[1..] {
        cmd.arg("--set").arg(a);
    }
    cmd.output().unwrap()
}

fn toml_string(p: &Path) -> String {
    format!("{:?}", p.display().to_string())
}

fn report(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join("out").join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn build_writes_summary_and_tables() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["build"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(d.path(), "build");
    assert_eq!(r["schema_version"], 1);
    let rm = r["summary"]["residual_mass"].as_f64().unwrap();
    assert!(rm > 0.0 && rm < 1.0);
    assert!(r["summary"]["alpha1"].as_f64().unwrap() > 0.0);
    let seq = std::fs::read_to_string(d.path().join("out/sequences.csv")).unwrap();
    assert!(seq.starts_with("k,ell,K,m,alpha,beta\n"));
    assert_eq!(seq.lines().count(), 1 + 81);
    let gaps = std::fs::read_to_string(d.path().join("out/gaps.csv")).unwrap();
    assert!(gaps.starts_with("k,lambda,mu,ell,J_lo,J_hi,wrap\n"));
}

#[test]
fn invalid_parameter_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["build", "params.delta=-1.0"], SMALL);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["build"], "[params]\nomgea = 0.3\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("omgea"), "{}", stderr(&o));
}

#[test]
fn verify_passes_and_unattainable_tolerance_fails() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["verify"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report(d.path(), "verify")["pass"], true);

    let o = run(d.path(), &["verify", "tolerances.invariance=1e-20"], SMALL);
    assert_eq!(o.status.code(), Some(1));
    let r = report(d.path(), "verify");
    let c = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "invariance_residual").unwrap();
    assert_eq!(c["pass"], false);
    assert!(c["measured"].as_f64().unwrap() > 1e-20);
}

#[test]
fn rigid_rotation_verify() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["verify", "rigid_rotation=true"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(d.path(), &["regularity", "rigid_rotation=true"], SMALL);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    run(d.path(), &["verify"], SMALL);
    let a = strip(report(d.path(), "verify"));
    run(d.path(), &["verify"], SMALL);
    let b = strip(report(d.path(), "verify"));
    assert_eq!(a, b);
}

#[test]
fn regularity_minimal_truncation() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["regularity", "params.truncation_m=8"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("out/regularity.csv")).unwrap();
    let ks: Vec<i64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ks.iter().filter(|&&k| k >= 1).count(), 8);
    assert_eq!(ks.iter().filter(|&&k| k <= 0).count(), 8);
}

#[test]
fn portrait_zero_steps_echoes_initial_points() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["portrait", "portrait.orbits=1", "portrait.steps=0"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("out/portrait.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "orbit,step,theta,r");
    assert_eq!(lines.len(), 1 + 20 + 1);
    assert!(lines[21].starts_with("1,0,"));
}

#[test]
fn manifolds_and_diffusion() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["manifolds"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.path().join("out/segments.csv").exists());

    let o = run(d.path(), &["diffusion"], SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(d.path(), "diffusion");
    let probes = r["sections"]["probes"].as_array().unwrap();
    assert_eq!(probes.len(), 2);
    assert_eq!(probes[0]["offset"], -1e-3);
}
