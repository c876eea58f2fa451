//! Command runners shared by the CLI and the acceptance tests. Each command
//! builds the system from a [`RunConfig`], runs its checks and returns a
//! [`RunReport`] together with the CSV files it produced.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::circle::{dist, frac};
use crate::circle_map::{
    derivative_jump_table, derivative_scan, rotation_number_estimate, wandering_interval_check, CircleMap, DenjoyMap,
    SCAN_STEP, SCAN_THRESHOLD,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::layout::GapTable;
use crate::profiles::{calibrate_profiles, ProfileSet};
use crate::report::{all_pass, Check};
use crate::sequences::{
    extend_alphas, seeds_from_alpha1, sequences_csv, verify_sequence_estimates, GapSequences,
};
use crate::twist_map::diffusion::{diffusion_probe, portrait, portrait_csv};
use crate::twist_map::regularity::{regularity_csv, second_derivative_scan};
use crate::twist_map::segments::{curve_side_check, manifold_iterate_check, orbit_convergence_check, segments_csv};
use crate::twist_map::{invariance_checks, phi_linearity_check, structural_checks, verify_invariant_curve, TwistSystem};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Build,
    Verify,
    Regularity,
    Portrait,
    Manifolds,
    Diffusion,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Build, Command::Verify, Command::Regularity, Command::Portrait, Command::Manifolds, Command::Diffusion];

    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Verify => "verify",
            Command::Regularity => "regularity",
            Command::Portrait => "portrait",
            Command::Manifolds => "manifolds",
            Command::Diffusion => "diffusion",
        }
    }
}

/// Key numbers of the construction. Absent for the rigid rotation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionSummary {
    pub rigid_rotation: bool,
    pub omega: f64,
    pub a_c: Option<f64>,
    pub residual_mass: Option<f64>,
    pub tail_atoms: Option<i64>,
    pub alpha1: Option<f64>,
    pub alpha0: Option<f64>,
    pub m1_adjusted: Option<f64>,
    pub eta_sup: Option<f64>,
    pub gamma_sup: Option<f64>,
}

/// Wall-clock timings in milliseconds. Not part of the deterministic report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub build_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: Command,
    pub config: RunConfig,
    pub summary: ConstructionSummary,
    pub checks: Vec<Check>,
    pub sections: BTreeMap<String, Value>,
    pub pass: bool,
    pub timings: Timings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timings field removed; identical configs give identical text.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("timings");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// A report plus named CSV outputs.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub report: RunReport,
    pub files: Vec<(String, String)>,
}

impl CommandOutput {
    /// Writes `<command>.json` and, when enabled, the CSV files into `dir`.
    pub fn write(&self, dir: &Path, write_csv: bool) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.report.command.name()));
        std::fs::write(&json, self.report.to_json())?;
        written.push(json);
        if write_csv {
            for (name, body) in &self.files {
                let p = dir.join(name);
                std::fs::write(&p, body)?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

/// The built system and the pieces it came from.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub system: TwistSystem,
    pub map: Option<Arc<DenjoyMap>>,
    pub summary: ConstructionSummary,
}

impl BuiltSystem {
    fn denjoy(&self, command: Command) -> Result<&DenjoyMap> {
        self.map.as_deref().ok_or_else(|| Error::InvalidParameter {
            name: "rigid_rotation",
            reason: format!("`{}` needs the constructed map", command.name()),
        })
    }
}

pub fn build_denjoy_map(cfg: &RunConfig) -> Result<DenjoyMap> {
    let p = cfg.params.seq_params();
    p.validate()?;
    let profiles: Arc<ProfileSet> = Arc::new(calibrate_profiles(cfg.params.quadrature_tolerance)?);
    let seqs = Arc::new(GapSequences::build(&p)?);
    DenjoyMap::new(seqs, profiles, cfg.params.zone)
}

/// profiles, sequences, layout, circle map, twist system
pub fn build_system(cfg: &RunConfig) -> Result<BuiltSystem> {
    let p = cfg.params.seq_params();
    p.validate()?;
    if cfg.rigid_rotation {
        return Ok(BuiltSystem {
            system: TwistSystem::rigid(p.omega),
            map: None,
            summary: ConstructionSummary {
                rigid_rotation: true,
                omega: p.omega,
                a_c: None,
                residual_mass: None,
                tail_atoms: None,
                alpha1: None,
                alpha0: None,
                m1_adjusted: None,
                eta_sup: None,
                gamma_sup: None,
            },
        });
    }
    let map = Arc::new(build_denjoy_map(cfg)?);
    let s = map.sequences.seeds();
    let summary = ConstructionSummary {
        rigid_rotation: false,
        omega: p.omega,
        a_c: Some(map.sequences.a_c),
        residual_mass: Some(map.table.residual_mass),
        tail_atoms: Some(map.table.tail_n),
        alpha1: Some(s.alpha1),
        alpha0: Some(s.alpha0),
        m1_adjusted: Some(s.m1_adjusted),
        eta_sup: Some(map.profiles.eta_sup),
        gamma_sup: Some(map.profiles.gamma_sup),
    };
    Ok(BuiltSystem { system: TwistSystem::denjoy(map.clone()), map: Some(map), summary })
}

struct Runner {
    command: Command,
    checks: Vec<Check>,
    sections: BTreeMap<String, Value>,
    files: Vec<(String, String)>,
}

impl Runner {
    fn new(command: Command) -> Self {
        Runner { command, checks: Vec::new(), sections: BTreeMap::new(), files: Vec::new() }
    }

    fn section(&mut self, name: &str, value: impl Serialize) {
        self.sections.insert(name.to_string(), serde_json::to_value(value).expect("section serializes"));
    }

    fn finish(self, cfg: &RunConfig, built: BuiltSystem, build_ms: f64, start: Instant) -> CommandOutput {
        let pass = all_pass(&self.checks);
        CommandOutput {
            report: RunReport {
                schema_version: SCHEMA_VERSION,
                command: self.command,
                config: cfg.clone(),
                summary: built.summary,
                checks: self.checks,
                sections: self.sections,
                pass,
                timings: Timings { build_ms, total_ms: start.elapsed().as_secs_f64() * 1e3 },
            },
            files: self.files,
        }
    }
}

pub fn run_command(command: Command, cfg: &RunConfig) -> Result<CommandOutput> {
    let start = Instant::now();
    let built = build_system(cfg)?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut run = Runner::new(command);
    match command {
        Command::Build => build_checks(cfg, &built, &mut run),
        Command::Verify => verify_checks(cfg, &built, &mut run)?,
        Command::Regularity => regularity_checks(cfg, &built, &mut run)?,
        Command::Portrait => portrait_checks(cfg, &built, &mut run),
        Command::Manifolds => manifold_checks(cfg, &built, &mut run)?,
        Command::Diffusion => diffusion_checks(cfg, &built, &mut run)?,
    }
    Ok(run.finish(cfg, built, build_ms, start))
}

pub fn cmd_build(cfg: &RunConfig) -> Result<CommandOutput> {
    run_command(Command::Build, cfg)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput> {
    run_command(Command::Verify, cfg)
}

pub fn cmd_regularity(cfg: &RunConfig) -> Result<CommandOutput> {
    run_command(Command::Regularity, cfg)
}

pub fn cmd_portrait(cfg: &RunConfig) -> Result<CommandOutput> {
    run_command(Command::Portrait, cfg)
}

pub fn cmd_manifolds(cfg: &RunConfig) -> Result<CommandOutput> {
    run_command(Command::Manifolds, cfg)
}

pub fn cmd_diffusion(cfg: &RunConfig) -> Result<CommandOutput> {
    run_command(Command::Diffusion, cfg)
}

fn build_checks(_cfg: &RunConfig, built: &BuiltSystem, run: &mut Runner) {
    let Some(map) = built.map.as_deref() else {
        run.checks.push(Check::flag("rigid_rotation", built.summary.omega, true));
        return;
    };
    let g = &map.sequences;
    let t = &map.table;
    let m = g.truncation();
    let lengths_ok = g.ell.lo() == -m - 1
        && g.ell.hi() == m + 1
        && g.k_ratio.lo() == -m - 1
        && g.k_ratio.hi() == m
        && g.m.lo() == -m
        && g.m.hi() == m
        && g.alpha.lo() == -m
        && g.alpha.hi() == m
        && g.beta.lo() == -m
        && g.beta.hi() == m
        && t.core_m == m
        && t.sorted().len() == (2 * t.tail_n + 1) as usize;
    run.checks.push(Check::flag("array_lengths", (2 * m + 1) as f64, lengths_ok));
    let rm = t.residual_mass;
    run.checks.push(Check::flag("residual_mass_in_unit_interval", rm, rm > 0.0 && rm < 1.0));
    run.section("layout", serde_json::json!({
        "core_mass": t.core_mass(),
        "tail_mass": t.tail_mass(),
        "residual_mass": rm,
        "atoms": t.sorted().len(),
    }));
    run.files.push(("sequences.csv".into(), sequences_csv(g)));
    run.files.push(("gaps.csv".into(), t.to_csv()));
}

fn semiconjugacy_error(map: &DenjoyMap) -> f64 {
    let t: &GapTable = &map.table;
    let j = t.semiconjugacy();
    (-t.core_m..t.core_m)
        .map(|k| {
            let x = t.mu(k);
            dist(j.eval(map.eval(x)), frac(j.eval(x) + map.omega()))
        })
        .fold(0.0, f64::max)
}

/// `max_k |beta_k - K_k|` for the sweep seeded with `alpha_1 = 0`.
pub fn zero_seed_deviation(g: &GapSequences) -> Result<f64> {
    let z = extend_alphas(g.clone(), seeds_from_alpha1(g, 0.0))?;
    Ok(z.beta.iter().map(|(k, b)| (b - z.k_ratio[k]).abs()).fold(0.0, f64::max))
}

fn verify_checks(cfg: &RunConfig, built: &BuiltSystem, run: &mut Runner) -> Result<()> {
    let tol = &cfg.tolerances;
    let v = &cfg.verify;
    let sys = &built.system;

    let samples = sys.mixed_samples(v.invariance_samples, cfg.seed);
    let inv = verify_invariant_curve(sys, &samples);
    run.checks.extend(invariance_checks(&inv, tol.invariance));
    run.section("invariance", &inv);

    let omega = built.summary.omega;
    let n = v.rotation_iterates.max(1);
    let mut rot = Vec::new();
    for &x0 in &v.rotation_starts {
        let est = rotation_number_estimate(sys.circle_map(), x0, n);
        let err = (est - omega).abs();
        run.checks.push(Check::flag(format!("rotation_number_x0_{x0}"), err, err < 1.0 / n as f64));
        rot.push(serde_json::json!({ "x0": x0, "iterates": n, "estimate": est }));
    }
    run.section("rotation_number", rot);

    let st = structural_checks(sys, v.structural_samples, cfg.seed);
    run.checks.push(Check::at_most("inverse_round_trip", st.inverse_round_trip, tol.inverse_round_trip));
    run.checks.push(Check::at_most("determinant", st.det_deviation, tol.determinant));
    run.checks.push(Check::at_most("twist", st.twist_deviation, tol.determinant));
    run.checks.push(Check::at_most("translation_theta", st.translation_theta_mismatches as f64, 0.0));
    run.checks.push(Check::at_most("translation_r", st.translation_r_deviation, tol.translation));
    run.checks.push(Check::at_most("phi_periodicity", st.phi_periodicity, tol.periodicity));
    let mean_budget = built.summary.residual_mass.unwrap_or(0.0) + 1e-6;
    run.checks.push(Check::at_most("phi_mean", st.phi_mean.abs(), mean_budget));
    run.section("structural", &st);

    let Some(map) = built.map.as_deref() else {
        let phi_max = samples.iter().map(|&x| sys.phi(x).abs()).fold(0.0, f64::max);
        run.checks.push(Check::at_most("phi_vanishes", phi_max, 0.0));
        return Ok(());
    };
    let g = &map.sequences;

    let est = verify_sequence_estimates(g, &g.params, map.profiles.eta_sup, map.profiles.gamma_sup);
    for e in &est.estimates {
        run.checks.push(Check {
            name: format!("estimate.{}", e.name),
            measured: e.empirical,
            tolerance: e.bound.unwrap_or(f64::NAN),
            comparison: crate::report::Comparison::Flag,
            pass: e.pass,
        });
    }
    run.section("estimates", &est);
    run.checks.push(Check::at_most("recurrence_residual", g.recurrence_residual(), tol.recurrence));
    run.checks.push(Check::at_most("zero_seed", zero_seed_deviation(g)?, tol.zero_seed));

    let lin = phi_linearity_check(sys, map);
    run.checks.push(Check::at_most("linearity_deviation", lin.max_deviation, tol.linearity_deviation));
    run.checks.push(Check::at_most("linearity_slope", lin.max_slope_error, tol.linearity_slope));
    run.section("linearity", serde_json::json!({
        "gaps": lin.rows.len(),
        "max_deviation": lin.max_deviation,
        "max_slope_error": lin.max_slope_error,
    }));

    let jumps = derivative_jump_table(map);
    let jump_err = jumps.iter().map(|r| (r.jump - r.expected).abs()).fold(0.0, f64::max);
    run.checks.push(Check::at_most("derivative_jump", jump_err, tol.jump));
    let scan = derivative_scan(map, v.scan_points, SCAN_STEP, SCAN_THRESHOLD);
    run.checks.push(Check::flag("derivative_scan_only_midpoints", scan.detected.len() as f64, scan.pass));
    run.section("derivative_scan", serde_json::json!({
        "points": scan.points,
        "threshold": scan.threshold,
        "detected": scan.detected.len(),
        "only_midpoints": scan.only_midpoints,
        "all_midpoints_found": scan.all_midpoints_found,
        "max_fd_jump_error": scan.max_jump_error,
    }));

    run.checks.push(Check::at_most("semiconjugacy", semiconjugacy_error(map), tol.semiconjugacy));
    let w = wandering_interval_check(map, v.wandering_steps, tol.wandering)?;
    run.checks.push(Check::flag("wandering_interval", w.forward_deviation.max(w.backward_deviation), w.pass));
    run.section("wandering", &w);
    Ok(())
}

fn regularity_checks(cfg: &RunConfig, built: &BuiltSystem, run: &mut Runner) -> Result<()> {
    let map = built.denjoy(run.command)?;
    let tol = &cfg.tolerances;
    let r = second_derivative_scan(map);
    run.checks.push(Check::flag("tail_decay", r.outer_max, r.decays));
    run.checks.push(Check::at_most("term_sum_vs_fd", r.max_rel_mismatch, tol.regularity_mismatch));
    run.checks.push(Check::at_most("plateau_zero", r.max_plateau_value, tol.plateau));
    run.section("regularity", serde_json::json!({
        "gaps": r.rows.len(),
        "global_sup": r.global_sup,
        "off_apex_sup": r.off_apex_sup,
        "inner_max": r.inner_max,
        "outer_max": r.outer_max,
        "decays": r.decays,
        "max_rel_mismatch": r.max_rel_mismatch,
        "max_plateau_value": r.max_plateau_value,
    }));
    run.files.push(("regularity.csv".into(), regularity_csv(&r)));
    let factor = cfg.regularity.c_factor;
    if factor > 0.0 {
        let mut big = cfg.clone();
        big.params.big_c *= factor;
        let other = build_denjoy_map(&big)?;
        let r2 = second_derivative_scan(&other);
        let ratio = r.global_sup / r2.global_sup;
        run.checks.push(Check::at_least("c_comparison_ratio", ratio, cfg.regularity.min_ratio));
        run.section("c_comparison", serde_json::json!({
            "big_c": big.params.big_c,
            "global_sup": r2.global_sup,
            "ratio": ratio,
            "off_apex_sup": r2.off_apex_sup,
            "off_apex_ratio": r.off_apex_sup / r2.off_apex_sup,
        }));
    }
    Ok(())
}

/// Steps of the on-curve baseline orbit: an orbit started in gap 1 stays among
/// the core gaps for M - 1 steps, after which it enters the geometric tail.
fn on_curve_steps(built: &BuiltSystem, requested: usize) -> usize {
    match built.map.as_deref() {
        Some(m) => requested.min((m.table.core_m - 1) as usize),
        None => requested.min(1000),
    }
}

fn portrait_checks(cfg: &RunConfig, built: &BuiltSystem, run: &mut Runner) {
    let pc = &cfg.portrait;
    let rows = portrait(&built.system, pc.orbits, pc.steps, pc.spread, pc.curve_points);
    let expected = pc.curve_points + pc.orbits * (pc.steps + 1);
    run.checks.push(Check::flag("row_count", rows.len() as f64, rows.len() == expected));
    let on_curve = diffusion_probe(&built.system, 0.3, 0.0, on_curve_steps(built, pc.steps), &[], 1);
    run.checks.push(Check::at_most("on_curve_orbit", on_curve.max_excursion, cfg.tolerances.invariance));
    run.section("portrait", serde_json::json!({ "rows": rows.len(), "orbits": pc.orbits, "steps": pc.steps }));
    run.files.push(("portrait.csv".into(), portrait_csv(&rows)));
}

fn manifold_checks(cfg: &RunConfig, built: &BuiltSystem, run: &mut Runner) -> Result<()> {
    let map = built.denjoy(run.command)?;
    let tol = &cfg.tolerances;
    let mc = &cfg.manifolds;
    let sys = &built.system;
    let r = manifold_iterate_check(sys, map, mc.k_max);
    run.checks.push(Check::at_most("stable_iterate", r.stable_deviation, tol.manifold));
    run.checks.push(Check::at_most("stable_contraction", r.stable_ratio_error, tol.contraction));
    run.checks.push(Check::at_most("unstable_iterate", r.unstable_deviation, tol.manifold));
    run.checks.push(Check::at_most("unstable_expansion", r.unstable_ratio_error, tol.contraction));
    run.checks.push(Check::at_most("family_markers", r.marker_deviation, tol.manifold));
    run.checks.push(Check::at_most("on_curve_half", r.on_curve_deviation, tol.on_curve));
    run.section("iterates", &r);

    let side = curve_side_check(map, mc.side_samples);
    run.checks.push(Check::at_most("curve_minus_segment", side.max_error, tol.curve_side));
    run.checks.push(Check::flag("segment_strictly_on_zone_side", side.min_signed_gap, side.min_signed_gap > 0.0));
    run.section("curve_side", serde_json::json!({
        "samples": side.rows.len(),
        "max_error": side.max_error,
        "orientation": side.orientation,
        "min_signed_gap": side.min_signed_gap,
        "base_gap": side.base_gap,
    }));

    let t = &map.table;
    let conv = orbit_convergence_check(sys, map, t.mu(1) - t.length(1) / 10.0, mc.convergence_steps);
    run.checks.push(Check::at_most("orbit_convergence", conv.max_rel_error, tol.convergence));
    run.section("convergence", &conv);
    run.files.push(("segments.csv".into(), segments_csv(sys, map, mc.k_max, mc.family)));
    Ok(())
}

fn diffusion_checks(cfg: &RunConfig, built: &BuiltSystem, run: &mut Runner) -> Result<()> {
    let dc = &cfg.diffusion;
    let sys = &built.system;
    let theta0 = match (dc.theta0, built.map.as_deref()) {
        (Some(t), _) => t,
        (None, Some(map)) => map.table.mu(1) + map.table.length(1) / 16.0,
        (None, None) => 0.0,
    };
    let base = diffusion_probe(sys, theta0, 0.0, on_curve_steps(built, dc.iterations), &[], 1);
    run.checks.push(Check::at_most("on_curve_excursion", base.max_excursion, cfg.tolerances.invariance));
    let mut csv = String::from("offset,n,max_excursion\n");
    let mut probes = Vec::new();
    for &off in &dc.offsets {
        let r = diffusion_probe(sys, theta0, off, dc.iterations, &dc.thresholds, dc.checkpoints);
        for &(n, e) in &r.excursion_series {
            csv.push_str(&format!("{off:e},{n},{e:e}\n"));
        }
        probes.push(r);
    }
    run.section("probes", &probes);
    run.files.push(("diffusion.csv".into(), csv));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.params.truncation_m = 40;
        c.verify.invariance_samples = 600;
        c.verify.rotation_iterates = 2000;
        c.verify.structural_samples = 100;
        c.verify.scan_points = 600;
        c.verify.wandering_steps = 10;
        c.portrait.orbits = 2;
        c.portrait.steps = 5;
        c.portrait.curve_points = 10;
        c.manifolds.k_max = 10;
        c.diffusion.iterations = 200;
        c.diffusion.checkpoints = 4;
        c
    }

    #[test]
    fn every_command_passes_small() {
        let c = small();
        for cmd in Command::ALL {
            let out = run_command(cmd, &c).unwrap();
            assert!(out.report.pass, "{}: {:?}", cmd.name(), out.report.failures());
            assert_eq!(out.report.schema_version, SCHEMA_VERSION);
        }
    }

    #[test]
    fn deterministic_without_timings() {
        let c = small();
        let a = cmd_verify(&c).unwrap().report.deterministic_json();
        let b = cmd_verify(&c).unwrap().report.deterministic_json();
        assert_eq!(a, b);
        assert!(!a.contains("\"timings\""));
    }

    #[test]
    fn impossible_tolerance_fails_with_measurement() {
        let mut c = small();
        c.tolerances.invariance = 1e-20;
        let r = cmd_verify(&c).unwrap().report;
        assert!(!r.pass);
        let chk = r.check("invariance_residual").unwrap();
        assert!(!chk.pass && chk.measured > 1e-20);
    }

    #[test]
    fn rigid_rotation_suite() {
        let mut c = small();
        c.rigid_rotation = true;
        let r = cmd_verify(&c).unwrap().report;
        assert!(r.pass, "{:?}", r.failures());
        assert_eq!(r.check("phi_vanishes").unwrap().measured, 0.0);
        assert!(cmd_regularity(&c).is_err());
    }

    #[test]
    fn build_errors_propagate() {
        let mut c = small();
        c.params.delta = -1.0;
        assert!(matches!(cmd_build(&c), Err(Error::DivergentSum { .. })));
    }

    #[test]
    fn minimal_truncation_builds() {
        let mut c = small();
        c.params.truncation_m = 8;
        let out = cmd_build(&c).unwrap();
        assert!(out.report.pass, "{:?}", out.report.failures());
        let rm = out.report.summary.residual_mass.unwrap();
        assert!(rm > 0.0 && rm < 1.0);
        let reg = cmd_regularity(&c).unwrap();
        let csv = &reg.files[0].1;
        assert_eq!(csv.lines().count(), 1 + 16);
    }
}
