use super::diffusion::{diffusion_probe, portrait};
use super::regularity::second_derivative_scan;
use super::segments::*;
use super::*;
use crate::circle_map::ZoneSide;
use crate::profiles::calibrate_profiles;
use crate::sequences::{GapSequences, SeqParams};
use std::sync::OnceLock;

fn map() -> &'static Arc<DenjoyMap> {
    static M: OnceLock<Arc<DenjoyMap>> = OnceLock::new();
    M.get_or_init(|| {
        let s = Arc::new(GapSequences::build(&SeqParams::default()).unwrap());
        let p = Arc::new(calibrate_profiles(1e-13).unwrap());
        Arc::new(DenjoyMap::new(s, p, ZoneSide::Normal).unwrap())
    })
}

fn system() -> TwistSystem {
    TwistSystem::denjoy(map().clone())
}

fn flipped() -> TwistSystem {
    let m = map();
    let f = DenjoyMap::with_table(m.sequences.clone(), m.profiles.clone(), m.table.clone(), ZoneSide::Flipped).unwrap();
    TwistSystem::denjoy(Arc::new(f))
}

#[test]
fn rigid_rotation_is_integrable() {
    let sys = TwistSystem::rigid(0.3);
    assert_eq!(sys.phi(0.77), 0.0);
    let (t, r) = sys.forward((0.5, 0.25));
    assert_eq!((t, r), (0.75, 0.25));
    let inv = verify_invariant_curve(&sys, &sys.mixed_samples(100, 1));
    assert_eq!(inv.max_residual, 0.0);
    assert_eq!(sys.curve_height(0.4), 0.3);
}

#[test]
fn phi_at_midpoints() {
    let sys = system();
    let t = &map().table;
    for k in [-7, 2, 10, 400] {
        let expect = signed_diff(t.mu(k + 1), t.mu(k)) - signed_diff(t.mu(k), t.mu(k - 1));
        assert!((sys.phi(t.mu(k)) - expect).abs() < 1e-14, "k={k}");
    }
}

#[test]
fn phi_matches_bisection_oracle() {
    let sys = system();
    let g = map();
    let t = &g.table;
    for i in 0..20 {
        let x = t.lambda(7) + t.length(7) * (i as f64 + 0.3) / 20.0;
        let gx = g.lift(x);
        // invert the lift by plain bisection on [x - 1, x]
        let (mut a, mut b) = (x - 1.0, x);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if g.lift(c) < x {
                a = c;
            } else {
                b = c;
            }
        }
        let oracle = gx + 0.5 * (a + b) - 2.0 * x;
        assert!((sys.phi(x) - oracle).abs() < 1e-14, "{i}");
    }
}

#[test]
fn phi_derivatives_match_differences() {
    let sys = system();
    let t = &map().table;
    let x = t.lambda(5) + 0.3 * t.length(5);
    let h = 1e-9;
    let fd = (sys.phi(x + h) - sys.phi(x - h)) / (2.0 * h);
    assert!((sys.phi_eval(x, PhiOrder::D1(Side::Left)) - fd).abs() < 1e-6);
    let h = 1e-7;
    let fd1 = |y: f64| sys.phi_eval(y, PhiOrder::D1(Side::Left));
    let fd2 = (fd1(x + h) - fd1(x - h)) / (2.0 * h);
    let d2 = sys.phi_eval(x, PhiOrder::D2(Side::Left));
    assert!((d2 - fd2).abs() < 1e-5 * d2.abs().max(1.0), "{d2} {fd2}");
}

#[test]
fn forward_backward_and_translation() {
    let sys = system();
    let r = structural_checks(&sys, 2000, 7);
    assert!(r.inverse_round_trip < 1e-12, "{r:?}");
    assert!(r.det_deviation < 1e-9, "{r:?}");
    assert!(r.twist_deviation < 1e-9);
    assert_eq!(r.translation_theta_mismatches, 0);
    assert!(r.translation_r_deviation < 1e-14);
    assert!(r.phi_periodicity < 1e-13);
    assert!(r.phi_mean.abs() < map().table.residual_mass + 1e-6);
    assert!(r.phi_mean.abs() < 1e-10, "{}", r.phi_mean);
}

#[test]
fn invariant_curve() {
    let sys = system();
    let s = sys.mixed_samples(10_000, 42);
    let r = verify_invariant_curve(&sys, &s);
    assert!(r.max_residual <= 1e-11, "{r:?}");
    assert!(r.max_residual_translated <= 1e-11, "{r:?}");
}

#[test]
fn linearity_on_middle_segments() {
    let sys = system();
    let r = phi_linearity_check(&sys, map());
    assert!(r.max_deviation <= 1e-11, "{}", r.max_deviation);
    assert!(r.max_slope_error <= 1e-10, "{}", r.max_slope_error);
    let row1 = r.rows.iter().find(|r| r.k == 1).unwrap();
    assert_eq!(row1.expected_slope, map().sequences.seeds().m1_adjusted - 2.0);
    let row5 = r.rows.iter().find(|r| r.k == 5).unwrap();
    assert!((row5.slope - (map().sequences.m[5] - 2.0)).abs() <= 1e-10);
}

#[test]
fn regularity_terms_and_decay() {
    let r = second_derivative_scan(map());
    assert!(r.max_plateau_value <= 1e-11);
    assert!(r.max_rel_mismatch <= 1e-6, "{}", r.max_rel_mismatch);
    assert!(r.decays, "{} {}", r.outer_max, r.inner_max);
    assert_eq!(r.rows.len(), 1000);
    assert_eq!((r.rows[0].k, r.rows[999].k), (-499, 500));
    assert!(r.off_apex_sup < r.global_sup);
}

#[test]
fn segments_and_dynamics() {
    let sys = system();
    let g = map();
    let t = &g.table;
    let s1 = manifold_segment(g, 1);
    let e = t.length(1) / 8.0;
    let [lo, _, hi] = s1.markers();
    let h = |x: f64| g.displacement(t.mu(1)) + (t.length(2) / t.length(1) - 1.0) * x;
    assert!((lo.1 - h(-e)).abs() < 1e-15 && (hi.1 - h(e)).abs() < 1e-15);
    let r = manifold_iterate_check(&sys, g, 50);
    assert!(r.stable_deviation <= 1e-10, "{r:?}");
    assert!(r.unstable_deviation <= 1e-10, "{r:?}");
    assert!(r.stable_ratio_error <= 1e-10 && r.unstable_ratio_error <= 1e-10, "{r:?}");
    assert!(r.marker_deviation <= 1e-10 && r.base_orbit_deviation <= 1e-12, "{r:?}");
    assert!(r.on_curve_deviation <= 1e-11, "{r:?}");
    assert!(r.family_collinearity <= 1e-12, "{r:?}");
}

#[test]
fn extension_matches_backward_image() {
    let sys = system();
    let fam = extend_family(&sys, map(), 3);
    let s0 = fam.iter().find(|m| m.k == 0 && m.kind == SegmentKind::Stable).unwrap();
    let direct = manifold_segment(map(), 1).markers().map(|p| sys.backward(p));
    assert_eq!(s0.markers, direct);
}

#[test]
fn curve_side() {
    let r = curve_side_check(map(), 32);
    assert!(r.max_error <= 1e-12, "{}", r.max_error);
    assert!(r.min_signed_gap > 0.0);
    assert_eq!(r.base_gap, 0.0);
    let g = map();
    let x = g.table.mu(1) + g.table.length(1) / 16.0;
    let seg = manifold_segment(g, 1);
    let gap = g.displacement(x) - seg.height(x);
    assert!((gap - g.sequences.alpha[1] * g.table.length(1) / 16.0).abs() < 1e-12);
    let f = flipped();
    let r = curve_side_check(f.denjoy_map().unwrap(), 32);
    assert!(r.max_error <= 1e-12);
    assert!(r.rows.iter().all(|row| row.gap < 0.0));
}

#[test]
fn orbit_convergence() {
    let sys = system();
    let g = map();
    let t = &g.table;
    let r = orbit_convergence_check(&sys, g, t.mu(1) - t.length(1) / 10.0, 20);
    assert!(r.max_rel_error <= 1e-6, "{}", r.max_rel_error);
    let ratio = r.distances[20] / r.distances[0];
    assert!((ratio / (t.length(21) / t.length(1)) - 1.0).abs() < 1e-6);
    let r1 = (r.distances[1] / r.distances[0]) / (t.length(2) / t.length(1));
    assert!((r1 - 1.0).abs() < 1e-9);
    let r0 = orbit_convergence_check(&sys, g, t.mu(1), 5);
    assert!(r0.distances.iter().all(|&d| d == 0.0));
}

#[test]
fn diffusion_on_curve_and_portrait() {
    let sys = system();
    let r = diffusion_probe(&sys, 0.3, 0.0, 1000, &[1e-3], 10);
    assert!(r.max_excursion <= 1e-11, "{}", r.max_excursion);
    assert!(r.crossings[0].first_n.is_none());
    let rows = portrait(&sys, 1, 0, 0.0, 0);
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].theta, rows[0].r), (0.5, sys.curve_height(0.5)));
    let rows = portrait(&sys, 3, 100, 0.0, 10);
    assert_eq!(rows.len(), 10 + 3 * 101);
}
