//! The exact symplectic twist map `f(theta, r) = (theta + r, r + phi(theta + r))`
//! with `phi = g~ + g~^(-1) - 2 Id`, whose invariant curve is the graph of
//! `g - Id`.

pub mod diffusion;
pub mod regularity;
pub mod segments;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{annulus_dist, dist, frac, signed_diff, Side};
use crate::circle_map::{CircleMap, DenjoyMap, RigidRotation};
use crate::report::Check;

/// The circle map generating a twist system.
#[derive(Debug, Clone)]
pub enum Generator {
    Rigid(RigidRotation),
    Denjoy(Arc<DenjoyMap>),
}

impl Generator {
    fn map(&self) -> &dyn CircleMap {
        match self {
            Generator::Rigid(r) => r,
            Generator::Denjoy(d) => d.as_ref(),
        }
    }
}

/// Derivative order for [`TwistSystem::phi_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiOrder {
    Value,
    D1(Side),
    D2(Side),
}

#[derive(Debug, Clone)]
pub struct TwistSystem {
    pub generator: Generator,
}

impl TwistSystem {
    pub fn new(generator: Generator) -> Self {
        TwistSystem { generator }
    }

    pub fn rigid(omega: f64) -> Self {
        TwistSystem { generator: Generator::Rigid(RigidRotation { omega }) }
    }

    pub fn denjoy(map: Arc<DenjoyMap>) -> Self {
        TwistSystem { generator: Generator::Denjoy(map) }
    }

    pub fn circle_map(&self) -> &dyn CircleMap {
        self.generator.map()
    }

    pub fn denjoy_map(&self) -> Option<&DenjoyMap> {
        match &self.generator {
            Generator::Denjoy(d) => Some(d),
            Generator::Rigid(_) => None,
        }
    }

    /// `phi(x) = (g~(x) - x) - (x - g~^(-1)(x))`, from the periodic parts.
    #[inline]
    pub fn phi(&self, x: f64) -> f64 {
        let g = self.circle_map();
        g.displacement(x) - g.inverse_displacement(x)
    }

    pub fn phi_eval(&self, x: f64, order: PhiOrder) -> f64 {
        let g = self.circle_map();
        match order {
            PhiOrder::Value => self.phi(x),
            PhiOrder::D1(side) => g.derivative(x, side) + g.inverse_derivative(x, side) - 2.0,
            PhiOrder::D2(side) => {
                let xh = g.inverse(x);
                let d1 = g.derivative(xh, side);
                g.second_derivative(x, side) - g.second_derivative(xh, side) / (d1 * d1 * d1)
            }
        }
    }

    /// Height of the invariant curve, `g~(theta) - theta`.
    #[inline]
    pub fn curve_height(&self, theta: f64) -> f64 {
        self.circle_map().displacement(theta)
    }

    /// `f(theta, r)` with theta in [0, 1) and r unwrapped.
    #[inline]
    pub fn forward(&self, (theta, r): (f64, f64)) -> (f64, f64) {
        // reducing r first makes f(theta, r + 1) = f(theta, r) + (0, 1) in theta bit for bit
        let t = frac(theta + (r - r.floor()));
        (t, r + self.phi(t))
    }

    /// `f^(-1)(theta, r) = (theta - r + phi(theta), r - phi(theta))`.
    #[inline]
    pub fn backward(&self, (theta, r): (f64, f64)) -> (f64, f64) {
        let p = self.phi(theta);
        (frac(theta - (r - r.floor()) + p), r - p)
    }

    /// `f` on the universal cover: theta is not reduced.
    #[inline]
    pub fn forward_lift(&self, (theta, r): (f64, f64)) -> (f64, f64) {
        let t = theta + r;
        (t, r + self.phi(t))
    }

    #[inline]
    pub fn backward_lift(&self, (theta, r): (f64, f64)) -> (f64, f64) {
        let p = self.phi(theta);
        (theta - r + p, r - p)
    }

    /// Mixed sample of the circle: gap interiors, gap endpoints and uniform points.
    pub fn mixed_samples(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        match self.denjoy_map() {
            None => out.extend((0..n).map(|_| rng.gen::<f64>())),
            Some(d) => {
                let t = &d.table;
                let m = t.core_m;
                for i in 0..n {
                    let k = rng.gen_range(-m..=m);
                    let x = match i % 3 {
                        0 => t.lambda(k) + rng.gen::<f64>() * t.length(k),
                        1 if rng.gen::<bool>() => t.lambda(k),
                        1 => t.right(k),
                        _ => rng.gen::<f64>(),
                    };
                    out.push(frac(x));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    /// max annulus distance between f(theta, g(theta) - theta) and (g(theta), g^2(theta) - g(theta))
    pub max_residual: f64,
    /// same for the curve translated by (0, 1)
    pub max_residual_translated: f64,
    /// max circle distance between the projected image and g(theta)
    pub max_projection_error: f64,
}

pub fn verify_invariant_curve(sys: &TwistSystem, samples: &[f64]) -> InvarianceReport {
    let g = sys.circle_map();
    let mut worst = 0.0f64;
    let mut worst_t = 0.0f64;
    let mut proj = 0.0f64;
    for &theta in samples {
        let r = sys.curve_height(theta);
        let y = g.eval(theta);
        let target = (y, sys.curve_height(y));
        let img = sys.forward((theta, r));
        worst = worst.max(annulus_dist(img, target));
        proj = proj.max(dist(img.0, y));
        let img1 = sys.forward((theta, r + 1.0));
        worst_t = worst_t.max(annulus_dist(img1, (target.0, target.1 + 1.0)));
    }
    InvarianceReport {
        samples: samples.len(),
        max_residual: worst,
        max_residual_translated: worst_t,
        max_projection_error: proj,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearityRow {
    pub k: i64,
    pub slope: f64,
    pub expected_slope: f64,
    /// fitted value at mu_k
    pub intercept: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearityReport {
    pub rows: Vec<LinearityRow>,
    pub max_deviation: f64,
    pub max_slope_error: f64,
}

/// Least-squares line through `(x_i, y_i)`; returns slope, value at 0 and max residual.
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - slope * mx;
    let dev = xs.iter().zip(ys).map(|(x, y)| (y - (c + slope * x)).abs()).fold(0.0, f64::max);
    (slope, c, dev)
}

pub const LINEARITY_POINTS: usize = 64;

/// Affine fit of `phi` on 64 points of each `J_k` with |k|, |k +- 1| <= M.
pub fn phi_linearity_check(sys: &TwistSystem, map: &DenjoyMap) -> LinearityReport {
    let t = &map.table;
    let m = t.core_m;
    let mut rows = Vec::with_capacity((2 * m - 1) as usize);
    for k in -m + 1..m {
        let (lo, hi) = t.middle_segment(k);
        let mu = t.mu(k);
        let xs: Vec<f64> = (0..LINEARITY_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (LINEARITY_POINTS - 1) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|&x| sys.phi(x)).collect();
        let local: Vec<f64> = xs.iter().map(|&x| x - mu).collect();
        let (slope, intercept, dev) = affine_fit(&local, &ys);
        rows.push(LinearityRow { k, slope, expected_slope: map.sequences.linear_slope(k) - 2.0, intercept, max_deviation: dev });
    }
    let max_deviation = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let max_slope_error = rows.iter().map(|r| (r.slope - r.expected_slope).abs()).fold(0.0, f64::max);
    LinearityReport { rows, max_deviation, max_slope_error }
}

/// Structural identities of the twist map on random points.
#[derive(Debug, Clone, Serialize)]
pub struct StructuralReport {
    pub inverse_round_trip: f64,
    pub det_deviation: f64,
    pub twist_deviation: f64,
    /// theta parts of f(theta, r + 1) and f(theta, r) differ (bitwise)
    pub translation_theta_mismatches: usize,
    pub translation_r_deviation: f64,
    pub phi_periodicity: f64,
    /// integral of phi over the circle
    pub phi_mean: f64,
}

pub fn structural_checks(sys: &TwistSystem, n: usize, seed: u64) -> StructuralReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut round = 0.0f64;
    let mut trans_r = 0.0f64;
    let mut trans_theta = 0usize;
    let mut periodic = 0.0f64;
    for _ in 0..n {
        let p = (rng.gen::<f64>(), rng.gen_range(-1.0..2.0));
        let q = sys.backward(sys.forward(p));
        round = round.max(annulus_dist(p, q));
        // dyadic r so that r + 1 is exact
        let r = (rng.gen_range(-1.0f64..2.0) * 1048576.0).round() / 1048576.0;
        let a = sys.forward((p.0, r));
        let b = sys.forward((p.0, r + 1.0));
        if a.0.to_bits() != b.0.to_bits() {
            trans_theta += 1;
        }
        trans_r = trans_r.max((b.1 - a.1 - 1.0).abs());
        periodic = periodic.max((sys.phi(p.0 + 1.0) - sys.phi(p.0)).abs());
    }
    let (det, twist) = jacobian_checks(sys, (n / 10).max(1), seed ^ 0x9e37_79b9);
    StructuralReport {
        inverse_round_trip: round,
        det_deviation: det,
        twist_deviation: twist,
        translation_theta_mismatches: trans_theta,
        translation_r_deviation: trans_r,
        phi_periodicity: periodic,
        phi_mean: phi_mean(sys),
    }
}

pub const JACOBIAN_STEP: f64 = 1e-6;

/// `max |det Df - 1|` and `max |d theta'/dr - 1|` by central differences, at points
/// whose image lies at least 10 steps from every derivative jump of `phi`.
pub fn jacobian_checks(sys: &TwistSystem, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut singular: Vec<f64> = sys.circle_map().singularities().iter().map(|s| s.1).collect();
    singular.sort_by(f64::total_cmp);
    let near = |x: f64| {
        let x = frac(x);
        let i = singular.partition_point(|&s| s < x);
        let guard = 10.0 * JACOBIAN_STEP;
        [i.wrapping_sub(1), i].iter().any(|&j| singular.get(j).is_some_and(|&s| dist(s, x) < guard))
    };
    let h = JACOBIAN_STEP;
    let mut det = 0.0f64;
    let mut twist = 0.0f64;
    let mut done = 0;
    while done < n {
        let p = (rng.gen::<f64>(), rng.gen_range(-0.5..1.5));
        if near(p.0 + p.1) || near(p.0 + p.1 + h) || near(p.0 + p.1 - h) {
            continue;
        }
        let diff = |a: (f64, f64), b: (f64, f64)| (signed_diff(a.0, b.0), a.1 - b.1);
        let dth = diff(sys.forward((p.0 + h, p.1)), sys.forward((p.0 - h, p.1)));
        let dr = diff(sys.forward((p.0, p.1 + h)), sys.forward((p.0, p.1 - h)));
        let (a, c) = (dth.0 / (2.0 * h), dth.1 / (2.0 * h));
        let (b, d) = (dr.0 / (2.0 * h), dr.1 / (2.0 * h));
        det = det.max((a * d - b * c - 1.0).abs());
        twist = twist.max((b - 1.0).abs());
        done += 1;
    }
    (det, twist)
}

/// Integral of `phi` over the circle, by Gauss-Kronrod on the pieces between
/// consecutive breakpoints (gap ends and midpoints) for a DenjoyMap, and on a
/// uniform partition otherwise.
pub fn phi_mean(sys: &TwistSystem) -> f64 {
    let f = |x: f64| sys.phi(x);
    let mut nodes: Vec<f64> = match sys.denjoy_map() {
        None => (0..=64).map(|i| i as f64 / 64.0).collect(),
        Some(d) => {
            let t = &d.table;
            let mut v = vec![0.0, 1.0];
            for &k in t.sorted() {
                if t.length(k) > 1e-14 {
                    for j in 0..=16 {
                        v.push(t.lambda(k) + t.length(k) * j as f64 / 16.0);
                    }
                }
            }
            v
        }
    };
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut parts: Vec<f64> = nodes
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| crate::quadrature::gk15(&f, w[0], w[1]).0)
        .collect();
    parts.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    parts.iter().sum()
}

/// Checks of this module against tolerances.
pub fn invariance_checks(r: &InvarianceReport, tol: f64) -> Vec<Check> {
    vec![
        Check::at_most("invariance_residual", r.max_residual, tol),
        Check::at_most("invariance_residual_translated", r.max_residual_translated, tol),
        Check::at_most("invariance_projection", r.max_projection_error, tol),
    ]
}

#[cfg(test)]
mod tests;
