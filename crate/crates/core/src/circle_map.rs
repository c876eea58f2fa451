//! The Denjoy-type circle homeomorphism `g`. Gap `I_k` is carried onto `I_(k+1)`
//! by `h_k(u) = u + K_k l_k E(u/l_k) + alpha_k l_k G(u/l_k)`, where `E` and `G`
//! are the antiderivatives of the eta and gamma profiles. The residual set is
//! carried by the rotation through the semi-conjugacy, with slope 1.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circle::{frac, Side};
use crate::error::{Error, Result};
use crate::layout::{GapTable, Location};
use crate::profiles::{PlateauProfile, ProfileSet};
use crate::sequences::GapSequences;

/// Root-finder tolerance relative to the image gap length.
pub const INVERSE_TOLERANCE: f64 = 1e-14;
pub const INVERSE_MAX_ITERATIONS: usize = 200;
/// Finite-difference step of the derivative scan.
pub const SCAN_STEP: f64 = 1e-8;
/// One-sided derivatives differing by more than this count as a jump.
pub const SCAN_THRESHOLD: f64 = 1e-5;

/// Which half of each gap carries the derivative jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneSide {
    /// gamma_plus for k >= 1, gamma_minus for k <= 0
    #[default]
    Normal,
    /// gamma_minus for k >= 1, gamma_plus for k <= 0
    Flipped,
}

/// Derivative order for [`LocalDiffeo::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    Value,
    D1(Side),
    D2(Side),
}

/// The map `h_k : [0, l_k] -> [0, l_(k+1)]`.
#[derive(Debug, Clone)]
pub struct LocalDiffeo {
    pub k: i64,
    pub ell: f64,
    pub ell_next: f64,
    pub k_ratio: f64,
    pub alpha: f64,
    eta: PlateauProfile,
    gamma: Option<PlateauProfile>,
    /// one-sided slopes at the midpoint, valid on the whole middle quarter-pair
    slope_left: f64,
    slope_right: f64,
}

impl LocalDiffeo {
    pub fn new(k: i64, ell: f64, ell_next: f64, alpha: f64, eta: PlateauProfile, gamma: Option<PlateauProfile>) -> Self {
        let k_ratio = ell_next / ell - 1.0;
        let mut h = LocalDiffeo { k, ell, ell_next, k_ratio, alpha, eta, gamma, slope_left: 0.0, slope_right: 0.0 };
        h.slope_left = h.slope(0.5 * ell, Side::Left);
        h.slope_right = h.slope(0.5 * ell, Side::Right);
        h
    }

    fn gamma_value(&self, s: f64, side: Side) -> f64 {
        self.gamma.as_ref().map_or(0.0, |g| g.value(s, side))
    }

    pub fn eta(&self) -> &PlateauProfile {
        &self.eta
    }

    pub fn gamma(&self) -> Option<&PlateauProfile> {
        self.gamma.as_ref()
    }

    /// `Delta_k(u) = h_k(u) - u`, without the cancellation.
    pub fn delta(&self, u: f64) -> f64 {
        let s = (u / self.ell).clamp(0.0, 1.0);
        let gam = self.gamma.as_ref().map_or(0.0, |g| g.antiderivative(s));
        self.k_ratio * self.ell * self.eta.antiderivative(s) + self.alpha * self.ell * gam
    }

    /// `psi_k(u) = h_k'(u) - 1`.
    pub fn psi(&self, u: f64, side: Side) -> f64 {
        let s = (u / self.ell).clamp(0.0, 1.0);
        self.k_ratio * self.eta.value(s, side) + self.alpha * self.gamma_value(s, side)
    }

    /// `h_k(u)`. At the midpoint both branches agree.
    pub fn value(&self, u: f64) -> f64 {
        let s = (u / self.ell).clamp(0.0, 1.0);
        let gam = self.gamma.as_ref().map_or(0.0, |g| g.antiderivative(s));
        u + self.k_ratio * self.ell * self.eta.antiderivative(s) + self.alpha * self.ell * gam
    }

    /// `1 + psi_k(u)`, one-sided where it matters.
    pub fn slope(&self, u: f64, side: Side) -> f64 {
        let s = (u / self.ell).clamp(0.0, 1.0);
        1.0 + self.k_ratio * self.eta.value(s, side) + self.alpha * self.gamma_value(s, side)
    }

    /// `psi_k'(u)`.
    pub fn curvature(&self, u: f64, side: Side) -> f64 {
        let s = (u / self.ell).clamp(0.0, 1.0);
        let gam = self.gamma.as_ref().map_or(0.0, |g| g.d1(s, side));
        (self.k_ratio * self.eta.d1(s, side) + self.alpha * gam) / self.ell
    }

    /// Third derivative of `h_k`, `psi_k''(u)`.
    pub fn curvature_d1(&self, u: f64, side: Side) -> f64 {
        let s = (u / self.ell).clamp(0.0, 1.0);
        let gam = self.gamma.as_ref().map_or(0.0, |g| g.d2(s, side));
        (self.k_ratio * self.eta.d2(s, side) + self.alpha * gam) / (self.ell * self.ell)
    }

    /// Checked evaluation; the second derivative exactly at the midpoint needs a side.
    pub fn eval(&self, u: f64, order: DiffOrder) -> Result<f64> {
        if !(0.0..=self.ell).contains(&u) {
            return Err(Error::Domain { value: u, lo: 0.0, hi: self.ell });
        }
        Ok(match order {
            DiffOrder::Value => self.value(u),
            DiffOrder::D1(side) => self.slope(u, side),
            DiffOrder::D2(side) => self.curvature(u, side),
        })
    }

    /// Second derivative without a side, rejected at the midpoint of a gap with a jump.
    pub fn second_derivative(&self, u: f64) -> Result<f64> {
        if self.gamma.is_some() && u == 0.5 * self.ell {
            return Err(Error::OneSidedOnly { t: 0.5 });
        }
        self.eval(u, DiffOrder::D2(Side::Left))
    }

    pub fn midpoint_slopes(&self) -> (f64, f64) {
        (self.slope_left, self.slope_right)
    }

    /// `h_k^(-1)(v)` for `v` in `[0, l_(k+1)]`.
    pub fn invert(&self, v: f64) -> Result<f64> {
        if !(0.0..=self.ell_next).contains(&v) {
            return Err(Error::Domain { value: v, lo: 0.0, hi: self.ell_next });
        }
        let half = 0.5 * self.ell;
        let hm = (1.0 + self.k_ratio) * half;
        let lo_lin = hm - self.slope_left * self.ell / 8.0;
        let hi_lin = hm + self.slope_right * self.ell / 8.0;
        if v >= lo_lin && v <= hm {
            return Ok(half + (v - hm) / self.slope_left);
        }
        if v >= hm && v <= hi_lin {
            return Ok(half + (v - hm) / self.slope_right);
        }
        let (a, b) = if v < lo_lin { (0.0, 0.375 * self.ell) } else { (0.625 * self.ell, self.ell) };
        self.solve(v, a, b)
    }

    fn solve(&self, v: f64, mut a: f64, mut b: f64) -> Result<f64> {
        let tol = INVERSE_TOLERANCE * self.ell_next;
        let (fa, fb) = (self.value(a) - v, self.value(b) - v);
        if fa.abs() <= tol {
            return Ok(a);
        }
        if fb.abs() <= tol {
            return Ok(b);
        }
        let mut u = a + (b - a) * (-fa / (fb - fa)).clamp(0.0, 1.0);
        for _ in 0..INVERSE_MAX_ITERATIONS {
            let f = self.value(u) - v;
            if f.abs() <= tol {
                return Ok(u);
            }
            if f < 0.0 {
                a = u;
            } else {
                b = u;
            }
            if b - a <= 4.0 * f64::EPSILON * self.ell {
                return Ok(u);
            }
            let next = u - f / self.slope(u, Side::Right);
            u = if next > a && next < b { next } else { 0.5 * (a + b) };
        }
        Err(Error::RootFinder { iterations: INVERSE_MAX_ITERATIONS })
    }
}

/// A lift-aware circle homeomorphism with an irrational rotation number.
pub trait CircleMap: Send + Sync {
    /// `g~(x) - x`, periodic.
    fn displacement(&self, x: f64) -> f64;
    /// `x - g~^(-1)(x)`, periodic.
    fn inverse_displacement(&self, x: f64) -> f64;
    /// One-sided `g'(x)`.
    fn derivative(&self, x: f64, side: Side) -> f64;
    /// One-sided `g''(x)`.
    fn second_derivative(&self, x: f64, side: Side) -> f64;
    /// Mid-gap points where `g'` jumps, as `(k, x, jump)`.
    fn singularities(&self) -> Vec<(i64, f64, f64)>;

    fn eval(&self, x: f64) -> f64 {
        frac(x + self.displacement(x))
    }

    fn lift(&self, x: f64) -> f64 {
        x + self.displacement(x)
    }

    fn inverse(&self, x: f64) -> f64 {
        frac(x - self.inverse_displacement(x))
    }

    fn inverse_lift(&self, x: f64) -> f64 {
        x - self.inverse_displacement(x)
    }

    /// `(g^(-1))'(x) = 1/g'(g^(-1)(x))`; increasing maps preserve sides.
    fn inverse_derivative(&self, x: f64, side: Side) -> f64 {
        1.0 / self.derivative(self.inverse(x), side)
    }
}

/// `R_omega`, the integrable reference.
#[derive(Debug, Clone, Copy)]
pub struct RigidRotation {
    pub omega: f64,
}

impl CircleMap for RigidRotation {
    fn displacement(&self, _x: f64) -> f64 {
        self.omega
    }

    fn inverse_displacement(&self, _x: f64) -> f64 {
        self.omega
    }

    fn derivative(&self, _x: f64, _side: Side) -> f64 {
        1.0
    }

    fn second_derivative(&self, _x: f64, _side: Side) -> f64 {
        0.0
    }

    fn singularities(&self) -> Vec<(i64, f64, f64)> {
        Vec::new()
    }
}

/// The constructed homeomorphism.
#[derive(Debug, Clone)]
pub struct DenjoyMap {
    pub sequences: Arc<GapSequences>,
    pub profiles: Arc<ProfileSet>,
    pub table: Arc<GapTable>,
    pub zone: ZoneSide,
    /// `h_k` for `-N <= k < N`.
    diffeos: Vec<LocalDiffeo>,
}

impl DenjoyMap {
    pub fn new(sequences: Arc<GapSequences>, profiles: Arc<ProfileSet>, zone: ZoneSide) -> Result<Self> {
        let table = Arc::new(GapTable::build(&sequences)?);
        Self::with_table(sequences, profiles, table, zone)
    }

    pub fn with_table(
        sequences: Arc<GapSequences>,
        profiles: Arc<ProfileSet>,
        table: Arc<GapTable>,
        zone: ZoneSide,
    ) -> Result<Self> {
        let n = table.tail_n;
        let mut diffeos = Vec::with_capacity(2 * n as usize);
        for k in -n..n {
            let (alpha, gamma) = if table.is_core(k) {
                let positive = (k >= 1) == (zone == ZoneSide::Normal);
                let g = if positive { &profiles.gamma_plus } else { &profiles.gamma_minus };
                (sequences.alpha[k], Some(g.clone()))
            } else {
                (0.0, None)
            };
            let h = LocalDiffeo::new(k, table.length(k), table.length(k + 1), alpha, profiles.eta.clone(), gamma);
            let min_slope = 1.0 - h.k_ratio.abs() * profiles.eta_sup - alpha.abs() * profiles.gamma_sup;
            if !(min_slope > 0.0) {
                return Err(Error::NotMonotone { k, min_slope });
            }
            diffeos.push(h);
        }
        Ok(DenjoyMap { sequences, profiles, table, zone, diffeos })
    }

    /// `h_k`, for `-N <= k < N`.
    pub fn diffeo(&self, k: i64) -> &LocalDiffeo {
        &self.diffeos[(k + self.table.tail_n) as usize]
    }

    pub fn omega(&self) -> f64 {
        self.table.omega
    }

    /// `g(x)` in [0, 1).
    pub fn forward_point(&self, x: f64) -> f64 {
        let t = &*self.table;
        let n = t.tail_n;
        let y = match t.locate(x) {
            Location::Gap { k, u } if k < n => t.lambda(k + 1) + self.diffeo(k).value(u),
            Location::Gap { k, .. } => t.distribution(t.orbit_point(k) + t.omega),
            Location::Residual { after, t: dt, .. } if after < n => t.right(after + 1) + dt,
            Location::Residual { after, t: dt, .. } => {
                t.distribution(t.orbit_point(after) + t.omega + dt / t.residual_mass)
            }
        };
        frac(y)
    }

    /// `g^(-1)(y)` in [0, 1).
    pub fn backward_point(&self, y: f64) -> f64 {
        let t = &*self.table;
        let n = t.tail_n;
        let x = match t.locate(y) {
            Location::Gap { k, u } if k > -n => {
                let h = self.diffeo(k - 1);
                t.lambda(k - 1) + h.invert(u.min(h.ell_next)).expect("root finder failed inside a gap")
            }
            Location::Gap { k, .. } => t.distribution(t.orbit_point(k) - t.omega),
            Location::Residual { after, t: dt, .. } if after > -n => t.right(after - 1) + dt,
            Location::Residual { after, t: dt, .. } => {
                t.distribution(t.orbit_point(after) - t.omega + dt / t.residual_mass)
            }
        };
        frac(x)
    }

    /// [`Self::backward_point`] with root-finder failures surfaced.
    pub fn try_backward_point(&self, y: f64) -> Result<f64> {
        let t = &*self.table;
        if let Location::Gap { k, u } = t.locate(y) {
            if k > -t.tail_n {
                let h = self.diffeo(k - 1);
                return Ok(frac(t.lambda(k - 1) + h.invert(u.min(h.ell_next))?));
            }
        }
        Ok(self.backward_point(y))
    }

    /// Location of `x` for derivative purposes: `Some((k, u))` inside a gap with a successor.
    fn gap_coordinate(&self, x: f64) -> Option<(i64, f64)> {
        match self.table.locate(x) {
            Location::Gap { k, u } if k < self.table.tail_n => Some((k, u)),
            _ => None,
        }
    }

    pub fn jump_table(&self) -> Vec<JumpRow> {
        derivative_jump_table(self)
    }
}

impl CircleMap for DenjoyMap {
    fn displacement(&self, x: f64) -> f64 {
        let d = frac(self.forward_point(x) - frac(x));
        if d == 0.0 {
            1.0
        } else {
            d
        }
    }

    fn inverse_displacement(&self, y: f64) -> f64 {
        let d = frac(frac(y) - self.backward_point(y));
        if d == 0.0 {
            1.0
        } else {
            d
        }
    }

    fn derivative(&self, x: f64, side: Side) -> f64 {
        match self.gap_coordinate(x) {
            Some((k, u)) => {
                let h = self.diffeo(k);
                // u is an offset from lambda_k; the exact midpoint is matched by value
                if (u - 0.5 * h.ell).abs() <= 4.0 * f64::EPSILON * frac(x).max(h.ell) {
                    h.slope(0.5 * h.ell, side)
                } else {
                    h.slope(u, side)
                }
            }
            None => 1.0,
        }
    }

    fn second_derivative(&self, x: f64, side: Side) -> f64 {
        match self.gap_coordinate(x) {
            Some((k, u)) => self.diffeo(k).curvature(u, side),
            None => 0.0,
        }
    }

    fn singularities(&self) -> Vec<(i64, f64, f64)> {
        let m = self.table.core_m;
        (-m..=m)
            .map(|k| {
                let (l, r) = self.diffeo(k).midpoint_slopes();
                (k, self.table.mu(k), r - l)
            })
            .collect()
    }
}

/// `(g~^n(x0) - x0)/n`, with the winding counted exactly.
pub fn rotation_number_estimate(g: &dyn CircleMap, x0: f64, n: usize) -> f64 {
    assert!(n >= 1);
    let mut p = frac(x0);
    let base = x0 - p;
    let mut winding = 0i64;
    for _ in 0..n {
        let next = p + g.displacement(p);
        let w = next.floor();
        winding += w as i64;
        p = next - w;
    }
    ((winding as f64) + (p - (x0 - base))) / n as f64
}

/// One iterate of an orbit dump.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitPoint {
    pub n: usize,
    pub x: f64,
    pub lift: f64,
}

pub fn orbit(g: &dyn CircleMap, x0: f64, n: usize) -> Vec<OrbitPoint> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = frac(x0);
    let mut winding = x0.floor();
    out.push(OrbitPoint { n: 0, x: p, lift: winding + p });
    for i in 1..=n {
        let next = p + g.displacement(p);
        let w = next.floor();
        winding += w;
        p = next - w;
        out.push(OrbitPoint { n: i, x: p, lift: winding + p });
    }
    out
}

pub fn orbit_csv(points: &[OrbitPoint]) -> String {
    let mut s = String::from("n,x,lift\n");
    for p in points {
        s.push_str(&format!("{},{:e},{:e}\n", p.n, p.x, p.lift));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct WanderingReport {
    pub n_max: usize,
    /// max endpoint distance between g^n(I_0) and the stored I_n, both directions
    pub forward_deviation: f64,
    pub backward_deviation: f64,
    /// lengths l_n strictly decrease in |n| along both half-orbits
    pub lengths_decrease: bool,
    pub pass: bool,
}

pub fn wandering_interval_check(g: &DenjoyMap, n_max: usize, tol: f64) -> Result<WanderingReport> {
    let t = &*g.table;
    if n_max as i64 > t.core_m {
        return Err(Error::InvalidParameter { name: "n_max", reason: format!("{n_max} exceeds M = {}", t.core_m) });
    }
    let d = crate::circle::dist;
    let (mut a, mut b) = (t.lambda(0), t.right(0));
    let (mut c, mut e) = (a, b);
    let mut fwd = 0.0f64;
    let mut bwd = 0.0f64;
    for n in 1..=n_max as i64 {
        a = g.forward_point(a);
        b = g.forward_point(b);
        fwd = fwd.max(d(a, t.lambda(n))).max(d(b, t.right(n)));
        c = g.backward_point(c);
        e = g.backward_point(e);
        bwd = bwd.max(d(c, t.lambda(-n))).max(d(e, t.right(-n)));
    }
    let lengths_decrease = (0..n_max as i64).all(|n| t.length(n + 1) < t.length(n) && t.length(-n - 1) < t.length(-n));
    let pass = fwd <= tol && bwd <= tol && lengths_decrease;
    Ok(WanderingReport { n_max, forward_deviation: fwd, backward_deviation: bwd, lengths_decrease, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpRow {
    pub k: i64,
    pub left: f64,
    pub right: f64,
    pub jump: f64,
    /// `alpha_k` for k >= 1 and `-alpha_k` for k <= 0 in the normal zone; negated when flipped.
    pub expected: f64,
}

pub fn derivative_jump_table(g: &DenjoyMap) -> Vec<JumpRow> {
    let m = g.table.core_m;
    let flip = if g.zone == ZoneSide::Normal { 1.0 } else { -1.0 };
    (-m..=m)
        .map(|k| {
            let h = g.diffeo(k);
            let (left, right) = h.midpoint_slopes();
            let sign = if k >= 1 { 1.0 } else { -1.0 };
            JumpRow { k, left, right, jump: right - left, expected: flip * sign * h.alpha }
        })
        .collect()
}

/// Second-order one-sided finite-difference derivatives of the lift at `x`.
pub fn one_sided_fd(g: &dyn CircleMap, x: f64, h: f64) -> (f64, f64) {
    let d0 = g.displacement(x);
    let step = |s: f64| {
        let hh = (x + s) - x;
        (hh, g.displacement(x + s) - d0)
    };
    // three-point formula on the nodes 0, a, b
    let slope = |(a, ra): (f64, f64), (b, rb): (f64, f64)| (b * b * ra - a * a * rb) / (a * b * (b - a));
    let left = 1.0 + slope(step(-h), step(-2.0 * h));
    let right = 1.0 + slope(step(h), step(2.0 * h));
    (left, right)
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeScan {
    pub points: usize,
    pub threshold: f64,
    /// scan points where the one-sided derivatives differ by more than the threshold
    pub detected: Vec<(f64, f64)>,
    /// all detections sit on a mid-gap singularity
    pub only_midpoints: bool,
    /// every singularity in the scan was detected with the right jump
    pub all_midpoints_found: bool,
    pub max_jump_error: f64,
    pub pass: bool,
}

/// Scans one-sided finite-difference derivatives of `g` at `points` points: every
/// core midpoint plus a grid on the circle and a sweep through the gap interiors.
pub fn derivative_scan(g: &DenjoyMap, points: usize, step: f64, threshold: f64) -> DerivativeScan {
    let t = &*g.table;
    let sing = g.singularities();
    let expected: Vec<f64> = derivative_jump_table(g).iter().map(|r| r.expected).collect();
    let mut xs: Vec<(f64, Option<usize>)> = sing.iter().enumerate().map(|(i, s)| (s.1, Some(i))).collect();
    let rest = points.saturating_sub(xs.len());
    let grid = rest / 2;
    for i in 0..grid {
        xs.push(((i as f64 + 0.5) / grid as f64, None));
    }
    let m = t.core_m;
    let span = (2 * m + 1) as usize;
    for i in 0..rest - grid {
        let k = (i % span) as i64 - m;
        // Weyl sequence for the in-gap offset, kept off the exact midpoint
        let mut s = frac(0.5 + (i as f64 + 1.0) * 0.754877666246693);
        if (s - 0.5).abs() < 1e-3 {
            s += 0.01;
        }
        xs.push((t.lambda(k) + s * t.length(k), None));
    }
    let mut detected = Vec::new();
    let mut only_midpoints = true;
    let mut found = vec![false; sing.len()];
    let mut max_jump_error = 0.0f64;
    for &(x, mid) in &xs {
        let (l, r) = one_sided_fd(g, x, step);
        let jump = r - l;
        if let Some(i) = mid {
            max_jump_error = max_jump_error.max((jump - expected[i]).abs());
        }
        if jump.abs() > threshold {
            detected.push((x, jump));
            match mid {
                Some(i) => found[i] = true,
                None => only_midpoints = false,
            }
        }
    }
    let all_midpoints_found = found.iter().all(|&f| f);
    DerivativeScan {
        points: xs.len(),
        threshold,
        detected,
        only_midpoints,
        all_midpoints_found,
        max_jump_error,
        pass: only_midpoints && all_midpoints_found,
    }
}
