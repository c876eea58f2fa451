//! The affine stable segments `S~_k` (k >= 1) and unstable segments `U~_k`
//! (k <= 0) through `(mu_k, mu_(k+1) - mu_k)` with slope `l_(k+1)/l_k - 1`, on
//! which `f` (resp. `f^(-1)`) acts as a linear contraction.

use serde::Serialize;

use super::TwistSystem;
use crate::circle::{frac, signed_diff, Side};
use crate::circle_map::{CircleMap, DenjoyMap, ZoneSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldSegment {
    pub k: i64,
    pub kind: SegmentKind,
    /// `(mu_k, g~(mu_k) - mu_k)`
    pub base: (f64, f64),
    pub slope: f64,
    /// theta range, `J_k`
    pub domain: (f64, f64),
}

impl ManifoldSegment {
    /// Height of the supporting line at `x` (a point near `mu_k`).
    pub fn height(&self, x: f64) -> f64 {
        self.base.1 + self.slope * signed_diff(x, self.base.0)
    }

    pub fn point(&self, x: f64) -> (f64, f64) {
        (frac(x), self.height(x))
    }

    /// Endpoints and base point.
    pub fn markers(&self) -> [(f64, f64); 3] {
        [self.point(self.domain.0), self.base, self.point(self.domain.1)]
    }

    /// `n` evenly spaced points, endpoints included.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let (a, b) = self.domain;
        (0..n).map(|i| self.point(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
    }
}

/// `S~_k` for k >= 1 or `U~_k` for k <= 0, from the affine formula.
pub fn manifold_segment(map: &DenjoyMap, k: i64) -> ManifoldSegment {
    let t = &map.table;
    let mu = t.mu(k);
    let kind = if k >= 1 { SegmentKind::Stable } else { SegmentKind::Unstable };
    ManifoldSegment {
        k,
        kind,
        base: (mu, map.displacement(mu)),
        slope: t.length(k + 1) / t.length(k) - 1.0,
        domain: t.middle_segment(k),
    }
}

/// Side of `mu_k` on which the segment lies on the invariant curve.
pub fn on_curve_side(map: &DenjoyMap, k: i64) -> Side {
    match (k >= 1, map.zone == ZoneSide::Normal) {
        (true, true) | (false, false) => Side::Left,
        _ => Side::Right,
    }
}

/// Marker triple `[end, base, end]` carried along an orbit.
pub type Markers = [(f64, f64); 3];

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMember {
    /// index in the family: `S~_k = f^(k-1)(S~_1)` or `U~_k = f^k(U~_0)`
    pub k: i64,
    pub kind: SegmentKind,
    pub markers: Markers,
    /// distance of the base marker from the segment through the end markers
    pub collinearity: f64,
    /// whether the map producing this member is affine on the previous member
    pub linearity_guaranteed: bool,
}

fn collinearity(m: &Markers) -> f64 {
    let (a, b, c) = (m[0], m[1], m[2]);
    let (ux, uy) = (signed_diff(c.0, a.0), c.1 - a.1);
    let (vx, vy) = (signed_diff(b.0, a.0), b.1 - a.1);
    let len = ux.hypot(uy);
    if len == 0.0 {
        0.0
    } else {
        (ux * vy - uy * vx).abs() / len
    }
}

/// `S~_k = f^(k-1)(S~_1)` for `k = 0, -1, ..., 1 - n` and
/// `U~_k = f^k(U~_0)` for `k = 1, ..., n`.
pub fn extend_family(sys: &TwistSystem, map: &DenjoyMap, n: usize) -> Vec<FamilyMember> {
    let mut out = Vec::with_capacity(2 * n);
    let mut s = manifold_segment(map, 1).markers();
    let mut u = manifold_segment(map, 0).markers();
    for i in 1..=n as i64 {
        s = s.map(|p| sys.backward(p));
        u = u.map(|p| sys.forward(p));
        out.push(FamilyMember {
            k: 1 - i,
            kind: SegmentKind::Stable,
            markers: s,
            collinearity: collinearity(&s),
            linearity_guaranteed: i == 1,
        });
        out.push(FamilyMember {
            k: i,
            kind: SegmentKind::Unstable,
            markers: u,
            collinearity: collinearity(&u),
            linearity_guaranteed: i == 1,
        });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifoldReport {
    pub k_max: i64,
    /// max distance of f(S~_k) sample points from S~_(k+1)
    pub stable_deviation: f64,
    /// max |theta-length ratio - l_(k+1)/l_k|
    pub stable_ratio_error: f64,
    /// max distance of f^(-1)(U~_k) sample points from U~_(k-1)
    pub unstable_deviation: f64,
    pub unstable_ratio_error: f64,
    /// max distance of f(markers of S~_k) from the markers of S~_(k+1), and mirrored
    pub marker_deviation: f64,
    /// max distance of f(base_k) from base_(k+1)
    pub base_orbit_deviation: f64,
    /// max vertical distance of the on-curve half of each segment from the curve
    pub on_curve_deviation: f64,
    /// max collinearity defect where linearity is guaranteed
    pub family_collinearity: f64,
}

pub const SEGMENT_SAMPLES: usize = 16;

fn segment_distance(seg: &ManifoldSegment, p: (f64, f64)) -> f64 {
    let (lo, hi) = seg.domain;
    let x = seg.base.0 + signed_diff(p.0, seg.base.0);
    let outside = (lo - x).max(x - hi).max(0.0);
    (p.1 - seg.height(p.0)).abs().max(outside)
}

fn theta_span(pts: &[(f64, f64)]) -> f64 {
    signed_diff(pts[pts.len() - 1].0, pts[0].0)
}

pub fn manifold_iterate_check(sys: &TwistSystem, map: &DenjoyMap, k_max: i64) -> ManifoldReport {
    let t = &map.table;
    let k_max = k_max.min(t.core_m - 1);
    let mut r = ManifoldReport {
        k_max,
        stable_deviation: 0.0,
        stable_ratio_error: 0.0,
        unstable_deviation: 0.0,
        unstable_ratio_error: 0.0,
        marker_deviation: 0.0,
        base_orbit_deviation: 0.0,
        on_curve_deviation: 0.0,
        family_collinearity: 0.0,
    };
    let d = crate::circle::annulus_dist;
    for k in 1..=k_max {
        let s = manifold_segment(map, k);
        let next = manifold_segment(map, k + 1);
        let pts = s.sample(SEGMENT_SAMPLES);
        let img: Vec<_> = pts.iter().map(|&p| sys.forward(p)).collect();
        for &p in &img {
            r.stable_deviation = r.stable_deviation.max(segment_distance(&next, p));
        }
        let ratio = theta_span(&img) / theta_span(&pts);
        r.stable_ratio_error = r.stable_ratio_error.max((ratio - t.length(k + 1) / t.length(k)).abs());
        for (a, b) in s.markers().iter().zip(next.markers()) {
            r.marker_deviation = r.marker_deviation.max(d(sys.forward(*a), b));
        }
        r.base_orbit_deviation = r.base_orbit_deviation.max(d(sys.forward(s.base), next.base));
        r.on_curve_deviation = r.on_curve_deviation.max(on_curve_defect(map, &s));
    }
    for k in (1 - k_max)..=0 {
        let u = manifold_segment(map, k);
        let prev = manifold_segment(map, k - 1);
        let pts = u.sample(SEGMENT_SAMPLES);
        let img: Vec<_> = pts.iter().map(|&p| sys.backward(p)).collect();
        for &p in &img {
            r.unstable_deviation = r.unstable_deviation.max(segment_distance(&prev, p));
        }
        let ratio = theta_span(&img) / theta_span(&pts);
        r.unstable_ratio_error = r.unstable_ratio_error.max((ratio - t.length(k - 1) / t.length(k)).abs());
        for (a, b) in u.markers().iter().zip(prev.markers()) {
            r.marker_deviation = r.marker_deviation.max(d(sys.backward(*a), b));
        }
        r.base_orbit_deviation = r.base_orbit_deviation.max(d(sys.backward(u.base), prev.base));
        r.on_curve_deviation = r.on_curve_deviation.max(on_curve_defect(map, &u));
    }
    r.family_collinearity = extend_family(sys, map, 1)
        .iter()
        .filter(|m| m.linearity_guaranteed)
        .map(|m| m.collinearity)
        .fold(0.0, f64::max);
    r
}

/// Max vertical distance between the segment and the curve on its on-curve half.
fn on_curve_defect(map: &DenjoyMap, seg: &ManifoldSegment) -> f64 {
    let (lo, hi) = seg.domain;
    let mu = seg.base.0;
    let (a, b) = match on_curve_side(map, seg.k) {
        Side::Left => (lo, mu),
        Side::Right => (mu, hi),
    };
    (0..=SEGMENT_SAMPLES)
        .map(|i| {
            let x = a + (b - a) * i as f64 / SEGMENT_SAMPLES as f64;
            (map.displacement(x) - seg.height(x)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SideRow {
    pub k: i64,
    pub x: f64,
    /// curve height minus segment height
    pub gap: f64,
    /// `alpha_k (x - mu_k)`
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSideReport {
    pub rows: Vec<SideRow>,
    pub max_error: f64,
    /// `+1` when the segments lie under the curve, `-1` when above
    pub orientation: f64,
    /// min of `orientation * gap` over the open off-curve halves
    pub min_signed_gap: f64,
    /// gap at the base point of S~_1
    pub base_gap: f64,
}

/// Compares the curve with `S~_1` and `U~_0` on their off-curve halves.
pub fn curve_side_check(map: &DenjoyMap, samples: usize) -> CurveSideReport {
    let t = &map.table;
    let orientation = if map.zone == ZoneSide::Normal { 1.0 } else { -1.0 };
    let mut rows = Vec::new();
    for k in [1, 0] {
        let seg = manifold_segment(map, k);
        let mu = seg.base.0;
        let eighth = t.length(k) / 8.0;
        let dir = match on_curve_side(map, k) {
            Side::Left => 1.0,
            Side::Right => -1.0,
        };
        let alpha = map.sequences.alpha[k];
        for i in 1..=samples {
            let x = mu + dir * eighth * i as f64 / (samples + 1) as f64;
            let gap = map.displacement(x) - seg.height(x);
            rows.push(SideRow { k, x, gap, expected: alpha * (x - mu) });
        }
    }
    let s1 = manifold_segment(map, 1);
    CurveSideReport {
        max_error: rows.iter().map(|r| (r.gap - r.expected).abs()).fold(0.0, f64::max),
        min_signed_gap: rows.iter().map(|r| orientation * r.gap).fold(f64::INFINITY, f64::min),
        orientation,
        base_gap: map.displacement(s1.base.0) - s1.height(s1.base.0),
        rows,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub n: usize,
    /// theta-distances `d_j` between the orbits of `y` and of the base point
    pub distances: Vec<f64>,
    /// max over j of |(d_j / d_0) / (l_(j+1) / l_1) - 1|
    pub max_rel_error: f64,
}

/// Follows `y = S~_1(x)` and the base point `x_1` for `n` steps.
pub fn orbit_convergence_check(sys: &TwistSystem, map: &DenjoyMap, x: f64, n: usize) -> ConvergenceReport {
    let t = &map.table;
    let seg = manifold_segment(map, 1);
    let mut y = seg.point(x);
    let mut b = seg.base;
    let mut distances = vec![signed_diff(y.0, b.0).abs()];
    let mut worst = 0.0f64;
    for j in 1..=n {
        y = sys.forward(y);
        b = sys.forward(b);
        let dj = signed_diff(y.0, b.0).abs();
        distances.push(dj);
        if distances[0] > 0.0 {
            let expect = t.length(j as i64 + 1) / t.length(1);
            worst = worst.max((dj / distances[0] / expect - 1.0).abs());
        }
    }
    ConvergenceReport { n, distances, max_rel_error: worst }
}

/// CSV of base segments and the extended family markers.
pub fn segments_csv(sys: &TwistSystem, map: &DenjoyMap, k_max: i64, family: usize) -> String {
    let mut s = String::from("family,kind,k,theta0,r0,theta_mid,r_mid,theta1,r1\n");
    let row = |s: &mut String, fam: &str, kind: SegmentKind, k: i64, m: &Markers| {
        let kind = match kind {
            SegmentKind::Stable => "stable",
            SegmentKind::Unstable => "unstable",
        };
        s.push_str(&format!(
            "{fam},{kind},{k},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            m[0].0, m[0].1, m[1].0, m[1].1, m[2].0, m[2].1
        ));
    };
    for k in (1 - k_max)..=k_max {
        let seg = manifold_segment(map, k);
        row(&mut s, "base", seg.kind, k, &seg.markers());
    }
    for m in extend_family(sys, map, family) {
        row(&mut s, "extended", m.kind, m.k, &m.markers);
    }
    s
}
