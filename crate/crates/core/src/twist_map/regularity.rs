//! Second derivative of `zeta_k = h_k + h_(k-1)^(-1) - 2 Id` on each gap, split
//! into the four terms `II + III + IV + V`, and checked against a finite
//! difference of `D zeta_k`.

use serde::Serialize;

use crate::circle::Side;
use crate::circle_map::{DenjoyMap, LocalDiffeo};

pub const GRID_POINTS: usize = 256;
/// Finite-difference step relative to the gap length.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Terms {
    pub ii: f64,
    pub iii: f64,
    pub iv: f64,
    pub v: f64,
}

impl Terms {
    pub fn sum(&self) -> f64 {
        self.ii + self.iii + self.iv + self.v
    }
}

fn d_gamma(h: &LocalDiffeo, s: f64, side: Side) -> f64 {
    h.gamma().map_or(0.0, |g| g.d1(s, side))
}

/// The four terms at local coordinate `u` of gap `k` (`u != l_k / 2`).
pub fn terms(hk: &LocalDiffeo, hp: &LocalDiffeo, u: f64, side: Side) -> Terms {
    let lk = hk.ell;
    let s = u / lk;
    let v = hp.invert(u.clamp(0.0, hp.ell_next)).unwrap_or(f64::NAN);
    let w = v / hp.ell;
    let (kk, kp) = (hk.k_ratio, hp.k_ratio);
    let (ak, ap) = (hk.alpha, hp.alpha);
    let eta = hk.eta();
    let de_s = eta.d1(s, side);
    let de_w = eta.d1(w, side);
    let dgk_s = d_gamma(hk, s, side);
    let dgp_s = d_gamma(hp, s, side);
    let dgp_w = d_gamma(hp, w, side);
    let psi_p = hp.psi(v, side);
    let dpsi_p = hp.curvature(v, side);
    let q = 1.0 / (1.0 + psi_p);
    let ii = ((kk - kp) * de_s + ak * dgk_s - ap * dgp_s) / lk;
    // (l_(k-1)/l_k) D psi_(k-1)(v) (Df_k^(-1) q - 1), Df_k^(-1) = (l_k/l_(k-1)) q
    let scaled = (kp * de_w + ap * dgp_w) / lk;
    let df_inv = lk / hp.ell * q;
    let iii = -scaled * (df_inv * q - 1.0);
    let iv = psi_p * dpsi_p * q * q * q;
    let vv = (kp * (de_s - de_w) + ap * (dgp_s - dgp_w)) / lk;
    Terms { ii, iii, iv, v: vv }
}

/// `zeta_k(u) = Delta_k(u) - Delta_(k-1)(h_(k-1)^(-1) u)`.
pub fn zeta(hk: &LocalDiffeo, hp: &LocalDiffeo, u: f64) -> f64 {
    let v = hp.invert(u.clamp(0.0, hp.ell_next)).unwrap_or(f64::NAN);
    hk.delta(u) - hp.delta(v)
}

/// `D zeta_k(u) = psi_k(u) - psi_(k-1)(v) / (1 + psi_(k-1)(v))`.
pub fn zeta_d1(hk: &LocalDiffeo, hp: &LocalDiffeo, u: f64, side: Side) -> f64 {
    let v = hp.invert(u.clamp(0.0, hp.ell_next)).unwrap_or(f64::NAN);
    let p = hp.psi(v, side);
    hk.psi(u, side) - p / (1.0 + p)
}

/// Richardson-extrapolated central difference of `D zeta_k` with base step `e`.
pub fn zeta_d2_fd(hk: &LocalDiffeo, hp: &LocalDiffeo, u: f64, e: f64, side: Side) -> f64 {
    let c = |h: f64| (zeta_d1(hk, hp, u + h, side) - zeta_d1(hk, hp, u - h, side)) / (2.0 * h);
    (4.0 * c(0.5 * e) - c(e)) / 3.0
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub k: i64,
    pub sup_d2_zeta: f64,
    pub sup_fd: f64,
    pub sup_ii: f64,
    pub sup_iii: f64,
    pub sup_iv: f64,
    pub sup_v: f64,
    pub sup_d1_zeta: f64,
    pub sup_zeta: f64,
    /// max |term sum - finite difference| / sup |term sum|
    pub rel_mismatch: f64,
    /// max |term sum| strictly inside J_k
    pub plateau_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub rows: Vec<RegularityRow>,
    pub global_sup: f64,
    /// max over the gaps other than the apex pair k = 0, 1
    pub off_apex_sup: f64,
    /// max over |k| <= M/2
    pub inner_max: f64,
    /// max over M/2 <= |k| <= M
    pub outer_max: f64,
    pub decays: bool,
    pub max_rel_mismatch: f64,
    pub max_plateau_value: f64,
}

pub fn scan_gap(map: &DenjoyMap, k: i64) -> RegularityRow {
    let hk = map.diffeo(k);
    let hp = map.diffeo(k - 1);
    let l = hk.ell;
    let e = FD_STEP * l;
    let mut row = RegularityRow {
        k,
        sup_d2_zeta: 0.0,
        sup_fd: 0.0,
        sup_ii: 0.0,
        sup_iii: 0.0,
        sup_iv: 0.0,
        sup_v: 0.0,
        sup_d1_zeta: 0.0,
        sup_zeta: 0.0,
        rel_mismatch: 0.0,
        plateau_max: 0.0,
    };
    let mut max_diff = 0.0f64;
    for i in 0..GRID_POINTS {
        let s = (i as f64 + 0.5) / GRID_POINTS as f64;
        let u = s * l;
        let side = if s < 0.5 { Side::Left } else { Side::Right };
        let t = terms(hk, hp, u, side);
        let sum = t.sum();
        let fd = zeta_d2_fd(hk, hp, u, e, side);
        row.sup_d2_zeta = row.sup_d2_zeta.max(sum.abs());
        row.sup_fd = row.sup_fd.max(fd.abs());
        row.sup_ii = row.sup_ii.max(t.ii.abs());
        row.sup_iii = row.sup_iii.max(t.iii.abs());
        row.sup_iv = row.sup_iv.max(t.iv.abs());
        row.sup_v = row.sup_v.max(t.v.abs());
        row.sup_d1_zeta = row.sup_d1_zeta.max(zeta_d1(hk, hp, u, side).abs());
        row.sup_zeta = row.sup_zeta.max(zeta(hk, hp, u).abs());
        max_diff = max_diff.max((sum - fd).abs());
        if s > 0.375 && s < 0.625 {
            row.plateau_max = row.plateau_max.max(sum.abs());
        }
    }
    row.rel_mismatch = if row.sup_d2_zeta > 0.0 { max_diff / row.sup_d2_zeta } else { max_diff };
    row
}

/// Scans every gap `-M < k <= M`, where both `h_k` and `h_(k-1)` are core diffeos.
pub fn second_derivative_scan(map: &DenjoyMap) -> RegularityReport {
    let m = map.table.core_m;
    let rows: Vec<RegularityRow> = (-m + 1..=m).map(|k| scan_gap(map, k)).collect();
    let max_over = |pred: &dyn Fn(i64) -> bool| {
        rows.iter().filter(|r| pred(r.k.abs())).map(|r| r.sup_d2_zeta).fold(0.0, f64::max)
    };
    let half = m / 2;
    let inner_max = max_over(&|a| a <= half);
    let outer_max = max_over(&|a| a >= half);
    RegularityReport {
        global_sup: max_over(&|_| true),
        off_apex_sup: rows.iter().filter(|r| r.k != 0 && r.k != 1).map(|r| r.sup_d2_zeta).fold(0.0, f64::max),
        inner_max,
        outer_max,
        decays: outer_max < inner_max,
        max_rel_mismatch: rows.iter().map(|r| r.rel_mismatch).fold(0.0, f64::max),
        max_plateau_value: rows.iter().map(|r| r.plateau_max).fold(0.0, f64::max),
        rows,
    }
}

pub fn regularity_csv(r: &RegularityReport) -> String {
    let mut s = String::from("k,sup_d2_zeta,sup_fd,sup_II,sup_III,sup_IV,sup_V,sup_d1_zeta,sup_zeta,rel_mismatch\n");
    for row in &r.rows {
        s.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            row.k,
            row.sup_d2_zeta,
            row.sup_fd,
            row.sup_ii,
            row.sup_iii,
            row.sup_iv,
            row.sup_v,
            row.sup_d1_zeta,
            row.sup_zeta,
            row.rel_mismatch
        ));
    }
    s
}
