//! Scalar sequences of the construction: gap lengths `ell_k`, ratios
//! `K_k = ell_(k+1)/ell_k - 1`, `m_k = 1 + K_k + 1/(1 + K_(k-1))`, and the
//! coupled `alpha_k` / `beta_k = K_k + alpha_k` recurrence that makes
//! `h_k + h_(k-1)^(-1)` linear on the middle of every gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Terms summed directly when normalizing the gap lengths; the rest is an integral tail.
pub const NORMALIZER_TERMS: u64 = 1_000_000;

/// A real sequence indexed by a contiguous integer range `lo..=hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZVec {
    lo: i64,
    data: Vec<f64>,
}

impl ZVec {
    pub fn from_fn(lo: i64, hi: i64, f: impl FnMut(i64) -> f64) -> Self {
        ZVec { lo, data: (lo..=hi).map(f).collect() }
    }

    pub fn empty() -> Self {
        ZVec { lo: 0, data: Vec::new() }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.data.len() as i64 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.lo && k <= self.hi()
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        if self.contains(k) {
            Some(self.data[(k - self.lo) as usize])
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.data.iter().enumerate().map(move |(i, &v)| (self.lo + i as i64, v))
    }
}

impl std::ops::Index<i64> for ZVec {
    type Output = f64;

    fn index(&self, k: i64) -> &f64 {
        assert!(self.contains(k), "index {k} outside {}..={}", self.lo, self.hi());
        &self.data[(k - self.lo) as usize]
    }
}

/// Rule for the seed `alpha_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha1Policy {
    /// `alpha_1 = |K_1| / 2`
    HalfAbsK1,
    Fixed(f64),
}

/// Construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqParams {
    /// Target rotation number.
    pub omega: f64,
    pub delta: f64,
    pub big_c: f64,
    /// Only used by the estimate checks.
    pub big_b: f64,
    /// Gaps are tracked for |k| <= truncation_m.
    pub truncation_m: usize,
    pub alpha1_policy: Alpha1Policy,
}

impl Default for SeqParams {
    fn default() -> Self {
        SeqParams {
            omega: (5f64.sqrt() - 1.0) / 2.0,
            delta: 0.5,
            big_c: 100.0,
            big_b: 10.0,
            truncation_m: 500,
            alpha1_policy: Alpha1Policy::HalfAbsK1,
        }
    }
}

impl SeqParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::DivergentSum { delta: self.delta });
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidParameter { name: "omega", reason: format!("{} not in (0, 1)", self.omega) });
        }
        if !(self.big_c >= 10.0) || !self.big_c.is_finite() {
            return Err(Error::InvalidParameter { name: "big_c", reason: format!("{} < 10", self.big_c) });
        }
        if !(self.big_b >= 3.0) {
            return Err(Error::InvalidParameter { name: "big_b", reason: format!("{} < 3", self.big_b) });
        }
        if self.truncation_m < 8 {
            return Err(Error::InvalidParameter {
                name: "truncation_m",
                reason: format!("{} < 8", self.truncation_m),
            });
        }
        if self.truncation_m > 1_000_000 {
            return Err(Error::InvalidParameter {
                name: "truncation_m",
                reason: "orbit points are not resolvable in double precision beyond 10^6".into(),
            });
        }
        Ok(())
    }

    /// Unnormalized gap length `1 / ((|k| + C) log(|k| + C)^(1 + delta))`.
    pub fn raw_length(&self, k: i64) -> f64 {
        let x = k.unsigned_abs() as f64 + self.big_c;
        1.0 / (x * x.ln().powf(1.0 + self.delta))
    }
}

/// The seeds of the alpha recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seeds {
    pub alpha1: f64,
    pub alpha0: f64,
    /// `1/(1 + K_0) + 1 + K_1 + alpha_1`, the value that replaces `m_1`.
    pub m1_adjusted: f64,
}

/// Derived sequences. Fields fill in stage by stage.
#[derive(Debug, Clone, Serialize)]
pub struct GapSequences {
    pub params: SeqParams,
    /// Normalizer making the full (untruncated) sum of lengths equal 1.
    pub a_c: f64,
    /// `ell[k]` for |k| <= M + 1.
    pub ell: ZVec,
    /// `K[k]` for -M-1 <= k <= M.
    pub k_ratio: ZVec,
    /// `m[k]` for |k| <= M.
    pub m: ZVec,
    pub seeds: Option<Seeds>,
    /// `alpha[k]`, `beta[k]` for |k| <= M.
    pub alpha: ZVec,
    pub beta: ZVec,
}

/// Sum of the unnormalized lengths over all of Z: direct terms up to
/// [`NORMALIZER_TERMS`] plus the midpoint-rule integral of the tail.
pub fn full_length_sum(p: &SeqParams) -> f64 {
    let n = NORMALIZER_TERMS;
    // smallest terms first
    let mut acc = 0.0f64;
    for k in (1..=n).rev() {
        acc += p.raw_length(k as i64);
    }
    let tail = 1.0 / (p.delta * ((n as f64 + 0.5 + p.big_c).ln()).powf(p.delta));
    p.raw_length(0) + 2.0 * (acc + tail)
}

pub fn build_gap_lengths(p: &SeqParams) -> Result<GapSequences> {
    p.validate()?;
    let a_c = 1.0 / full_length_sum(p);
    let m = p.truncation_m as i64;
    let ell = ZVec::from_fn(-m - 1, m + 1, |k| a_c * p.raw_length(k));
    Ok(GapSequences {
        params: p.clone(),
        a_c,
        ell,
        k_ratio: ZVec::empty(),
        m: ZVec::empty(),
        seeds: None,
        alpha: ZVec::empty(),
        beta: ZVec::empty(),
    })
}

pub fn build_ratio_sequences(mut g: GapSequences) -> GapSequences {
    let m = g.params.truncation_m as i64;
    let ell = &g.ell;
    g.k_ratio = ZVec::from_fn(-m - 1, m, |k| ell[k + 1] / ell[k] - 1.0);
    let kr = &g.k_ratio;
    g.m = ZVec::from_fn(-m, m, |k| 1.0 + kr[k] + 1.0 / (1.0 + kr[k - 1]));
    g
}

/// Solves the head relation `1/(1 + K_0 + alpha_0) = 1/(1 + K_0) + alpha_1` for
/// `alpha_0` without checking admissibility of `alpha_1`.
pub fn seeds_from_alpha1(g: &GapSequences, alpha1: f64) -> Seeds {
    let k0 = g.k_ratio[0];
    let k1 = g.k_ratio[1];
    let inv = 1.0 / (1.0 + k0);
    Seeds { alpha1, alpha0: 1.0 / (inv + alpha1) - 1.0 - k0, m1_adjusted: inv + 1.0 + k1 + alpha1 }
}

/// Upper end of the admissible seed range, `B/(1 + C) - K_1`.
pub fn alpha1_upper_bound(g: &GapSequences) -> f64 {
    g.params.big_b / (1.0 + g.params.big_c) - g.k_ratio[1]
}

pub fn seed_alphas(g: &GapSequences, p: &SeqParams) -> Result<Seeds> {
    let alpha1 = match p.alpha1_policy {
        Alpha1Policy::HalfAbsK1 => 0.5 * g.k_ratio[1].abs(),
        Alpha1Policy::Fixed(a) => a,
    };
    let upper = alpha1_upper_bound(g);
    if !(alpha1 > 0.0 && alpha1 <= upper) {
        return Err(Error::SeedRejected { alpha1, upper });
    }
    Ok(seeds_from_alpha1(g, alpha1))
}

/// Extends the seeds to all |k| <= M: forward
/// `1 + beta_(k+1) = m_(k+1) - 1/(1 + beta_k)` for k >= 1 and backward
/// `1 + beta_k = 1/(m_(k+1) - (1 + beta_(k+1)))` for k <= -1.
pub fn extend_alphas(mut g: GapSequences, seeds: Seeds) -> Result<GapSequences> {
    let m = g.params.truncation_m as i64;
    let kr = &g.k_ratio;
    let mut one_plus_beta = vec![0.0f64; (2 * m + 1) as usize];
    let idx = |k: i64| (k + m) as usize;
    one_plus_beta[idx(0)] = 1.0 + (kr[0] + seeds.alpha0);
    one_plus_beta[idx(1)] = 1.0 + (kr[1] + seeds.alpha1);
    for k in (-m..=-1).rev() {
        let den = g.m[k + 1] - one_plus_beta[idx(k + 1)];
        if !(den > 0.0) {
            return Err(Error::SweepBreakdown { k, denominator: den });
        }
        one_plus_beta[idx(k)] = 1.0 / den;
    }
    for k in 1..m {
        let next = g.m[k + 1] - 1.0 / one_plus_beta[idx(k)];
        if !(next > 0.0) {
            return Err(Error::NotMonotone { k: k + 1, min_slope: next });
        }
        one_plus_beta[idx(k + 1)] = next;
    }
    let beta = ZVec::from_fn(-m, m, |k| match k {
        0 => kr[0] + seeds.alpha0,
        1 => kr[1] + seeds.alpha1,
        _ => one_plus_beta[idx(k)] - 1.0,
    });
    let alpha = ZVec::from_fn(-m, m, |k| match k {
        0 => seeds.alpha0,
        1 => seeds.alpha1,
        _ => beta[k] - kr[k],
    });
    g.beta = beta;
    g.alpha = alpha;
    g.seeds = Some(seeds);
    Ok(g)
}

impl GapSequences {
    /// Runs the full pipeline for `p`.
    pub fn build(p: &SeqParams) -> Result<Self> {
        let g = build_ratio_sequences(build_gap_lengths(p)?);
        let seeds = seed_alphas(&g, p)?;
        extend_alphas(g, seeds)
    }

    pub fn truncation(&self) -> i64 {
        self.params.truncation_m as i64
    }

    pub fn seeds(&self) -> Seeds {
        self.seeds.expect("alphas not extended")
    }

    /// Slope of `h_k + h_(k-1)^(-1)` on the middle of gap k.
    pub fn linear_slope(&self, k: i64) -> f64 {
        if k == 1 {
            self.seeds().m1_adjusted
        } else {
            self.m[k]
        }
    }

    /// Largest residual of the alpha recurrence over the stored range, including
    /// the head relation at k = 0.
    pub fn recurrence_residual(&self) -> f64 {
        let m = self.truncation();
        let kr = &self.k_ratio;
        let a = &self.alpha;
        let mut worst = 0.0f64;
        for k in (-m..m).filter(|&k| k != 0) {
            let r = (1.0 + kr[k + 1] + a[k + 1]) + 1.0 / (1.0 + kr[k] + a[k]) - self.m[k + 1];
            worst = worst.max(r.abs());
        }
        let s = self.seeds();
        let head = 1.0 / (1.0 + kr[0] + a[0]) + 1.0 + kr[1] - s.m1_adjusted;
        worst.max(head.abs())
    }

    /// Sum of the tracked lengths over |k| <= M.
    pub fn tracked_mass(&self) -> f64 {
        let m = self.truncation();
        let mut v: Vec<f64> = (-m..=m).map(|k| self.ell[k]).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum()
    }
}

/// One checked estimate: an empirical constant and, when there is one, the bound it is held to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub empirical: f64,
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Estimate {
    fn upper(name: &str, empirical: f64, bound: f64) -> Self {
        Estimate { name: name.into(), empirical, bound: Some(bound), pass: empirical <= bound }
    }

    fn report(name: &str, empirical: f64) -> Self {
        Estimate { name: name.into(), empirical, bound: None, pass: empirical.is_finite() }
    }

    fn flag(name: &str, empirical: f64, pass: bool) -> Self {
        Estimate { name: name.into(), empirical, bound: None, pass }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimates: Vec<Estimate>,
    pub pass: bool,
}

impl EstimateReport {
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Empirical constants for the estimate chain on the built sequences.
///
/// `eta_sup` and `gamma_sup` are the profile sup-norms used for the positivity
/// precondition `1 - |K_k| sup|eta| - |alpha_k| sup|gamma| > 0`.
pub fn verify_sequence_estimates(g: &GapSequences, p: &SeqParams, eta_sup: f64, gamma_sup: f64) -> EstimateReport {
    let m = g.truncation();
    let c = p.big_c;
    let kr = &g.k_ratio;
    let shift = |k: i64| k.unsigned_abs() as f64 + c;
    let mut out = Vec::new();

    // |K_k| (|k| + C) stays between fixed constants
    let scaled: Vec<f64> = (-m..=m).map(|k| kr[k].abs() * shift(k)).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    out.push(Estimate::flag("k_ratio_scaled_min", lo, lo >= 0.5));
    out.push(Estimate::flag("k_ratio_scaled_max", hi, hi <= 5.0));

    // |K_(k-1) - K_k| against K_k^2, both directions
    let increments: Vec<f64> = (-m..=m).map(|k| (kr[k - 1] - kr[k]).abs() / (kr[k] * kr[k])).collect();
    out.push(Estimate::report("k_ratio_increment_over_square_min", increments.iter().cloned().fold(f64::INFINITY, f64::min)));
    out.push(Estimate::report("k_ratio_increment_over_square_max", increments.iter().cloned().fold(0.0, f64::max)));

    // ell_k (|k| + C) log(|k| + C)^(1 + delta) is the normalizer itself
    let profile_dev = (-m..=m)
        .map(|k| (g.ell[k] * shift(k) * shift(k).ln().powf(1.0 + p.delta) / g.a_c - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Estimate::upper("length_profile_deviation", profile_dev, 1e-12));

    // K_k^2 / ell_k decays on the outer half
    let ratio = |k: i64| kr[k] * kr[k] / g.ell[k];
    let half = m / 2;
    let decays = ratio(m) < ratio(half) && ratio(-m) < ratio(-half);
    let tail_max = (half..=m).flat_map(|n| [ratio(n), ratio(-n)]).fold(0.0, f64::max);
    out.push(Estimate::flag("k_square_over_length_outer", tail_max, decays));
    let monotone = (half..m).all(|n| ratio(n + 1) <= ratio(n)) && (half..m).all(|n| ratio(-n - 1) <= ratio(-n));
    out.push(Estimate::flag("k_square_over_length_monotone_outer", tail_max, monotone));

    // |m_(k+1) - 2| and |m_k - m_(k+1)| against K_k^2, and |m_(k+1) - 2| (|k| + C)^2
    // K changes sign between k = -1 and k = 0, so the apex m_0 is excluded and reported alone
    let off_apex = || (-m..m).filter(|&k| k != -1);
    let m_dev = off_apex().map(|k| (g.m[k + 1] - 2.0).abs() / (kr[k] * kr[k])).fold(0.0, f64::max);
    let m_step = off_apex().filter(|&k| k != 0).map(|k| (g.m[k] - g.m[k + 1]).abs() / (kr[k] * kr[k])).fold(0.0, f64::max);
    let m_dev_scaled = off_apex().map(|k| (g.m[k + 1] - 2.0).abs() * shift(k) * shift(k)).fold(0.0, f64::max);
    out.push(Estimate::report("m_minus_two_over_k_square", m_dev));
    out.push(Estimate::report("m_increment_over_k_square", m_step));
    out.push(Estimate::report("m_minus_two_scaled", m_dev_scaled));
    out.push(Estimate::report("m_apex_minus_two", g.m[0] - 2.0));

    if !g.alpha.is_empty() {
        let a = &g.alpha;
        let b = &g.beta;
        let beta_scaled = (1..=m).map(|n| b[n] * (n as f64 + c)).fold(f64::NEG_INFINITY, f64::max);
        out.push(Estimate::upper("beta_scaled_max", beta_scaled, p.big_b));
        let k_below_beta = (1..=m).all(|n| kr[n] <= b[n]);
        out.push(Estimate::flag("k_ratio_below_beta", beta_scaled, k_below_beta));
        let alpha_pos = (1..=m).map(|n| a[n] * (n as f64 + c)).fold(0.0, f64::max);
        out.push(Estimate::report("alpha_positive_scaled_max", alpha_pos));
        let alpha_neg = (0..=m).map(|n| a[-n].abs() * (n as f64 + c)).fold(0.0, f64::max);
        out.push(Estimate::report("alpha_negative_scaled_max", alpha_neg));
        let signs = (1..=m).all(|n| a[n] > 0.0) && (0..=m).all(|n| a[-n] < 0.0);
        out.push(Estimate::flag("alpha_sign_pattern", 0.0, signs));
        let bound_a = (-m..=m).map(|k| a[k].abs() / kr[k].abs()).fold(0.0, f64::max);
        out.push(Estimate::report("alpha_over_k_ratio_max", bound_a));
        let positivity =
            (-m..=m).map(|k| 1.0 - kr[k].abs() * eta_sup - a[k].abs() * gamma_sup).fold(f64::INFINITY, f64::min);
        out.push(Estimate::flag("slope_positivity_margin", positivity, positivity > 0.0));
        out.push(Estimate::upper("recurrence_residual", g.recurrence_residual(), 1e-13));
        let homeo = (-m..=m).all(|k| 1.0 + b[k] > 0.0);
        out.push(Estimate::flag("one_plus_beta_positive", 0.0, homeo));
    }

    let pass = out.iter().all(|e| e.pass);
    EstimateReport { estimates: out, pass }
}

/// CSV rows `k,ell,K,m,alpha,beta` for |k| <= M.
pub fn sequences_csv(g: &GapSequences) -> String {
    let m = g.truncation();
    let mut s = String::from("k,ell,K,m,alpha,beta\n");
    for k in -m..=m {
        let a = g.alpha.get(k).unwrap_or(f64::NAN);
        let b = g.beta.get(k).unwrap_or(f64::NAN);
        s.push_str(&format!("{k},{:e},{:e},{:e},{:e},{:e}\n", g.ell[k], g.k_ratio[k], g.m[k], a, b));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn default_build() -> &'static GapSequences {
        static G: OnceLock<GapSequences> = OnceLock::new();
        G.get_or_init(|| GapSequences::build(&SeqParams::default()).unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn lengths_symmetric_and_normalized_at_zero() {
        let g = default_build();
        assert_eq!(g.ell[5], g.ell[-5]);
        let c: f64 = 100.0;
        assert!(rel(g.ell[0] * c * c.ln().powf(1.5) / g.a_c, 1.0) < 1e-15);
        let mass = g.tracked_mass();
        assert!(mass > 0.0 && mass < 1.0);
    }

    #[test]
    fn normalizer_matches_summation_oracle() {
        let g = default_build();
        assert!(rel(g.a_c, 0.536490863067805) < 1e-10, "{}", g.a_c);
        assert!(rel(g.ell[0], 0.0005428674512260086) < 1e-10, "{}", g.ell[0]);
    }

    #[test]
    fn divergent_delta_rejected() {
        let p = SeqParams { delta: 0.0, ..SeqParams::default() };
        assert!(matches!(build_gap_lengths(&p), Err(Error::DivergentSum { .. })));
        let p = SeqParams { big_c: 5.0, ..SeqParams::default() };
        assert!(matches!(build_gap_lengths(&p), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn ratio_signs() {
        let g = default_build();
        for n in 1..=500 {
            assert!(g.k_ratio[n] < 0.0 && g.ell[n + 1] < g.ell[n]);
            assert!(g.k_ratio[-n] > 0.0);
        }
    }

    #[test]
    fn m_close_to_two_for_large_c() {
        let p = SeqParams { big_c: 1e4, ..SeqParams::default() };
        let g = build_ratio_sequences(build_gap_lengths(&p).unwrap());
        let max_m = g.m.iter().filter(|&(k, _)| k != 0).map(|(_, v)| (v - 2.0).abs()).fold(0.0, f64::max);
        let max_k2 = g.k_ratio.iter().map(|(_, v)| v * v).fold(0.0, f64::max);
        assert!(max_m <= 10.0 * max_k2, "{max_m} {max_k2}");
        // K changes sign between -1 and 0, so m_0 - 2 is first order
        let apex = g.m[0] - 2.0 - (g.k_ratio[0] - g.k_ratio[-1]);
        assert!(apex.abs() <= 10.0 * max_k2, "{apex}");
    }

    #[test]
    fn seeds_match_bisection_oracle() {
        let g = default_build();
        let s = g.seeds();
        assert_eq!(s.alpha1, 0.5 * g.k_ratio[1].abs());
        assert!(s.alpha0 < 0.0);
        assert!(rel(s.alpha0, -0.006274227808348132) < 1e-9, "{}", s.alpha0);
        let head = 1.0 / (1.0 + g.k_ratio[0] + s.alpha0) + 1.0 + g.k_ratio[1];
        assert!((head - s.m1_adjusted).abs() <= 1e-13);
    }

    #[test]
    fn zero_seed_degenerates() {
        let g = build_ratio_sequences(build_gap_lengths(&SeqParams::default()).unwrap());
        let s = seeds_from_alpha1(&g, 0.0);
        assert!(s.alpha0.abs() < 1e-15);
        let g = extend_alphas(g, s).unwrap();
        let worst = (1..=500).map(|k| (g.beta[k] - g.k_ratio[k]).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn seed_out_of_range_rejected() {
        let p = SeqParams { alpha1_policy: Alpha1Policy::Fixed(1.0), ..SeqParams::default() };
        assert!(matches!(GapSequences::build(&p), Err(Error::SeedRejected { .. })));
        let p = SeqParams { alpha1_policy: Alpha1Policy::Fixed(0.0), ..SeqParams::default() };
        assert!(matches!(GapSequences::build(&p), Err(Error::SeedRejected { .. })));
    }

    #[test]
    fn recurrence_and_signs() {
        let g = default_build();
        assert!(rel(g.beta[5], -0.005458383626669505) < 1e-12, "{}", g.beta[5]);
        assert!(g.recurrence_residual() <= 1e-13);
        for n in 1..=500 {
            assert!(g.alpha[n] > 0.0, "alpha[{n}]");
        }
        for n in 0..=500 {
            assert!(g.alpha[-n] < 0.0, "alpha[-{n}]");
        }
    }

    #[test]
    fn backward_breakdown_reported() {
        let g = build_ratio_sequences(build_gap_lengths(&SeqParams::default()).unwrap());
        let s = seeds_from_alpha1(&g, -0.6);
        let r = extend_alphas(g, s);
        assert!(matches!(r, Err(Error::SweepBreakdown { k: -1, .. })), "{r:?}");
    }

    #[test]
    fn estimates_pass_on_defaults() {
        let g = default_build();
        let r = verify_sequence_estimates(g, &g.params, 1.5, 1.0);
        for e in &r.estimates {
            assert!(e.pass, "{e:?}");
        }
        let k_scaled = r.get("k_ratio_scaled_max").unwrap().empirical;
        assert!(k_scaled.is_finite() && k_scaled <= 5.0);
        assert!(r.get("beta_scaled_max").unwrap().empirical <= 10.0);
    }

    #[test]
    fn csv_has_all_rows() {
        let g = default_build();
        let csv = sequences_csv(g);
        assert_eq!(csv.lines().count(), 1 + 1001);
        assert!(csv.starts_with("k,ell,K,m,alpha,beta\n-500,"));
    }
}
