//! Orbit probes near the invariant curve: vertical excursion of orbits started
//! off the curve, and phase portraits.

use serde::Serialize;

use super::TwistSystem;
use crate::circle::frac;

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub threshold: f64,
    /// first iterate with excursion above the threshold
    pub first_n: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffusionReport {
    pub theta0: f64,
    pub offset: f64,
    pub iterations: usize,
    /// max over the orbit of |r_n - (g(theta_n) - theta_n)|
    pub max_excursion: f64,
    /// running max excursion at `checkpoints` evenly spaced iterates
    pub excursion_series: Vec<(usize, f64)>,
    pub crossings: Vec<Crossing>,
}

pub fn diffusion_probe(
    sys: &TwistSystem,
    theta0: f64,
    offset: f64,
    n: usize,
    thresholds: &[f64],
    checkpoints: usize,
) -> DiffusionReport {
    let mut p = (frac(theta0), sys.curve_height(theta0) + offset);
    let mut max_exc = offset.abs();
    let mut crossings: Vec<Crossing> = thresholds.iter().map(|&t| Crossing { threshold: t, first_n: None }).collect();
    let every = (n / checkpoints.max(1)).max(1);
    let mut series = vec![(0, max_exc)];
    for i in 1..=n {
        p = sys.forward(p);
        let exc = (p.1 - sys.curve_height(p.0)).abs();
        max_exc = max_exc.max(exc);
        for c in crossings.iter_mut() {
            if c.first_n.is_none() && exc > c.threshold {
                c.first_n = Some(i);
            }
        }
        if i % every == 0 || i == n {
            series.push((i, max_exc));
        }
    }
    DiffusionReport {
        theta0: frac(theta0),
        offset,
        iterations: n,
        max_excursion: max_exc,
        excursion_series: series,
        crossings,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PortraitRow {
    pub orbit: usize,
    pub step: usize,
    pub theta: f64,
    pub r: f64,
}

/// Orbit 0 samples the invariant curve at `curve_points` points. Orbits
/// `1..=orbits` start at evenly spaced theta with heights spread over
/// `curve +- spread`, and are iterated `steps` times.
pub fn portrait(sys: &TwistSystem, orbits: usize, steps: usize, spread: f64, curve_points: usize) -> Vec<PortraitRow> {
    let mut rows = Vec::with_capacity(curve_points + orbits * (steps + 1));
    for i in 0..curve_points {
        let th = i as f64 / curve_points as f64;
        rows.push(PortraitRow { orbit: 0, step: i, theta: th, r: sys.curve_height(th) });
    }
    for o in 1..=orbits {
        let th = (o as f64 - 0.5) / orbits as f64;
        let frac_o = if orbits == 1 { 0.5 } else { (o - 1) as f64 / (orbits - 1) as f64 };
        let mut p = (th, sys.curve_height(th) + spread * (2.0 * frac_o - 1.0));
        rows.push(PortraitRow { orbit: o, step: 0, theta: p.0, r: p.1 });
        for s in 1..=steps {
            p = sys.forward(p);
            rows.push(PortraitRow { orbit: o, step: s, theta: p.0, r: p.1 });
        }
    }
    rows
}

pub fn portrait_csv(rows: &[PortraitRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 48);
    s.push_str("orbit,step,theta,r\n");
    for r in rows {
        s.push_str(&format!("{},{},{:e},{:e}\n", r.orbit, r.step, r.theta, r.r));
    }
    s
}
