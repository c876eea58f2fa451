//! Smooth plateau profiles: the bump `eta` and the half-supported profiles
//! `gamma_plus`, `gamma_minus`, with derivatives and antiderivatives.
//!
//! Plateaus and zero regions are exact constants. Shoulders are built from the
//! logistic-of-reciprocals smooth step and the exponential kernel bump
//! `exp(-1/(1-y^2))`; their antiderivatives come from cubic Hermite tables that
//! use the exact kernel values as slopes.

use std::sync::Arc;

use serde::Serialize;

use crate::circle::Side;
use crate::error::{Error, Result};
use crate::quadrature;

/// Number of cells in each antiderivative table.
pub const TABLE_CELLS: usize = 4096;

// Below this distance from an endpoint exp(-1/s) underflows; tails are exactly flat.
const FLAT_CUTOFF: f64 = 1.0 / 720.0;

/// `sigma(s) = 1 / (1 + exp(1/s - 1/(1-s)))` on (0, 1), 0 below, 1 above.
pub fn smooth_step(s: f64) -> f64 {
    if s <= FLAT_CUTOFF {
        0.0
    } else if s >= 1.0 - FLAT_CUTOFF {
        1.0
    } else {
        let z = 1.0 / s - 1.0 / (1.0 - s);
        logistic_neg(z)
    }
}

pub fn smooth_step_d1(s: f64) -> f64 {
    if s <= FLAT_CUTOFF || s >= 1.0 - FLAT_CUTOFF {
        return 0.0;
    }
    let z = 1.0 / s - 1.0 / (1.0 - s);
    let w = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
    logistic_var(z) * w
}

pub fn smooth_step_d2(s: f64) -> f64 {
    if s <= FLAT_CUTOFF || s >= 1.0 - FLAT_CUTOFF {
        return 0.0;
    }
    let z = 1.0 / s - 1.0 / (1.0 - s);
    let p = logistic_neg(z);
    let w = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
    let dw = -2.0 / (s * s * s) + 2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s));
    logistic_var(z) * ((1.0 - 2.0 * p) * w * w + dw)
}

// 1 / (1 + e^z)
fn logistic_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

// p (1 - p) for p = 1 / (1 + e^z)
fn logistic_var(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// Exponential kernel bump on (-1, 1).
pub fn kernel_bump(y: f64) -> f64 {
    let v = 1.0 - y * y;
    if v <= FLAT_CUTOFF {
        0.0
    } else {
        (-1.0 / v).exp()
    }
}

pub fn kernel_bump_d1(y: f64) -> f64 {
    let v = 1.0 - y * y;
    if v <= FLAT_CUTOFF {
        return 0.0;
    }
    (-1.0 / v).exp() * (-2.0 * y / (v * v))
}

pub fn kernel_bump_d2(y: f64) -> f64 {
    let v = 1.0 - y * y;
    if v <= FLAT_CUTOFF {
        return 0.0;
    }
    let v2 = v * v;
    (-1.0 / v).exp() * (4.0 * y * y / (v2 * v2) - 2.0 / v2 - 8.0 * y * y / (v2 * v))
}

/// Cumulative integral of a smooth kernel on `[lo, hi]`, interpolated by cubic
/// Hermite polynomials whose nodal slopes are the kernel values themselves.
#[derive(Debug, Clone)]
struct HermiteTable {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    fn build(kernel: fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> Self {
        let step = (hi - lo) / cells as f64;
        let mut values = Vec::with_capacity(cells + 1);
        let mut slopes = Vec::with_capacity(cells + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        values.push(0.0);
        slopes.push(kernel(lo));
        for i in 0..cells {
            let a = lo + step * i as f64;
            let b = if i + 1 == cells { hi } else { lo + step * (i + 1) as f64 };
            let (piece, _) = quadrature::gk15(&kernel, a, b);
            // Kahan
            let y = piece - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            values.push(sum);
            slopes.push(kernel(b));
        }
        HermiteTable { lo, step, values, slopes }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let cells = self.values.len() - 1;
        let pos = ((x - self.lo) / self.step).max(0.0);
        let i = (pos.floor() as usize).min(cells - 1);
        (i, (pos - i as f64).clamp(0.0, 1.0))
    }

    fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h = self.step;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        f0 * (2.0 * t3 - 3.0 * t2 + 1.0) + d0 * (t3 - 2.0 * t2 + t) + f1 * (-2.0 * t3 + 3.0 * t2) + d1 * (t3 - t2)
    }

    fn derivative(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let h = self.step;
        let (f0, f1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        (f0 * (6.0 * t2 - 6.0 * t) + d0 * (3.0 * t2 - 4.0 * t + 1.0) + f1 * (6.0 * t - 6.0 * t2) + d1 * (3.0 * t2 - 2.0 * t)) / h
    }

    fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Shared antiderivative tables of the two building blocks.
#[derive(Debug)]
struct ShoulderTables {
    /// integral of the smooth step over [0, s], s in [0, 1/2]
    step: HermiteTable,
    /// integral of the kernel bump over [-1, y], y in [-1, 0]
    bump: HermiteTable,
    /// total bump mass from adaptive quadrature
    bump_total: f64,
}

impl ShoulderTables {
    // integral of sigma over [0, s] for any s in [0, 1]
    fn step_integral(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s <= 0.5 {
            self.step.eval(s)
        } else if s < 1.0 {
            s - 0.5 + self.step.eval(1.0 - s)
        } else {
            0.5 + (s - 1.0)
        }
    }

    fn step_integral_slope(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s <= 0.5 {
            self.step.derivative(s)
        } else if s < 1.0 {
            1.0 - self.step.derivative(1.0 - s)
        } else {
            1.0
        }
    }

    // integral of the bump over [-1, y] for any y in [-1, 1]
    fn bump_integral(&self, y: f64) -> f64 {
        let total = 2.0 * self.bump.last();
        if y <= -1.0 {
            0.0
        } else if y <= 0.0 {
            self.bump.eval(y)
        } else if y < 1.0 {
            total - self.bump.eval(-y)
        } else {
            total
        }
    }

    fn bump_integral_slope(&self, y: f64) -> f64 {
        if y <= -1.0 || y >= 1.0 {
            0.0
        } else if y <= 0.0 {
            self.bump.derivative(y)
        } else {
            self.bump.derivative(-y)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Eta,
    GammaPlus,
    GammaMinus,
}

/// What to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    D1,
    D2,
    Antiderivative,
}

/// A calibrated profile. Cheap to clone; tables are shared.
#[derive(Debug, Clone)]
pub struct PlateauProfile {
    pub kind: ProfileKind,
    /// Scale of the kernel bump that makes the integral constraint hold.
    pub shoulder_coefficient: f64,
    pub plateau_bounds: (f64, f64),
    pub support_bounds: (f64, f64),
    tables: Arc<ShoulderTables>,
}

// eta: left shoulder on (1/4, 3/8) is sigma(8(t - 1/4)) + c B(16 t - 5)
// gamma_plus: 1 on (1/2, 5/8], descent 1 - sigma(16(t - 5/8)) on (5/8, 11/16),
//             -c B((32 t - 27) / 5) on (11/16, 1)
impl PlateauProfile {
    fn eta_left(&self, t: f64, order: Order) -> f64 {
        let c = self.shoulder_coefficient;
        let tb = &self.tables;
        if t <= 0.25 {
            return 0.0;
        }
        if t >= 0.375 {
            return match order {
                Order::Value => 1.0,
                Order::D1 | Order::D2 => 0.0,
                Order::Antiderivative => t,
            };
        }
        let s = 8.0 * (t - 0.25);
        let y = 16.0 * t - 5.0;
        match order {
            Order::Value => smooth_step(s) + c * kernel_bump(y),
            Order::D1 => 8.0 * smooth_step_d1(s) + 16.0 * c * kernel_bump_d1(y),
            Order::D2 => 64.0 * smooth_step_d2(s) + 256.0 * c * kernel_bump_d2(y),
            Order::Antiderivative => tb.step_integral(s) / 8.0 + c * tb.bump_integral(y) / 16.0,
        }
    }

    fn eta_left_slope(&self, t: f64) -> f64 {
        if t <= 0.25 {
            return 0.0;
        }
        if t >= 0.375 {
            return 1.0;
        }
        let tb = &self.tables;
        tb.step_integral_slope(8.0 * (t - 0.25)) + self.shoulder_coefficient * tb.bump_integral_slope(16.0 * t - 5.0)
    }

    fn eta(&self, t: f64, order: Order) -> f64 {
        if t <= 0.5 {
            return self.eta_left(t, order);
        }
        match order {
            Order::Value | Order::D2 => self.eta_left(1.0 - t, order),
            Order::D1 => -self.eta_left(1.0 - t, order),
            Order::Antiderivative => {
                if t <= 0.625 {
                    t
                } else if t >= 0.75 {
                    1.0
                } else {
                    1.0 - self.eta_left(1.0 - t, order)
                }
            }
        }
    }

    // gamma_plus away from the jump; `right_of_half` selects the branch at t = 1/2
    fn gamma_plus(&self, t: f64, order: Order, right_of_half: bool) -> f64 {
        let c = self.shoulder_coefficient;
        let tb = &self.tables;
        if t < 0.5 || (t == 0.5 && !right_of_half) || t >= 1.0 {
            return 0.0;
        }
        if t <= 0.625 {
            return match order {
                Order::Value => 1.0,
                Order::D1 | Order::D2 => 0.0,
                Order::Antiderivative => t - 0.5,
            };
        }
        if t < 0.6875 {
            let s = 16.0 * (t - 0.625);
            return match order {
                Order::Value => 1.0 - smooth_step(s),
                Order::D1 => -16.0 * smooth_step_d1(s),
                Order::D2 => -256.0 * smooth_step_d2(s),
                Order::Antiderivative => 0.125 + (t - 0.625) - tb.step_integral(s) / 16.0,
            };
        }
        let y = (32.0 * t - 27.0) / 5.0;
        match order {
            Order::Value => -c * kernel_bump(y),
            Order::D1 => -c * 6.4 * kernel_bump_d1(y),
            Order::D2 => -c * 40.96 * kernel_bump_d2(y),
            Order::Antiderivative => 5.0 / 32.0 - c * (5.0 / 32.0) * tb.bump_integral(y),
        }
    }

    fn gamma_plus_slope(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            return 0.0;
        }
        if t <= 0.625 {
            return 1.0;
        }
        let tb = &self.tables;
        if t < 0.6875 {
            return 1.0 - tb.step_integral_slope(16.0 * (t - 0.625));
        }
        -self.shoulder_coefficient * tb.bump_integral_slope((32.0 * t - 27.0) / 5.0)
    }

    fn is_gamma(&self) -> bool {
        self.kind != ProfileKind::Eta
    }

    /// Evaluates the profile. Derivatives of the gamma profiles at t = 1/2 exist
    /// only as one-sided limits and are rejected here; use [`Self::eval_side`].
    pub fn eval(&self, t: f64, order: Order) -> Result<f64> {
        if self.is_gamma() && t == 0.5 {
            return match order {
                Order::D1 | Order::D2 => Err(Error::OneSidedOnly { t }),
                // gamma_plus vanishes on [0, 1/2] and gamma_minus on [1/2, 1]
                Order::Value => Ok(0.0),
                Order::Antiderivative => Ok(self.antiderivative(t)),
            };
        }
        Ok(self.eval_side(t, order, Side::Left))
    }

    /// Evaluates the profile, taking the requested one-sided limit where the
    /// profile jumps. Away from t = 1/2 the side is ignored.
    pub fn eval_side(&self, t: f64, order: Order, side: Side) -> f64 {
        match self.kind {
            ProfileKind::Eta => self.eta(t, order),
            ProfileKind::GammaPlus => self.gamma_plus(t, order, side == Side::Right),
            ProfileKind::GammaMinus => {
                let mirrored = 1.0 - t;
                // left of t is right of 1 - t
                let right = side == Side::Left;
                match order {
                    Order::Value | Order::D2 => self.gamma_plus(mirrored, order, right),
                    Order::D1 => -self.gamma_plus(mirrored, order, right),
                    Order::Antiderivative => {
                        if t <= 0.0 || t >= 0.5 {
                            0.0
                        } else if t >= 0.375 {
                            t - 0.5
                        } else {
                            -self.gamma_plus(mirrored, Order::Antiderivative, true)
                        }
                    }
                }
            }
        }
    }

    #[inline]
    pub fn value(&self, t: f64, side: Side) -> f64 {
        self.eval_side(t, Order::Value, side)
    }

    #[inline]
    pub fn d1(&self, t: f64, side: Side) -> f64 {
        self.eval_side(t, Order::D1, side)
    }

    #[inline]
    pub fn d2(&self, t: f64, side: Side) -> f64 {
        self.eval_side(t, Order::D2, side)
    }

    /// Integral of the profile over [0, t].
    #[inline]
    pub fn antiderivative(&self, t: f64) -> f64 {
        self.eval_side(t, Order::Antiderivative, Side::Right)
    }

    /// Derivative of the antiderivative interpolant itself.
    pub fn antiderivative_slope(&self, t: f64) -> f64 {
        match self.kind {
            ProfileKind::Eta => {
                if t <= 0.5 {
                    self.eta_left_slope(t)
                } else {
                    self.eta_left_slope(1.0 - t)
                }
            }
            ProfileKind::GammaPlus => self.gamma_plus_slope(t),
            ProfileKind::GammaMinus => self.gamma_plus_slope(1.0 - t),
        }
    }
}


/// The three calibrated profiles plus their sup-norms.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub eta: PlateauProfile,
    pub gamma_plus: PlateauProfile,
    pub gamma_minus: PlateauProfile,
    /// sup |eta|
    pub eta_sup: f64,
    /// sup |gamma_plus| = sup |gamma_minus|
    pub gamma_sup: f64,
    pub quadrature_tolerance: f64,
}

/// Calibrates the shoulder coefficients so that the eta integral is 1 and the
/// gamma integrals vanish, with the kernel masses computed by adaptive quadrature.
pub fn calibrate_profiles(quadrature_tolerance: f64) -> Result<ProfileSet> {
    if !(quadrature_tolerance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "quadrature_tolerance",
            reason: format!("{quadrature_tolerance} is not positive"),
        });
    }
    let bump_total = quadrature::integrate(kernel_bump, -1.0, 1.0, quadrature_tolerance, 4096)?.value;
    let step_half = quadrature::integrate(smooth_step, 0.0, 0.5, quadrature_tolerance, 4096)?.value;

    let step = HermiteTable::build(smooth_step, 0.0, 0.5, TABLE_CELLS);
    let bump = HermiteTable::build(kernel_bump, -1.0, 0.0, TABLE_CELLS);
    let step_gap = (step.last() - step_half).abs();
    let bump_gap = (2.0 * bump.last() - bump_total).abs();
    let table_tol = quadrature_tolerance.max(1e-14);
    if step_gap > table_tol || bump_gap > table_tol {
        return Err(Error::Calibration(format!(
            "antiderivative tables disagree with quadrature (step {step_gap:e}, bump {bump_gap:e})"
        )));
    }
    let tables = Arc::new(ShoulderTables { step, bump, bump_total });

    // eta: plateau 1/4 + two ramps of mass 1/16 each + two bumps of mass c/16 each
    let eta_c = 5.0 / bump_total;
    // gamma_plus: 1/8 + 1/32 of positive mass against a bump of mass c * (5/32) * total
    let gamma_c = 1.0 / bump_total;

    let eta = PlateauProfile {
        kind: ProfileKind::Eta,
        shoulder_coefficient: eta_c,
        plateau_bounds: (0.375, 0.625),
        support_bounds: (0.25, 0.75),
        tables: tables.clone(),
    };
    let gamma_plus = PlateauProfile {
        kind: ProfileKind::GammaPlus,
        shoulder_coefficient: gamma_c,
        plateau_bounds: (0.5, 0.625),
        support_bounds: (0.5, 1.0),
        tables: tables.clone(),
    };
    let gamma_minus = PlateauProfile {
        kind: ProfileKind::GammaMinus,
        shoulder_coefficient: gamma_c,
        plateau_bounds: (0.375, 0.5),
        support_bounds: (0.0, 0.5),
        tables,
    };

    let grid = 20_000;
    let (mut eta_sup, mut gamma_sup) = (0.0f64, 0.0f64);
    for i in 0..=grid {
        let t = i as f64 / grid as f64;
        eta_sup = eta_sup.max(eta.value(t, Side::Right).abs());
        gamma_sup = gamma_sup.max(gamma_plus.value(t, Side::Right).abs());
    }
    Ok(ProfileSet { eta, gamma_plus, gamma_minus, eta_sup, gamma_sup, quadrature_tolerance })
}

impl ProfileSet {
    pub fn get(&self, kind: ProfileKind) -> &PlateauProfile {
        match kind {
            ProfileKind::Eta => &self.eta,
            ProfileKind::GammaPlus => &self.gamma_plus,
            ProfileKind::GammaMinus => &self.gamma_minus,
        }
    }

    /// Total kernel-bump mass used by the calibration.
    pub fn bump_mass(&self) -> f64 {
        self.eta.tables.bump_total
    }
}

/// One row of a profile table export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub antiderivative: f64,
}

/// Samples a profile on `points` equally spaced nodes of [0, 1] (right limits at jumps).
pub fn profile_table(p: &PlateauProfile, points: usize) -> Vec<ProfileRow> {
    let n = points.max(2) - 1;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            ProfileRow {
                t,
                value: p.value(t, Side::Right),
                d1: p.d1(t, Side::Right),
                d2: p.d2(t, Side::Right),
                antiderivative: p.antiderivative(t),
            }
        })
        .collect()
}
