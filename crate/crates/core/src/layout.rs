//! Placement of the gaps on the circle in the circular order of the rotation
//! orbit `frac(k omega)`, and the semi-conjugacy `j` collapsing each gap to its
//! orbit point.
//!
//! The layout is the distribution function of the measure
//! `sum_k L_k delta_(frac(k omega)) + residual * Lebesgue`. Atoms with |k| <= M
//! carry the gap lengths `ell_k`. Beyond M each side carries a geometric tail
//! `ell_(M+1) * TAIL_RATIO^j` down to [`TAIL_FLOOR`], far below the spacing of
//! doubles, so that every tracked gap has an image gap and the circle map built
//! on this layout is an exact blow-up of the rotation.

use serde::Serialize;

use crate::circle::frac;
use crate::error::{Error, Result};
use crate::sequences::{GapSequences, SeqParams, ZVec};

/// Ratio of consecutive tail atom lengths.
pub const TAIL_RATIO: f64 = 0.9;
/// Tail atoms stop once their length drops below this.
pub const TAIL_FLOOR: f64 = 1e-24;

/// Orbit indices |k| <= M sorted by `frac(k omega)`.
pub fn order_orbit_points(p: &SeqParams) -> Vec<i64> {
    let m = p.truncation_m as i64;
    order_orbit_range(p.omega, -m, m)
}

pub fn order_orbit_range(omega: f64, lo: i64, hi: i64) -> Vec<i64> {
    let mut ks: Vec<i64> = (lo..=hi).collect();
    ks.sort_by(|&a, &b| orbit_point(omega, a).total_cmp(&orbit_point(omega, b)));
    ks
}

#[inline]
pub fn orbit_point(omega: f64, k: i64) -> f64 {
    frac(k as f64 * omega)
}

/// Where a circle point falls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    /// Inside gap `k` (half-open `[lambda_k, lambda_k + L_k)`), at offset `u`.
    Gap { k: i64, u: f64 },
    /// In the residual set between gap `after` and gap `before`, at distance `t`
    /// past the right end of `after`.
    Residual { after: i64, before: i64, t: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub k: i64,
    pub orbit_point: f64,
    pub lambda: f64,
    pub mu: f64,
    pub ell: f64,
    pub j_lo: f64,
    pub j_hi: f64,
    pub wraps: bool,
}

#[derive(Debug, Clone)]
pub struct GapTable {
    pub omega: f64,
    /// Core range is |k| <= core_m.
    pub core_m: i64,
    /// All atoms, core and tail, are indexed by `-tail_n..=tail_n`.
    pub tail_n: i64,
    pub residual_mass: f64,
    orbit: ZVec,
    length: ZVec,
    lambda: ZVec,
    /// Atom indices in increasing order of position.
    sorted: Vec<i64>,
    sorted_left: Vec<f64>,
    /// rank of each atom in `sorted`
    rank: Vec<usize>,
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Lays the gaps out on [0, 1).
pub fn place_gaps(g: &GapSequences) -> Result<GapTable> {
    let omega = g.params.omega;
    let m = g.truncation();
    let first_tail = g.ell[m + 1];
    let tail_len = ((TAIL_FLOOR / first_tail).ln() / TAIL_RATIO.ln()).ceil().max(0.0) as i64;
    let n = m + 1 + tail_len;
    let length = ZVec::from_fn(-n, n, |k| {
        let a = k.abs();
        if a <= m + 1 {
            g.ell[k]
        } else {
            first_tail * TAIL_RATIO.powi((a - m - 1) as i32)
        }
    });
    let orbit = ZVec::from_fn(-n, n, |k| orbit_point(omega, k));
    let sorted = order_orbit_range(omega, -n, n);
    for w in sorted.windows(2) {
        if !(orbit[w[0]] < orbit[w[1]]) {
            return Err(Error::Internal(format!("orbit points {} and {} coincide", w[0], w[1])));
        }
    }
    let total = neumaier(sorted.iter().map(|&k| length[k]).rev());
    let residual_mass = 1.0 - total;
    if !(residual_mass > 0.0 && residual_mass < 1.0) {
        return Err(Error::Internal(format!("residual mass {residual_mass} outside (0, 1)")));
    }
    // prefix sums in position order, compensated
    let mut lambda_sorted = Vec::with_capacity(sorted.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &k in &sorted {
        lambda_sorted.push((sum + comp) + residual_mass * orbit[k]);
        let v = length[k];
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    let mut rank = vec![0usize; sorted.len()];
    let mut lam = vec![0.0; sorted.len()];
    for (i, &k) in sorted.iter().enumerate() {
        rank[(k + n) as usize] = i;
        lam[(k + n) as usize] = lambda_sorted[i];
    }
    let lambda = ZVec::from_fn(-n, n, |k| lam[(k + n) as usize]);
    let table = GapTable {
        omega,
        core_m: m,
        tail_n: n,
        residual_mass,
        orbit,
        length,
        lambda,
        sorted,
        sorted_left: lambda_sorted,
        rank,
    };
    table.check_disjoint()?;
    Ok(table)
}

impl GapTable {
    pub fn build(g: &GapSequences) -> Result<Self> {
        place_gaps(g)
    }

    fn check_disjoint(&self) -> Result<()> {
        for w in self.sorted.windows(2) {
            let right = self.lambda[w[0]] + self.length[w[0]];
            if right > self.lambda[w[1]] + 1e-15 {
                return Err(Error::Internal(format!("gaps {} and {} overlap", w[0], w[1])));
            }
        }
        let last = *self.sorted.last().unwrap();
        if self.lambda[last] + self.length[last] > 1.0 + 1e-15 {
            return Err(Error::Internal(format!("gap {last} runs past 1")));
        }
        Ok(())
    }

    /// Is `k` an atom of the layout (core or tail)?
    pub fn has_atom(&self, k: i64) -> bool {
        k.abs() <= self.tail_n
    }

    pub fn is_core(&self, k: i64) -> bool {
        k.abs() <= self.core_m
    }

    pub fn orbit_point(&self, k: i64) -> f64 {
        self.orbit[k]
    }

    /// Length of gap `k` (`ell_k` in the core).
    pub fn length(&self, k: i64) -> f64 {
        self.length[k]
    }

    pub fn lambda(&self, k: i64) -> f64 {
        self.lambda[k]
    }

    /// Right endpoint `lambda_k + L_k`.
    pub fn right(&self, k: i64) -> f64 {
        self.lambda[k] + self.length[k]
    }

    pub fn mu(&self, k: i64) -> f64 {
        self.lambda[k] + 0.5 * self.length[k]
    }

    /// Middle segment `[mu_k - L_k/8, mu_k + L_k/8]`.
    pub fn middle_segment(&self, k: i64) -> (f64, f64) {
        let (mu, l) = (self.mu(k), self.length[k]);
        (mu - l / 8.0, mu + l / 8.0)
    }

    /// Always false: the gap at orbit point 0 starts at 0 and the residual
    /// separates the last gap from 1.
    pub fn wraps(&self, k: i64) -> bool {
        self.right(k) > 1.0
    }

    /// Atom indices in position order.
    pub fn sorted(&self) -> &[i64] {
        &self.sorted
    }

    /// Circular neighbours of atom `k` in position order.
    pub fn neighbours(&self, k: i64) -> (i64, i64) {
        let r = self.rank[(k + self.tail_n) as usize];
        let len = self.sorted.len();
        (self.sorted[(r + len - 1) % len], self.sorted[(r + 1) % len])
    }

    /// Ratio `L_(k+1)/L_k - 1`, equal to `K_k` in the core.
    pub fn ratio(&self, k: i64) -> f64 {
        self.length[k + 1] / self.length[k] - 1.0
    }

    /// Classifies `x` (reduced mod 1).
    pub fn locate(&self, x: f64) -> Location {
        let x = frac(x);
        // last atom whose left end is <= x; lambda of the first atom (k = 0) is 0
        let i = self.sorted_left.partition_point(|&l| l <= x).max(1) - 1;
        let k = self.sorted[i];
        let u = x - self.sorted_left[i];
        if u < self.length[k] {
            return Location::Gap { k, u };
        }
        let before = self.sorted[(i + 1) % self.sorted.len()];
        Location::Residual { after: k, before, t: x - self.right(k) }
    }

    /// Distribution function of the layout measure at a point `a` of [0, 1)
    /// that is not an atom.
    pub fn distribution(&self, a: f64) -> f64 {
        let a = frac(a);
        let i = self.sorted.partition_point(|&k| self.orbit[k] < a);
        if i == 0 {
            return self.residual_mass * a;
        }
        let k = self.sorted[i - 1];
        self.right(k) + self.residual_mass * (a - self.orbit[k])
    }

    pub fn semiconjugacy(&self) -> SemiConjugacy<'_> {
        SemiConjugacy { table: self }
    }

    /// Rows for |k| <= M.
    pub fn rows(&self) -> Vec<GapRow> {
        (-self.core_m..=self.core_m)
            .map(|k| {
                let (j_lo, j_hi) = self.middle_segment(k);
                GapRow {
                    k,
                    orbit_point: self.orbit[k],
                    lambda: self.lambda[k],
                    mu: self.mu(k),
                    ell: self.length[k],
                    j_lo,
                    j_hi,
                    wraps: self.wraps(k),
                }
            })
            .collect()
    }

    /// CSV `k,lambda,mu,ell,J_lo,J_hi,wrap` for |k| <= M.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lambda,mu,ell,J_lo,J_hi,wrap\n");
        for r in self.rows() {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{}\n",
                r.k, r.lambda, r.mu, r.ell, r.j_lo, r.j_hi, r.wraps
            ));
        }
        s
    }

    /// Total mass of the core atoms.
    pub fn core_mass(&self) -> f64 {
        neumaier((-self.core_m..=self.core_m).map(|k| self.length[k]))
    }

    /// Total mass of the sub-resolution tail atoms.
    pub fn tail_mass(&self) -> f64 {
        neumaier(self.length.iter().filter(|&(k, _)| k.abs() > self.core_m).map(|(_, v)| v))
    }
}

/// The monotone degree-one map `j` with `j(I_k) = frac(k omega)`.
#[derive(Debug, Clone, Copy)]
pub struct SemiConjugacy<'a> {
    table: &'a GapTable,
}

impl SemiConjugacy<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.table;
        match t.locate(x) {
            Location::Gap { k, .. } => t.orbit[k],
            Location::Residual { after, t: dt, .. } => frac(t.orbit[after] + dt / t.residual_mass),
        }
    }

    /// Value of a lift of `j`, for `x` given as a real number.
    pub fn eval_lift(&self, x: f64) -> f64 {
        let base = x.floor();
        let t = self.table;
        base + match t.locate(x - base) {
            Location::Gap { k, .. } => t.orbit[k],
            Location::Residual { after, t: dt, .. } => t.orbit[after] + dt / t.residual_mass,
        }
    }
}

impl Location {
    pub fn is_residual(&self) -> bool {
        matches!(self, Location::Residual { .. })
    }
}
