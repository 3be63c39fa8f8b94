//! The `Z_m` translation action `T(g)u = u(· + 2πg/m)` on periodic series,
//! symmetry defects, and orbit-aware distances between solutions.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::trig_spectral::{h1_norm, project_vs_perp, TrigPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZmAction {
    m: usize,
}

impl ZmAction {
    /// # Panics
    /// If `m == 0`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "group order must be positive");
        Self { m }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Shift angle `2πg/m`, with `g` reduced mod `m`.
    pub fn angle(&self, g: i64) -> f64 {
        let g = g.rem_euclid(self.m as i64);
        TAU * g as f64 / self.m as f64
    }
}

/// `u(t + θ)` for an arbitrary shift `θ`.
pub fn shift(u: &TrigPoly, theta: f64) -> TrigPoly {
    u.map_modes(|j, a, b| {
        let (s, c) = (j as f64 * theta).sin_cos();
        (a * c + b * s, -a * s + b * c)
    })
}

pub fn act(action: ZmAction, g: i64, u: &TrigPoly) -> TrigPoly {
    if g.rem_euclid(action.m as i64) == 0 {
        return u.clone();
    }
    shift(u, action.angle(g))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDefect {
    pub s: usize,
    /// H¹ distance from `u` to `V_s`.
    pub defect: f64,
    /// `defect / ‖u‖_{H¹}`, 0 for `u = 0`.
    pub relative_defect: f64,
}

pub fn symmetry_defect(u: &TrigPoly, s: usize) -> SymmetryDefect {
    let defect = h1_norm(&project_vs_perp(u, s));
    let norm = h1_norm(u);
    SymmetryDefect {
        s,
        defect,
        relative_defect: if norm > 0.0 { defect / norm } else { 0.0 },
    }
}

/// `min_g ‖u − T(g)v‖_{H¹}` over the finite group.
pub fn orbit_distance(u: &TrigPoly, v: &TrigPoly, action: ZmAction) -> f64 {
    (0..action.m as i64)
        .map(|g| h1_norm(&(u - &act(action, g, v))))
        .fold(f64::INFINITY, f64::min)
}

const INVPHI: f64 = 0.618_033_988_749_894_9;

/// `min_θ ‖u − v(· + θ)‖_{H¹}` over the full circle: coarse scan followed by
/// golden-section refinement of the best bracket.
pub fn shift_distance(u: &TrigPoly, v: &TrigPoly) -> f64 {
    let order = u.order().max(v.order()).max(1);
    let n_scan = 16 * order;
    let dist = |theta: f64| h1_norm(&(u - &shift(v, theta)));
    let step = TAU / n_scan as f64;
    let (best_k, mut best) =
        (0..n_scan)
            .map(|k| (k, dist(k as f64 * step)))
            .fold(
                (0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );

    let (mut a, mut b) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    for _ in 0..80 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = dist(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = dist(x2);
        }
    }
    best = best.min(f1).min(f2);
    best
}
