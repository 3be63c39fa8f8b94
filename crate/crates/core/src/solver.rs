//! Solvers for the canonical periodic problem
//!
//! ```text
//! R(u) = L u − g(u) − f = 0,   L = −d²/dt²,
//! ```
//!
//! whose linearization `h ↦ Lh − g'(u)h` is resonant exactly when `g'` meets
//! an eigenvalue `j²`. When `g'` is pinched inside a spectral gap,
//! `q ≤ g' ≤ p` with `i² < q ≤ p < (i+1)²`, the shifted map
//!
//! ```text
//! u ↦ (L − c)⁻¹ (f + g(u) − c·u),   c = (p + q)/2
//! ```
//!
//! is a contraction in L² with rate `κ = ((p − q)/2) / dist(c, σ(L))`, which
//! gives existence, uniqueness and a global Lipschitz bound for the inverse.
//! [`newton_solve`] is the independent fast solver, also used outside the
//! certified regime.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_operator::{
    apply_l, eigenvalue, gap_of, resolvent_apply, GapLocation, SpectralGap,
};
use crate::trig_spectral::{
    compose, compose_grid, h1_norm, l2_norm, Branch, Nonlinearity, TrigPoly,
};

/// Slack allowed on top of `κ` for observed step ratios.
pub const RATE_SLACK: f64 = 0.05;

/// Maximum number of step halvings in the damped Newton line search.
pub const MAX_HALVINGS: usize = 30;

/// Relative singular-value floor below which a Jacobian counts as singular.
pub const SINGULAR_RTOL: f64 = 1e-10;

/// Sign convention used to read a user problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `−u'' − g(u) = f` (canonical).
    #[default]
    Minus,
    /// `−u'' + g(u) = f`, solved as the canonical problem for `−g`.
    Plus,
}

impl Orientation {
    /// The nonlinearity whose canonical problem is equivalent to the user's.
    pub fn canonical(&self, nl: &Nonlinearity) -> Nonlinearity {
        match self {
            Orientation::Minus => nl.clone(),
            Orientation::Plus => nl.negated(),
        }
    }
}

/// `R(u) = Lu − g(u) − f`.
pub fn canonical_residual(u: &TrigPoly, nl: &Nonlinearity, f: &TrigPoly) -> TrigPoly {
    let order = u.order().max(f.order());
    let u = u.with_order(order);
    &(&apply_l(&u) - &compose(&u, nl, Branch::G)) - f
}

/// Sampled `(min g', max g')` on `n_samples` uniform points of `[lo, hi]`.
/// An estimate, not a bound.
pub fn derivative_range(nl: &Nonlinearity, lo: f64, hi: f64, n_samples: usize) -> (f64, f64) {
    assert!(lo < hi, "empty interval");
    assert!(n_samples >= 2, "need at least two samples");
    let step = (hi - lo) / (n_samples - 1) as f64;
    (0..n_samples)
        .map(|k| nl.g_prime(lo + step * k as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(q, p), v| {
            (q.min(v), p.max(v))
        })
}

/// `(min, max)` of `g'(u(t))` on the compose grid of `u`.
pub fn derivative_range_on(nl: &Nonlinearity, u: &TrigPoly) -> (f64, f64) {
    let samples = u.to_samples(compose_grid(u.order())).expect("compose grid");
    samples
        .samples()
        .iter()
        .map(|&x| nl.g_prime(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(q, p), v| {
            (q.min(v), p.max(v))
        })
}

/// A verified pinching `gap.lo < q ≤ p < gap.hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub gap: SpectralGap,
    pub q: f64,
    pub p: f64,
    pub c: f64,
    pub kappa: f64,
}

impl GapCertificate {
    /// `dist(c, σ(L)) = min(c − lo, hi − c)`.
    pub fn spectral_distance(&self) -> f64 {
        (self.c - self.gap.lo).min(self.gap.hi - self.c)
    }

    /// `K` with `‖u(f₁) − u(f₂)‖_{L²} ≤ K ‖f₁ − f₂‖_{L²}`.
    pub fn lipschitz_l2(&self) -> f64 {
        1.0 / (self.spectral_distance() * (1.0 - self.kappa))
    }

    /// `K` with `‖u(f₁) − u(f₂)‖_{H¹} ≤ K ‖f₁ − f₂‖_{L²}`:
    /// `sup_j √(1+j²)/|j² − c|` (attained at `j = i` or `i + 1`) over `1 − κ`.
    pub fn lipschitz_h1(&self) -> f64 {
        let i = self.gap.i;
        let gain = |j: usize| (1.0 + eigenvalue(j)).sqrt() / (eigenvalue(j) - self.c).abs();
        gain(i).max(gain(i + 1)) / (1.0 - self.kappa)
    }
}

pub fn certify_gap(q: f64, p: f64) -> Result<GapCertificate> {
    if !(q <= p) {
        return Err(Error::InvalidArgument(format!("q = {q} exceeds p = {p}")));
    }
    let gap = match (gap_of(q)?, gap_of(p)?) {
        (GapLocation::InSpectrum { j }, _) | (_, GapLocation::InSpectrum { j }) => {
            return Err(Error::GapViolation { q, p, j })
        }
        (GapLocation::Gap(gq), GapLocation::Gap(gp)) if gq.i != gp.i => {
            return Err(Error::GapViolation { q, p, j: gq.i + 1 })
        }
        (GapLocation::Gap(gq), GapLocation::Gap(_)) => gq,
    };
    let c = 0.5 * (p + q);
    let dist = (c - gap.lo).min(gap.hi - c);
    Ok(GapCertificate {
        gap,
        q,
        p,
        c,
        kappa: 0.5 * (p - q) / dist,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Contraction,
    Newton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: TrigPoly,
    pub residual_h1: f64,
    pub iterations: usize,
    /// Largest step ratio `‖u_{k+1} − u_k‖/‖u_k − u_{k−1}‖` (H¹) for `k ≥ 2`,
    /// recorded while steps are above round-off.
    pub observed_rate: f64,
    pub step_ratios: Vec<f64>,
    pub certificate: Option<GapCertificate>,
    pub method: Method,
}

/// Steps below this (relative to `‖u‖`) are round-off and excluded from ratios.
const RATIO_FLOOR: f64 = 1e-9;

fn record_ratio(ratios: &mut Vec<f64>, prev: Option<f64>, step: f64, scale: f64) {
    if let Some(prev) = prev {
        if prev > RATIO_FLOOR * scale.max(1.0) && step > 1e3 * f64::EPSILON * scale.max(1.0) {
            ratios.push(step / prev);
        }
    }
}

fn max_rate(ratios: &[f64]) -> f64 {
    ratios.iter().skip(1).copied().fold(0.0, f64::max)
}

pub fn contraction_solve(
    nl: &Nonlinearity,
    f: &TrigPoly,
    cert: &GapCertificate,
    u0: &TrigPoly,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(cert.gap.lo < cert.q && cert.q <= cert.p && cert.p < cert.gap.hi && cert.kappa < 1.0) {
        return Err(Error::PreconditionViolation(format!(
            "certificate [{}, {}] is not inside ({}, {})",
            cert.q, cert.p, cert.gap.lo, cert.gap.hi
        )));
    }
    let order = f.order().max(u0.order());
    let f = f.with_order(order);
    let mut u = u0.with_order(order);
    let mut g_u = compose(&u, nl, Branch::G);
    let mut residual = h1_norm(&(&(&apply_l(&u) - &g_u) - &f));
    let mut ratios = Vec::new();
    let mut prev_step = None;
    let mut iterations = 0;

    while residual > tol {
        if iterations == max_iter {
            return Err(Error::MaxIterExceeded {
                iterations,
                residual,
            });
        }
        let rhs = &(&f + &g_u) - &u.scale(cert.c);
        let next = resolvent_apply(cert.c, &rhs)?;
        let step = h1_norm(&(&next - &u));
        u = next;
        iterations += 1;
        record_ratio(&mut ratios, prev_step, step, h1_norm(&u));
        prev_step = Some(step);
        g_u = compose(&u, nl, Branch::G);
        residual = h1_norm(&(&(&apply_l(&u) - &g_u) - &f));
    }

    let (min, max) = derivative_range_on(nl, &u);
    let slack = 1e-12 * (1.0 + cert.p.abs());
    if min < cert.q - slack || max > cert.p + slack {
        return Err(Error::PostHocRangeViolation {
            min,
            max,
            q: cert.q,
            p: cert.p,
        });
    }

    Ok(SolveReport {
        solution: u,
        residual_h1: residual,
        iterations,
        observed_rate: max_rate(&ratios),
        step_ratios: ratios,
        certificate: Some(*cert),
        method: Method::Contraction,
    })
}

/// Symmetric form of the exact Jacobian of the discrete residual in the
/// coefficient ordering `[a0, a1, b1, ..., aJ, bJ]`: row `a` of `∂R/∂u` is
/// scaled by `1/c_a` (`c_0 = 1`, `c_j = 2`), so that entry `(a, b)` reads
/// `w_a j_a² δ_ab − (1/N) Σ_k g'(u(t_k)) φ_a(t_k) φ_b(t_k)`.
pub fn jacobian(u: &TrigPoly, nl: &Nonlinearity) -> DMatrix<f64> {
    let order = u.order();
    let dim = 2 * order + 1;
    let n = compose_grid(order);
    let weights: Vec<f64> = u
        .to_samples(n)
        .expect("compose grid")
        .samples()
        .iter()
        .map(|&x| nl.g_prime(x))
        .collect();

    let basis: Vec<Vec<f64>> = (0..dim)
        .map(|idx| {
            let j = (idx + 1) / 2;
            (0..n)
                .map(|k| {
                    let t = std::f64::consts::TAU * ((j * k) % n) as f64 / n as f64;
                    match idx {
                        0 => 1.0,
                        _ if idx % 2 == 1 => t.cos(),
                        _ => t.sin(),
                    }
                })
                .collect()
        })
        .collect();

    let inv_n = 1.0 / n as f64;
    let mut m = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        let wa: Vec<f64> = basis[a].iter().zip(&weights).map(|(p, w)| p * w).collect();
        for b in a..dim {
            let q: f64 = wa.iter().zip(&basis[b]).map(|(x, y)| x * y).sum::<f64>() * inv_n;
            m[(a, b)] = -q;
            m[(b, a)] = -q;
        }
        let j = (a + 1) / 2;
        if a > 0 {
            m[(a, a)] += 0.5 * eigenvalue(j);
        }
    }
    m
}

fn row_scaled(r: &TrigPoly) -> DVector<f64> {
    let v = r.to_vec();
    DVector::from_iterator(
        v.len(),
        v.iter()
            .enumerate()
            .map(|(i, x)| if i == 0 { *x } else { 0.5 * x }),
    )
}

/// Smallest and largest singular values of a symmetric matrix.
fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    eig.eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), e| {
            (lo.min(e.abs()), hi.max(e.abs()))
        })
}

fn newton_direction(jac: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let scale = jac.amax().max(1.0);
    let lu = jac.clone().lu();
    let pivots_ok = {
        let u = lu.u();
        let diag = u.diagonal();
        let min = diag.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        min > 1e-8 * scale
    };
    if !pivots_ok {
        let (lo, hi) = singular_extremes(&jac);
        if lo <= SINGULAR_RTOL * hi.max(1.0) {
            return Err(Error::SingularJacobian { sigma_min: lo });
        }
    }
    match lu.solve(&rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => {
            let (lo, _) = singular_extremes(&jac);
            Err(Error::SingularJacobian { sigma_min: lo })
        }
    }
}

/// Damped Newton on `R(u) = Lu − g(u) − f` with step halving on `‖R‖_{L²}`.
pub fn newton_solve(
    nl: &Nonlinearity,
    f: &TrigPoly,
    u0: &TrigPoly,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let order = f.order().max(u0.order());
    let f = f.with_order(order);
    let mut u = u0.with_order(order);
    let mut r = canonical_residual(&u, nl, &f);
    let mut ratios = Vec::new();
    let mut prev_step = None;
    let mut iterations = 0;

    while h1_norm(&r) > tol {
        if iterations == max_iter {
            return Err(Error::MaxIterExceeded {
                iterations,
                residual: h1_norm(&r),
            });
        }
        let delta = newton_direction(jacobian(&u, nl), -row_scaled(&r))?;
        let delta = TrigPoly::from_vec(delta.as_slice())?;
        let r_norm = l2_norm(&r);

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &u + &delta.scale(lambda);
            let r_trial = canonical_residual(&trial, nl, &f);
            if l2_norm(&r_trial) < r_norm {
                accepted = Some((trial, r_trial));
                break;
            }
            lambda *= 0.5;
        }
        let Some((next, r_next)) = accepted else {
            return Err(Error::MaxIterExceeded {
                iterations,
                residual: h1_norm(&r),
            });
        };
        let step = h1_norm(&(&next - &u));
        u = next;
        r = r_next;
        iterations += 1;
        record_ratio(&mut ratios, prev_step, step, h1_norm(&u));
        prev_step = Some(step);
    }

    Ok(SolveReport {
        solution: u,
        residual_h1: h1_norm(&r),
        iterations,
        observed_rate: max_rate(&ratios),
        step_ratios: ratios,
        certificate: None,
        method: Method::Newton,
    })
}
