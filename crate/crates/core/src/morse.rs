//! Quadratic forms `Q(h) = ∫₀^{2π} (|h'|² − W(t)|h|²) dt` restricted to
//! `V_s⊥`, their Galerkin matrices and Morse indices, and the search for
//! windows `[t − δ, t + δ]` on which `g'` stays inside a spectral gap.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_operator::{eigenvalue, SpectralGap};
use crate::trig_spectral::{compose_to_order, Branch, Nonlinearity, TrigPoly};

/// Default degeneracy tolerance, relative to the largest |eigenvalue|.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Default cap on the window half-width returned by [`find_delta`].
pub const DEFAULT_DELTA_MAX: f64 = 2.0;

const WINDOW_SAMPLES: usize = 513;
const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLabel {
    pub kind: ModeKind,
    pub j: usize,
}

impl ModeLabel {
    /// `φ(t)`, unnormalized.
    pub fn eval(&self, t: f64) -> f64 {
        let x = self.j as f64 * t;
        match self.kind {
            ModeKind::Cos => x.cos(),
            ModeKind::Sin => x.sin(),
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ModeKind::Cos => 'c',
            ModeKind::Sin => 's',
        };
        write!(f, "{k}{}", self.j)
    }
}

/// `{cos jt, sin jt : 1 ≤ j ≤ J, s ∤ j}`, ascending `j`, cos before sin.
pub fn vs_perp_basis(s: usize, order: usize) -> Vec<ModeLabel> {
    (1..=order)
        .filter(|j| j % s != 0)
        .flat_map(|j| {
            [
                ModeLabel {
                    kind: ModeKind::Cos,
                    j,
                },
                ModeLabel {
                    kind: ModeKind::Sin,
                    j,
                },
            ]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub potential: TrigPoly,
    pub s: usize,
    pub order: usize,
}

impl QuadraticForm {
    pub fn new(potential: TrigPoly, s: usize, order: usize) -> Result<Self> {
        if s < 2 {
            return Err(Error::InvalidArgument(format!(
                "V_{s}⊥ is trivial; the symmetry order must be at least 2"
            )));
        }
        Ok(Self {
            potential,
            s,
            order,
        })
    }

    /// `W ≡ c`.
    pub fn constant(c: f64, s: usize, order: usize) -> Result<Self> {
        Self::new(TrigPoly::constant(c, 0), s, order)
    }

    /// `W = g'(u)`, resolved to order `2J`.
    pub fn linearized_at(nl: &Nonlinearity, u: &TrigPoly, s: usize, order: usize) -> Result<Self> {
        let potential = compose_to_order(u, nl, Branch::GPrime, 2 * order);
        Self::new(potential, s, order)
    }

    pub fn basis(&self) -> Vec<ModeLabel> {
        vs_perp_basis(self.s, self.order)
    }

    /// Quadrature grid; exact for the integrands `W φ_a φ_b`.
    fn quadrature_grid(&self) -> usize {
        let jw = self.potential.order();
        let n = (4 * self.order)
            .max(2 * self.order + jw + 2)
            .max(2 * jw + 2)
            .max(8);
        n + n % 2
    }
}

/// Galerkin matrix of the form in the `L²`-normalized basis `φ/√π`:
/// `(a, b) ↦ j_a² δ_ab − (1/π) ∫ W φ_a φ_b`.
pub fn assemble(form: &QuadraticForm) -> DMatrix<f64> {
    let basis = form.basis();
    let dim = basis.len();
    let n = form.quadrature_grid();
    let w = form
        .potential
        .to_samples(n)
        .expect("quadrature grid covers the potential");
    let ts: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let phi: Vec<Vec<f64>> = basis
        .iter()
        .map(|m| ts.iter().map(|&t| m.eval(t)).collect())
        .collect();

    let scale = 2.0 / n as f64;
    let mut m = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        let wa: Vec<f64> = phi[a].iter().zip(w.samples()).map(|(p, w)| p * w).collect();
        for b in a..dim {
            let q = scale * wa.iter().zip(&phi[b]).map(|(x, y)| x * y).sum::<f64>();
            m[(a, b)] = -q;
            m[(b, a)] = -q;
        }
        m[(a, a)] += eigenvalue(basis[a].j);
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    /// Number of negative Galerkin eigenvalues.
    pub index: usize,
    pub eigenvalues: Vec<f64>,
    /// `min |eigenvalue|`.
    pub margin: f64,
    /// `margin / max |eigenvalue|`.
    pub relative_margin: f64,
    pub degenerate: bool,
    pub basis_dim: usize,
    pub s: usize,
    #[serde(rename = "J")]
    pub order: usize,
}

pub fn signature(
    matrix: &DMatrix<f64>,
    s: usize,
    order: usize,
    degeneracy_tol: f64,
) -> MorseReport {
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(matrix.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(f64::total_cmp);
    let margin = eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let largest = eigenvalues.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let relative_margin = if largest > 0.0 { margin / largest } else { 0.0 };
    MorseReport {
        index: eigenvalues.iter().filter(|&&e| e < 0.0).count(),
        margin,
        relative_margin,
        degenerate: eigenvalues.is_empty() || relative_margin < degeneracy_tol,
        basis_dim: eigenvalues.len(),
        eigenvalues,
        s,
        order,
    }
}

pub fn morse_index(form: &QuadraticForm, degeneracy_tol: f64) -> MorseReport {
    signature(&assemble(form), form.s, form.order, degeneracy_tol)
}

/// `2·#{j ≥ 1 : s ∤ j, j² < c, j ≤ J}`.
pub fn constant_potential_index(c: f64, s: usize, order: usize) -> usize {
    2 * (1..=order)
        .filter(|&j| j % s != 0 && eigenvalue(j) < c)
        .count()
}

/// A window `[t_center − delta, t_center + delta]` on which sampled `g'` stays
/// strictly inside `window_gap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCertificate {
    pub t_center: f64,
    pub delta: f64,
    pub window_gap: SpectralGap,
    pub min_gp: f64,
    pub max_gp: f64,
}

fn window_range(nl: &Nonlinearity, t: f64, delta: f64) -> (f64, f64) {
    let step = 2.0 * delta / (WINDOW_SAMPLES - 1) as f64;
    (0..WINDOW_SAMPLES)
        .map(|k| nl.g_prime(t - delta + step * k as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

pub fn find_delta(
    nl: &Nonlinearity,
    t_center: f64,
    gap: SpectralGap,
    tol: f64,
) -> Result<WindowCertificate> {
    find_delta_capped(nl, t_center, gap, tol, DEFAULT_DELTA_MAX)
}

/// Near-maximal certified half-width, at most `delta_max`: start at `δ = 1`,
/// halve until admissible, grow by the golden ratio while admissible, then
/// bisect the last bracket.
pub fn find_delta_capped(
    nl: &Nonlinearity,
    t_center: f64,
    gap: SpectralGap,
    tol: f64,
    delta_max: f64,
) -> Result<WindowCertificate> {
    let margin = tol * (gap.hi - gap.lo);
    let admissible = |lo: f64, hi: f64| lo - gap.lo >= margin && gap.hi - hi >= margin;
    let gp = nl.g_prime(t_center);
    if !admissible(gp, gp) {
        return Err(Error::NoWindow {
            t_center,
            gp,
            lo: gap.lo,
            hi: gap.hi,
        });
    }
    let ok = |delta: f64| {
        let (lo, hi) = window_range(nl, t_center, delta);
        admissible(lo, hi)
    };

    let mut delta = delta_max.min(1.0);
    while !ok(delta) {
        delta *= 0.5;
        if delta < 1e-12 {
            return Err(Error::NoWindow {
                t_center,
                gp,
                lo: gap.lo,
                hi: gap.hi,
            });
        }
    }
    let mut upper = None;
    while upper.is_none() {
        let next = (delta * GOLDEN).min(delta_max);
        if next <= delta {
            break;
        }
        if ok(next) {
            delta = next;
        } else {
            upper = Some(next);
        }
    }
    if let Some(mut hi) = upper {
        for _ in 0..40 {
            let mid = 0.5 * (delta + hi);
            if ok(mid) {
                delta = mid;
            } else {
                hi = mid;
            }
        }
    }

    let (min_gp, max_gp) = window_range(nl, t_center, delta);
    Ok(WindowCertificate {
        t_center,
        delta,
        window_gap: gap,
        min_gp,
        max_gp,
    })
}

/// `t_center + delta·sin(st)`, padded to `order`.
pub fn ustar(t_center: f64, delta: f64, s: usize, order: usize) -> TrigPoly {
    let mut u = TrigPoly::sin_mode(s, delta, order.max(s));
    u.set_mode(0, t_center, 0.0);
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_action::symmetry_defect;

    fn labels(basis: &[ModeLabel]) -> Vec<String> {
        basis.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn basis_examples() {
        assert_eq!(
            labels(&vs_perp_basis(3, 4)),
            ["c1", "s1", "c2", "s2", "c4", "s4"]
        );
        assert_eq!(labels(&vs_perp_basis(2, 3)), ["c1", "s1", "c3", "s3"]);
        assert_eq!(labels(&vs_perp_basis(2, 1)), ["c1", "s1"]);
    }

    #[test]
    fn constant_potential_is_diagonal() {
        let m = assemble(&QuadraticForm::constant(2.5, 3, 4).unwrap());
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            -1.5, -1.5, 1.5, 1.5, 13.5, 13.5,
        ]));
        assert!((&m - &expect).amax() < 1e-13);
        let m = assemble(&QuadraticForm::constant(0.0, 2, 5).unwrap());
        let diag: Vec<f64> = m.diagonal().iter().copied().collect();
        assert_eq!(diag, [1.0, 1.0, 9.0, 9.0, 25.0, 25.0]);
    }

    #[test]
    fn index_examples() {
        let rep = morse_index(
            &QuadraticForm::constant(2.5, 3, 16).unwrap(),
            DEFAULT_DEGENERACY_TOL,
        );
        assert_eq!(rep.index, 2);
        assert!(!rep.degenerate);
        let rep = morse_index(
            &QuadraticForm::constant(6.0, 3, 16).unwrap(),
            DEFAULT_DEGENERACY_TOL,
        );
        assert_eq!(rep.index, 4);
        let rep = morse_index(
            &QuadraticForm::constant(0.5, 2, 16).unwrap(),
            DEFAULT_DEGENERACY_TOL,
        );
        assert_eq!(rep.index, 0);
        assert_eq!(rep.basis_dim, 16);
    }

    #[test]
    fn degenerate_form_is_flagged() {
        let rep = morse_index(
            &QuadraticForm::constant(4.0, 3, 8).unwrap(),
            DEFAULT_DEGENERACY_TOL,
        );
        assert!(rep.degenerate);
    }

    #[test]
    fn trivial_perp_space_rejected() {
        assert!(QuadraticForm::constant(1.0, 1, 4).is_err());
    }

    #[test]
    fn window_constant_derivative_capped() {
        let w = find_delta(&Nonlinearity::linear(2.5), 0.0, SpectralGap::new(1), 1e-3).unwrap();
        assert_eq!(w.delta, DEFAULT_DELTA_MAX);
        assert_eq!((w.min_gp, w.max_gp), (2.5, 2.5));
    }

    #[test]
    fn window_stays_inside_gap() {
        let nl = Nonlinearity::new(
            "2.5x - 2cos x",
            |x| 2.5 * x - 2.0 * x.cos(),
            |x| 2.5 + 2.0 * x.sin(),
        );
        let gap = SpectralGap::new(1);
        let w = find_delta(&nl, 0.0, gap, 1e-3).unwrap();
        assert!(w.delta > 0.5 && w.delta < DEFAULT_DELTA_MAX);
        // dense sampling oracle
        let n = 20_001;
        for k in 0..n {
            let t = -w.delta + 2.0 * w.delta * k as f64 / (n - 1) as f64;
            let gp = nl.g_prime(t);
            assert!(gap.lo < gp && gp < gap.hi, "g'({t}) = {gp}");
        }
        // asin(0.75) bounds the admissible half-width
        assert!(w.delta <= (0.75f64).asin() + 1e-9);
    }

    #[test]
    fn window_on_boundary_fails() {
        let nl = Nonlinearity::linear(4.0);
        assert!(matches!(
            find_delta(&nl, 0.0, SpectralGap::new(1), 1e-3),
            Err(Error::NoWindow { .. })
        ));
    }

    #[test]
    fn ustar_examples() {
        let u = ustar(1.5, 0.2, 3, 3);
        assert_eq!(
            u,
            TrigPoly::new(1.5, vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.2]).unwrap()
        );
        assert_eq!(ustar(1.5, 0.0, 3, 4), TrigPoly::constant(1.5, 4));
        assert_eq!(symmetry_defect(&ustar(-0.7, 0.4, 5, 10), 5).defect, 0.0);
    }
}
