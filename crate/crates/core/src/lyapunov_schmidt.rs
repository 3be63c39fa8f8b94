//! Lyapunov–Schmidt splitting along `P = project onto V_s`.
//!
//! Writing `u = v + w` with `v = Pu ∈ V_s` and `w = (I − P)u ∈ V_s⊥`, the
//! canonical problem splits into
//!
//! ```text
//! L v − P g(v + w)       = f      (f ∈ V_s)
//! L w − (I − P) g(v + w) = 0
//! ```
//!
//! Because `g(v) ∈ V_s` whenever `v ∈ V_s`, `w = 0` always solves the second
//! equation. Under a gap certificate the whole problem has exactly one
//! solution, so that solution lies in `V_s`. [`preservation_check`] probes
//! this numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_action::{symmetry_defect, SymmetryDefect};
use crate::linear_operator::apply_l;
use crate::rng::{random_series, stream_rng};
use crate::solver::{contraction_solve, newton_solve, GapCertificate, SolveReport};
use crate::trig_spectral::{
    compose, h1_norm, periodicity_index_default, project_vs, project_vs_perp, Branch, Nonlinearity,
    Periodicity, TrigPoly,
};

/// Tolerance on `‖(I − P) f‖_{H¹}` (relative to `max(1, ‖f‖)`) for `f ∈ V_s`.
pub const FORCING_SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitState {
    pub v: TrigPoly,
    pub w: TrigPoly,
    pub s: usize,
}

impl SplitState {
    pub fn recombine(&self) -> TrigPoly {
        &self.v + &self.w
    }
}

pub fn split(u: &TrigPoly, s: usize) -> SplitState {
    SplitState {
        v: project_vs(u, s),
        w: project_vs_perp(u, s),
        s,
    }
}

fn check_forcing(f: &TrigPoly, s: usize) -> Result<()> {
    let leak = h1_norm(&project_vs_perp(f, s));
    if leak > FORCING_SYMMETRY_TOL * h1_norm(f).max(1.0) {
        return Err(Error::PreconditionViolation(format!(
            "forcing is not 2π/{s}-periodic (distance to V_{s} is {leak:e})"
        )));
    }
    Ok(())
}

/// `(P R, (I − P) R)` for the canonical residual `R = L(v+w) − g(v+w) − f`.
pub fn residual_pair(
    state: &SplitState,
    nl: &Nonlinearity,
    f: &TrigPoly,
) -> Result<(TrigPoly, TrigPoly)> {
    check_forcing(f, state.s)?;
    let u = state.recombine();
    let order = u.order().max(f.order());
    let u = u.with_order(order);
    let r = &(&apply_l(&u) - &compose(&u, nl, Branch::G)) - &f.with_order(order);
    Ok((project_vs(&r, state.s), project_vs_perp(&r, state.s)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Verdict tolerance: defects must stay below `tol`, pairwise distances below `10·tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Amplitude of random Newton starts (modes 0..=6, all symmetry classes).
    pub start_amplitude: f64,
}

impl Default for PreservationOptions {
    fn default() -> Self {
        Self {
            n_starts: 10,
            seed: 0,
            tol: 1e-10,
            max_iter: 200,
            start_amplitude: 1.0,
        }
    }
}

impl PreservationOptions {
    /// Solvers run two orders of magnitude below the verdict tolerance.
    pub fn solver_tol(&self) -> f64 {
        (1e-2 * self.tol).max(1e-13)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    pub residual_h1: f64,
    pub distance_to_reference: f64,
    pub defect: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub s: usize,
    #[serde(rename = "J")]
    pub order: usize,
    pub certificate: GapCertificate,
    pub reference: SolveReport,
    pub defect: SymmetryDefect,
    pub periodicity: Periodicity,
    pub starts: Vec<StartOutcome>,
    pub max_pairwise_distance: f64,
    pub preserved: bool,
    pub probed_unique: bool,
    pub limitation: String,
}

const LIMITATION: &str = "verdicts cover the solutions reached by the certified contraction \
and the multi-start Newton probe at truncation order J; they do not enumerate every solution \
of the untruncated problem";

pub fn preservation_check(
    nl: &Nonlinearity,
    f: &TrigPoly,
    s: usize,
    cert: &GapCertificate,
    opts: &PreservationOptions,
) -> Result<PreservationReport> {
    if s == 0 {
        return Err(Error::InvalidArgument(
            "symmetry order must be positive".into(),
        ));
    }
    check_forcing(f, s)?;
    let order = f.order();
    let solver_tol = opts.solver_tol();
    let reference = contraction_solve(
        nl,
        f,
        cert,
        &TrigPoly::zeros(order),
        solver_tol,
        opts.max_iter,
    )?;
    let u = &reference.solution;

    let mut solutions = vec![u.clone()];
    let mut starts = Vec::with_capacity(opts.n_starts);
    for index in 0..opts.n_starts {
        let mut rng = stream_rng(opts.seed, "preserve-start", index as u64);
        let u0 = random_series(&mut rng, order, 6, opts.start_amplitude, |_| true);
        match newton_solve(nl, f, &u0, solver_tol, opts.max_iter) {
            Ok(rep) => {
                starts.push(StartOutcome {
                    index,
                    converged: true,
                    iterations: rep.iterations,
                    residual_h1: rep.residual_h1,
                    distance_to_reference: h1_norm(&(&rep.solution - u)),
                    defect: symmetry_defect(&rep.solution, s).defect,
                    error: None,
                });
                solutions.push(rep.solution);
            }
            Err(e) => starts.push(StartOutcome {
                index,
                converged: false,
                iterations: 0,
                residual_h1: f64::NAN,
                distance_to_reference: f64::NAN,
                defect: f64::NAN,
                error: Some(e.to_string()),
            }),
        }
    }

    let mut max_pairwise: f64 = 0.0;
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            max_pairwise = max_pairwise.max(h1_norm(&(a - b)));
        }
    }
    let defect = symmetry_defect(u, s);
    let preserved = defect.defect <= opts.tol
        && starts
            .iter()
            .filter(|o| o.converged)
            .all(|o| o.defect <= opts.tol);
    let probed_unique = starts.iter().all(|o| o.converged) && max_pairwise <= 10.0 * opts.tol;

    Ok(PreservationReport {
        s,
        order,
        certificate: *cert,
        periodicity: periodicity_index_default(u),
        defect,
        reference,
        starts,
        max_pairwise_distance: max_pairwise,
        preserved,
        probed_unique,
        limitation: LIMITATION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::certify_gap;

    #[test]
    fn split_examples() {
        let u = TrigPoly::constant(1.0, 2)
            + TrigPoly::cos_mode(1, 1.0, 2)
            + TrigPoly::sin_mode(2, 1.0, 2);
        let st = split(&u, 2);
        assert_eq!(
            st.v,
            TrigPoly::constant(1.0, 2) + TrigPoly::sin_mode(2, 1.0, 2)
        );
        assert_eq!(st.w, TrigPoly::cos_mode(1, 1.0, 2));
        assert_eq!(st.recombine(), u);
        let st = split(&TrigPoly::cos_mode(3, 2.0, 3), 3);
        assert_eq!(st.w, TrigPoly::zeros(3));
        let st = split(&TrigPoly::zeros(4), 2);
        assert_eq!((st.v.max_abs_coeff(), st.w.max_abs_coeff()), (0.0, 0.0));
    }

    #[test]
    fn residual_pair_linear() {
        let alpha = 1.7;
        let st = SplitState {
            v: TrigPoly::cos_mode(2, 1.0, 4),
            w: TrigPoly::cos_mode(1, 1.0, 4),
            s: 2,
        };
        let (rv, rw) =
            residual_pair(&st, &Nonlinearity::linear(alpha), &TrigPoly::zeros(4)).unwrap();
        assert!(rw.max_abs_diff(&TrigPoly::cos_mode(1, 1.0 - alpha, 4)) < 1e-14);
        assert!(rv.max_abs_diff(&TrigPoly::cos_mode(2, 4.0 - alpha, 4)) < 1e-14);
    }

    #[test]
    fn symmetric_branch_has_zero_complement_residual() {
        let nl = Nonlinearity::new(
            "2.5x + 0.5 sin x",
            |x| 2.5 * x + 0.5 * x.sin(),
            |x| 2.5 + 0.5 * x.cos(),
        );
        let v = TrigPoly::new(0.2, vec![0.0, 0.0, 0.7], vec![0.0, 0.0, -0.3])
            .unwrap()
            .with_order(12);
        let st = SplitState {
            v,
            w: TrigPoly::zeros(12),
            s: 3,
        };
        let (_, rw) = residual_pair(&st, &nl, &TrigPoly::cos_mode(3, 0.4, 12)).unwrap();
        assert!(rw.max_abs_coeff() < 1e-13);
    }

    #[test]
    fn residual_pair_rejects_asymmetric_forcing() {
        let st = split(&TrigPoly::zeros(4), 2);
        let err = residual_pair(
            &st,
            &Nonlinearity::linear(1.5),
            &TrigPoly::cos_mode(1, 1.0, 4),
        );
        assert!(matches!(err, Err(Error::PreconditionViolation(_))));
    }

    #[test]
    fn zero_forcing_preserved_trivially() {
        let nl = Nonlinearity::new(
            "2.5x + 0.5 sin x",
            |x| 2.5 * x + 0.5 * x.sin(),
            |x| 2.5 + 0.5 * x.cos(),
        );
        let cert = certify_gap(2.0, 3.0).unwrap();
        let opts = PreservationOptions {
            n_starts: 3,
            ..Default::default()
        };
        let rep = preservation_check(&nl, &TrigPoly::zeros(16), 2, &cert, &opts).unwrap();
        assert_eq!(rep.reference.solution, TrigPoly::zeros(16));
        assert_eq!(rep.periodicity, Periodicity::Constant);
        assert!(rep.preserved && rep.probed_unique);
    }
}
