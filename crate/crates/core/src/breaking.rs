//! Symmetry-breaking harness.
//!
//! For a bounded `g` whose primitive tends to `−∞` and whose derivative
//! crosses an eigenvalue, `(r−1)² < g'(t0) < r² < g'(t1) < (r+1)²` with
//! `gcd(r, s) = 1`, this module builds the windowed symmetric states
//! `u*_i = t_i + δ_i sin(st)`, the Morse indices `m_0, m_1` of the forms
//! linearized at them on `V_s⊥`, plants `u*_1` as an exact solution for the
//! forcing `f̂ = L u*_1 − g(u*_1) ∈ V_s`, and then searches for further
//! solutions outside `V_s`. Whether such a solution is found is reported as an
//! outcome of the search, never assumed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_action::{
    orbit_distance, shift_distance, symmetry_defect, SymmetryDefect, ZmAction,
};
use crate::linear_operator::{apply_l, SpectralGap};
use crate::morse::{
    find_delta, morse_index, ustar, MorseReport, QuadraticForm, WindowCertificate,
    DEFAULT_DEGENERACY_TOL,
};
use crate::rng::{random_series, stream_rng};
use crate::solver::{canonical_residual, newton_solve};
use crate::trig_spectral::{
    compose, gcd, h1_norm, project_vs_perp, Branch, Nonlinearity, TrigPoly,
};

/// Margin kept from gap edges when scanning for a crossing.
pub const CROSSING_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCheck {
    pub status: CheckStatus,
    pub max_abs_g: f64,
    /// Sampled `max |g|` on `[−2R, 2R]`, used when no bound is declared.
    pub max_abs_g_doubled: f64,
    pub claimed_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityCheck {
    pub status: CheckStatus,
    /// `(t, G(t))` at `±R/2, ±R, ±2R` by adaptive quadrature.
    pub primitive_samples: Vec<(f64, f64)>,
    /// Largest deviation from the closed-form primitive, when one is known.
    pub closed_form_deviation: Option<f64>,
    pub heuristic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub probe_radius: f64,
    pub boundedness: BoundednessCheck,
    pub coercivity: CoercivityCheck,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.boundedness.status == CheckStatus::Pass && self.coercivity.status == CheckStatus::Pass
    }

    pub fn any_failed(&self) -> bool {
        self.boundedness.status == CheckStatus::Fail || self.coercivity.status == CheckStatus::Fail
    }
}

fn max_abs_on(nl: &Nonlinearity, radius: f64, n: usize) -> f64 {
    let n = n.max(2);
    let step = 2.0 * radius / (n - 1) as f64;
    (0..n)
        .map(|k| nl.g(-radius + step * k as f64).abs())
        .fold(0.0, f64::max)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `G(t) = ∫₀ᵗ g` by adaptive Simpson quadrature.
pub fn primitive_by_quadrature(nl: &Nonlinearity, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let f = |x: f64| nl.g(x);
    // split into unit-length panels so narrow features are not skipped
    let panels = (t.abs().ceil() as usize).max(1) * 4;
    let h = t / panels as f64;
    (0..panels)
        .map(|k| {
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            adaptive_simpson(&f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), 1e-12, 40)
        })
        .sum()
}

/// Sampled checks of `|g| ≤ C_g` and of `G(t) → −∞` as `|t| → ∞`. The
/// coercivity check only looks at finitely many points and is a heuristic.
pub fn check_hypotheses(
    nl: &Nonlinearity,
    probe_radius: f64,
    n_samples: usize,
) -> HypothesisReport {
    assert!(probe_radius > 0.0, "probe radius must be positive");
    let max_abs_g = max_abs_on(nl, probe_radius, n_samples);
    let max_abs_g_doubled = max_abs_on(nl, 2.0 * probe_radius, 2 * n_samples);
    let status = match nl.c_g() {
        Some(c) if max_abs_g.max(max_abs_g_doubled) <= c + 1e-12 => CheckStatus::Pass,
        Some(_) => CheckStatus::Fail,
        None if max_abs_g_doubled > 1.01 * max_abs_g + 1e-12 => CheckStatus::Fail,
        None => CheckStatus::Inconclusive,
    };
    let boundedness = BoundednessCheck {
        status,
        max_abs_g,
        max_abs_g_doubled,
        claimed_bound: nl.c_g(),
    };

    let radii = [0.5 * probe_radius, probe_radius, 2.0 * probe_radius];
    let mut primitive_samples = Vec::new();
    let mut decreasing = true;
    for sign in [-1.0, 1.0] {
        let values: Vec<f64> = radii
            .iter()
            .map(|&r| primitive_by_quadrature(nl, sign * r))
            .collect();
        decreasing &= values.windows(2).all(|w| w[1] < w[0]);
        primitive_samples.extend(radii.iter().map(|r| sign * r).zip(values));
    }
    let closed_form_deviation = primitive_samples
        .iter()
        .map(|&(t, g)| nl.primitive(t).map(|exact| (exact - g).abs()))
        .collect::<Option<Vec<_>>>()
        .map(|d| d.into_iter().fold(0.0, f64::max));
    let coercivity = CoercivityCheck {
        status: if decreasing {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        primitive_samples,
        closed_form_deviation,
        heuristic: true,
    };

    HypothesisReport {
        probe_radius,
        boundedness,
        coercivity,
    }
}

/// Points where `g'` sits below and above the eigenvalue `r²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingWitness {
    pub r: usize,
    pub t0: f64,
    pub t1: f64,
    pub gp_t0: f64,
    pub gp_t1: f64,
}

impl CrossingWitness {
    pub fn is_valid(&self) -> bool {
        let r = self.r as f64;
        (r - 1.0).powi(2) < self.gp_t0
            && self.gp_t0 < r * r
            && r * r < self.gp_t1
            && self.gp_t1 < (r + 1.0).powi(2)
    }
}

/// Midpoint of the first run of grid points on which `g'` lies inside `gap`
/// (with margin), run edges refined by bisection.
fn locate_in_gap(nl: &Nonlinearity, gap: SpectralGap, lo: f64, hi: f64, n: usize) -> Option<f64> {
    let inside = |t: f64| {
        let gp = nl.g_prime(t);
        gap.lo + CROSSING_MARGIN < gp && gp < gap.hi - CROSSING_MARGIN
    };
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let t = |k: usize| lo + step * k as f64;
    let start = (0..n).find(|&k| inside(t(k)))?;
    let end = (start..n)
        .take_while(|&k| inside(t(k)))
        .last()
        .unwrap_or(start);

    let refine = |mut a_in: f64, mut b_out: f64| {
        for _ in 0..60 {
            let m = 0.5 * (a_in + b_out);
            if inside(m) {
                a_in = m;
            } else {
                b_out = m;
            }
        }
        a_in
    };
    let left = if start == 0 {
        lo
    } else {
        refine(t(start), t(start - 1))
    };
    let right = if end == n - 1 {
        hi
    } else {
        refine(t(end), t(end + 1))
    };
    let mid = 0.5 * (left + right);
    if inside(mid) {
        return Some(mid);
    }
    // non-monotone inside the run: fall back to the run sample nearest the midpoint
    (start..=end)
        .map(t)
        .min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
}

pub fn find_crossing(
    nl: &Nonlinearity,
    r: usize,
    search_lo: f64,
    search_hi: f64,
    n_samples: usize,
) -> Result<CrossingWitness> {
    if r == 0 {
        return Err(Error::InvalidArgument(
            "r must be a positive integer".into(),
        ));
    }
    if !(search_lo < search_hi) {
        return Err(Error::InvalidArgument(format!(
            "empty search interval [{search_lo}, {search_hi}]"
        )));
    }
    let below = SpectralGap::new(r - 1);
    let above = SpectralGap::new(r);
    let no_witness = |g: SpectralGap| Error::NoWitness {
        lo: g.lo,
        hi: g.hi,
        search_lo,
        search_hi,
    };
    let t0 = locate_in_gap(nl, below, search_lo, search_hi, n_samples)
        .ok_or_else(|| no_witness(below))?;
    let t1 = locate_in_gap(nl, above, search_lo, search_hi, n_samples)
        .ok_or_else(|| no_witness(above))?;
    Ok(CrossingWitness {
        r,
        t0,
        t1,
        gp_t0: nl.g_prime(t0),
        gp_t1: nl.g_prime(t1),
    })
}

/// Plants `u* = t1 + δ₁ sin(st)` as an exact solution: `f̂ = L u* − g(u*)`.
pub fn construct_fhat(
    nl: &Nonlinearity,
    witness: &CrossingWitness,
    s: usize,
    delta1: f64,
    order: usize,
) -> (TrigPoly, TrigPoly) {
    let u_star = ustar(witness.t1, delta1, s, order);
    let fhat = &apply_l(&u_star) - &compose(&u_star, nl, Branch::G);
    (fhat, u_star)
}

/// `‖(I − P) f‖ / ‖f‖` measured on raw coefficients.
pub fn perp_coefficient_mass(f: &TrigPoly, s: usize) -> f64 {
    let total = f.max_abs_coeff();
    if total == 0.0 {
        0.0
    } else {
        project_vs_perp(f, s).max_abs_coeff() / total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakingConfig {
    pub r: usize,
    pub s: usize,
    #[serde(rename = "J")]
    pub order: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub defect_threshold: f64,
    pub max_iter: usize,
    pub search_lo: f64,
    pub search_hi: f64,
    pub scan_samples: usize,
    pub window_tol: f64,
    /// Amplitude `ε` of the start perturbations.
    pub perturbation: f64,
    /// Orbit distance below which two solutions are identified.
    pub dedup_tol: f64,
    pub probe_radius: f64,
}

impl Default for BreakingConfig {
    fn default() -> Self {
        Self {
            r: 2,
            s: 3,
            order: 32,
            n_starts: 16,
            seed: 0,
            tol: 1e-10,
            defect_threshold: 0.05,
            max_iter: 100,
            search_lo: -10.0,
            search_hi: 10.0,
            scan_samples: 4001,
            window_tol: 1e-3,
            perturbation: 0.5,
            dedup_tol: 1e-6,
            probe_radius: 10.0,
        }
    }
}

impl BreakingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidArgument(
                "r must be a positive integer".into(),
            ));
        }
        if self.s < 2 {
            return Err(Error::InvalidArgument("s must be at least 2".into()));
        }
        let d = gcd(self.r, self.s);
        if d != 1 {
            return Err(Error::InvalidArgument(format!(
                "r = {} and s = {} must be coprime (gcd(r, s) = {d}); otherwise cos(rt), sin(rt) lie in V_s",
                self.r, self.s
            )));
        }
        if self.order < self.r.max(self.s) {
            return Err(Error::InvalidArgument(format!(
                "truncation order {} must cover modes r = {} and s = {}",
                self.order, self.r, self.s
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupGroup {
    /// Finite translations by `2π/s`.
    Cyclic,
    /// All translations (the forcing is constant).
    Circle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoundSolution {
    pub start: String,
    pub solution: TrigPoly,
    pub residual_h1: f64,
    pub iterations: usize,
    pub defect: SymmetryDefect,
    pub orbit_class: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub id: usize,
    /// Index into the solution list of the first member found.
    pub representative: usize,
    pub members: usize,
    pub relative_defect: f64,
    pub asymmetric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartFailure {
    pub start: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub dedup_group: DedupGroup,
    pub solutions: Vec<FoundSolution>,
    pub classes: Vec<OrbitClass>,
    pub failures: Vec<StartFailure>,
    pub broke_symmetry: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub s: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub defect_threshold: f64,
    pub dedup_tol: f64,
}

/// Newton from every start, then groups converged solutions into orbit
/// classes under translations (by `2π/s`, or by any angle when `f` is
/// constant).
pub fn multi_start_search(
    nl: &Nonlinearity,
    f: &TrigPoly,
    starts: &[(String, TrigPoly)],
    opts: &SearchOptions,
) -> SearchOutcome {
    let nonconstant = {
        let mut g = f.clone();
        g.set_mode(0, 0.0, 0.0);
        g.max_abs_coeff()
    };
    let dedup_group = if nonconstant <= 1e-14 * f.max_abs_coeff().max(1.0) {
        DedupGroup::Circle
    } else {
        DedupGroup::Cyclic
    };
    let action = ZmAction::new(opts.s);
    let distance = |u: &TrigPoly, v: &TrigPoly| match dedup_group {
        DedupGroup::Cyclic => orbit_distance(u, v, action),
        DedupGroup::Circle => shift_distance(u, v),
    };

    let mut solutions: Vec<FoundSolution> = Vec::new();
    let mut classes: Vec<OrbitClass> = Vec::new();
    let mut failures = Vec::new();
    for (label, u0) in starts {
        match newton_solve(nl, f, u0, opts.tol, opts.max_iter) {
            Ok(rep) => {
                let defect = symmetry_defect(&rep.solution, opts.s);
                let scale = h1_norm(&rep.solution).max(1.0);
                let class = classes.iter_mut().find(|c| {
                    distance(&rep.solution, &solutions[c.representative].solution)
                        <= opts.dedup_tol * scale
                });
                let orbit_class = match class {
                    Some(c) => {
                        c.members += 1;
                        c.id
                    }
                    None => {
                        let id = classes.len();
                        classes.push(OrbitClass {
                            id,
                            representative: solutions.len(),
                            members: 1,
                            relative_defect: defect.relative_defect,
                            asymmetric: defect.relative_defect > opts.defect_threshold,
                        });
                        id
                    }
                };
                solutions.push(FoundSolution {
                    start: label.clone(),
                    solution: rep.solution,
                    residual_h1: rep.residual_h1,
                    iterations: rep.iterations,
                    defect,
                    orbit_class,
                });
            }
            Err(e) => failures.push(StartFailure {
                start: label.clone(),
                error: e.to_string(),
            }),
        }
    }
    let broke_symmetry = solutions
        .iter()
        .any(|s| s.defect.relative_defect > opts.defect_threshold);
    SearchOutcome {
        dedup_group,
        solutions,
        classes,
        failures,
        broke_symmetry,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorsePair {
    /// Form linearized at `u*_0` (window below `r²`).
    pub tilde_q0: MorseReport,
    /// Form linearized at `u*_1` (window above `r²`).
    pub tilde_q1: MorseReport,
    /// Constant potential `g'(t0)`.
    pub q0: MorseReport,
    /// Constant potential `g'(t1)`.
    pub q1: MorseReport,
}

impl MorsePair {
    pub fn m0(&self) -> usize {
        self.tilde_q0.index
    }

    pub fn m1(&self) -> usize {
        self.tilde_q1.index
    }
}

/// Morse reports of the four forms on `V_s⊥` at truncation `order`.
pub fn morse_pair(
    nl: &Nonlinearity,
    witness: &CrossingWitness,
    window0: &WindowCertificate,
    window1: &WindowCertificate,
    s: usize,
    order: usize,
) -> Result<MorsePair> {
    let u0 = ustar(window0.t_center, window0.delta, s, order);
    let u1 = ustar(window1.t_center, window1.delta, s, order);
    let report = |form: QuadraticForm| morse_index(&form, DEFAULT_DEGENERACY_TOL);
    Ok(MorsePair {
        tilde_q0: report(QuadraticForm::linearized_at(nl, &u0, s, order)?),
        tilde_q1: report(QuadraticForm::linearized_at(nl, &u1, s, order)?),
        q0: report(QuadraticForm::constant(witness.gp_t0, s, order)?),
        q1: report(QuadraticForm::constant(witness.gp_t1, s, order)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakingRunRecord {
    pub config: BreakingConfig,
    pub hypotheses: HypothesisReport,
    pub witness: CrossingWitness,
    pub window0: WindowCertificate,
    pub window1: WindowCertificate,
    pub morse: MorsePair,
    pub m0: usize,
    pub m1: usize,
    pub fhat: TrigPoly,
    pub fhat_perp_mass: f64,
    pub u_star: TrigPoly,
    pub u_star_residual_h1: f64,
    pub search: SearchOutcome,
    pub broke_symmetry: bool,
}

/// Start list: `u*`, `u* ± ε cos(rt)`, `u* ± ε sin(rt)`, then `u*` plus seeded
/// random `V_s⊥` perturbations; truncated to `n_starts`.
pub fn breaking_starts(u_star: &TrigPoly, cfg: &BreakingConfig) -> Vec<(String, TrigPoly)> {
    let (r, eps, order) = (cfg.r, cfg.perturbation, cfg.order);
    let mut starts = vec![
        ("u_star".to_string(), u_star.clone()),
        (
            "u_star+eps*cos(rt)".to_string(),
            u_star + &TrigPoly::cos_mode(r, eps, order),
        ),
        (
            "u_star-eps*cos(rt)".to_string(),
            u_star + &TrigPoly::cos_mode(r, -eps, order),
        ),
        (
            "u_star+eps*sin(rt)".to_string(),
            u_star + &TrigPoly::sin_mode(r, eps, order),
        ),
        (
            "u_star-eps*sin(rt)".to_string(),
            u_star + &TrigPoly::sin_mode(r, -eps, order),
        ),
    ];
    let max_mode = (2 * r.max(cfg.s)).min(order);
    let mut k = 0;
    while starts.len() < cfg.n_starts {
        let mut rng = stream_rng(cfg.seed, "break-start", k as u64);
        let p = random_series(&mut rng, order, max_mode, 2.0 * eps, |j| j % cfg.s != 0);
        starts.push((format!("random[{k}]"), u_star + &p));
        k += 1;
    }
    starts.truncate(cfg.n_starts.max(1));
    starts
}

pub fn break_search(nl: &Nonlinearity, cfg: &BreakingConfig) -> Result<BreakingRunRecord> {
    cfg.validate()?;
    let hypotheses = check_hypotheses(nl, cfg.probe_radius, 2001);
    if hypotheses.any_failed() {
        return Err(Error::PreconditionViolation(format!(
            "{} fails the boundedness/coercivity checks (boundedness: {:?}, coercivity: {:?})",
            nl.description(),
            hypotheses.boundedness.status,
            hypotheses.coercivity.status
        )));
    }
    let witness = find_crossing(nl, cfg.r, cfg.search_lo, cfg.search_hi, cfg.scan_samples)?;
    let window0 = find_delta(nl, witness.t0, SpectralGap::new(cfg.r - 1), cfg.window_tol)?;
    let window1 = find_delta(nl, witness.t1, SpectralGap::new(cfg.r), cfg.window_tol)?;
    let morse = morse_pair(nl, &witness, &window0, &window1, cfg.s, cfg.order)?;

    let (fhat, u_star) = construct_fhat(nl, &witness, cfg.s, window1.delta, cfg.order);
    let u_star_residual_h1 = h1_norm(&canonical_residual(&u_star, nl, &fhat));
    let starts = breaking_starts(&u_star, cfg);
    let search = multi_start_search(
        nl,
        &fhat,
        &starts,
        &SearchOptions {
            s: cfg.s,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            defect_threshold: cfg.defect_threshold,
            dedup_tol: cfg.dedup_tol,
        },
    );

    Ok(BreakingRunRecord {
        config: cfg.clone(),
        hypotheses,
        witness,
        window0,
        window1,
        m0: morse.m0(),
        m1: morse.m1(),
        morse,
        fhat_perp_mass: perp_coefficient_mass(&fhat, cfg.s),
        fhat,
        u_star,
        u_star_residual_h1,
        broke_symmetry: search.broke_symmetry,
        search,
    })
}
