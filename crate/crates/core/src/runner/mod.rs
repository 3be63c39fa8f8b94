//! Command execution shared by the CLI and the browser demo.
//!
//! [`execute`] turns a validated [`Config`] into an [`Outcome`]: a JSON
//! record, a set of sampled curves, a verdict and a one-paragraph summary.
//! Nothing here touches the filesystem; see [`emit`] for that.

pub mod config;
pub mod emit;
pub mod registry;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::breaking::{break_search, find_crossing, morse_pair, CrossingWitness, MorsePair};
use crate::error::Error;
use crate::linear_operator::{spectrum_table, SpectralGap};
use crate::lyapunov_schmidt::{preservation_check, PreservationOptions};
use crate::morse::{find_delta, ustar, WindowCertificate};
use crate::solver::{
    certify_gap, contraction_solve, derivative_range, newton_solve, GapCertificate, Method,
    Orientation,
};
use crate::trig_spectral::{GridFunction, Nonlinearity, TrigPoly};

pub use config::{load_config, parse_config, Config, ConfigError};
pub use emit::{emit_record, record_json, RunManifest};
pub use registry::{finite_difference_audit, AuditReport, RegistryEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    PreserveCheck,
    BreakSearch,
    Morse,
    Spectrum { max_j: usize },
    AuditG,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::PreserveCheck => "preserve-check",
            Command::BreakSearch => "break-search",
            Command::Morse => "morse",
            Command::Spectrum { .. } => "spectrum",
            Command::AuditG => "audit-g",
        }
    }

    fn args(&self) -> Value {
        match self {
            Command::Spectrum { max_j } => json!({ "max_j": max_j }),
            _ => Value::Null,
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(Error),
}

impl RunError {
    /// 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub record: Value,
    pub grids: Vec<(String, GridFunction)>,
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    /// 0 when the verdict passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Body {
    record: Value,
    grids: Vec<(String, GridFunction)>,
    passed: bool,
    summary: String,
}

fn grid(u: &TrigPoly, n: usize) -> Result<GridFunction, RunError> {
    Ok(u.to_samples(n)?)
}

pub fn execute(command: Command, config: &Config) -> Result<Outcome, RunError> {
    let clock = Stopwatch::start();
    let body = match command {
        Command::Solve => run_solve(config)?,
        Command::PreserveCheck => run_preserve(config)?,
        Command::BreakSearch => run_break_search(config)?,
        Command::Morse => run_morse(config)?,
        Command::Spectrum { max_j } => run_spectrum(max_j),
        Command::AuditG => run_audit(config),
    };
    let config_digest = config.digest();
    let args = command.args();
    let record_id = if args.is_null() {
        config_digest.clone()
    } else {
        let mut h = Sha256::new();
        h.update(config_digest.as_bytes());
        h.update(args.to_string().as_bytes());
        hex::encode(h.finalize())
    };
    let manifest = RunManifest {
        command: command.name().to_string(),
        config_digest,
        record_id,
        seed: config.seed,
        order: config.problem.order,
        grid: config.problem.grid,
        orientation: config.problem.orientation,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: clock.elapsed_ms(),
    };
    let mut record = body.record;
    if !args.is_null() {
        record["args"] = args;
    }
    Ok(Outcome {
        manifest,
        record,
        grids: body.grids,
        passed: body.passed,
        summary: body.summary,
    })
}

/// Wall clock; reads zero on `wasm32-unknown-unknown`, which has no clock in std.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_ms(&self) -> u128 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_millis();
        #[cfg(target_arch = "wasm32")]
        0
    }
}

/// The configured nonlinearity in canonical orientation, after its derivative audit.
fn canonical_nonlinearity(
    config: &Config,
) -> Result<(RegistryEntry, AuditReport, Nonlinearity), RunError> {
    let entry = config.entry()?;
    let audit = finite_difference_audit(&entry);
    if !audit.passed {
        return Err(Error::PreconditionViolation(format!(
            "derivative of `{}` disagrees with finite differences (relative error {:e} at x = {})",
            entry.name, audit.max_relative_error, audit.worst_probe
        ))
        .into());
    }
    let nl = config.problem.orientation.canonical(&entry.nonlinearity);
    Ok((entry, audit, nl))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRange {
    /// Bounds on the derivative of the canonical nonlinearity.
    pub q: f64,
    pub p: f64,
    /// `true` when taken from the config, `false` when sampled.
    pub declared: bool,
}

/// Declared bounds refer to the user's `g`; under `plus` orientation they flip.
fn derivative_bounds(config: &Config, nl: &Nonlinearity) -> DerivativeRange {
    let s = &config.solve;
    match (s.q, s.p) {
        (Some(q), Some(p)) => {
            let (q, p) = match config.problem.orientation {
                Orientation::Minus => (q, p),
                Orientation::Plus => (-p, -q),
            };
            DerivativeRange {
                q,
                p,
                declared: true,
            }
        }
        _ => {
            let (q, p) = derivative_range(nl, s.range[0], s.range[1], s.range_samples);
            DerivativeRange {
                q,
                p,
                declared: false,
            }
        }
    }
}

fn run_solve(config: &Config) -> Result<Body, RunError> {
    let (entry, audit, nl) = canonical_nonlinearity(config)?;
    let f = &config.forcing;
    let zero = TrigPoly::zeros(config.problem.order);
    let range = derivative_bounds(config, &nl);
    let s = &config.solve;
    let report = match s.method {
        Method::Contraction => {
            let cert = certify_gap(range.q, range.p)?;
            contraction_solve(&nl, f, &cert, &zero, s.tol, s.max_iter)?
        }
        Method::Newton => newton_solve(&nl, f, &zero, s.tol, s.max_iter)?,
    };
    let summary = format!(
        "{} converged in {} iterations, residual {:.3e} (H1){}",
        match report.method {
            Method::Contraction => "contraction",
            Method::Newton => "newton",
        },
        report.iterations,
        report.residual_h1,
        report
            .certificate
            .map(|c| format!(
                ", kappa = {:.6}, observed rate = {:.6}",
                c.kappa, report.observed_rate
            ))
            .unwrap_or_default()
    );
    let record = json!({
        "nonlinearity": entry.nonlinearity.description(),
        "flags": entry.flags,
        "audit": audit,
        "derivative_range": range,
        "forcing": f,
        "report": report,
    });
    Ok(Body {
        grids: vec![(
            "solution".into(),
            grid(&report.solution, config.problem.grid)?,
        )],
        record,
        passed: true,
        summary,
    })
}

fn run_preserve(config: &Config) -> Result<Body, RunError> {
    config.validate_preserve()?;
    let (entry, audit, nl) = canonical_nonlinearity(config)?;
    let range = derivative_bounds(config, &nl);
    let cert: GapCertificate = certify_gap(range.q, range.p)?;
    let p = &config.preserve;
    let opts = PreservationOptions {
        n_starts: p.n_starts,
        seed: config.seed,
        tol: p.tol,
        max_iter: p.max_iter,
        start_amplitude: p.start_amplitude,
    };
    let report = preservation_check(&nl, &config.forcing, p.s, &cert, &opts)?;
    let passed = report.preserved && report.probed_unique;
    let summary = format!(
        "s = {}: defect {:.3e}, periodicity {}, max pairwise distance {:.3e} over {} starts; preserved = {}, unique = {}",
        report.s,
        report.defect.defect,
        report.periodicity,
        report.max_pairwise_distance,
        report.starts.len(),
        report.preserved,
        report.probed_unique
    );
    let grids = vec![(
        "solution".into(),
        grid(&report.reference.solution, config.problem.grid)?,
    )];
    let record = json!({
        "nonlinearity": entry.nonlinearity.description(),
        "audit": audit,
        "derivative_range": range,
        "forcing": config.forcing,
        "report": report,
    });
    Ok(Body {
        record,
        grids,
        passed,
        summary,
    })
}

fn run_break_search(config: &Config) -> Result<Body, RunError> {
    config.validate_breaking()?;
    let (entry, audit, nl) = canonical_nonlinearity(config)?;
    let rec = break_search(&nl, &config.breaking)?;
    let n = config.problem.grid;
    let mut grids = vec![
        ("u_star".to_string(), grid(&rec.u_star, n)?),
        ("fhat".to_string(), grid(&rec.fhat, n)?),
    ];
    for class in &rec.search.classes {
        let u = &rec.search.solutions[class.representative].solution;
        grids.push((format!("class{}", class.id), grid(u, n)?));
    }
    let asymmetric = rec.search.classes.iter().filter(|c| c.asymmetric).count();
    let summary = format!(
        "(r, s) = ({}, {}): m0 = {}, m1 = {}; {} solutions in {} orbit classes ({} asymmetric), {} failed starts; broke symmetry = {}",
        rec.config.r,
        rec.config.s,
        rec.m0,
        rec.m1,
        rec.search.solutions.len(),
        rec.search.classes.len(),
        asymmetric,
        rec.search.failures.len(),
        rec.broke_symmetry
    );
    let passed = rec.broke_symmetry;
    let record = json!({
        "nonlinearity": entry.nonlinearity.description(),
        "audit": audit,
        "run": rec,
    });
    Ok(Body {
        record,
        grids,
        passed,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseRecord {
    pub r: usize,
    pub s: usize,
    #[serde(rename = "J")]
    pub order: usize,
    pub witness: CrossingWitness,
    pub window0: WindowCertificate,
    pub window1: WindowCertificate,
    pub morse: MorsePair,
    pub m0: usize,
    pub m1: usize,
    /// Linearized indices agree with the constant-potential ones and no form is degenerate.
    pub consistent: bool,
}

/// Crossing witness, windows and the Morse indices at both window centres.
pub fn morse_record(nl: &Nonlinearity, config: &Config) -> Result<MorseRecord, Error> {
    let b = &config.breaking;
    let witness = find_crossing(nl, b.r, b.search_lo, b.search_hi, b.scan_samples)?;
    let window0 = find_delta(nl, witness.t0, SpectralGap::new(b.r - 1), b.window_tol)?;
    let window1 = find_delta(nl, witness.t1, SpectralGap::new(b.r), b.window_tol)?;
    let morse = morse_pair(nl, &witness, &window0, &window1, b.s, b.order)?;
    let consistent = morse.m0() == morse.q0.index
        && morse.m1() == morse.q1.index
        && !morse.tilde_q0.degenerate
        && !morse.tilde_q1.degenerate;
    Ok(MorseRecord {
        r: b.r,
        s: b.s,
        order: b.order,
        m0: morse.m0(),
        m1: morse.m1(),
        witness,
        window0,
        window1,
        morse,
        consistent,
    })
}

fn run_morse(config: &Config) -> Result<Body, RunError> {
    config.validate_breaking()?;
    let (entry, _, nl) = canonical_nonlinearity(config)?;
    let rec = morse_record(&nl, config)?;
    let n = config.problem.grid;
    let grids = vec![
        (
            "u_star0".to_string(),
            grid(
                &ustar(rec.window0.t_center, rec.window0.delta, rec.s, rec.order),
                n,
            )?,
        ),
        (
            "u_star1".to_string(),
            grid(
                &ustar(rec.window1.t_center, rec.window1.delta, rec.s, rec.order),
                n,
            )?,
        ),
    ];
    let summary = format!(
        "(r, s) = ({}, {}), J = {}: m0 = {} (constant potential {}), m1 = {} (constant potential {}); relative margins {:.3e}, {:.3e}",
        rec.r,
        rec.s,
        rec.order,
        rec.m0,
        rec.morse.q0.index,
        rec.m1,
        rec.morse.q1.index,
        rec.morse.tilde_q0.relative_margin,
        rec.morse.tilde_q1.relative_margin
    );
    let passed = rec.consistent;
    Ok(Body {
        record: json!({ "nonlinearity": entry.nonlinearity.description(), "morse": rec }),
        grids,
        passed,
        summary,
    })
}

fn run_spectrum(max_j: usize) -> Body {
    let rows = spectrum_table(max_j);
    let mut summary = String::from("j lambda_j multiplicity");
    for r in &rows {
        summary.push_str(&format!("\n{} {} {}", r.j, r.lambda, r.multiplicity));
    }
    Body {
        record: json!({ "spectrum": rows }),
        grids: Vec::new(),
        passed: true,
        summary,
    }
}

fn run_audit(config: &Config) -> Body {
    let entries = match config.entry() {
        Ok(e) => vec![e],
        Err(_) => registry::default_entries(),
    };
    let reports: Vec<AuditReport> = entries.iter().map(finite_difference_audit).collect();
    let passed = reports.iter().all(|r| r.passed);
    let summary = reports
        .iter()
        .map(|r| {
            format!(
                "{:<16} max relative error {:.3e} {}",
                r.name,
                r.max_relative_error,
                if r.passed { "PASS" } else { "FAIL" }
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Body {
        record: json!({ "audits": reports }),
        grids: Vec::new(),
        passed,
        summary,
    }
}
