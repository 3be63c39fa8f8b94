//! TOML run configuration: parsing, defaults, validation and digest.
//!
//! ```toml
//! schema_version = 1
//! seed = 0
//!
//! [problem]
//! J = 64
//! N = 256
//! orientation = "minus"
//!
//! [nonlinearity]
//! name = "affine_sine"
//! params = { alpha = 2.5, beta = 0.5 }
//!
//! [forcing]          # cos[j-1] multiplies cos(jt)
//! a0 = 0.0
//! cos = [0.0, 0.4]
//! ```
//!
//! Every omitted field takes its default. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::breaking::BreakingConfig;
use crate::solver::{Method, Orientation};
use crate::trig_spectral::{gcd, h1_norm, project_vs_perp, TrigPoly};

use super::registry::{self, LookupError, RegistryEntry};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: String,
        source: std::io::Error,
    },
    Parse(String),
    Schema {
        path: String,
        message: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "cannot read {path}: {source}"),
            ConfigError::Parse(msg) => write!(f, "invalid TOML: {msg}"),
            ConfigError::Schema { path, message } => {
                write!(f, "config error at `{path}`: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn schema(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    seed: Option<u64>,
    problem: Option<RawProblem>,
    nonlinearity: Option<RawNonlinearity>,
    forcing: Option<RawForcing>,
    solve: Option<RawSolve>,
    preserve: Option<RawPreserve>,
    breaking: Option<RawBreaking>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(rename = "J")]
    order: Option<usize>,
    #[serde(rename = "N")]
    grid: Option<usize>,
    orientation: Option<Orientation>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNonlinearity {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForcing {
    a0: Option<f64>,
    cos: Option<Vec<f64>>,
    sin: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolve {
    method: Option<Method>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    q: Option<f64>,
    p: Option<f64>,
    range: Option<[f64; 2]>,
    range_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreserve {
    s: Option<usize>,
    n_starts: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    start_amplitude: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBreaking {
    r: Option<usize>,
    s: Option<usize>,
    n_starts: Option<usize>,
    tol: Option<f64>,
    defect_threshold: Option<f64>,
    max_iter: Option<usize>,
    search_lo: Option<f64>,
    search_hi: Option<f64>,
    scan_samples: Option<usize>,
    window_tol: Option<f64>,
    perturbation: Option<f64>,
    dedup_tol: Option<f64>,
    probe_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    #[serde(rename = "J")]
    pub order: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub name: String,
    /// Full parameter set, defaults filled in.
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    /// Declared lower bound on `g'`; sampled over `range` when absent.
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub range: [f64; 2],
    pub range_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreserveConfig {
    pub s: usize,
    pub n_starts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub start_amplitude: f64,
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub schema_version: u32,
    pub seed: u64,
    pub problem: ProblemConfig,
    pub nonlinearity: Option<NonlinearitySpec>,
    pub forcing: TrigPoly,
    pub solve: SolveConfig,
    pub preserve: PreserveConfig,
    pub breaking: BreakingConfig,
}

impl Default for Config {
    fn default() -> Self {
        parse_config("").expect("empty config is valid")
    }
}

impl Config {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// The registry entry named by `[nonlinearity]`; a schema error when absent.
    pub fn entry(&self) -> Result<RegistryEntry, ConfigError> {
        let spec = self
            .nonlinearity
            .as_ref()
            .ok_or_else(|| schema("nonlinearity", "section is required for this command"))?;
        registry::lookup(&spec.name, &spec.params).map_err(lookup_error)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.breaking.seed = seed;
        self
    }

    /// Checks that only matter to `preserve-check`.
    pub fn validate_preserve(&self) -> Result<(), ConfigError> {
        let s = self.preserve.s;
        let leak = h1_norm(&project_vs_perp(&self.forcing, s));
        if leak > 1e-10 * h1_norm(&self.forcing).max(1.0) {
            return Err(schema(
                "forcing",
                format!("must be 2π/{s}-periodic (only modes divisible by {s}) for preserve-check"),
            ));
        }
        Ok(())
    }

    /// Checks that only matter to `break-search` and `morse`.
    pub fn validate_breaking(&self) -> Result<(), ConfigError> {
        let b = &self.breaking;
        if b.s < 2 {
            return Err(schema("breaking.s", "must be at least 2"));
        }
        if b.r == 0 {
            return Err(schema("breaking.r", "must be positive"));
        }
        let d = gcd(b.r, b.s);
        if d != 1 {
            return Err(schema(
                "breaking",
                format!(
                    "r = {} and s = {} must be coprime, but gcd(r, s) = {d}; \
                     cos(rt) and sin(rt) would then lie in V_s and no symmetry can break",
                    b.r, b.s
                ),
            ));
        }
        if b.order < b.r.max(b.s) {
            return Err(schema(
                "problem.J",
                format!("must be at least max(r, s) = {}", b.r.max(b.s)),
            ));
        }
        Ok(())
    }
}

fn lookup_error(e: LookupError) -> ConfigError {
    match e {
        LookupError::UnknownName(n) => {
            let known: Vec<&str> = registry::NAMES.iter().map(|(n, _)| *n).collect();
            schema(
                "nonlinearity.name",
                format!("unknown nonlinearity `{n}` (known: {})", known.join(", ")),
            )
        }
        LookupError::UnknownParameter(p) => {
            schema(&format!("nonlinearity.params.{p}"), "unknown parameter")
        }
        LookupError::InvalidParameter(p, why) => schema(&format!("nonlinearity.params.{p}"), why),
    }
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn positive(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(schema(
            path,
            format!("must be a positive finite number, got {v}"),
        ))
    }
}

fn finite(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(schema(path, "must be finite"))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(schema(path, format!("must be at least {min}, got {v}")))
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let schema_version = raw.schema_version.unwrap_or(SCHEMA_VERSION);
    if schema_version != SCHEMA_VERSION {
        return Err(schema(
            "schema_version",
            format!("unsupported version {schema_version} (expected {SCHEMA_VERSION})"),
        ));
    }
    let seed = raw.seed.unwrap_or(0);

    let rp = raw.problem.unwrap_or_default();
    let order = at_least("problem.J", rp.order.unwrap_or(64), 1)?;
    let grid = rp.grid.unwrap_or(256);
    if grid % 2 != 0 || grid < 2 * order + 2 {
        return Err(schema(
            "problem.N",
            format!(
                "must be even and at least 2J + 2 = {}, got {grid}",
                2 * order + 2
            ),
        ));
    }
    let problem = ProblemConfig {
        order,
        grid,
        orientation: rp.orientation.unwrap_or_default(),
    };

    let nonlinearity = match raw.nonlinearity {
        Some(rn) => {
            let entry = registry::lookup(&rn.name, &rn.params).map_err(lookup_error)?;
            Some(NonlinearitySpec {
                name: entry.name,
                params: entry.parameters,
            })
        }
        None => None,
    };

    let rf = raw.forcing.unwrap_or_default();
    let (cos, sin) = (rf.cos.unwrap_or_default(), rf.sin.unwrap_or_default());
    for (name, v) in [("forcing.cos", &cos), ("forcing.sin", &sin)] {
        if v.len() > order {
            return Err(schema(
                name,
                format!("has {} entries but J = {order}", v.len()),
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(schema(name, "entries must be finite"));
        }
    }
    let a0 = finite("forcing.a0", rf.a0.unwrap_or(0.0))?;
    let mut forcing = TrigPoly::zeros(order);
    forcing.set_mode(0, a0, 0.0);
    for j in 1..=order {
        let c = cos.get(j - 1).copied().unwrap_or(0.0);
        let s = sin.get(j - 1).copied().unwrap_or(0.0);
        forcing.set_mode(j, c, s);
    }

    let rs = raw.solve.unwrap_or_default();
    let range = rs.range.unwrap_or([-10.0, 10.0]);
    if !(range[0].is_finite() && range[1].is_finite() && range[0] < range[1]) {
        return Err(schema(
            "solve.range",
            "must be a finite interval [lo, hi] with lo < hi",
        ));
    }
    let solve = SolveConfig {
        method: rs.method.unwrap_or(Method::Contraction),
        tol: positive("solve.tol", rs.tol.unwrap_or(1e-10))?,
        max_iter: at_least("solve.max_iter", rs.max_iter.unwrap_or(500), 1)?,
        q: rs.q.map(|v| finite("solve.q", v)).transpose()?,
        p: rs.p.map(|v| finite("solve.p", v)).transpose()?,
        range,
        range_samples: at_least("solve.range_samples", rs.range_samples.unwrap_or(4001), 2)?,
    };
    if solve.q.is_some() != solve.p.is_some() {
        return Err(schema("solve", "declare both q and p, or neither"));
    }

    let rpre = raw.preserve.unwrap_or_default();
    let preserve = PreserveConfig {
        s: at_least("preserve.s", rpre.s.unwrap_or(2), 1)?,
        n_starts: rpre.n_starts.unwrap_or(10),
        tol: positive("preserve.tol", rpre.tol.unwrap_or(1e-8))?,
        max_iter: at_least("preserve.max_iter", rpre.max_iter.unwrap_or(200), 1)?,
        start_amplitude: finite(
            "preserve.start_amplitude",
            rpre.start_amplitude.unwrap_or(1.0),
        )?,
    };

    let rb = raw.breaking.unwrap_or_default();
    let d = BreakingConfig::default();
    let breaking = BreakingConfig {
        r: rb.r.unwrap_or(d.r),
        s: rb.s.unwrap_or(d.s),
        order,
        n_starts: at_least("breaking.n_starts", rb.n_starts.unwrap_or(d.n_starts), 1)?,
        seed,
        tol: positive("breaking.tol", rb.tol.unwrap_or(d.tol))?,
        defect_threshold: positive(
            "breaking.defect_threshold",
            rb.defect_threshold.unwrap_or(d.defect_threshold),
        )?,
        max_iter: at_least("breaking.max_iter", rb.max_iter.unwrap_or(d.max_iter), 1)?,
        search_lo: finite("breaking.search_lo", rb.search_lo.unwrap_or(d.search_lo))?,
        search_hi: finite("breaking.search_hi", rb.search_hi.unwrap_or(d.search_hi))?,
        scan_samples: at_least(
            "breaking.scan_samples",
            rb.scan_samples.unwrap_or(d.scan_samples),
            2,
        )?,
        window_tol: positive("breaking.window_tol", rb.window_tol.unwrap_or(d.window_tol))?,
        perturbation: finite(
            "breaking.perturbation",
            rb.perturbation.unwrap_or(d.perturbation),
        )?,
        dedup_tol: positive("breaking.dedup_tol", rb.dedup_tol.unwrap_or(d.dedup_tol))?,
        probe_radius: positive(
            "breaking.probe_radius",
            rb.probe_radius.unwrap_or(d.probe_radius),
        )?,
    };
    if breaking.search_lo >= breaking.search_hi {
        return Err(schema(
            "breaking.search_lo",
            "must be below breaking.search_hi",
        ));
    }

    Ok(Config {
        schema_version,
        seed,
        problem,
        nonlinearity,
        forcing,
        solve,
        preserve,
        breaking,
    })
}
