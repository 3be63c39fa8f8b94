//! Named nonlinearities with closed-form `g`, `g'` and (where known) `G`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trig_spectral::Nonlinearity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyticFlags {
    /// `sup |g| < ∞`.
    pub bounded: bool,
    /// `G(t) → −∞` as `|t| → ∞`.
    pub coercive_primitive: bool,
}

#[derive(Clone, Debug)]
pub struct RegistryEntry {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub flags: AnalyticFlags,
    pub nonlinearity: Nonlinearity,
}

/// Registered names with their parameters and defaults.
pub const NAMES: &[(&str, &[(&str, f64)])] = &[
    ("linear", &[("alpha", 2.5)]),
    ("affine_sine", &[("alpha", 2.5), ("beta", 0.5)]),
    ("cubic", &[("a", 1.0), ("alpha", 0.0)]),
    ("tanh", &[("a", -1.0), ("b", 1.0)]),
    ("sine", &[("a", 1.0)]),
    ("rational_decay", &[("k", 1.0)]),
    ("bump_log", &[("a", 7.0), ("d", 1.0), ("b", 0.5)]),
];

#[derive(Clone, Debug, PartialEq)]
pub enum LookupError {
    UnknownName(String),
    UnknownParameter(String),
    InvalidParameter(String, String),
}

pub fn defaults(name: &str) -> Option<BTreeMap<String, f64>> {
    NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, params)| params.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

/// Builds the entry `name` with `overrides` applied on top of the defaults.
pub fn lookup(name: &str, overrides: &BTreeMap<String, f64>) -> Result<RegistryEntry, LookupError> {
    let mut params = defaults(name).ok_or_else(|| LookupError::UnknownName(name.to_string()))?;
    for (k, v) in overrides {
        match params.get_mut(k) {
            Some(slot) => *slot = *v,
            None => return Err(LookupError::UnknownParameter(k.clone())),
        }
        if !v.is_finite() {
            return Err(LookupError::InvalidParameter(
                k.clone(),
                "must be finite".into(),
            ));
        }
    }
    let p = |k: &str| params[k];
    let (flags, nonlinearity) = match name {
        "linear" => {
            let alpha = p("alpha");
            (
                AnalyticFlags {
                    bounded: alpha == 0.0,
                    coercive_primitive: alpha < 0.0,
                },
                Nonlinearity::linear(alpha),
            )
        }
        "affine_sine" => {
            let (alpha, beta) = (p("alpha"), p("beta"));
            (
                AnalyticFlags {
                    bounded: alpha == 0.0,
                    coercive_primitive: alpha < 0.0,
                },
                Nonlinearity::new(
                    format!("{alpha}*x + {beta}*sin(x)"),
                    move |x| alpha * x + beta * x.sin(),
                    move |x| alpha + beta * x.cos(),
                )
                .with_primitive(move |x| 0.5 * alpha * x * x + beta * (1.0 - x.cos())),
            )
        }
        "cubic" => {
            let (a, alpha) = (p("a"), p("alpha"));
            (
                AnalyticFlags {
                    bounded: a == 0.0 && alpha == 0.0,
                    coercive_primitive: a < 0.0,
                },
                Nonlinearity::new(
                    format!("{a}*x^3 + {alpha}*x"),
                    move |x| a * x * x * x + alpha * x,
                    move |x| 3.0 * a * x * x + alpha,
                )
                .with_primitive(move |x| 0.25 * a * x.powi(4) + 0.5 * alpha * x * x),
            )
        }
        "tanh" => {
            let (a, b) = (p("a"), p("b"));
            if b == 0.0 {
                return Err(LookupError::InvalidParameter(
                    "b".into(),
                    "must be nonzero".into(),
                ));
            }
            (
                AnalyticFlags {
                    bounded: true,
                    coercive_primitive: a < 0.0,
                },
                Nonlinearity::new(
                    format!("{a}*tanh(x/{b})"),
                    move |x| a * (x / b).tanh(),
                    move |x| a / (b * (x / b).cosh().powi(2)),
                )
                .with_bound(a.abs())
                .with_primitive(move |x| a * b * log_cosh(x / b)),
            )
        }
        "sine" => {
            let a = p("a");
            (
                AnalyticFlags {
                    bounded: true,
                    coercive_primitive: false,
                },
                Nonlinearity::new(
                    format!("{a}*sin(x)"),
                    move |x| a * x.sin(),
                    move |x| a * x.cos(),
                )
                .with_bound(a.abs())
                .with_primitive(move |x| a * (1.0 - x.cos())),
            )
        }
        "rational_decay" => {
            let k = p("k");
            (
                AnalyticFlags {
                    bounded: true,
                    coercive_primitive: k > 0.0,
                },
                Nonlinearity::new(
                    format!("-{k}*x/(1+x^2)"),
                    move |x| -k * x / (1.0 + x * x),
                    move |x| k * (x * x - 1.0) / (1.0 + x * x).powi(2),
                )
                .with_bound(0.5 * k.abs())
                .with_primitive(move |x| -0.5 * k * (1.0 + x * x).ln()),
            )
        }
        "bump_log" => {
            let (a, d, b) = (p("a"), p("d"), p("b"));
            if d <= 0.0 {
                return Err(LookupError::InvalidParameter(
                    "d".into(),
                    "must be positive".into(),
                ));
            }
            // max of |x exp(-x^2/d)| is sqrt(d/2) e^{-1/2}; max of |x/(1+x^2)| is 1/2
            let bound = a.abs() * (0.5 * d).sqrt() * (-0.5f64).exp() + 0.5 * b.abs();
            (
                AnalyticFlags {
                    bounded: true,
                    coercive_primitive: b > 0.0,
                },
                Nonlinearity::new(
                    format!("{a}*x*exp(-x^2/{d}) - {b}*x/(1+x^2)"),
                    move |x| a * x * (-x * x / d).exp() - b * x / (1.0 + x * x),
                    move |x| {
                        a * (-x * x / d).exp() * (1.0 - 2.0 * x * x / d)
                            - b * (1.0 - x * x) / (1.0 + x * x).powi(2)
                    },
                )
                .with_bound(bound)
                .with_primitive(move |x| {
                    0.5 * a * d * (1.0 - (-x * x / d).exp()) - 0.5 * b * (1.0 + x * x).ln()
                }),
            )
        }
        _ => unreachable!("defaults() covers every registered name"),
    };
    Ok(RegistryEntry {
        name: name.to_string(),
        parameters: params,
        flags,
        nonlinearity,
    })
}

fn log_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Every registered name at its default parameters.
pub fn default_entries() -> Vec<RegistryEntry> {
    NAMES
        .iter()
        .map(|(name, _)| lookup(name, &BTreeMap::new()).expect("defaults are valid"))
        .collect()
}

pub const AUDIT_PROBES: usize = 64;
pub const AUDIT_STEP: f64 = 1e-5;
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub probes: usize,
    /// `max |g' − (g(x+h) − g(x−h))/2h| / max(1, |g'|)` over the probes.
    pub max_relative_error: f64,
    pub worst_probe: f64,
    pub passed: bool,
}

/// Compares `g'` against centered differences at 64 points of `[−4, 4]`.
pub fn finite_difference_audit(entry: &RegistryEntry) -> AuditReport {
    let nl = &entry.nonlinearity;
    let (mut worst, mut worst_x) = (0.0_f64, 0.0);
    for k in 0..AUDIT_PROBES {
        let x = -4.0 + 8.0 * (k as f64 + 0.5) / AUDIT_PROBES as f64;
        let fd = (nl.g(x + AUDIT_STEP) - nl.g(x - AUDIT_STEP)) / (2.0 * AUDIT_STEP);
        let exact = nl.g_prime(x);
        let err = (exact - fd).abs() / exact.abs().max(1.0);
        if err > worst || err.is_nan() {
            worst = err;
            worst_x = x;
        }
    }
    AuditReport {
        name: entry.name.clone(),
        parameters: entry.parameters.clone(),
        probes: AUDIT_PROBES,
        max_relative_error: worst,
        worst_probe: worst_x,
        passed: worst <= AUDIT_TOL,
    }
}
