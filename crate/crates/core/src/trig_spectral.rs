//! Truncated real trigonometric series on [0, 2π].
//!
//! A [`TrigPoly`] of order `J` stores
//!
//! ```text
//! u(t) = a0 + Σ_{j=1..J} a_j cos(jt) + b_j sin(jt)
//! ```
//!
//! with exact H¹/L² geometry via Parseval, projections onto the symmetry
//! subspaces `V_s` (2π/s-periodic functions) and the eigenspaces `E_j`, and a
//! pseudo-spectral composition `g ∘ u` on a uniform grid.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default grid size for sampled output.
pub const DEFAULT_GRID: usize = 256;

/// Default relative tolerance of [`periodicity_index`].
pub const DEFAULT_PERIODICITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigPoly {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigPoly {
    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(Error::LengthMismatch {
                cos: cos.len(),
                sin: sin.len(),
            });
        }
        Ok(Self { a0, cos, sin })
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            a0: 0.0,
            cos: vec![0.0; order],
            sin: vec![0.0; order],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut u = Self::zeros(order);
        u.a0 = value;
        u
    }

    /// `amp·cos(jt)` padded to `order` (at least `j`).
    pub fn cos_mode(j: usize, amp: f64, order: usize) -> Self {
        let mut u = Self::zeros(order.max(j));
        if j == 0 {
            u.a0 = amp;
        } else {
            u.cos[j - 1] = amp;
        }
        u
    }

    /// `amp·sin(jt)` padded to `order` (at least `j`). `j = 0` gives zero.
    pub fn sin_mode(j: usize, amp: f64, order: usize) -> Self {
        let mut u = Self::zeros(order.max(j));
        if j > 0 {
            u.sin[j - 1] = amp;
        }
        u
    }

    /// Truncation order `J`.
    pub fn order(&self) -> usize {
        self.cos.len()
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// `(a_j, b_j)` for mode `j`; mode 0 is `(a0, 0)`, modes past `J` are zero.
    pub fn mode(&self, j: usize) -> (f64, f64) {
        if j == 0 {
            (self.a0, 0.0)
        } else if j <= self.order() {
            (self.cos[j - 1], self.sin[j - 1])
        } else {
            (0.0, 0.0)
        }
    }

    pub fn set_mode(&mut self, j: usize, a: f64, b: f64) {
        if j == 0 {
            self.a0 = a;
            return;
        }
        if j > self.order() {
            self.cos.resize(j, 0.0);
            self.sin.resize(j, 0.0);
        }
        self.cos[j - 1] = a;
        self.sin[j - 1] = b;
    }

    /// Zero-pads or truncates to `order`.
    pub fn with_order(&self, order: usize) -> Self {
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        cos.resize(order, 0.0);
        sin.resize(order, 0.0);
        Self {
            a0: self.a0,
            cos,
            sin,
        }
    }

    /// Applies `f(j, a_j, b_j) -> (a_j', b_j')` to every mode `j ≥ 1`.
    pub fn map_modes(&self, mut f: impl FnMut(usize, f64, f64) -> (f64, f64)) -> Self {
        let mut out = self.clone();
        for j in 1..=self.order() {
            let (a, b) = f(j, self.cos[j - 1], self.sin[j - 1]);
            out.cos[j - 1] = a;
            out.sin[j - 1] = b;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            a0: self.a0 * factor,
            cos: self.cos.iter().map(|x| x * factor).collect(),
            sin: self.sin.iter().map(|x| x * factor).collect(),
        }
    }

    /// Coefficient vector `[a0, a1, b1, ..., aJ, bJ]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.order() + 1);
        out.push(self.a0);
        for (a, b) in self.cos.iter().zip(&self.sin) {
            out.push(*a);
            out.push(*b);
        }
        out
    }

    /// Inverse of [`TrigPoly::to_vec`]; `coeffs.len()` must be odd.
    pub fn from_vec(coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() % 2 != 1 {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector length {} is not odd",
                coeffs.len()
            )));
        }
        let order = coeffs.len() / 2;
        let mut u = Self::zeros(order);
        u.a0 = coeffs[0];
        for j in 1..=order {
            u.cos[j - 1] = coeffs[2 * j - 1];
            u.sin[j - 1] = coeffs[2 * j];
        }
        Ok(u)
    }

    /// Largest coefficient-wise difference; the shorter series is zero-padded.
    pub fn max_abs_diff(&self, other: &TrigPoly) -> f64 {
        let order = self.order().max(other.order());
        (0..=order)
            .map(|j| {
                let (a, b) = self.mode(j);
                let (c, d) = other.mode(j);
                (a - c).abs().max((b - d).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Point value. `t` is reduced modulo 2π first, so `u(0) == u(2π)` exactly.
    pub fn evaluate(&self, t: f64) -> f64 {
        let t = t.rem_euclid(TAU);
        let mut acc = self.a0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (s, c) = (((k + 1) as f64) * t).sin_cos();
            acc += a * c + b * s;
        }
        acc
    }

    /// Samples on the uniform grid `t_k = 2πk/n`.
    pub fn to_samples(&self, n: usize) -> Result<GridFunction> {
        check_grid(self.order(), n)?;
        let table = UnitTable::new(n);
        let samples = (0..n)
            .map(|k| {
                let mut acc = self.a0;
                for j in 1..=self.order() {
                    let (c, s) = table.at(j * k);
                    acc += self.cos[j - 1] * c + self.sin[j - 1] * s;
                }
                acc
            })
            .collect();
        Ok(GridFunction { samples })
    }
}

fn check_grid(order: usize, n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidGrid(n));
    }
    let needed = 2 * order + 2;
    if n < needed {
        return Err(Error::Aliasing { order, n, needed });
    }
    Ok(())
}

/// cos/sin of `2πm/n` for `m = 0..n`, indexed modulo `n`.
struct UnitTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl UnitTable {
    fn new(n: usize) -> Self {
        let (sin, cos) = (0..n)
            .map(|m| (TAU * m as f64 / n as f64).sin_cos())
            .unzip();
        Self { cos, sin }
    }

    #[inline]
    fn at(&self, m: usize) -> (f64, f64) {
        let i = m % self.cos.len();
        (self.cos[i], self.sin[i])
    }
}

#[derive(Serialize, Deserialize)]
struct TrigPolyRepr {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    #[serde(rename = "J")]
    order: usize,
}

impl Serialize for TrigPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TrigPolyRepr {
            a0: self.a0,
            cos: self.cos.clone(),
            sin: self.sin.clone(),
            order: self.order(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TrigPolyRepr::deserialize(deserializer)?;
        if repr.cos.len() != repr.order || repr.sin.len() != repr.order {
            return Err(D::Error::custom(format!(
                "J = {} but cos has {} and sin has {} entries",
                repr.order,
                repr.cos.len(),
                repr.sin.len()
            )));
        }
        Ok(TrigPoly {
            a0: repr.a0,
            cos: repr.cos,
            sin: repr.sin,
        })
    }
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.a0)?;
        for j in 1..=self.order() {
            let (a, b) = self.mode(j);
            if a != 0.0 {
                write!(f, " {:+} cos({j}t)", a)?;
            }
            if b != 0.0 {
                write!(f, " {:+} sin({j}t)", b)?;
            }
        }
        Ok(())
    }
}

fn zip_modes(u: &TrigPoly, v: &TrigPoly, op: impl Fn(f64, f64) -> f64) -> TrigPoly {
    let order = u.order().max(v.order());
    let mut out = TrigPoly::zeros(order);
    out.a0 = op(u.a0, v.a0);
    for j in 1..=order {
        let (a, b) = u.mode(j);
        let (c, d) = v.mode(j);
        out.cos[j - 1] = op(a, c);
        out.sin[j - 1] = op(b, d);
    }
    out
}

impl Add for &TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        zip_modes(self, rhs, |a, b| a + b)
    }
}

impl Sub for &TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        zip_modes(self, rhs, |a, b| a - b)
    }
}

impl Add for TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: TrigPoly) -> TrigPoly {
        &self + &rhs
    }
}

impl Sub for TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: TrigPoly) -> TrigPoly {
        &self - &rhs
    }
}

impl Mul<f64> for &TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: f64) -> TrigPoly {
        self.scale(rhs)
    }
}

impl Mul<f64> for TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: f64) -> TrigPoly {
        self.scale(rhs)
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(-1.0)
    }
}

impl Neg for TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(-1.0)
    }
}

/// Samples at `t_k = 2πk/N`, `N` even.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.len() % 2 != 0 {
            return Err(Error::InvalidGrid(samples.len()));
        }
        Ok(Self { samples })
    }

    /// Samples `f` on the `n`-point grid.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..n).map(|k| f(TAU * k as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.len() as f64;
        (0..self.len()).map(move |k| TAU * k as f64 / n)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            samples: self.samples.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Two columns `t,value` with a header row, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,value")?;
        for (t, x) in self.times().zip(&self.samples) {
            writeln!(out, "{:.16e},{:.16e}", t, x)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Trigonometric interpolation of the low modes of `gf`, truncated at `order`.
pub fn from_samples(gf: &GridFunction, order: usize) -> Result<TrigPoly> {
    let n = gf.len();
    check_grid(order, n)?;
    let table = UnitTable::new(n);
    let scale = 2.0 / n as f64;
    let mut u = TrigPoly::zeros(order);
    u.a0 = gf.samples.iter().sum::<f64>() / n as f64;
    for j in 1..=order {
        let (mut a, mut b) = (0.0, 0.0);
        for (k, x) in gf.samples.iter().enumerate() {
            let (c, s) = table.at(j * k);
            a += x * c;
            b += x * s;
        }
        u.cos[j - 1] = scale * a;
        u.sin[j - 1] = scale * b;
    }
    Ok(u)
}

/// Mode `j`: `(a_j, b_j) → (j·b_j, −j·a_j)`.
pub fn differentiate(u: &TrigPoly) -> TrigPoly {
    let mut out = u.map_modes(|j, a, b| (j as f64 * b, -(j as f64) * a));
    out.a0 = 0.0;
    out
}

fn weighted_inner(u: &TrigPoly, v: &TrigPoly, weight: impl Fn(usize) -> f64) -> f64 {
    let order = u.order().max(v.order());
    let mut acc = 2.0 * PI * weight(0) * u.a0 * v.a0;
    for j in 1..=order {
        let (a, b) = u.mode(j);
        let (c, d) = v.mode(j);
        acc += PI * weight(j) * (a * c + b * d);
    }
    acc
}

/// `∫₀^{2π} (u'v' + uv) dt`.
pub fn h1_inner(u: &TrigPoly, v: &TrigPoly) -> f64 {
    weighted_inner(u, v, |j| 1.0 + (j * j) as f64)
}

pub fn h1_norm(u: &TrigPoly) -> f64 {
    h1_inner(u, u).max(0.0).sqrt()
}

/// `∫₀^{2π} uv dt`.
pub fn l2_inner(u: &TrigPoly, v: &TrigPoly) -> f64 {
    weighted_inner(u, v, |_| 1.0)
}

pub fn l2_norm(u: &TrigPoly) -> f64 {
    l2_inner(u, u).max(0.0).sqrt()
}

/// Orthogonal projection onto `V_s`: keeps the constant and the modes `j` with `s | j`.
pub fn project_vs(u: &TrigPoly, s: usize) -> TrigPoly {
    assert!(s >= 1, "symmetry order must be positive");
    u.map_modes(|j, a, b| if j % s == 0 { (a, b) } else { (0.0, 0.0) })
}

pub fn project_vs_perp(u: &TrigPoly, s: usize) -> TrigPoly {
    assert!(s >= 1, "symmetry order must be positive");
    let mut out = u.map_modes(|j, a, b| if j % s == 0 { (0.0, 0.0) } else { (a, b) });
    out.a0 = 0.0;
    out
}

/// Keeps only mode `j` (the eigenspace `E_j`).
pub fn project_ej(u: &TrigPoly, j: usize) -> TrigPoly {
    let mut out = TrigPoly::zeros(u.order());
    let (a, b) = u.mode(j);
    if j == 0 {
        out.a0 = a;
    } else if j <= u.order() {
        out.cos[j - 1] = a;
        out.sin[j - 1] = b;
    }
    out
}

/// Minimal-period index: `u` has minimal period `2π/k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Periodicity {
    Constant,
    Index(usize),
}

impl Periodicity {
    /// True when the period index is a multiple of `s`, or the function is constant.
    pub fn respects(&self, s: usize) -> bool {
        match *self {
            Periodicity::Constant => true,
            Periodicity::Index(k) => k % s == 0,
        }
    }
}

impl fmt::Display for Periodicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Periodicity::Constant => write!(f, "CONSTANT"),
            Periodicity::Index(k) => write!(f, "{k}"),
        }
    }
}

/// gcd of the mode indices whose amplitude `√(a_j² + b_j²)` exceeds `tol`.
pub fn periodicity_index(u: &TrigPoly, tol: f64) -> Periodicity {
    let k = (1..=u.order())
        .filter(|&j| {
            let (a, b) = u.mode(j);
            a.hypot(b) > tol
        })
        .fold(0, gcd);
    if k == 0 {
        Periodicity::Constant
    } else {
        Periodicity::Index(k)
    }
}

/// [`periodicity_index`] with tolerance `1e-9·‖u‖_{H¹}`.
pub fn periodicity_index_default(u: &TrigPoly) -> Periodicity {
    periodicity_index(u, DEFAULT_PERIODICITY_TOL * h1_norm(u))
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A pointwise nonlinearity `g` with its derivative, an optional uniform bound
/// `C_g ≥ sup |g|` and an optional closed-form primitive `G(t) = ∫₀ᵗ g`.
#[derive(Clone)]
pub struct Nonlinearity {
    g: RealFn,
    g_prime: RealFn,
    primitive: Option<RealFn>,
    c_g: Option<f64>,
    description: String,
}

impl Nonlinearity {
    pub fn new(
        description: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            g: Arc::new(g),
            g_prime: Arc::new(g_prime),
            primitive: None,
            c_g: None,
            description: description.into(),
        }
    }

    /// `g(x) = αx`.
    pub fn linear(alpha: f64) -> Self {
        Self::new(format!("{alpha}*x"), move |x| alpha * x, move |_| alpha)
            .with_primitive(move |x| 0.5 * alpha * x * x)
    }

    pub fn with_bound(mut self, c_g: f64) -> Self {
        self.c_g = Some(c_g);
        self
    }

    pub fn with_primitive(
        mut self,
        primitive: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.primitive = Some(Arc::new(primitive));
        self
    }

    pub fn g(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    pub fn g_prime(&self, x: f64) -> f64 {
        (self.g_prime)(x)
    }

    pub fn primitive(&self, x: f64) -> Option<f64> {
        self.primitive.as_ref().map(|p| p(x))
    }

    pub fn c_g(&self) -> Option<f64> {
        self.c_g
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `x ↦ −g(x)`; converts a problem written as `−u'' + g(u) = f` into the
    /// canonical form `−u'' − g̃(u) = f`.
    pub fn negated(&self) -> Self {
        let g = self.g.clone();
        let gp = self.g_prime.clone();
        Self {
            g: Arc::new(move |x| -g(x)),
            g_prime: Arc::new(move |x| -gp(x)),
            primitive: self
                .primitive
                .clone()
                .map(|p| -> RealFn { Arc::new(move |x| -p(x)) }),
            c_g: self.c_g,
            description: format!("-({})", self.description),
        }
    }

    pub fn eval(&self, which: Branch, x: f64) -> f64 {
        match which {
            Branch::G => self.g(x),
            Branch::GPrime => self.g_prime(x),
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("description", &self.description)
            .field("c_g", &self.c_g)
            .field("has_primitive", &self.primitive.is_some())
            .finish()
    }
}

/// Selects `g` or `g'` in [`compose`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    G,
    GPrime,
}

/// Grid used by [`compose`] for a series of order `order`: `N = max(4J, 8)`.
pub fn compose_grid(order: usize) -> usize {
    (4 * order).max(8)
}

/// Pseudo-spectral `g ∘ u` (or `g' ∘ u`), re-interpolated at the order of `u`.
pub fn compose(u: &TrigPoly, nl: &Nonlinearity, which: Branch) -> TrigPoly {
    compose_to_order(u, nl, which, u.order())
}

/// As [`compose`] but returns a series of order `out_order`; the grid is
/// `N = compose_grid(max(J, out_order))`.
pub fn compose_to_order(
    u: &TrigPoly,
    nl: &Nonlinearity,
    which: Branch,
    out_order: usize,
) -> TrigPoly {
    let n = compose_grid(u.order().max(out_order));
    let samples = u.to_samples(n).expect("compose grid is large enough");
    let mapped = samples.map(|x| nl.eval(which, x));
    from_samples(&mapped, out_order).expect("compose grid is large enough")
}
