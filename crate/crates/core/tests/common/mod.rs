//! Reference computations for the integration tests. Nothing here calls into
//! the crate's own transforms: values are computed pointwise from the
//! definition of a trigonometric polynomial and integrated with the
//! trapezoid rule, which is exact for trigonometric polynomials of degree
//! below the number of nodes.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use symlab_core::TrigPoly;

/// Nodes for integrands that are not trigonometric polynomials (compositions).
pub const QUAD_NODES: usize = 4096;

pub fn eval(u: &TrigPoly, t: f64) -> f64 {
    let mut x = u.a0();
    for (k, (a, b)) in u.cos_coeffs().iter().zip(u.sin_coeffs()).enumerate() {
        let j = (k + 1) as f64;
        x += a * (j * t).cos() + b * (j * t).sin();
    }
    x
}

pub fn eval_derivative(u: &TrigPoly, t: f64) -> f64 {
    let mut x = 0.0;
    for (k, (a, b)) in u.cos_coeffs().iter().zip(u.sin_coeffs()).enumerate() {
        let j = (k + 1) as f64;
        x += j * (-a * (j * t).sin() + b * (j * t).cos());
    }
    x
}

/// `∫₀^{2π} f` by the `m`-node trapezoid rule.
pub fn trapezoid(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    let h = TAU / m as f64;
    (0..m).map(|k| f(h * k as f64)).sum::<f64>() * h
}

/// Nodes that integrate a product of `u` and `v` exactly.
fn product_nodes(u: &TrigPoly, v: &TrigPoly) -> usize {
    2 * (u.order() + v.order()) + 4
}

pub fn l2_inner_quad(u: &TrigPoly, v: &TrigPoly) -> f64 {
    trapezoid(|t| eval(u, t) * eval(v, t), product_nodes(u, v))
}

pub fn h1_inner_quad(u: &TrigPoly, v: &TrigPoly) -> f64 {
    trapezoid(
        |t| eval(u, t) * eval(v, t) + eval_derivative(u, t) * eval_derivative(v, t),
        product_nodes(u, v),
    )
}

pub fn l2_norm_quad(u: &TrigPoly) -> f64 {
    l2_inner_quad(u, u).sqrt()
}

pub fn h1_norm_quad(u: &TrigPoly) -> f64 {
    h1_inner_quad(u, u).sqrt()
}

/// Periodic Fourier second-derivative matrix on `n` (even) equispaced nodes.
/// Exact on trigonometric polynomials of degree below `n/2`.
pub fn second_derivative_matrix(n: usize) -> DMatrix<f64> {
    assert!(n % 2 == 0);
    let h = TAU / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let k = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (0.5 * k * h).sin().powi(2))
        }
    })
}

pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Uniform random coefficients in `[-amp, amp]` up to `order`.
pub fn random_poly(rng: &mut impl Rng, order: usize, amp: f64) -> TrigPoly {
    let mut u = TrigPoly::zeros(order);
    u.set_mode(0, rng.gen_range(-amp..=amp), 0.0);
    for j in 1..=order {
        u.set_mode(j, rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
    }
    u
}

/// Random element of `V_s`: constant plus modes divisible by `s`, with decaying amplitude.
pub fn random_symmetric(rng: &mut impl Rng, order: usize, s: usize, amp: f64) -> TrigPoly {
    let mut u = TrigPoly::zeros(order);
    u.set_mode(0, rng.gen_range(-amp..=amp), 0.0);
    for j in (s..=order).step_by(s) {
        let a = amp / j as f64;
        u.set_mode(j, rng.gen_range(-a..=a), rng.gen_range(-a..=a));
    }
    u
}

/// `2·#{j ≥ 1 : s ∤ j, j² < c}`, counted directly.
pub fn analytic_index(c: f64, s: usize) -> usize {
    let mut count = 0;
    let mut j = 1usize;
    while ((j * j) as f64) < c {
        if j % s != 0 {
            count += 2;
        }
        j += 1;
    }
    count
}

/// `g(x) = 2.5x + 0.5 sin x`, derivative range `[2, 3]`.
pub fn affine_sine() -> symlab_core::Nonlinearity {
    symlab_core::Nonlinearity::new(
        "2.5x + 0.5 sin x",
        |x| 2.5 * x + 0.5 * x.sin(),
        |x| 2.5 + 0.5 * x.cos(),
    )
}
