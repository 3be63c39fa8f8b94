//! Spectral laboratory for 2π-periodic semilinear problems
//! `−u'' − g(u) = f`, `u(0) = u(2π)`, `u'(0) = u'(2π)`.
//!
//! * [`trig_spectral`]: truncated Fourier series, H¹ geometry, projections.
//! * [`group_action`]: the `Z_m` translation action and symmetry defects.
//! * [`linear_operator`]: `L = −d²/dt²`, its spectrum and resolvent.
//! * [`solver`]: gap certificates, the certified contraction and Newton.
//! * [`lyapunov_schmidt`]: splitting along `V_s` and preservation checks.
//! * [`morse`]: quadratic forms on `V_s⊥` and their Morse indices.
//! * [`breaking`]: the symmetry-breaking search harness.
//! * [`runner`]: configs, the nonlinearity registry and record emission.

pub mod breaking;
pub mod error;
pub mod group_action;
pub mod linear_operator;
pub mod lyapunov_schmidt;
pub mod morse;
pub mod rng;
pub mod runner;
pub mod solver;
pub mod trig_spectral;

pub use error::{Error, Result};
pub use trig_spectral::{Nonlinearity, TrigPoly};
