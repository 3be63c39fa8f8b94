//! The periodic operator `L = −d²/dt²`: eigenvalues `j²`, mode-wise
//! application and resolvent, and spectral-gap bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trig_spectral::TrigPoly;

/// Minimum distance from the spectrum for a shift to count as non-resonant.
pub const RESONANCE_MARGIN: f64 = 1e-9;

pub fn eigenvalue(j: usize) -> f64 {
    (j * j) as f64
}

/// 1 for `j = 0`, 2 (cos and sin) otherwise.
pub fn multiplicity(j: usize) -> usize {
    if j == 0 {
        1
    } else {
        2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub j: usize,
    pub lambda: f64,
    pub multiplicity: usize,
}

pub fn spectrum_table(max_j: usize) -> Vec<SpectrumRow> {
    (0..=max_j)
        .map(|j| SpectrumRow {
            j,
            lambda: eigenvalue(j),
            multiplicity: multiplicity(j),
        })
        .collect()
}

/// `Lu = −u''`: mode `j` scaled by `j²`.
pub fn apply_l(u: &TrigPoly) -> TrigPoly {
    let mut out = u.map_modes(|j, a, b| {
        let l = eigenvalue(j);
        (l * a, l * b)
    });
    out.set_mode(0, 0.0, 0.0);
    out
}

/// `(L − cI)⁻¹ rhs`, mode-wise.
pub fn resolvent_apply(c: f64, rhs: &TrigPoly) -> Result<TrigPoly> {
    if let Some(j) = (0..=rhs.order()).find(|&j| (eigenvalue(j) - c).abs() < RESONANCE_MARGIN) {
        return Err(Error::ResonantShift { shift: c, j });
    }
    let mut out = rhs.map_modes(|j, a, b| {
        let d = eigenvalue(j) - c;
        (a / d, b / d)
    });
    out.set_mode(0, rhs.a0() / (-c), 0.0);
    Ok(out)
}

/// The open interval `(i², (i+1)²)` between consecutive eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub i: usize,
    pub lo: f64,
    pub hi: f64,
}

impl SpectralGap {
    pub fn new(i: usize) -> Self {
        Self {
            i,
            lo: eigenvalue(i),
            hi: eigenvalue(i + 1),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapLocation {
    Gap(SpectralGap),
    InSpectrum { j: usize },
}

/// Locates `c` relative to `σ(L) = {j²}`.
pub fn gap_of(c: f64) -> Result<GapLocation> {
    if !c.is_finite() {
        return Err(Error::InvalidArgument(format!("shift {c} is not finite")));
    }
    if c.abs() < RESONANCE_MARGIN {
        return Ok(GapLocation::InSpectrum { j: 0 });
    }
    if c < 0.0 {
        return Err(Error::BelowSpectrum { c });
    }
    let mut i = c.sqrt().floor() as usize;
    while eigenvalue(i + 1) <= c {
        i += 1;
    }
    while eigenvalue(i) > c {
        i -= 1;
    }
    if c - eigenvalue(i) < RESONANCE_MARGIN {
        return Ok(GapLocation::InSpectrum { j: i });
    }
    if eigenvalue(i + 1) - c < RESONANCE_MARGIN {
        return Ok(GapLocation::InSpectrum { j: i + 1 });
    }
    Ok(GapLocation::Gap(SpectralGap::new(i)))
}

/// `min_j |j² − c|`.
pub fn distance_to_spectrum(c: f64) -> f64 {
    if c <= 0.0 {
        return -c;
    }
    let i = c.sqrt().floor() as usize;
    (i.saturating_sub(1)..=i + 2)
        .map(|j| (eigenvalue(j) - c).abs())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(0), 0.0);
        assert_eq!(eigenvalue(1), 1.0);
        assert_eq!(eigenvalue(5), 25.0);
        let table = spectrum_table(3);
        assert_eq!(table[0].multiplicity, 1);
        assert!(table[1..].iter().all(|r| r.multiplicity == 2));
    }

    #[test]
    fn apply_l_examples() {
        assert_eq!(
            apply_l(&TrigPoly::cos_mode(2, 1.0, 2)),
            TrigPoly::cos_mode(2, 4.0, 2)
        );
        assert_eq!(apply_l(&TrigPoly::constant(7.0, 3)), TrigPoly::zeros(3));
        let u = TrigPoly::sin_mode(1, 1.0, 3) + TrigPoly::sin_mode(3, 1.0, 3);
        let expect = TrigPoly::sin_mode(1, 1.0, 3) + TrigPoly::sin_mode(3, 9.0, 3);
        assert_eq!(apply_l(&u), expect);
    }

    #[test]
    fn eigenfunctions() {
        for j in 0..6 {
            let h = TrigPoly::cos_mode(j, 0.7, 6) + TrigPoly::sin_mode(j, -1.3, 6);
            assert_eq!(apply_l(&h), h.scale(eigenvalue(j)));
        }
    }

    #[test]
    fn resolvent_examples() {
        let r = resolvent_apply(2.5, &TrigPoly::cos_mode(1, 1.0, 1)).unwrap();
        assert!(r.max_abs_diff(&TrigPoly::cos_mode(1, -2.0 / 3.0, 1)) < 1e-15);
        let r = resolvent_apply(2.5, &TrigPoly::constant(3.0, 0)).unwrap();
        assert!((r.a0() + 1.2).abs() < 1e-15);
        assert_eq!(
            resolvent_apply(4.0, &TrigPoly::cos_mode(2, 1.0, 2)),
            Err(Error::ResonantShift { shift: 4.0, j: 2 })
        );
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_of(2.5).unwrap(), GapLocation::Gap(SpectralGap::new(1)));
        assert_eq!(gap_of(4.0).unwrap(), GapLocation::InSpectrum { j: 2 });
        let GapLocation::Gap(g) = gap_of(10.0).unwrap() else {
            panic!("10 is not an eigenvalue")
        };
        assert_eq!((g.i, g.lo, g.hi), (3, 9.0, 16.0));
        assert_eq!(gap_of(0.0).unwrap(), GapLocation::InSpectrum { j: 0 });
        assert_eq!(gap_of(-1.0), Err(Error::BelowSpectrum { c: -1.0 }));
        assert_eq!(
            gap_of(9.0 - 1e-12).unwrap(),
            GapLocation::InSpectrum { j: 3 }
        );
        assert_eq!(gap_of(0.5).unwrap(), GapLocation::Gap(SpectralGap::new(0)));
    }

    #[test]
    fn spectrum_distance() {
        assert_eq!(distance_to_spectrum(2.5), 1.5);
        assert_eq!(distance_to_spectrum(8.0), 1.0);
        assert_eq!(distance_to_spectrum(-2.0), 2.0);
    }
}
