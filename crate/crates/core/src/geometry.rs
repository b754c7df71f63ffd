//! Lattice geometry and the Bragg phase `φ = 2kd = 4π·d/λ`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice spacing expressed as a fraction of the optical wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    /// Exact `num/den` (stored reduced, `den > 0`).
    Rational {
        num: u64,
        den: u64,
    },
    Real {
        value: f64,
    },
}

impl Spacing {
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("spacing", "zero denominator"));
        }
        if num == 0 {
            return Err(Error::invalid("spacing", "spacing must be positive"));
        }
        let g = num.gcd(&den);
        Ok(Spacing::Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn real(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(
                "spacing",
                format!("{value} is not a positive finite number"),
            ));
        }
        Ok(Spacing::Real { value })
    }

    pub fn over_wavelength(&self) -> f64 {
        match *self {
            Spacing::Rational { num, den } => num as f64 / den as f64,
            Spacing::Real { value } => value,
        }
    }

    /// For rational spacings, `φ/2π = q/p` in lowest terms with `0 <= q < p`.
    pub fn phase_fraction(&self) -> Option<PhaseFraction> {
        match *self {
            Spacing::Rational { num, den } => {
                // φ/2π = 2·num/den
                let twice = (2 * num as u128) % den as u128;
                let g = twice.gcd(&(den as u128));
                let (q, p) = if twice == 0 {
                    (0, 1)
                } else {
                    (twice / g, den as u128 / g)
                };
                Some(PhaseFraction {
                    q: q as u64,
                    p: p as u64,
                })
            }
            Spacing::Real { .. } => None,
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spacing::Rational { num, den } => write!(f, "{num}/{den}"),
            Spacing::Real { value } => write!(f, "{value}"),
        }
    }
}

impl FromStr for Spacing {
    type Err = Error;

    /// Accepts `"a/b"` (exact) or a decimal such as `"0.1414"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::invalid("spacing", format!("numerator `{a}`: {e}")))?;
            let den = b
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::invalid("spacing", format!("denominator `{b}`: {e}")))?;
            Spacing::rational(num, den)
        } else {
            let value = s
                .parse::<f64>()
                .map_err(|e| Error::invalid("spacing", format!("`{s}`: {e}")))?;
            Spacing::real(value)
        }
    }
}

/// Reduced phase fraction `φ/2π = q/p`; site `m` belongs to class `(m·q) mod p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseFraction {
    pub q: u64,
    pub p: u64,
}

impl PhaseFraction {
    pub fn class_of(&self, site: usize) -> usize {
        ((site as u128 * self.q as u128) % self.p as u128) as usize
    }
}

/// `e^{2πi·l/p}`, exact at multiples of a quarter turn.
pub fn root_of_unity(l: u64, p: u64) -> Complex64 {
    let l = l % p;
    if (4 * l).is_multiple_of(p) {
        match 4 * l / p {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * l as f64 / p as f64)
    }
}

/// Which column of the collapse-time table a spacing falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingClass {
    /// `φ ∈ 2πℤ`: coupling is the total atom number.
    HalfWavelength,
    /// `φ ∈ π + 2πℤ`: coupling is the even/odd imbalance.
    QuarterWavelength,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    num_sites: usize,
    spacing: Spacing,
}

impl LatticeGeometry {
    pub fn new(num_sites: usize, spacing: Spacing) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::invalid(
                "sites",
                format!("need at least 2 sites, got {num_sites}"),
            ));
        }
        Ok(LatticeGeometry { num_sites, spacing })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// `φ = 4π·d/λ`, in radians.
    pub fn phase(&self) -> f64 {
        4.0 * PI * self.spacing.over_wavelength()
    }

    pub fn phase_fraction(&self) -> Option<PhaseFraction> {
        self.spacing.phase_fraction()
    }

    pub fn class(&self) -> SpacingClass {
        match self.phase_fraction() {
            Some(PhaseFraction { p: 1, .. }) => SpacingClass::HalfWavelength,
            Some(PhaseFraction { p: 2, .. }) => SpacingClass::QuarterWavelength,
            _ => SpacingClass::General,
        }
    }

    /// `e^{imφ}` for every site.
    pub fn site_phases(&self) -> Vec<Complex64> {
        match self.phase_fraction() {
            Some(f) => (0..self.num_sites)
                .map(|m| root_of_unity(f.class_of(m) as u64, f.p))
                .collect(),
            None => {
                let phi = self.phase();
                (0..self.num_sites)
                    .map(|m| Complex64::from_polar(1.0, phi * m as f64))
                    .collect()
            }
        }
    }

    /// `cos φ`, exact for the two special spacing classes.
    pub fn cos_phase(&self) -> f64 {
        match self.class() {
            SpacingClass::HalfWavelength => 1.0,
            SpacingClass::QuarterWavelength => -1.0,
            SpacingClass::General => match self.phase_fraction() {
                Some(f) => root_of_unity(f.q, f.p).re,
                None => self.phase().cos(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_fraction_reduces() {
        let quarter: Spacing = "1/4".parse().unwrap();
        assert_eq!(quarter.phase_fraction(), Some(PhaseFraction { q: 1, p: 2 }));
        let half: Spacing = "1/2".parse().unwrap();
        assert_eq!(half.phase_fraction(), Some(PhaseFraction { q: 0, p: 1 }));
        let tenth: Spacing = "1/10".parse().unwrap();
        assert_eq!(tenth.phase_fraction(), Some(PhaseFraction { q: 1, p: 5 }));
        let three_quarters: Spacing = "3/4".parse().unwrap();
        assert_eq!(three_quarters.phase_fraction(), Some(PhaseFraction { q: 1, p: 2 }));
        let third: Spacing = "2/6".parse().unwrap();
        assert_eq!(third, Spacing::Rational { num: 1, den: 3 });
        assert_eq!(third.phase_fraction(), Some(PhaseFraction { q: 2, p: 3 }));
    }

    #[test]
    fn classes() {
        let g = |s: &str| LatticeGeometry::new(2, s.parse().unwrap()).unwrap().class();
        assert_eq!(g("1/2"), SpacingClass::HalfWavelength);
        assert_eq!(g("1"), SpacingClass::General); // decimal input is never special-cased
        assert_eq!(g("1/1"), SpacingClass::HalfWavelength);
        assert_eq!(g("1/4"), SpacingClass::QuarterWavelength);
        assert_eq!(g("1/10"), SpacingClass::General);
        assert_eq!(g("0.1414"), SpacingClass::General);
    }

    #[test]
    fn rejects_bad_input() {
        assert!("1/0".parse::<Spacing>().is_err());
        assert!("0/3".parse::<Spacing>().is_err());
        assert!("-0.5".parse::<Spacing>().is_err());
        assert!("abc".parse::<Spacing>().is_err());
        assert!(LatticeGeometry::new(1, Spacing::rational(1, 2).unwrap()).is_err());
    }

    #[test]
    fn rational_phases_match_float_phases() {
        let exact = LatticeGeometry::new(7, Spacing::rational(3, 10).unwrap()).unwrap();
        let float = LatticeGeometry::new(7, Spacing::real(0.3).unwrap()).unwrap();
        for (a, b) in exact.site_phases().iter().zip(float.site_phases()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
