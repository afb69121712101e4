//! Product coherent/vacuum input states and local-oscillator amplitudes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::phase_factor;
use crate::sideband::{AffineMode, ModeId};

/// Coherent amplitudes per input mode; every other mode is in vacuum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputStateSpec {
    amplitudes: BTreeMap<ModeId, Complex64>,
}

impl InputStateSpec {
    pub fn vacuum() -> Self {
        InputStateSpec::default()
    }

    pub fn set_coherent(&mut self, id: ModeId, gamma: Complex64) -> Result<()> {
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite amplitude for {id}")));
        }
        if gamma.norm() == 0.0 {
            self.amplitudes.remove(&id);
        } else {
            self.amplitudes.insert(id, gamma);
        }
        Ok(())
    }

    pub fn with_coherent(mut self, id: ModeId, gamma: Complex64) -> Result<Self> {
        self.set_coherent(id, gamma)?;
        Ok(self)
    }

    /// The eigenvalue `μ_m`, zero for vacuum modes.
    pub fn amplitude(&self, id: &ModeId) -> Complex64 {
        self.amplitudes.get(id).copied().unwrap_or_default()
    }

    pub fn coherent_modes(&self) -> impl Iterator<Item = (&ModeId, &Complex64)> {
        self.amplitudes.iter()
    }

    /// `⟨x⟩ = Σ u μ + Σ v μ̄ + d`.
    pub fn mean(&self, x: &AffineMode) -> Complex64 {
        let mut m = x.d;
        for (k, u) in &x.u {
            m += u * self.amplitude(k);
        }
        for (k, v) in &x.v {
            m += v * self.amplitude(k).conj();
        }
        m
    }
}

/// Local-oscillator amplitudes `γ±` at one sideband frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoSpec {
    pub gamma_plus: Complex64,
    pub gamma_minus: Complex64,
}

impl LoSpec {
    pub fn new(gamma_plus: Complex64, gamma_minus: Complex64) -> Self {
        LoSpec { gamma_plus, gamma_minus }
    }

    pub fn polar(abs_plus: f64, theta_plus: f64, abs_minus: f64, theta_minus: f64) -> Self {
        LoSpec { gamma_plus: abs_plus * phase_factor(theta_plus), gamma_minus: abs_minus * phase_factor(theta_minus) }
    }

    pub fn require_nonzero(&self) -> Result<()> {
        if self.gamma_plus.norm() > 0.0 && self.gamma_minus.norm() > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput("local-oscillator amplitudes γ± must be nonzero".into()))
        }
    }
}

/// The readout schemes that fix the relative phase of `γ±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    B1B1dag,
    B1B2dag,
    B1dagB2,
    B2B2dag,
    DbhdTheta,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "b1_b1dag" => Scheme::B1B1dag,
            "b1_b2dag" => Scheme::B1B2dag,
            "b1dag_b2" => Scheme::B1dagB2,
            "b2_b2dag" => Scheme::B2B2dag,
            "dbhd_theta" => Scheme::DbhdTheta,
            other => return Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
        })
    }
}

/// Keeps the moduli of `spec` and assigns the phases `scheme` needs.
pub fn lo_for_scheme(spec: LoSpec, scheme: Scheme, theta: f64) -> LoSpec {
    let (ap, am) = (spec.gamma_plus.norm(), spec.gamma_minus.norm());
    let i = Complex64::i();
    let plus = ap * phase_factor(theta);
    let minus = match scheme {
        Scheme::B1B1dag | Scheme::B2B2dag => am * phase_factor(-theta),
        Scheme::B1B2dag | Scheme::B1dagB2 => i * am * phase_factor(-theta),
        Scheme::DbhdTheta => am * phase_factor(theta),
    };
    LoSpec { gamma_plus: plus, gamma_minus: minus }
}

/// How `γ±` varies over the frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoProfile {
    Polar {
        abs_plus: f64,
        abs_minus: f64,
        theta_plus: f64,
        theta_minus: f64,
    },
    /// Rows `[Ω, re₊, im₊, re₋, im₋]`, linearly interpolated in Ω.
    Table {
        table: Vec<[f64; 5]>,
    },
}

impl LoProfile {
    pub fn at(&self, omega: f64) -> Result<LoSpec> {
        match self {
            LoProfile::Polar { abs_plus, abs_minus, theta_plus, theta_minus } => {
                Ok(LoSpec::polar(*abs_plus, *theta_plus, *abs_minus, *theta_minus))
            }
            LoProfile::Table { table } => {
                let row = |r: &[f64; 5]| LoSpec::new(Complex64::new(r[1], r[2]), Complex64::new(r[3], r[4]));
                if table.is_empty() {
                    return Err(Error::Schema("empty LO table".into()));
                }
                if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Schema("LO table frequencies must increase".into()));
                }
                if let Some(r) = table.iter().find(|r| r[0] == omega) {
                    return Ok(row(r));
                }
                let k = table.partition_point(|r| r[0] < omega);
                if k == 0 || k == table.len() {
                    return Err(Error::InvalidInput(format!("Ω = {omega} outside the LO table")));
                }
                let (a, b) = (&table[k - 1], &table[k]);
                let t = (omega - a[0]) / (b[0] - a[0]);
                let (la, lb) = (row(a), row(b));
                Ok(LoSpec::new(
                    la.gamma_plus + (lb.gamma_plus - la.gamma_plus) * t,
                    la.gamma_minus + (lb.gamma_minus - la.gamma_minus) * t,
                ))
            }
        }
    }

    /// Overrides the moduli, keeping phases.
    pub fn with_abs(&self, abs: f64) -> LoProfile {
        match self {
            LoProfile::Polar { theta_plus, theta_minus, .. } => {
                LoProfile::Polar { abs_plus: abs, abs_minus: abs, theta_plus: *theta_plus, theta_minus: *theta_minus }
            }
            LoProfile::Table { table } => LoProfile::Table {
                table: table
                    .iter()
                    .map(|r| {
                        let p = Complex64::new(r[1], r[2]);
                        let m = Complex64::new(r[3], r[4]);
                        let p = Complex64::from_polar(abs, p.arg());
                        let m = Complex64::from_polar(abs, m.arg());
                        [r[0], p.re, p.im, m.re, m.im]
                    })
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sideband::{Sideband, SidebandSector};
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn means() {
        let s = SidebandSector::standard(0, 1.0).unwrap();
        let l = s.id("l", Sideband::Upper).unwrap();
        let st = InputStateSpec::vacuum().with_coherent(l.clone(), c(2.0, 1.0)).unwrap();
        assert_eq!(st.mean(&AffineMode::mode(l.clone())), c(2.0, 1.0));
        assert_eq!(st.mean(&s.mode("e", Sideband::Upper).unwrap()), c(0.0, 0.0));
        let b = s.mode("b", Sideband::Upper).unwrap().with_displacement(c(1.0, 0.0));
        let e = s.mode("e", Sideband::Upper).unwrap();
        let x = b.sub(&e).scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert!((InputStateSpec::vacuum().mean(&x) - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(st.mean(&AffineMode::creation(l)), c(2.0, -1.0));
    }

    #[test]
    fn scheme_phases() {
        let base = LoSpec::polar(1.5, 0.3, 0.7, -1.0);
        let s = lo_for_scheme(base, Scheme::B1B1dag, 0.0);
        assert_eq!(s.gamma_plus, c(1.5, 0.0));
        assert_eq!(s.gamma_minus, c(0.7, 0.0));
        let s = lo_for_scheme(base, Scheme::B2B2dag, FRAC_PI_2);
        assert_eq!(s.gamma_plus, c(0.0, 1.5));
        assert_eq!(s.gamma_minus, c(0.0, -0.7));
        let s = lo_for_scheme(base, Scheme::DbhdTheta, 0.9);
        assert!((s.gamma_plus.arg() - 0.9).abs() < 1e-15 && (s.gamma_minus.arg() - 0.9).abs() < 1e-15);
        let s = lo_for_scheme(base, Scheme::B1B2dag, 0.0);
        assert_eq!(s.gamma_minus, c(0.0, 0.7));
        assert!("nope".parse::<Scheme>().is_err());
    }

    #[test]
    fn table_interpolation() {
        let p = LoProfile::Table { table: vec![[1.0, 1.0, 0.0, 1.0, 0.0], [3.0, 3.0, 2.0, 1.0, 4.0]] };
        let m = p.at(2.0).unwrap();
        assert_eq!(m.gamma_plus, c(2.0, 1.0));
        assert_eq!(m.gamma_minus, c(1.0, 2.0));
        assert_eq!(p.at(3.0).unwrap().gamma_plus, c(3.0, 2.0));
        assert!(p.at(0.5).is_err());
        let j: LoProfile =
            serde_json::from_str(r#"{"abs_plus":1,"abs_minus":2,"theta_plus":0,"theta_minus":0}"#).unwrap();
        assert_eq!(j.at(5.0).unwrap().gamma_minus, c(2.0, 0.0));
    }

    #[test]
    fn zero_amplitudes_are_vacuum() {
        let s = SidebandSector::standard(0, 1.0).unwrap();
        let st = InputStateSpec::vacuum().with_coherent(s.id("l", Sideband::Upper).unwrap(), c(0.0, 0.0)).unwrap();
        assert_eq!(st.coherent_modes().count(), 0);
        let mut st = InputStateSpec::vacuum();
        assert!(st.set_coherent(s.id("l", Sideband::Upper).unwrap(), c(f64::NAN, 0.0)).is_err());
    }
}
