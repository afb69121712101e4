//! Main-interferometer models feeding the eight-port readout, and
//! signal-referred noise budgets.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{expect, linear_psd, noise_psd, number_expect};
use crate::error::{Error, Result};
use crate::network::phase_factor;
use crate::readout::DbhdSetup;
use crate::sideband::{from_quadratures, linear_combine, to_quadratures, AffineMode, Sideband, SidebandSector};
use crate::states::LoSpec;

fn interp(table: &[[f64; 2]], omega: f64) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::Schema("empty table".into()));
    }
    if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(Error::Schema("table frequencies must increase".into()));
    }
    let k = table.partition_point(|r| r[0] < omega);
    if k < table.len() && table[k][0] == omega {
        return Ok(table[k][1]);
    }
    if k == 0 || k == table.len() {
        return Err(Error::InvalidInput(format!("Ω = {omega} outside the table")));
    }
    let (a, b) = (table[k - 1], table[k]);
    Ok(a[1] + (b[1] - a[1]) * (omega - a[0]) / (b[0] - a[0]))
}

/// A real function of Ω given as a constant, a table or a simple closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealFn {
    Const(f64),
    /// Rows `[Ω, value]`, linearly interpolated.
    Table(Vec<[f64; 2]>),
    /// `scale·corner⁴ / (Ω²(corner² + Ω²))`. Demo shape only.
    Ponderomotive {
        scale: f64,
        corner: f64,
    },
    /// `atan(Ω/corner)`.
    Arctan {
        corner: f64,
    },
}

impl RealFn {
    pub fn at(&self, omega: f64) -> Result<f64> {
        let v = match self {
            RealFn::Const(v) => *v,
            RealFn::Table(t) => interp(t, omega)?,
            RealFn::Ponderomotive { scale, corner } => {
                if omega == 0.0 {
                    return Err(Error::Numerical("ponderomotive coupling diverges at Ω = 0".into()));
                }
                scale * corner.powi(4) / (omega * omega * (corner * corner + omega * omega))
            }
            RealFn::Arctan { corner } => (omega / corner).atan(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("non-finite parameter at Ω = {omega}")))
        }
    }
}

/// A complex function of Ω: a constant `[re, im]` or rows `[Ω, re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexFn {
    Const([f64; 2]),
    Table(Vec<[f64; 3]>),
}

impl ComplexFn {
    pub fn zero() -> Self {
        ComplexFn::Const([0.0, 0.0])
    }

    pub fn at(&self, omega: f64) -> Result<Complex64> {
        match self {
            ComplexFn::Const([re, im]) => Ok(Complex64::new(*re, *im)),
            ComplexFn::Table(t) => {
                let re: Vec<[f64; 2]> = t.iter().map(|r| [r[0], r[1]]).collect();
                let im: Vec<[f64; 2]> = t.iter().map(|r| [r[0], r[2]]).collect();
                Ok(Complex64::new(interp(&re, omega)?, interp(&im, omega)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GwModel {
    /// `b̂_θ = R(ĥ_n + h)` with vacuum fluctuations on `b̂±`.
    PassThrough { response: ComplexFn, h: ComplexFn },
    /// Fabry-Pérot input-output relation with coupling `k`, phase
    /// `beta_fp` (rad), `h_sql` and injected strain `h`.
    Kimble { k: RealFn, beta_fp: RealFn, h_sql: RealFn, h: ComplexFn },
}

/// Model parameters evaluated at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KimblePoint {
    pub k: f64,
    pub beta_fp: f64,
    pub h_sql: f64,
    pub h: Complex64,
}

impl GwModel {
    pub fn kimble_at(&self, omega: f64) -> Result<KimblePoint> {
        match self {
            GwModel::Kimble { k, beta_fp, h_sql, h } => {
                let p = KimblePoint {
                    k: k.at(omega)?,
                    beta_fp: beta_fp.at(omega)?,
                    h_sql: h_sql.at(omega)?,
                    h: h.at(omega)?,
                };
                if p.k < 0.0 {
                    return Err(Error::InvalidInput(format!("𝒦 = {} must not be negative", p.k)));
                }
                if p.h_sql <= 0.0 {
                    return Err(Error::InvalidInput(format!("h_SQL = {} must be positive", p.h_sql)));
                }
                Ok(p)
            }
            GwModel::PassThrough { .. } => Err(Error::InvalidInput("not a Fabry-Pérot model".into())),
        }
    }

    /// Output sidebands `b̂±` at one sector for homodyne angle `theta`.
    pub fn output(&self, sector: &SidebandSector, omega: f64, theta: f64) -> Result<(AffineMode, AffineMode)> {
        match self {
            GwModel::Kimble { .. } => kimble_output(&self.kimble_at(omega)?, sector),
            GwModel::PassThrough { response, h } => {
                let r = response.at(omega)?;
                let d = r * h.at(omega)?;
                let (dp, dm) =
                    from_quadratures(&AffineMode::constant(d * theta.cos()), &AffineMode::constant(d * theta.sin()))?;
                Ok((
                    sector.mode("b", Sideband::Upper)?.with_displacement(dp.d),
                    sector.mode("b", Sideband::Lower)?.with_displacement(dm.d),
                ))
            }
        }
    }

    /// `R(Ω, θ)`.
    pub fn response(&self, omega: f64, theta: f64) -> Result<Complex64> {
        match self {
            GwModel::PassThrough { response, .. } => response.at(omega),
            GwModel::Kimble { .. } => {
                let p = self.kimble_at(omega)?;
                kimble_response(&p, theta)
            }
        }
    }

    pub fn injected(&self, omega: f64) -> Result<Complex64> {
        match self {
            GwModel::PassThrough { h, .. } | GwModel::Kimble { h, .. } => h.at(omega),
        }
    }

    pub fn k_at(&self, omega: f64) -> Result<Option<f64>> {
        match self {
            GwModel::Kimble { k, .. } => Ok(Some(k.at(omega)?)),
            GwModel::PassThrough { .. } => Ok(None),
        }
    }
}

/// `b̂₁ = â₁e^{2iβ}`, `b̂₂ = (â₂ − 𝒦â₁)e^{2iβ} + √(2𝒦) h/h_SQL e^{iβ}`,
/// mapped back to sidebands. The input is the sector's `a±`.
pub fn kimble_output(p: &KimblePoint, sector: &SidebandSector) -> Result<(AffineMode, AffineMode)> {
    if p.k < 0.0 {
        return Err(Error::InvalidInput("𝒦 must not be negative".into()));
    }
    let (a1, a2) = to_quadratures(&sector.mode("a", Sideband::Upper)?, &sector.mode("a", Sideband::Lower)?)?;
    let e2 = phase_factor(2.0 * p.beta_fp);
    let b1 = a1.scale(e2);
    let shear = linear_combine(&[(e2, &a2), (-e2 * p.k, &a1)]);
    let b2 = shear.with_displacement((2.0 * p.k).sqrt() * p.h / p.h_sql * phase_factor(p.beta_fp));
    from_quadratures(&b1, &b2)
}

/// `R = e^{iβ} sinθ √(2𝒦)/h_SQL`.
pub fn kimble_response(p: &KimblePoint, theta: f64) -> Result<Complex64> {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(Error::Numerical(format!("response vanishes at θ = {theta}")));
    }
    if p.k == 0.0 {
        return Err(Error::Numerical("response vanishes at 𝒦 = 0".into()));
    }
    Ok(phase_factor(p.beta_fp) * s * (2.0 * p.k).sqrt() / p.h_sql)
}

/// `R` and `ĥ_n = (e^{iβ}h_SQL/√(2𝒦))((cotθ − 𝒦)â₁ + â₂)`.
pub fn response_and_noise(p: &KimblePoint, sector: &SidebandSector, theta: f64) -> Result<(Complex64, AffineMode)> {
    let r = kimble_response(p, theta)?;
    let (a1, a2) = to_quadratures(&sector.mode("a", Sideband::Upper)?, &sector.mode("a", Sideband::Lower)?)?;
    let pre = phase_factor(p.beta_fp) * p.h_sql / (2.0 * p.k).sqrt();
    let cot = theta.cos() / theta.sin();
    let hn = linear_combine(&[(pre * (cot - p.k), &a1), (pre, &a2)]);
    Ok((r, hn))
}

/// `(h_SQL²/2𝒦)((cotθ − 𝒦)² + 1)`.
pub fn kimble_s_hn(p: &KimblePoint, theta: f64) -> f64 {
    let cot = theta.cos() / theta.sin();
    p.h_sql * p.h_sql / (2.0 * p.k) * ((cot - p.k).powi(2) + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaPolicy {
    Fixed {
        theta: f64,
    },
    /// `cotθ = 𝒦/2`.
    CotHalfK,
}

impl ThetaPolicy {
    /// Homodyne angle for coupling `k` (ignored by `Fixed`).
    pub fn theta(&self, k: Option<f64>) -> Result<f64> {
        match self {
            ThetaPolicy::Fixed { theta } => Ok(*theta),
            ThetaPolicy::CotHalfK => {
                let k = k.ok_or_else(|| Error::InvalidInput("cotθ = 𝒦/2 needs a model with 𝒦".into()))?;
                Ok(1f64.atan2(k / 2.0))
            }
        }
    }
}

impl std::str::FromStr for ThetaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cot_half_k" | "cot_half_K" => Ok(ThetaPolicy::CotHalfK),
            other => other
                .strip_prefix("fixed:")
                .and_then(|t| t.parse().ok())
                .map(|theta| ThetaPolicy::Fixed { theta })
                .ok_or_else(|| Error::InvalidInput(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutParams {
    pub eta: f64,
    pub abs_gamma: f64,
    /// Drop the `⟨n̂⟩/|γ|²` part of the penalty.
    #[serde(default)]
    pub large_gamma: bool,
    /// Count the classical signal power in `⟨n̂_b±⟩`.
    #[serde(default = "yes")]
    pub include_signal_in_n: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudgetRow {
    pub omega: f64,
    pub theta: f64,
    pub s_hn: f64,
    pub readout_penalty: f64,
    pub s_total: f64,
    pub h_estimate: Complex64,
}

/// Budget at one frequency. `index` labels the sector.
pub fn budget_point(
    model: &GwModel,
    readout: &ReadoutParams,
    policy: &ThetaPolicy,
    index: usize,
    omega: f64,
) -> Result<NoiseBudgetRow> {
    if !(readout.abs_gamma > 0.0 && readout.abs_gamma.is_finite()) {
        return Err(Error::InvalidInput("|γ| must be positive".into()));
    }
    let sector = SidebandSector::standard(index, omega)?;
    let theta = policy.theta(model.k_at(omega)?)?;
    let r = model.response(omega, theta)?;
    if r.norm() == 0.0 {
        return Err(Error::Numerical(format!("zero response at Ω = {omega}")));
    }
    let (bp, bm) = model.output(&sector, omega, theta)?;
    let (b1, b2) = to_quadratures(&bp, &bm)?;
    let b_theta = linear_combine(&[(Complex64::new(theta.cos(), 0.0), &b1), (Complex64::new(theta.sin(), 0.0), &b2)]);
    let r2 = r.norm_sqr();
    let s_hn = linear_psd(&b_theta) / r2;

    let lo = LoSpec::polar(readout.abs_gamma, theta, readout.abs_gamma, theta);
    let setup = DbhdSetup::new(&sector, readout.eta, lo, Some((bp.clone(), bm.clone())))?;
    let t = setup.t_theta()?;
    let h_estimate = expect(&t, &setup.state) / r;

    let g2 = readout.abs_gamma * readout.abs_gamma;
    let readout_penalty = if readout.eta == 0.5 {
        let n = if readout.large_gamma {
            0.0
        } else if readout.include_signal_in_n {
            number_expect(&bp, &setup.state) + number_expect(&bm, &setup.state)
        } else {
            number_expect(&bp.fluctuation(), &setup.state) + number_expect(&bm.fluctuation(), &setup.state)
        };
        (1.0 + n / g2) / r2
    } else if readout.large_gamma {
        let q = readout.eta * (1.0 - readout.eta);
        (1.0 + 2.0 * (1.0 - 2.0 * readout.eta).powi(2) / q) / r2
    } else {
        noise_psd(&t, &setup.state)? / r2 - s_hn
    };
    let s_total = s_hn + readout_penalty;
    if !s_total.is_finite() {
        return Err(Error::Numerical(format!("non-finite budget at Ω = {omega}")));
    }
    Ok(NoiseBudgetRow { omega, theta, s_hn, readout_penalty, s_total, h_estimate })
}

/// Budget over a frequency grid, computed in parallel and returned in grid
/// order.
pub fn signal_referred_budget(
    model: &GwModel,
    readout: &ReadoutParams,
    policy: &ThetaPolicy,
    grid: &[f64],
) -> Result<Vec<NoiseBudgetRow>> {
    grid.par_iter().enumerate().map(|(i, &w)| budget_point(model, readout, policy, i, w)).collect()
}
