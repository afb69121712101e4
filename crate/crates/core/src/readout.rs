//! Readout observables built from detector photon numbers, the
//! sideband-combination feasibility solver, and closed-form noise relations.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::QuadObservable;
use crate::error::{Error, Result};
use crate::network::{build_eight_port, check_eta, phase_factor, propagate_sector};
use crate::sideband::{AffineMode, Sideband, SidebandSector};
use crate::states::{InputStateSpec, LoSpec};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn require_gamma(gamma: Complex64) -> Result<()> {
    if gamma.norm() > 0.0 && gamma.re.is_finite() && gamma.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput("local-oscillator amplitude must be nonzero and finite".into()))
    }
}

/// `ŝ = [(1−η) n_co − η n_do − (1−2η)|γ|²] / √(η(1−η))`.
pub fn balanced_s(eta: f64, gamma: Complex64, co: &AffineMode, d_o: &AffineMode) -> Result<QuadObservable> {
    check_eta(eta)?;
    if !(gamma.re.is_finite() && gamma.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite LO amplitude".into()));
    }
    let k = 1.0 / (eta * (1.0 - eta)).sqrt();
    Ok(QuadObservable {
        terms: vec![(c(k * (1.0 - eta), 0.0), co.clone()), (c(-k * eta, 0.0), d_o.clone())],
        scalar: c(-k * (1.0 - 2.0 * eta) * gamma.norm_sqr(), 0.0),
    })
}

/// Balanced homodyne observables `ŝ±` on the two sidebands. Each pair of
/// ports is `(c_o, d_o)` for that sideband.
pub fn s_sidebands(
    eta: f64,
    lo: &LoSpec,
    plus: (&AffineMode, &AffineMode),
    minus: (&AffineMode, &AffineMode),
) -> Result<(QuadObservable, QuadObservable)> {
    if lo.gamma_plus.norm() == 0.0 || lo.gamma_minus.norm() == 0.0 {
        return Err(Error::InvalidInput("γ± = 0 leaves nothing to detect".into()));
    }
    Ok((balanced_s(eta, lo.gamma_plus, plus.0, plus.1)?, balanced_s(eta, lo.gamma_minus, minus.0, minus.1)?))
}

/// `t̂₊ = (ŝ₊ + ŝ₋)/(√2|γ|)`, `t̂₋ = (ŝ₊ − ŝ₋)/(√2 i|γ|)`.
pub fn t_pm(
    s_plus: &QuadObservable,
    s_minus: &QuadObservable,
    abs_gamma: f64,
) -> Result<(QuadObservable, QuadObservable)> {
    t_pm_general(s_plus, s_minus, abs_gamma, abs_gamma)
}

/// As [`t_pm`] with each sideband normalized by its own `|γ±|`.
pub fn t_pm_general(
    s_plus: &QuadObservable,
    s_minus: &QuadObservable,
    abs_plus: f64,
    abs_minus: f64,
) -> Result<(QuadObservable, QuadObservable)> {
    if !(abs_plus > 0.0 && abs_minus > 0.0) {
        return Err(Error::InvalidInput("|γ±| must be positive".into()));
    }
    let (wp, wm) = (c(FRAC_1_SQRT_2 / abs_plus, 0.0), c(FRAC_1_SQRT_2 / abs_minus, 0.0));
    let tp = QuadObservable::combine(&[(wp, s_plus), (wm, s_minus)]);
    let mi = c(0.0, -1.0);
    let tm = QuadObservable::combine(&[(wp * mi, s_plus), (-wm * mi, s_minus)]);
    Ok((tp, tm))
}

/// `ŝ_D1D2` and `ŝ_D3D4` from the eight-port detector fields.
pub fn dbhd_observables(
    ports: &BTreeMap<String, AffineMode>,
    eta: f64,
    gamma: Complex64,
) -> Result<(QuadObservable, QuadObservable)> {
    check_eta(eta)?;
    require_gamma(gamma)?;
    let get = |l: &str| ports.get(l).ok_or_else(|| Error::Network(format!("missing detector port {l}")));
    let (c1, d1, c2, d2) = (get("D1")?, get("D2")?, get("D3")?, get("D4")?);
    let k = 2.0 / (eta * (1.0 - eta)).sqrt();
    let offset = (1.0 - 2.0 * eta) / 2.0 * gamma.norm_sqr();
    let s12 = QuadObservable {
        terms: vec![(c(k * (1.0 - eta), 0.0), c1.clone()), (c(-k * eta, 0.0), d1.clone())],
        scalar: c(-k * offset, 0.0),
    };
    let s34 = QuadObservable {
        terms: vec![(c(0.0, k * (1.0 - eta)), d2.clone()), (c(0.0, -k * eta), c2.clone())],
        scalar: c(0.0, -k * offset),
    };
    Ok((s12, s34))
}

/// `t̂_b₊ = (ŝ_D1D2 + ŝ_D3D4)/(2γ*)`, `t̂_b₋ = (ŝ_D1D2 − ŝ_D3D4)/(2γ)`.
pub fn t_b(s12: &QuadObservable, s34: &QuadObservable, gamma: Complex64) -> Result<(QuadObservable, QuadObservable)> {
    require_gamma(gamma)?;
    let wp = c(1.0, 0.0) / (2.0 * gamma.conj());
    let wm = c(1.0, 0.0) / (2.0 * gamma);
    Ok((QuadObservable::combine(&[(wp, s12), (wp, s34)]), QuadObservable::combine(&[(wm, s12), (-wm, s34)])))
}

/// Common phase `θ` of `γ±`, or an error when the phases differ.
pub fn common_theta(lo: &LoSpec) -> Result<f64> {
    lo.require_nonzero()?;
    let (tp, tm) = (lo.gamma_plus.arg(), lo.gamma_minus.arg());
    if (tp - tm).sin().abs() > 1e-12 || (tp - tm).cos() < 0.0 {
        return Err(Error::InvalidInput(format!("t_θ needs θ₊ = θ₋, got {tp} and {tm}")));
    }
    Ok(tp)
}

/// `t̂_θ = ½(t̂_D1D2+ + t̂_D3D4−)` with `t̂_D1D2+ = (ŝ₁₂₊/|γ₊| + ŝ₁₂₋/|γ₋|)/√2`
/// and `t̂_D3D4− = (ŝ₃₄₊/|γ₊| − ŝ₃₄₋/|γ₋|)/√2`.
pub fn t_theta(
    ports_plus: &BTreeMap<String, AffineMode>,
    ports_minus: &BTreeMap<String, AffineMode>,
    eta: f64,
    lo: &LoSpec,
) -> Result<QuadObservable> {
    common_theta(lo)?;
    let (p12, p34) = dbhd_observables(ports_plus, eta, lo.gamma_plus)?;
    let (m12, m34) = dbhd_observables(ports_minus, eta, lo.gamma_minus)?;
    let wp = c(0.5 * FRAC_1_SQRT_2 / lo.gamma_plus.norm(), 0.0);
    let wm = c(0.5 * FRAC_1_SQRT_2 / lo.gamma_minus.norm(), 0.0);
    Ok(QuadObservable::combine(&[(wp, &p12), (wm, &m12), (wp, &p34), (-wm, &m34)]))
}

/// An eight-port readout at one sector with both sidebands propagated.
#[derive(Debug, Clone)]
pub struct DbhdSetup {
    pub sector: SidebandSector,
    pub eta: f64,
    pub lo: LoSpec,
    pub ports_plus: BTreeMap<String, AffineMode>,
    pub ports_minus: BTreeMap<String, AffineMode>,
    /// LO amplitudes on `l±`; other coherent inputs can be added.
    pub state: InputStateSpec,
}

impl DbhdSetup {
    /// `b_fields` overrides the signal input per sideband (for example the
    /// output of a main interferometer); otherwise the registered `b±`
    /// modes are used.
    pub fn new(
        sector: &SidebandSector,
        eta: f64,
        lo: LoSpec,
        b_fields: Option<(AffineMode, AffineMode)>,
    ) -> Result<Self> {
        lo.require_nonzero()?;
        let net = build_eight_port(eta)?;
        let mut over_p = BTreeMap::new();
        let mut over_m = BTreeMap::new();
        if let Some((bp, bm)) = b_fields {
            over_p.insert("b".to_string(), bp);
            over_m.insert("b".to_string(), bm);
        }
        let ports_plus = propagate_sector(&net, sector, Sideband::Upper, &over_p)?;
        let ports_minus = propagate_sector(&net, sector, Sideband::Lower, &over_m)?;
        let state = InputStateSpec::vacuum()
            .with_coherent(sector.id("l", Sideband::Upper)?, lo.gamma_plus)?
            .with_coherent(sector.id("l", Sideband::Lower)?, lo.gamma_minus)?;
        Ok(DbhdSetup { sector: sector.clone(), eta, lo, ports_plus, ports_minus, state })
    }

    pub fn ports(&self, sb: Sideband) -> &BTreeMap<String, AffineMode> {
        match sb {
            Sideband::Upper => &self.ports_plus,
            Sideband::Lower => &self.ports_minus,
        }
    }

    pub fn gamma(&self, sb: Sideband) -> Complex64 {
        match sb {
            Sideband::Upper => self.lo.gamma_plus,
            Sideband::Lower => self.lo.gamma_minus,
        }
    }

    pub fn s_pair(&self, sb: Sideband) -> Result<(QuadObservable, QuadObservable)> {
        dbhd_observables(self.ports(sb), self.eta, self.gamma(sb))
    }

    pub fn t_b(&self, sb: Sideband) -> Result<(QuadObservable, QuadObservable)> {
        let (s12, s34) = self.s_pair(sb)?;
        t_b(&s12, &s34, self.gamma(sb))
    }

    pub fn t_theta(&self) -> Result<QuadObservable> {
        t_theta(&self.ports_plus, &self.ports_minus, self.eta, &self.lo)
    }

    pub fn number(&self, sb: Sideband, port: &str) -> Result<QuadObservable> {
        self.ports(sb)
            .get(port)
            .map(QuadObservable::number)
            .ok_or_else(|| Error::Network(format!("missing detector port {port}")))
    }
}

/// Target quadratures of the sideband-combination problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    B1,
    B2,
    B1Dag,
    B2Dag,
}

impl Quadrature {
    pub const ALL: [Quadrature; 4] = [Quadrature::B1, Quadrature::B2, Quadrature::B1Dag, Quadrature::B2Dag];

    fn index(self) -> usize {
        self as usize
    }

    /// Coefficients (times √2) of `α` and `β` in front of this quadrature in
    /// `α⟨ŝ₊⟩ + β⟨ŝ₋⟩`, with flags telling whether `γ₊` / `γ₋` enter
    /// conjugated.
    fn row(self) -> [(Complex64, bool); 2] {
        let i = c(0.0, 1.0);
        let one = c(1.0, 0.0);
        match self {
            Quadrature::B1 => [(one, true), (one, false)],
            Quadrature::B2 => [(i, true), (-i, false)],
            Quadrature::B1Dag => [(one, false), (one, true)],
            Quadrature::B2Dag => [(-i, false), (i, true)],
        }
    }
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrature::B1 => "b1",
            Quadrature::B2 => "b2",
            Quadrature::B1Dag => "b1†",
            Quadrature::B2Dag => "b2†",
        })
    }
}

impl std::str::FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "b1" => Quadrature::B1,
            "b2" => Quadrature::B2,
            "b1dag" | "b1†" => Quadrature::B1Dag,
            "b2dag" | "b2†" => Quadrature::B2Dag,
            other => return Err(Error::InvalidInput(format!("unknown quadrature '{other}'"))),
        })
    }
}

fn gpow(g: Complex64, conj: bool) -> Complex64 {
    if conj {
        g.conj()
    } else {
        g
    }
}

/// Coefficients of `(b1, b2, b1†, b2†)` in `α⟨ŝ₊⟩ + β⟨ŝ₋⟩`.
pub fn combination_coefficients(alpha: Complex64, beta: Complex64, gp: Complex64, gm: Complex64) -> [Complex64; 4] {
    Quadrature::ALL.map(|q| {
        let [ra, rb] = q.row();
        (alpha * ra.0 * gpow(gp, ra.1) + beta * rb.0 * gpow(gm, rb.1)) * FRAC_1_SQRT_2
    })
}

/// Determinant of the 2×2 system that must vanish for a nontrivial `(α, β)`
/// to cancel the two quadratures outside `pair`.
pub fn feasibility_determinant(pair: (Quadrature, Quadrature), gp: Complex64, gm: Complex64) -> Complex64 {
    let [r1, r2] = complement(pair);
    let m = |q: Quadrature| {
        let [a, b] = q.row();
        (a.0 * gpow(gp, a.1), b.0 * gpow(gm, b.1))
    };
    let (a11, a12) = m(r1);
    let (a21, a22) = m(r2);
    a11 * a22 - a12 * a21
}

fn complement(pair: (Quadrature, Quadrature)) -> [Quadrature; 2] {
    let rest: Vec<Quadrature> = Quadrature::ALL.into_iter().filter(|q| *q != pair.0 && *q != pair.1).collect();
    [rest[0], rest[1]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub pair: (Quadrature, Quadrature),
    pub feasible: bool,
    /// With `γ₊ = |γ₊|e^{iθ}` the scheme needs `γ₋ = |γ₋|e^{i(offset − θ)}`.
    pub minus_phase_offset: Option<f64>,
    pub gamma_constraint: String,
    /// `β/α` in units of `|γ₊|/|γ₋|`.
    pub alpha_beta_relation: Option<Complex64>,
    pub combination_formula: String,
}

fn fmt_c(z: Complex64) -> String {
    let z = c(if z.re == 0.0 { 0.0 } else { z.re }, if z.im == 0.0 { 0.0 } else { z.im });
    match (z.re != 0.0, z.im != 0.0) {
        (false, false) => "0".into(),
        (true, false) => format!("{}", z.re),
        (false, true) if z.im == 1.0 => "i".into(),
        (false, true) if z.im == -1.0 => "-i".into(),
        (false, true) => format!("{}i", z.im),
        _ => format!("({}{:+}i)", z.re, z.im),
    }
}

/// Which `(γ₊, γ₋)` phase pattern and `β/α` let `α⟨ŝ₊⟩ + β⟨ŝ₋⟩` reduce to
/// a combination of the two quadratures in `pair` alone.
pub fn feasibility(pair: (Quadrature, Quadrature)) -> Result<FeasibilityReport> {
    if pair.0 == pair.1 {
        return Err(Error::InvalidInput("pair must contain two different quadratures".into()));
    }
    let pair = if pair.0 <= pair.1 { pair } else { (pair.1, pair.0) };
    let [r1, r2] = complement(pair);
    let ([a11, a12], [a21, a22]) = (r1.row(), r2.row());
    // det = a11 a22 − a12 a21; each product is γ₊^(*) γ₋^(*) of some form.
    let t1 = (a11.0 * a22.0, (a11.1, a22.1));
    let t2 = (-(a12.0 * a21.0), (a21.1, a12.1));
    let infeasible = |why: String| FeasibilityReport {
        pair,
        feasible: false,
        minus_phase_offset: None,
        gamma_constraint: why,
        alpha_beta_relation: None,
        combination_formula: "none".into(),
    };
    let offset = if t1.1 == t2.1 {
        let coeff = t1.0 + t2.0;
        if coeff.norm() > 0.0 {
            return Ok(infeasible(format!(
                "determinant {} γ₊{}γ₋{} vanishes only for γ₊ = 0 or γ₋ = 0",
                fmt_c(coeff),
                if t1.1 .0 { "*" } else { "" },
                if t1.1 .1 { "*" } else { "" }
            )));
        }
        0.0
    } else {
        // cc·conj(P) + cp·P = 0 with P = γ₊γ₋.
        let (cc, cp) = if t1.1 == (true, true) { (t1.0, t2.0) } else { (t2.0, t1.0) };
        if (cc.norm() - cp.norm()).abs() > 1e-12 * cc.norm().max(cp.norm()) {
            return Ok(infeasible("no phase of γ₊γ₋ cancels the determinant".into()));
        }
        let phi = 0.5 * (-cc / cp).arg();
        phi.rem_euclid(PI)
    };
    let gm = phase_factor(offset);
    let gp = c(1.0, 0.0);
    let m11 = a11.0 * gpow(gp, a11.1);
    let m12 = a12.0 * gpow(gm, a12.1);
    let ratio = -m11 / m12;
    let coeffs = combination_coefficients(c(1.0, 0.0), ratio, gp, gm);
    let (x, y) = (coeffs[pair.0.index()], coeffs[pair.1.index()]);
    let minus = if offset == 0.0 { "|γ₋|e^{-iθ}".to_string() } else { format!("{}·|γ₋|e^{{-iθ}}", fmt_c(gm)) };
    Ok(FeasibilityReport {
        pair,
        feasible: true,
        minus_phase_offset: Some(offset),
        gamma_constraint: format!("γ₊ = |γ₊|e^{{iθ}}, γ₋ = {minus}"),
        alpha_beta_relation: Some(ratio),
        combination_formula: format!(
            "at θ = 0: α⟨ŝ₊⟩ + β⟨ŝ₋⟩ = α|γ₊|⟨({}) {} + ({}) {}⟩",
            fmt_c(x),
            pair.0,
            fmt_c(y),
            pair.1
        ),
    })
}

/// All six unordered pairs, in table order.
pub fn table_pairs() -> [(Quadrature, Quadrature); 6] {
    use Quadrature::*;
    [(B1, B2), (B1, B1Dag), (B1, B2Dag), (B2, B1Dag), (B1Dag, B2Dag), (B2, B2Dag)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseCase {
    /// `κ` and `λ` real.
    Zero,
    /// `κ` and `λ` purely imaginary.
    HalfPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixSolution {
    pub beta: f64,
    pub kappa: Complex64,
    pub lambda: Complex64,
}

/// `κ = αγ₊* + βγ₋`, `λ = i(αγ₊* − βγ₋)`.
pub fn kappa_lambda(alpha: f64, beta: f64, gp: Complex64, gm: Complex64) -> (Complex64, Complex64) {
    let kappa = alpha * gp.conj() + beta * gm;
    let lambda = c(0.0, 1.0) * (alpha * gp.conj() - beta * gm);
    (kappa, lambda)
}

/// Real `(α, β)` that make `κ` and `λ` share the phase of `case`, with
/// `κ, λ` reported in the magnitude form `2α|γ₊||cosθ₊|` etc.
pub fn appendix_phase_solver(case: PhaseCase, gp: Complex64, gm: Complex64, alpha: f64) -> Result<AppendixSolution> {
    if gp.norm() == 0.0 || gm.norm() == 0.0 {
        return Err(Error::InvalidInput("|γ±| must be positive".into()));
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidInput("α must be nonzero".into()));
    }
    let (tp, tm) = (gp.arg(), gm.arg());
    if (tp - tm).sin().abs() > 1e-12 {
        return Err(Error::Infeasible(format!("tan θ₊ ≠ tan θ₋ (θ₊ = {tp}, θ₋ = {tm})")));
    }
    let sign = (tp - tm).cos().signum();
    let r = gp.norm() / gm.norm();
    let two = 2.0 * alpha * gp.norm();
    let (ac, as_) = (tp.cos().abs(), tp.sin().abs());
    Ok(match case {
        PhaseCase::Zero => {
            AppendixSolution { beta: sign * alpha * r, kappa: c(two * ac, 0.0), lambda: c(two * as_, 0.0) }
        }
        PhaseCase::HalfPi => {
            AppendixSolution { beta: -sign * alpha * r, kappa: c(0.0, two * as_), lambda: c(0.0, two * ac) }
        }
    })
}

/// Inputs of the `t̂_b₊` noise relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TbSummary {
    pub s_b: f64,
    pub n_b: f64,
    pub b_mean: Complex64,
    pub gamma: Complex64,
    pub eta: f64,
}

/// Inputs of the `t̂_θ` noise relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TthetaSummary {
    pub s_btheta: f64,
    /// `⟨n̂_b₊ + n̂_b₋⟩`.
    pub n_sum: f64,
    /// `⟨b̂₁ + b̂₁†⟩`.
    pub b1_sum: f64,
    /// `⟨b̂₂ + b̂₂†⟩`.
    pub b2_sum: f64,
    pub abs_gamma: f64,
    pub eta: f64,
    pub theta: f64,
}

/// Reference closed form for `S_{t_b₊}` including the `(1−2η)` imbalance
/// terms as commonly quoted. It reduces to `S_b + 2n_b/|γ|² + 1` at η = 1/2
/// but disagrees with the exact moments elsewhere; [`corrected_psd_tb`]
/// holds at every η.
pub fn closed_form_psd_tb(s: &TbSummary) -> f64 {
    let g = s.gamma;
    let gc = g.conj();
    let g2 = g.norm_sqr();
    let imb = 1.0 - 2.0 * s.eta;
    let q = s.eta * (1.0 - s.eta);
    let k = imb / (2.0 * q.sqrt() * g2);
    let b = s.b_mean;
    let first = gc * (gc + 1.0) * b + g * (g + 1.0) * b.conj();
    let second = c(0.0, 1.0) * (gc * (gc - 1.0) * b - g * (g - 1.0) * b.conj());
    s.s_b + 2.0 * s.n_b / g2 + 1.0 + k * (first + second).re + imb * imb / q * (1.0 + g2)
}

/// `S_{t_b₊}` from exact moments for a signal field with vacuum-like
/// fluctuations that is independent of the detection-side inputs.
pub fn corrected_psd_tb(s: &TbSummary) -> f64 {
    let g2 = s.gamma.norm_sqr();
    let imb = 1.0 - 2.0 * s.eta;
    let q = s.eta * (1.0 - s.eta);
    let gb = s.gamma.conj() * s.b_mean;
    s.s_b + 2.0 * s.n_b / g2 + 1.0 + 2.0 * imb / (q.sqrt() * g2) * (gb.re + gb.im) + 2.0 * imb * imb / q
}

fn ttheta_linear(s: &TthetaSummary) -> f64 {
    let imb = 1.0 - 2.0 * s.eta;
    let q = s.eta * (1.0 - s.eta);
    let (ct, st) = (s.theta.cos(), s.theta.sin());
    imb / ((2.0 * q).sqrt() * s.abs_gamma) * ((ct - st) * s.b1_sum + (ct + st) * s.b2_sum)
}

/// Reference closed form for `S_{t_θ}`. Exact at η = 1/2; elsewhere its
/// constant imbalance term is a factor four too small (see
/// [`corrected_psd_ttheta`]).
pub fn closed_form_psd_ttheta(s: &TthetaSummary) -> f64 {
    let imb = 1.0 - 2.0 * s.eta;
    let q = s.eta * (1.0 - s.eta);
    s.s_btheta + s.n_sum / (s.abs_gamma * s.abs_gamma) + 1.0 + ttheta_linear(s) + imb * imb / (2.0 * q)
}

/// `S_{t_θ}` from exact moments for signal sidebands with vacuum-like
/// fluctuations.
pub fn corrected_psd_ttheta(s: &TthetaSummary) -> f64 {
    let imb = 1.0 - 2.0 * s.eta;
    let q = s.eta * (1.0 - s.eta);
    s.s_btheta + s.n_sum / (s.abs_gamma * s.abs_gamma) + 1.0 + ttheta_linear(s) + 2.0 * imb * imb / q
}
