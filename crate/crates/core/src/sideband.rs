//! Mode registry and the algebra of affine field operators.
//!
//! An [`AffineMode`] is `Σ u_m a_m + Σ v_m a_m† + d` over canonical input
//! modes with `[a_m, a_n†] = δ_mn`. Every field in the interferometer models
//! (signal, local oscillator, beam-splitter outputs, quadratures) is one of
//! these, so all transformations reduce to coefficient arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients below this magnitude are dropped after arithmetic.
pub const COEFF_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sideband {
    Upper,
    Lower,
}

impl Sideband {
    pub fn suffix(self) -> &'static str {
        match self {
            Sideband::Upper => "+",
            Sideband::Lower => "-",
        }
    }

    pub fn partner(self) -> Sideband {
        match self {
            Sideband::Upper => Sideband::Lower,
            Sideband::Lower => Sideband::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    MainInput,
    Lo,
    AuxVacuum,
    /// Detector-side vacuum entering a port backwards; only used when
    /// decomposing an input field over the output ports.
    BackProp,
}

/// Identifier of a canonical input mode.
///
/// `sector` is the index of the frequency sector the mode belongs to. Modes
/// in different sectors commute and are statistically independent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeId {
    pub sector: usize,
    pub label: String,
    pub sideband: Sideband,
    pub kind: SourceKind,
}

impl ModeId {
    pub fn new(sector: usize, label: &str, sideband: Sideband, kind: SourceKind) -> Self {
        ModeId { sector, label: label.to_string(), sideband, kind }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}@{}", self.label, self.sideband.suffix(), self.sector)
    }
}

/// The modes of one sideband pair at frequency `omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandSector {
    pub index: usize,
    pub omega: f64,
    modes: Vec<ModeId>,
}

impl SidebandSector {
    pub fn new(index: usize, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!("sideband frequency must be positive, got {omega}")));
        }
        Ok(SidebandSector { index, omega, modes: Vec::new() })
    }

    /// Registers `label` on both sidebands. Labels must be unique.
    pub fn register(&mut self, label: &str, kind: SourceKind) -> Result<()> {
        if self.modes.iter().any(|m| m.label == label) {
            return Err(Error::InvalidInput(format!("duplicate mode label '{label}'")));
        }
        for sb in [Sideband::Upper, Sideband::Lower] {
            self.modes.push(ModeId::new(self.index, label, sb, kind));
        }
        Ok(())
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn id(&self, label: &str, sideband: Sideband) -> Result<ModeId> {
        self.modes
            .iter()
            .find(|m| m.label == label && m.sideband == sideband)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("mode '{label}{}' not registered", sideband.suffix())))
    }

    pub fn mode(&self, label: &str, sideband: Sideband) -> Result<AffineMode> {
        Ok(AffineMode::mode(self.id(label, sideband)?))
    }

    /// Sector with the interferometer input `a`, the readout input `b`,
    /// the detection-side vacua `e`, `f` and the local oscillator `l`.
    pub fn standard(index: usize, omega: f64) -> Result<Self> {
        let mut s = SidebandSector::new(index, omega)?;
        s.register("a", SourceKind::MainInput)?;
        s.register("b", SourceKind::MainInput)?;
        s.register("e", SourceKind::AuxVacuum)?;
        s.register("f", SourceKind::AuxVacuum)?;
        s.register("l", SourceKind::Lo)?;
        Ok(s)
    }
}

/// `x = Σ u_m a_m + Σ v_m a_m† + d`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AffineMode {
    pub u: BTreeMap<ModeId, Complex64>,
    pub v: BTreeMap<ModeId, Complex64>,
    pub d: Complex64,
}

fn prune(map: &mut BTreeMap<ModeId, Complex64>) {
    map.retain(|_, c| c.norm() >= COEFF_EPS);
}

impl AffineMode {
    pub fn zero() -> Self {
        AffineMode::default()
    }

    pub fn constant(d: Complex64) -> Self {
        let d = if d.norm() < COEFF_EPS { Complex64::new(0.0, 0.0) } else { d };
        AffineMode { d, ..Default::default() }
    }

    /// The annihilation operator of `id`.
    pub fn mode(id: ModeId) -> Self {
        let mut u = BTreeMap::new();
        u.insert(id, Complex64::new(1.0, 0.0));
        AffineMode { u, ..Default::default() }
    }

    /// The creation operator of `id`.
    pub fn creation(id: ModeId) -> Self {
        AffineMode::mode(id).adjoint()
    }

    pub fn with_displacement(mut self, d: Complex64) -> Self {
        self.d += d;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_empty() && self.v.is_empty() && self.d.norm() < COEFF_EPS
    }

    /// The fluctuation part: same coefficients, no displacement.
    pub fn fluctuation(&self) -> Self {
        AffineMode { u: self.u.clone(), v: self.v.clone(), d: Complex64::new(0.0, 0.0) }
    }

    pub fn adjoint(&self) -> Self {
        AffineMode {
            u: self.v.iter().map(|(k, c)| (k.clone(), c.conj())).collect(),
            v: self.u.iter().map(|(k, c)| (k.clone(), c.conj())).collect(),
            d: self.d.conj(),
        }
    }

    pub fn scale(&self, w: Complex64) -> Self {
        linear_combine(&[(w, self)])
    }

    pub fn add(&self, other: &AffineMode) -> Self {
        let one = Complex64::new(1.0, 0.0);
        linear_combine(&[(one, self), (one, other)])
    }

    pub fn sub(&self, other: &AffineMode) -> Self {
        let one = Complex64::new(1.0, 0.0);
        linear_combine(&[(one, self), (-one, other)])
    }

    /// All modes with a nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = &ModeId> {
        self.u.keys().chain(self.v.keys())
    }

    /// The single sector this operator lives in, `None` for a constant.
    pub fn sector(&self) -> Result<Option<usize>> {
        let mut found = None;
        for id in self.support() {
            match found {
                None => found = Some(id.sector),
                Some(s) if s != id.sector => {
                    return Err(Error::SectorMismatch(format!("operator mixes sectors {s} and {}", id.sector)))
                }
                _ => {}
            }
        }
        Ok(found)
    }

    /// Coefficient-wise equality up to `tol`.
    pub fn approx_eq(&self, other: &AffineMode, tol: f64) -> bool {
        let diff = self.sub(other);
        diff.u.values().chain(diff.v.values()).all(|c| c.norm() <= tol) && diff.d.norm() <= tol
    }

    /// Sum of squared coefficient magnitudes `(Σ|u|², Σ|v|²)`.
    pub fn norms(&self) -> (f64, f64) {
        (self.u.values().map(|c| c.norm_sqr()).sum(), self.v.values().map(|c| c.norm_sqr()).sum())
    }
}

/// `Σ w_k x_k`, with tiny coefficients dropped.
pub fn linear_combine(terms: &[(Complex64, &AffineMode)]) -> AffineMode {
    let mut out = AffineMode::zero();
    for (w, x) in terms {
        for (k, c) in &x.u {
            *out.u.entry(k.clone()).or_default() += w * c;
        }
        for (k, c) in &x.v {
            *out.v.entry(k.clone()).or_default() += w * c;
        }
        out.d += w * x.d;
    }
    prune(&mut out.u);
    prune(&mut out.v);
    if out.d.norm() < COEFF_EPS {
        out.d = Complex64::new(0.0, 0.0);
    }
    out
}

fn same_sector(x: &AffineMode, y: &AffineMode) -> Result<()> {
    match (x.sector()?, y.sector()?) {
        (Some(a), Some(b)) if a != b => Err(Error::SectorMismatch(format!("sectors {a} and {b}"))),
        _ => Ok(()),
    }
}

/// `[x, y†] = Σ u_x conj(u_y) − Σ conj(v_x) v_y`.
pub fn commutator_pair(x: &AffineMode, y: &AffineMode) -> Result<Complex64> {
    same_sector(x, y)?;
    let mut c = Complex64::new(0.0, 0.0);
    for (k, ux) in &x.u {
        if let Some(uy) = y.u.get(k) {
            c += ux * uy.conj();
        }
    }
    for (k, vx) in &x.v {
        if let Some(vy) = y.v.get(k) {
            c -= vx.conj() * vy;
        }
    }
    Ok(c)
}

/// `[x, y] = Σ (u_x v_y − v_x u_y)`.
pub fn commutator(x: &AffineMode, y: &AffineMode) -> Result<Complex64> {
    same_sector(x, y)?;
    let mut c = Complex64::new(0.0, 0.0);
    for (k, ux) in &x.u {
        if let Some(vy) = y.v.get(k) {
            c += ux * vy;
        }
    }
    for (k, vx) in &x.v {
        if let Some(uy) = y.u.get(k) {
            c -= vx * uy;
        }
    }
    Ok(c)
}

/// `b1 = (b₊ + b₋†)/√2`, `b2 = (b₊ − b₋†)/(√2 i)`.
pub fn to_quadratures(b_plus: &AffineMode, b_minus: &AffineMode) -> Result<(AffineMode, AffineMode)> {
    same_sector(b_plus, b_minus)?;
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let bmd = b_minus.adjoint();
    let b1 = linear_combine(&[(r, b_plus), (r, &bmd)]);
    let ri = r / Complex64::i();
    let b2 = linear_combine(&[(ri, b_plus), (-ri, &bmd)]);
    Ok((b1, b2))
}

/// `b₊ = (b1 + i b2)/√2`, `b₋ = (b1† + i b2†)/√2`.
pub fn from_quadratures(b1: &AffineMode, b2: &AffineMode) -> Result<(AffineMode, AffineMode)> {
    same_sector(b1, b2)?;
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ri = r * Complex64::i();
    let bp = linear_combine(&[(r, b1), (ri, b2)]);
    let bm = linear_combine(&[(r, &b1.adjoint()), (ri, &b2.adjoint())]);
    Ok((bp, bm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair() -> (ModeId, ModeId) {
        (
            ModeId::new(0, "a", Sideband::Upper, SourceKind::MainInput),
            ModeId::new(0, "a", Sideband::Lower, SourceKind::MainInput),
        )
    }

    #[test]
    fn quadratures_of_pure_modes() {
        let (p, m) = pair();
        let (b1, b2) = to_quadratures(&AffineMode::mode(p.clone()), &AffineMode::mode(m.clone())).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b1.u[&p] - c(r, 0.0)).norm() < 1e-15);
        assert!((b1.v[&m] - c(r, 0.0)).norm() < 1e-15);
        assert_eq!(b1.d, c(0.0, 0.0));
        assert!((commutator_pair(&b1, &b1).unwrap()).norm() < 1e-15);
        assert!((commutator(&b1, &b2.adjoint()).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn quadrature_displacements() {
        let bp = AffineMode::constant(c(1.0, 0.0));
        let bm = AffineMode::constant(c(0.0, 1.0));
        let (b1, _) = to_quadratures(&bp, &bm).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b1.d - c(r, -r)).norm() < 1e-15);

        let (p, m) = from_quadratures(&AffineMode::constant(c(1.0, 0.0)), &AffineMode::zero()).unwrap();
        assert!((p.d - c(r, 0.0)).norm() < 1e-15);
        assert!((m.d - c(r, 0.0)).norm() < 1e-15);
        let (z1, z2) = from_quadratures(&AffineMode::zero(), &AffineMode::zero()).unwrap();
        assert!(z1.is_zero() && z2.is_zero());
    }

    #[test]
    fn canonical_commutators() {
        let (p, m) = pair();
        let ap = AffineMode::mode(p);
        let am = AffineMode::mode(m);
        assert_eq!(commutator_pair(&ap, &ap).unwrap(), c(1.0, 0.0));
        assert_eq!(commutator_pair(&ap, &am).unwrap(), c(0.0, 0.0));
        assert_eq!(commutator(&ap, &ap.adjoint()).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn adjoint_and_combine_basics() {
        let (p, _) = pair();
        let x = AffineMode::mode(p.clone()).with_displacement(c(2.0, 1.0));
        let xd = x.adjoint();
        assert!(xd.u.is_empty());
        assert_eq!(xd.v[&p], c(1.0, 0.0));
        assert_eq!(xd.d, c(2.0, -1.0));
        assert!(x.sub(&x).is_zero());
        let y = AffineMode::creation(p);
        let one = c(1.0, 0.0);
        assert_eq!(linear_combine(&[(one, &x), (c(0.0, 0.0), &y)]), x);
    }

    #[test]
    fn sector_mismatch_rejected() {
        let a = AffineMode::mode(ModeId::new(0, "a", Sideband::Upper, SourceKind::MainInput));
        let b = AffineMode::mode(ModeId::new(1, "a", Sideband::Lower, SourceKind::MainInput));
        assert!(to_quadratures(&a, &b).is_err());
        assert!(commutator_pair(&a, &b).is_err());
        assert!(a.add(&b).sector().is_err());
    }

    #[test]
    fn registry_rejects_duplicates() {
        let mut s = SidebandSector::new(0, 1.0).unwrap();
        s.register("a", SourceKind::MainInput).unwrap();
        assert!(s.register("a", SourceKind::Lo).is_err());
        assert!(s.id("zz", Sideband::Upper).is_err());
        assert!(SidebandSector::new(0, 0.0).is_err());
    }

    fn ids() -> Vec<ModeId> {
        let s = SidebandSector::standard(0, 1.0).unwrap();
        s.modes().to_vec()
    }

    fn arb_mode() -> impl Strategy<Value = AffineMode> {
        let n = ids().len();
        (
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n),
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n),
            (-2.0f64..2.0, -2.0f64..2.0),
        )
            .prop_map(|(u, v, d)| {
                let ids = ids();
                let mut x = AffineMode::constant(c(d.0, d.1));
                for (k, id) in ids.iter().enumerate() {
                    let a = AffineMode::mode(id.clone()).scale(c(u[k].0, u[k].1));
                    let b = AffineMode::creation(id.clone()).scale(c(v[k].0, v[k].1));
                    x = x.add(&a).add(&b);
                }
                x
            })
    }

    proptest! {
        #[test]
        fn adjoint_is_involution(x in arb_mode()) {
            prop_assert!(x.adjoint().adjoint().approx_eq(&x, 0.0));
        }

        #[test]
        fn quadrature_round_trip(p in arb_mode(), m in arb_mode()) {
            let (b1, b2) = to_quadratures(&p, &m).unwrap();
            let (p2, m2) = from_quadratures(&b1, &b2).unwrap();
            prop_assert!(p2.approx_eq(&p, 1e-14));
            prop_assert!(m2.approx_eq(&m, 1e-14));
        }

        #[test]
        fn self_commutator_is_real(x in arb_mode()) {
            prop_assert!(commutator_pair(&x, &x).unwrap().im.abs() < 1e-12);
        }
    }
}
