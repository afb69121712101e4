//! Exact moments of detector observables under product coherent/vacuum
//! states.
//!
//! Every field is `x = ⟨x⟩ + δx` with `δx` linear in vacuum-like
//! fluctuation operators, so all correlators follow from the two-point
//! function `⟨δX δY⟩ = Σ_m α^X_m β^Y_m` (annihilation part of `X` against
//! creation part of `Y`) and Wick's theorem. For a photon number
//! `x†x − ⟨x†x⟩ = m̄ δx + m δx† + (δx†δx − ⟨δx†δx⟩)`, the two pieces being
//! uncorrelated, so fourth moments reduce to products of two-point
//! functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sideband::{linear_combine, AffineMode};
use crate::states::InputStateSpec;

/// `Σ w_k x_k†x_k + scalar`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadObservable {
    pub terms: Vec<(Complex64, AffineMode)>,
    pub scalar: Complex64,
}

impl QuadObservable {
    pub fn constant(c: Complex64) -> Self {
        QuadObservable { terms: Vec::new(), scalar: c }
    }

    /// Photon number `x†x`.
    pub fn number(x: &AffineMode) -> Self {
        QuadObservable { terms: vec![(Complex64::new(1.0, 0.0), x.clone())], scalar: Complex64::new(0.0, 0.0) }
    }

    pub fn scale(&self, w: Complex64) -> Self {
        QuadObservable { terms: self.terms.iter().map(|(c, x)| (c * w, x.clone())).collect(), scalar: self.scalar * w }
    }

    pub fn plus_scalar(mut self, c: Complex64) -> Self {
        self.scalar += c;
        self
    }

    /// `Σ w_j Q_j`.
    pub fn combine(parts: &[(Complex64, &QuadObservable)]) -> Self {
        let mut out = QuadObservable::default();
        for (w, q) in parts {
            out.terms.extend(q.terms.iter().map(|(c, x)| (c * w, x.clone())));
            out.scalar += q.scalar * w;
        }
        out
    }

    /// `Q†`: the photon numbers are self-adjoint, so only weights conjugate.
    pub fn adjoint(&self) -> Self {
        QuadObservable {
            terms: self.terms.iter().map(|(c, x)| (c.conj(), x.clone())).collect(),
            scalar: self.scalar.conj(),
        }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.im.abs() <= tol) && self.scalar.im.abs() <= tol
    }

    pub fn is_anti_self_adjoint(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.re.abs() <= tol) && self.scalar.re.abs() <= tol
    }

    /// True when `self` and `other` are the same operator: equal scalar and
    /// equal weight per distinct field.
    pub fn approx_eq(&self, other: &QuadObservable, tol: f64) -> bool {
        let a = self.collected();
        let b = other.collected();
        let weight = |list: &[(Complex64, AffineMode)], x: &AffineMode| {
            list.iter().filter(|(_, y)| y.approx_eq(x, tol)).map(|(c, _)| *c).sum::<Complex64>()
        };
        (self.scalar - other.scalar).norm() <= tol
            && a.iter().chain(b.iter()).all(|(_, x)| (weight(&a, x) - weight(&b, x)).norm() <= tol)
    }

    fn collected(&self) -> Vec<(Complex64, AffineMode)> {
        let mut out: Vec<(Complex64, AffineMode)> = Vec::new();
        for (c, x) in &self.terms {
            match out.iter_mut().find(|(_, y)| y == x) {
                Some((w, _)) => *w += c,
                None => out.push((*c, x.clone())),
            }
        }
        out
    }

    pub fn sector(&self) -> Result<Option<usize>> {
        let mut found = None;
        for (_, x) in &self.terms {
            if let Some(s) = x.sector()? {
                match found {
                    None => found = Some(s),
                    Some(f) if f != s => {
                        return Err(Error::SectorMismatch(format!("observable mixes sectors {f} and {s}")))
                    }
                    _ => {}
                }
            }
        }
        Ok(found)
    }
}

/// Symmetrized two-observable correlator at one sector.
///
/// `½⟨Q Q′† + Q′† Q⟩ = product_part + psd/2`, where `psd` is the
/// coefficient of the sector-diagonal delta (`2πδ(Ω−Ω′) → 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub expectation: Complex64,
    pub psd: Complex64,
    pub product_part: Complex64,
}

impl SpectralResult {
    pub fn symmetrized(&self) -> Complex64 {
        self.product_part + self.psd * 0.5
    }
}

/// `⟨δX δY⟩` for fluctuation operators in vacuum-like statistics.
fn two_point(x: &AffineMode, y: &AffineMode) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (k, a) in &x.u {
        if let Some(b) = y.v.get(k) {
            s += a * b;
        }
    }
    s
}

pub fn mean_field(x: &AffineMode, state: &InputStateSpec) -> Complex64 {
    state.mean(x)
}

/// `⟨x†x⟩ = |⟨x⟩|² + Σ|v|²`.
pub fn number_expect(x: &AffineMode, state: &InputStateSpec) -> f64 {
    state.mean(x).norm_sqr() + x.norms().1
}

pub fn expect(q: &QuadObservable, state: &InputStateSpec) -> Complex64 {
    q.terms.iter().map(|(w, x)| w * number_expect(x, state)).sum::<Complex64>() + q.scalar
}

/// Pieces of the zero-mean part of one photon number.
struct Fluct {
    lin: AffineMode,
    b: AffineMode,
    a: AffineMode,
}

fn fluct(x: &AffineMode, state: &InputStateSpec) -> Fluct {
    let m = state.mean(x);
    let b = x.fluctuation();
    let a = b.adjoint();
    let lin = linear_combine(&[(m.conj(), &b), (m, &a)]);
    Fluct { lin, b, a }
}

/// `⟨H_k H_j⟩` for the centred photon numbers of two fields.
fn hh(k: &Fluct, j: &Fluct) -> Complex64 {
    two_point(&k.lin, &j.lin)
        + two_point(&k.a, &j.a) * two_point(&k.b, &j.b)
        + two_point(&k.a, &j.b) * two_point(&k.b, &j.a)
}

/// `⟨Q_n Q′_n† + Q′_n† Q_n⟩` with `Q_n = Q − ⟨Q⟩`.
fn cross_psd(q: &QuadObservable, qp: &QuadObservable, state: &InputStateSpec) -> Complex64 {
    let fq: Vec<Fluct> = q.terms.iter().map(|(_, x)| fluct(x, state)).collect();
    let fp: Vec<Fluct> = qp.terms.iter().map(|(_, x)| fluct(x, state)).collect();
    let mut s = Complex64::new(0.0, 0.0);
    for (k, (wk, _)) in q.terms.iter().enumerate() {
        for (j, (wj, _)) in qp.terms.iter().enumerate() {
            s += wk * wj.conj() * (hh(&fq[k], &fp[j]) + hh(&fp[j], &fq[k]));
        }
    }
    s
}

pub fn symmetrized_correlator(
    q: &QuadObservable,
    qp: &QuadObservable,
    state: &InputStateSpec,
) -> Result<SpectralResult> {
    let (sq, sp) = (q.sector()?, qp.sector()?);
    let expectation = expect(q, state);
    let product_part = expectation * expect(qp, state).conj();
    let psd = match (sq, sp) {
        (Some(a), Some(b)) if a != b => Complex64::new(0.0, 0.0),
        _ => cross_psd(q, qp, state),
    };
    Ok(SpectralResult { expectation, psd, product_part })
}

/// Noise spectral density `S_Q` of `Q − ⟨Q⟩`.
pub fn noise_psd(q: &QuadObservable, state: &InputStateSpec) -> Result<f64> {
    q.sector()?;
    Ok(cross_psd(q, q, state).re)
}

/// `⟨δx δx† + δx† δx⟩` for a field itself (not a photon number).
pub fn linear_psd(x: &AffineMode) -> f64 {
    let b = x.fluctuation();
    let a = b.adjoint();
    (two_point(&b, &a) + two_point(&a, &b)).re
}
