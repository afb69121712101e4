//! Brute-force truncated Fock-space evaluation of observables on product
//! coherent states. Operators act on the state vector directly, so no
//! operator matrix is stored.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::engine::QuadObservable;
use crate::error::{Error, Result};
use crate::sideband::{AffineMode, ModeId};
use crate::states::InputStateSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockConfig {
    /// Per-mode dimension.
    pub cutoff: usize,
    /// Largest allowed total dimension.
    pub max_dim: usize,
    /// Largest allowed probability outside the truncated space per mode.
    pub norm_tol: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        FockConfig { cutoff: 14, max_dim: 1_000_000, norm_tol: 1e-8 }
    }
}

/// Truncated space over a fixed, ordered set of modes.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: Vec<ModeId>,
    cutoff: usize,
    dim: usize,
}

impl FockSpace {
    pub fn new(modes: Vec<ModeId>, cfg: &FockConfig) -> Result<Self> {
        if cfg.cutoff < 2 {
            return Err(Error::InvalidInput("cutoff must be at least 2".into()));
        }
        let mut dim: usize = 1;
        for _ in &modes {
            dim = dim.checked_mul(cfg.cutoff).filter(|d| *d <= cfg.max_dim).ok_or_else(|| {
                Error::Numerical(format!("Fock dimension {}^{} exceeds guard {}", cfg.cutoff, modes.len(), cfg.max_dim))
            })?;
        }
        Ok(FockSpace { modes, cutoff: cfg.cutoff, dim })
    }

    /// Space over every mode an observable touches.
    pub fn for_observables(qs: &[&QuadObservable], cfg: &FockConfig) -> Result<Self> {
        let mut set = BTreeSet::new();
        for q in qs {
            for (_, x) in &q.terms {
                set.extend(x.support().cloned());
            }
        }
        FockSpace::new(set.into_iter().collect(), cfg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    fn stride(&self, k: usize) -> usize {
        self.cutoff.pow((self.modes.len() - 1 - k) as u32)
    }

    fn position(&self, id: &ModeId) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m == id)
            .ok_or_else(|| Error::InvalidInput(format!("mode {id} not in the Fock space")))
    }

    /// Normalized truncated product coherent state.
    pub fn product_state(&self, state: &InputStateSpec, norm_tol: f64) -> Result<Vec<Complex64>> {
        let mut psi = vec![Complex64::new(1.0, 0.0)];
        for m in &self.modes {
            let g = state.amplitude(m);
            let mut amp = Vec::with_capacity(self.cutoff);
            let mut c = Complex64::new((-0.5 * g.norm_sqr()).exp(), 0.0);
            for n in 0..self.cutoff {
                amp.push(c);
                c = c * g / ((n + 1) as f64).sqrt();
            }
            let kept: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
            if 1.0 - kept > norm_tol {
                return Err(Error::Numerical(format!(
                    "coherent amplitude {g} on {m} loses {:.3e} of its norm at cutoff {}",
                    1.0 - kept,
                    self.cutoff
                )));
            }
            let s = kept.sqrt();
            psi = psi.iter().flat_map(|p| amp.iter().map(move |a| p * a / s)).collect();
        }
        Ok(psi)
    }

    /// `x ψ` for `x = Σu a + Σv a† + d`; raising past the cutoff is dropped.
    pub fn apply_mode(&self, x: &AffineMode, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = psi.iter().map(|p| p * x.d).collect();
        for (id, u) in &x.u {
            let st = self.stride(self.position(id)?);
            for (i, p) in psi.iter().enumerate() {
                let n = (i / st) % self.cutoff;
                if n > 0 {
                    out[i - st] += u * p * (n as f64).sqrt();
                }
            }
        }
        for (id, v) in &x.v {
            let st = self.stride(self.position(id)?);
            for (i, p) in psi.iter().enumerate() {
                let n = (i / st) % self.cutoff;
                if n + 1 < self.cutoff {
                    out[i + st] += v * p * ((n + 1) as f64).sqrt();
                }
            }
        }
        Ok(out)
    }

    /// `Q ψ`.
    pub fn apply(&self, q: &QuadObservable, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = psi.iter().map(|p| p * q.scalar).collect();
        for (w, x) in &q.terms {
            let xp = self.apply_mode(x, psi)?;
            let n = self.apply_mode(&x.adjoint(), &xp)?;
            for (o, v) in out.iter_mut().zip(n) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Dense matrix of `Q`, column by column. Small spaces only.
    pub fn dense(&self, q: &QuadObservable) -> Result<Vec<Vec<Complex64>>> {
        if self.dim > 4096 {
            return Err(Error::Numerical(format!("dense matrix of dimension {} refused", self.dim)));
        }
        let mut cols = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut e = vec![Complex64::new(0.0, 0.0); self.dim];
            e[j] = Complex64::new(1.0, 0.0);
            cols.push(self.apply(q, &e)?);
        }
        Ok((0..self.dim).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `⟨Ψ|Q|Ψ⟩`.
pub fn oracle_expect(q: &QuadObservable, state: &InputStateSpec, cfg: &FockConfig) -> Result<Complex64> {
    let space = FockSpace::for_observables(&[q], cfg)?;
    let psi = space.product_state(state, cfg.norm_tol)?;
    let qpsi = space.apply(q, &psi)?;
    Ok(inner(&psi, &qpsi))
}

/// `½⟨Q Q′† + Q′† Q⟩`.
pub fn oracle_symmetrized(
    q: &QuadObservable,
    qp: &QuadObservable,
    state: &InputStateSpec,
    cfg: &FockConfig,
) -> Result<Complex64> {
    let space = FockSpace::for_observables(&[q, qp], cfg)?;
    let psi = space.product_state(state, cfg.norm_tol)?;
    let q_dag = space.apply(&q.adjoint(), &psi)?;
    let qp_dag = space.apply(&qp.adjoint(), &psi)?;
    let q_psi = space.apply(q, &psi)?;
    let qp_psi = space.apply(qp, &psi)?;
    Ok((inner(&q_dag, &qp_dag) + inner(&qp_psi, &q_psi)) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{expect, symmetrized_correlator};
    use crate::sideband::{Sideband, SidebandSector};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup(g: Complex64) -> (SidebandSector, InputStateSpec) {
        let s = SidebandSector::standard(0, 1.0).unwrap();
        let st = InputStateSpec::vacuum().with_coherent(s.id("l", Sideband::Upper).unwrap(), g).unwrap();
        (s, st)
    }

    #[test]
    fn number_examples() {
        let (s, st) = setup(c(0.5, 0.0));
        let l = s.mode("l", Sideband::Upper).unwrap();
        let n = QuadObservable::number(&l);
        let cfg = FockConfig::default();
        assert!((oracle_expect(&n, &st, &cfg).unwrap() - c(0.25, 0.0)).norm() < 1e-8);
        assert_eq!(oracle_expect(&n, &InputStateSpec::vacuum(), &cfg).unwrap(), c(0.0, 0.0));
        let sym = oracle_symmetrized(&n, &n, &st, &cfg).unwrap();
        let eng = symmetrized_correlator(&n, &n, &st).unwrap().symmetrized();
        assert!((sym - eng).norm() < 1e-6);
    }

    #[test]
    fn vacuum_anti_normal_order() {
        // ⟨a a†⟩ = ⟨n̂_{a†}⟩ with x = a†.
        let (s, _) = setup(c(0.0, 0.0));
        let a = s.mode("e", Sideband::Upper).unwrap();
        let q = QuadObservable::number(&a.adjoint());
        let v = oracle_expect(&q, &InputStateSpec::vacuum(), &FockConfig::default()).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        assert!((expect(&q, &InputStateSpec::vacuum()) - v).norm() < 1e-12);
    }

    #[test]
    fn scalar_observable() {
        let q = QuadObservable::constant(c(0.3, -0.4));
        let v = oracle_symmetrized(&q, &q, &InputStateSpec::vacuum(), &FockConfig::default()).unwrap();
        assert!((v - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn guards() {
        let (s, st) = setup(c(3.0, 0.0));
        let n = QuadObservable::number(&s.mode("l", Sideband::Upper).unwrap());
        assert!(matches!(oracle_expect(&n, &st, &FockConfig::default()), Err(Error::Numerical(_))));
        let ids: Vec<ModeId> = s.modes().to_vec();
        assert!(FockSpace::new(ids, &FockConfig { cutoff: 40, ..FockConfig::default() }).is_err());
        assert!(FockSpace::new(vec![], &FockConfig { cutoff: 1, ..FockConfig::default() }).is_err());
    }

    #[test]
    fn self_adjoint_gives_hermitian_matrix() {
        let s = SidebandSector::standard(0, 1.0).unwrap();
        let b = s.mode("b", Sideband::Upper).unwrap();
        let l = s.mode("l", Sideband::Upper).unwrap();
        let x = b.scale(c(0.6, 0.2)).add(&l.adjoint().scale(c(0.0, 0.5))).with_displacement(c(0.1, -0.3));
        let q = QuadObservable { terms: vec![(c(1.5, 0.0), x), (c(-0.7, 0.0), l)], scalar: c(0.4, 0.0) };
        let space = FockSpace::for_observables(&[&q], &FockConfig { cutoff: 6, ..FockConfig::default() }).unwrap();
        let m = space.dense(&q).unwrap();
        for (i, row) in m.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert!((x - m[j][i].conj()).norm() < 1e-12);
            }
        }
    }
}
