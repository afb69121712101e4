//! Randomized identity and oracle checks shared by the `verify` command and
//! the acceptance suite.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{expect, linear_psd, noise_psd, number_expect, symmetrized_correlator, QuadObservable};
use crate::error::Result;
use crate::fock::{oracle_expect, oracle_symmetrized, FockConfig};
use crate::gw::{budget_point, ComplexFn, GwModel, ReadoutParams, RealFn, ThetaPolicy};
use crate::network::{build_balanced_homodyne, build_eight_port, input_mode_decomposition, propagate_sector};
use crate::readout::{
    balanced_s, closed_form_psd_tb, closed_form_psd_ttheta, corrected_psd_tb, corrected_psd_ttheta, feasibility,
    table_pairs, DbhdSetup, Quadrature, TbSummary, TthetaSummary,
};
use crate::sideband::{
    commutator, commutator_pair, from_quadratures, linear_combine, to_quadratures, AffineMode, Sideband, SidebandSector,
};
use crate::states::{InputStateSpec, LoSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    fn n(self, full: usize) -> usize {
        match self {
            Level::Quick => full.div_ceil(10).max(2),
            Level::Full => full,
        }
    }
}

impl std::str::FromStr for Level {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(crate::Error::InvalidInput(format!("unknown level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Part {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub parts: Vec<Part>,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(|p| p.passed)
    }

    pub fn summary(&self) -> String {
        self.parts
            .iter()
            .map(|p| format!("{} {} (worst {:.2e})", p.name, if p.passed { "ok" } else { "FAILED" }, p.worst))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn part(name: &str, worst: f64, tol: f64) -> Part {
    Part { name: name.into(), passed: worst.is_finite() && worst <= tol, worst }
}

fn flag(name: &str, ok: bool) -> Part {
    Part { name: name.into(), passed: ok, worst: if ok { 0.0 } else { 1.0 } }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rc(r: &mut ChaCha8Rng, max: f64) -> Complex64 {
    Complex64::from_polar(max * r.gen::<f64>().sqrt(), r.gen_range(-PI..PI))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Signal sidebands carrying coherent quadrature means `(b1, b2)`.
pub fn displaced_b(sector: &SidebandSector, b1: Complex64, b2: Complex64) -> Result<(AffineMode, AffineMode)> {
    let (dp, dm) = from_quadratures(&AffineMode::constant(b1), &AffineMode::constant(b2))?;
    Ok((
        sector.mode("b", Sideband::Upper)?.with_displacement(dp.d),
        sector.mode("b", Sideband::Lower)?.with_displacement(dm.d),
    ))
}

/// Balanced homodyne identity with an oracle cross-check.
pub fn criterion1(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(1);
    let s = SidebandSector::standard(0, 1.0)?;
    let (mut w_eng, mut w_orc) = (0.0f64, 0.0f64);
    let cfg = FockConfig::default();
    for i in 0..level.n(100) {
        let eta = r.gen_range(0.02..0.98);
        let (g, b) = if i % 2 == 0 { (rc(&mut r, 1.0), rc(&mut r, 1.0)) } else { (rc(&mut r, 4.0), rc(&mut r, 2.0)) };
        let p = propagate_sector(&build_balanced_homodyne(eta)?, &s, Sideband::Upper, &BTreeMap::new())?;
        let q = balanced_s(eta, g, &p["co"], &p["do"])?;
        let st = InputStateSpec::vacuum()
            .with_coherent(s.id("l", Sideband::Upper)?, g)?
            .with_coherent(s.id("b", Sideband::Upper)?, b)?;
        let want = Complex64::new(2.0 * (g.conj() * b).re, 0.0);
        let got = expect(&q, &st);
        w_eng = w_eng.max((got - want).norm());
        if i % 2 == 0 {
            w_orc = w_orc.max((oracle_expect(&q, &st, &cfg)? - got).norm());
        }
    }
    Ok(Check {
        id: 1,
        name: "balanced homodyne identity",
        parts: vec![part("engine", w_eng, 1e-12), part("oracle", w_orc, 1e-6)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// The six rows of the sideband-combination table.
pub fn criterion2() -> Result<Check> {
    use Quadrature::*;
    let t0 = Instant::now();
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    type Row = ((Quadrature, Quadrature), Option<(f64, Complex64)>);
    let want: [Row; 6] = [
        ((B1, B2), None),
        ((B1, B1Dag), Some((0.0, one))),
        ((B1, B2Dag), Some((PI / 2.0, -i))),
        ((B2, B1Dag), Some((PI / 2.0, i))),
        ((B1Dag, B2Dag), None),
        ((B2, B2Dag), Some((0.0, -one))),
    ];
    let mut parts = Vec::new();
    for ((pair, row), tp) in want.iter().zip(table_pairs()) {
        let rep = feasibility(*pair)?;
        let ok = tp == *pair
            && match row {
                None => !rep.feasible,
                Some((off, ratio)) => {
                    rep.feasible && rep.minus_phase_offset == Some(*off) && rep.alpha_beta_relation == Some(*ratio)
                }
            };
        parts.push(flag(&format!("{{{},{}}}", pair.0, pair.1), ok));
    }
    Ok(Check { id: 2, name: "sideband-combination table", parts, seconds: t0.elapsed().as_secs_f64() })
}

/// Expectations of `t̂_b₊` and `t̂_θ`.
pub fn criterion3(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(3);
    let (mut wb, mut wt) = (0.0f64, 0.0f64);
    for i in 0..level.n(100) {
        let s = SidebandSector::standard(i, 1.0 + i as f64)?;
        let eta = r.gen_range(0.02..0.98);
        let theta = r.gen_range(-PI..PI);
        let ga = r.gen_range(0.2..4.0);
        let (b1, b2) = (rc(&mut r, 1.5), rc(&mut r, 1.5));
        let (bp, bm) = displaced_b(&s, b1, b2)?;
        let setup = DbhdSetup::new(&s, eta, LoSpec::polar(ga, theta, ga, theta), Some((bp.clone(), bm)))?;
        let (tp, _) = setup.t_b(Sideband::Upper)?;
        wb = wb.max((expect(&tp, &setup.state) - bp.d).norm());
        let t = setup.t_theta()?;
        wt = wt.max((expect(&t, &setup.state) - (b1 * theta.cos() + b2 * theta.sin())).norm());
    }
    Ok(Check {
        id: 3,
        name: "double balanced expectation theorem",
        parts: vec![part("t_b+", wb, 1e-12), part("t_theta", wt, 1e-12)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

struct NoiseSample {
    engine_tb: f64,
    tb: TbSummary,
    engine_tt: f64,
    tt: TthetaSummary,
}

fn noise_sample(r: &mut ChaCha8Rng, index: usize, eta: f64) -> Result<NoiseSample> {
    let s = SidebandSector::standard(index, 1.0)?;
    let theta = r.gen_range(-PI..PI);
    let ga = r.gen_range(0.5..4.0);
    let (b1, b2) = (rc(r, 1.0), rc(r, 1.0));
    let (bp, bm) = displaced_b(&s, b1, b2)?;
    let lo = LoSpec::polar(ga, theta, ga, theta);
    let setup = DbhdSetup::new(&s, eta, lo, Some((bp.clone(), bm.clone())))?;
    let (tp, _) = setup.t_b(Sideband::Upper)?;
    let tb = TbSummary {
        s_b: linear_psd(&bp),
        n_b: number_expect(&bp, &setup.state),
        b_mean: bp.d,
        gamma: lo.gamma_plus,
        eta,
    };
    let (q1, q2) = to_quadratures(&bp, &bm)?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let bth = linear_combine(&[(c(theta.cos()), &q1), (c(theta.sin()), &q2)]);
    let tt = TthetaSummary {
        s_btheta: linear_psd(&bth),
        n_sum: number_expect(&bp, &setup.state) + number_expect(&bm, &setup.state),
        b1_sum: 2.0 * b1.re,
        b2_sum: 2.0 * b2.re,
        abs_gamma: ga,
        eta,
        theta,
    };
    Ok(NoiseSample {
        engine_tb: noise_psd(&tp, &setup.state)?,
        tb,
        engine_tt: noise_psd(&setup.t_theta()?, &setup.state)?,
        tt,
    })
}

fn rel_f(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Noise relations for `t̂_b₊` and `t̂_θ`, both the reference closed forms
/// and the forms re-derived from exact moments.
pub fn criterion4(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(4);
    let mut w = [0.0f64; 6];
    for i in 0..level.n(200) {
        let eta = r.gen_range(0.05..0.95);
        let x = noise_sample(&mut r, i, eta)?;
        w[0] = w[0].max(rel_f(x.engine_tb, closed_form_psd_tb(&x.tb)));
        w[1] = w[1].max(rel_f(x.engine_tt, closed_form_psd_ttheta(&x.tt)));
        w[2] = w[2].max(rel_f(x.engine_tb, corrected_psd_tb(&x.tb)));
        w[3] = w[3].max(rel_f(x.engine_tt, corrected_psd_ttheta(&x.tt)));
        let h = noise_sample(&mut r, i, 0.5)?;
        let g2 = h.tb.gamma.norm_sqr();
        w[4] = w[4].max((h.engine_tb - (h.tb.s_b + 2.0 * h.tb.n_b / g2 + 1.0)).abs());
        w[4] = w[4].max(rel_f(h.engine_tb, closed_form_psd_tb(&h.tb)));
        let g2 = h.tt.abs_gamma * h.tt.abs_gamma;
        w[5] = w[5].max((h.engine_tt - (h.tt.s_btheta + h.tt.n_sum / g2 + 1.0)).abs());
        w[5] = w[5].max(rel_f(h.engine_tt, closed_form_psd_ttheta(&h.tt)));
    }
    Ok(Check {
        id: 4,
        name: "noise spectral relations",
        parts: vec![
            part("t_b+ reference form, all eta", w[0], 1e-10),
            part("t_theta reference form, all eta", w[1], 1e-10),
            part("t_b+ exact-moment form, all eta", w[2], 1e-10),
            part("t_theta exact-moment form, all eta", w[3], 1e-10),
            part("t_b+ at eta=1/2", w[4], 1e-10),
            part("t_theta at eta=1/2", w[5], 1e-10),
        ],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Vacuum signal at η = 1/2.
pub fn criterion5() -> Result<Check> {
    let t0 = Instant::now();
    let s = SidebandSector::standard(0, 1.0)?;
    let mut wb = 0.0f64;
    let mut wt = 0.0f64;
    for (ga, theta) in [(1.0, 0.0), (7.5, 0.4), (0.3, -2.0)] {
        let setup = DbhdSetup::new(&s, 0.5, LoSpec::polar(ga, theta, ga, theta), None)?;
        let (tp, _) = setup.t_b(Sideband::Upper)?;
        wb = wb.max((noise_psd(&tp, &setup.state)? - 2.0).abs());
        wt = wt.max((noise_psd(&setup.t_theta()?, &setup.state)? - 2.0).abs());
    }
    Ok(Check {
        id: 5,
        name: "vacuum noise at eta=1/2",
        parts: vec![part("t_b+", wb, 1e-10), part("t_theta", wt, 1e-10)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Engine against the Fock oracle on one-sideband eight-port scenarios.
pub fn criterion6(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(6);
    let cfg = FockConfig::default();
    let scenarios: Vec<(f64, Complex64, Complex64, Complex64)> = (0..level.n(50))
        .map(|_| (r.gen_range(0.05..0.95), rc(&mut r, 1.0), rc(&mut r, 0.8), rc(&mut r, 0.3)))
        .collect();
    let worst = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, &(eta, g0, b, e))| -> Result<(f64, f64)> {
            let g = if g0.norm() < 0.3 { g0 + Complex64::new(0.3, 0.0) } else { g0 };
            let s = SidebandSector::standard(i, 1.0)?;
            let setup = DbhdSetup::new(&s, eta, LoSpec::new(g, g), None)?;
            let st = setup
                .state
                .clone()
                .with_coherent(s.id("b", Sideband::Upper)?, b)?
                .with_coherent(s.id("e", Sideband::Upper)?, e)?;
            let (s12, s34) = setup.s_pair(Sideband::Upper)?;
            let (tp, tm) = setup.t_b(Sideband::Upper)?;
            let mut obs: Vec<QuadObservable> =
                ["D1", "D2", "D3", "D4"].iter().map(|d| setup.number(Sideband::Upper, d)).collect::<Result<_>>()?;
            obs.extend([s12, s34, tp, tm]);
            let (mut we, mut ws) = (0.0f64, 0.0f64);
            for q in &obs {
                we = we.max(rel(oracle_expect(q, &st, &cfg)?, expect(q, &st)));
            }
            for (a, b) in [(4, 4), (4, 5), (5, 5), (6, 6), (6, 7), (7, 6), (0, 3)] {
                let eng = symmetrized_correlator(&obs[a], &obs[b], &st)?.symmetrized();
                ws = ws.max(rel(oracle_symmetrized(&obs[a], &obs[b], &st, &cfg)?, eng));
            }
            Ok((we, ws))
        })
        .collect::<Result<Vec<_>>>()?;
    let we = worst.iter().map(|w| w.0).fold(0.0, f64::max);
    let ws = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    Ok(Check {
        id: 6,
        name: "engine versus Fock oracle",
        parts: vec![part("expectations", we, 1e-6), part("symmetrized correlators", ws, 1e-6)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Canonical commutators at the detector ports and of the back-propagated
/// main input.
pub fn criterion7(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(7);
    let s = SidebandSector::standard(0, 1.0)?;
    let labels = ["D1", "D2", "D3", "D4"];
    let mut w = 0.0f64;
    let mut exact = true;
    for _ in 0..level.n(20) {
        let eta = r.gen_range(0.01..0.99);
        let net = build_eight_port(eta)?;
        let p = propagate_sector(&net, &s, Sideband::Upper, &BTreeMap::new())?;
        for (i, a) in labels.iter().enumerate() {
            for (j, b) in labels.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                w = w.max((commutator_pair(&p[*a], &p[*b])? - want).norm());
                w = w.max(commutator(&p[*a], &p[*b])?.norm());
            }
        }
        let dec = input_mode_decomposition(&net, 0)?;
        let b = &dec["b"];
        w = w.max((commutator_pair(b, b)? - 1.0).norm());
        for l in ["l", "e", "f"] {
            let m = s.mode(l, Sideband::Upper)?;
            exact &=
                commutator_pair(b, &m)? == Complex64::new(0.0, 0.0) && commutator(b, &m)? == Complex64::new(0.0, 0.0);
        }
    }
    Ok(Check {
        id: 7,
        name: "canonical preservation",
        parts: vec![part("port commutators", w, 1e-12), flag("decomposition against l, e, f", exact)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

fn kimble_model(k: f64, beta: f64, h_sql: f64, h: Complex64) -> GwModel {
    GwModel::Kimble {
        k: RealFn::Const(k),
        beta_fp: RealFn::Const(beta),
        h_sql: RealFn::Const(h_sql),
        h: ComplexFn::Const([h.re, h.im]),
    }
}

/// The `cotθ = 𝒦/2` budget and its minimum.
pub fn criterion8(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(8);
    let ro = ReadoutParams { eta: 0.5, abs_gamma: 1e3, large_gamma: true, include_signal_in_n: true };
    let h_sql = 1.7;
    let step = 1e-3;
    let ks: Vec<f64> = (0..=2000).map(|i| 1.0 + step * i as f64).collect();
    let rows = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            budget_point(&kimble_model(k, 0.3, h_sql, Complex64::new(0.0, 0.0)), &ro, &ThetaPolicy::CotHalfK, i, 10.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let h2 = h_sql * h_sql;
    let mut w = 0.0f64;
    for (k, row) in ks.iter().zip(&rows) {
        w = w.max((row.s_total - h2 * (k / 4.0 + 1.0 / k)).abs() / h2);
    }
    let (imin, min) =
        rows.iter().enumerate().fold((0, f64::INFINITY), |a, (i, r)| if r.s_total < a.1 { (i, r.s_total) } else { a });
    let at_two = (ks[imin] - 2.0).abs() < step / 2.0 && (min - h2).abs() < 1e-9 * h2;
    let mut wa = 0.0f64;
    for _ in 0..level.n(1000) {
        let theta: f64 = r.gen_range(0.05..PI - 0.05);
        let k: f64 = r.gen_range(0.0..20.0);
        let cot = theta.cos() / theta.sin();
        let lhs = 2.0 * (cot - k / 2.0).powi(2) + k * k / 2.0 + 2.0;
        let rhs = (cot - k).powi(2) + 1.0 + 1.0 / theta.sin().powi(2);
        wa = wa.max((lhs - rhs).abs() / lhs.max(1.0));
    }
    Ok(Check {
        id: 8,
        name: "Fabry-Perot budget bound",
        parts: vec![part("K sweep", w, 1e-9), flag("minimum h_SQL^2 at K=2", at_two), part("rearrangement", wa, 1e-12)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Injected strain recovered from `⟨t̂_θ⟩/R`.
pub fn criterion9(level: Level) -> Result<Check> {
    let t0 = Instant::now();
    let mut r = rng(9);
    let mut w = 0.0f64;
    for i in 0..level.n(100) {
        let h = rc(&mut r, 5.0);
        let ro = ReadoutParams {
            eta: r.gen_range(0.02..0.98),
            abs_gamma: r.gen_range(0.5..50.0),
            large_gamma: false,
            include_signal_in_n: true,
        };
        let theta = r.gen_range(0.1..PI - 0.1) * if r.gen::<bool>() { 1.0 } else { -1.0 };
        let model = if i % 3 == 0 {
            GwModel::PassThrough {
                response: ComplexFn::Const([r.gen_range(0.2..3.0), r.gen_range(-1.0..1.0)]),
                h: ComplexFn::Const([h.re, h.im]),
            }
        } else {
            kimble_model(r.gen_range(0.1..10.0), r.gen_range(-PI..PI), r.gen_range(0.5..2.0), h)
        };
        let policy = if i % 2 == 0 { ThetaPolicy::Fixed { theta } } else { ThetaPolicy::CotHalfK };
        let policy = if matches!(model, GwModel::PassThrough { .. }) { ThetaPolicy::Fixed { theta } } else { policy };
        let row = budget_point(&model, &ro, &policy, i, 1.0 + i as f64)?;
        w = w.max((row.h_estimate - h).norm() / h.norm().max(1.0));
    }
    Ok(Check {
        id: 9,
        name: "signal recovery",
        parts: vec![part("h estimate", w, 1e-10)],
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Criteria known to fail for reasons recorded in the project notes.
pub const KNOWN_DEVIATIONS: &[u8] = &[4];

pub fn run_all(level: Level) -> Result<Vec<Check>> {
    Ok(vec![
        criterion1(level)?,
        criterion2()?,
        criterion3(level)?,
        criterion4(level)?,
        criterion5()?,
        criterion6(level)?,
        criterion7(level)?,
        criterion8(level)?,
        criterion9(level)?,
    ])
}
