//! JSON scenarios and the table producers behind the command-line tool.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{expect, noise_psd, number_expect};
use crate::error::{Error, Result};
use crate::gw::{signal_referred_budget, GwModel, NoiseBudgetRow, ReadoutParams, ThetaPolicy};
use crate::network::{check_eta, propagate_sector, NetworkTopology};
use crate::readout::{common_theta, dbhd_observables, t_b, t_theta};
use crate::sideband::{Sideband, SidebandSector};
use crate::states::{InputStateSpec, LoProfile, LoSpec, Scheme};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let (a, b, n) = (self.omega_min, self.omega_max, self.points);
        if n == 0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::Schema("grid needs finite bounds and at least one point".into()));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        if a >= b {
            return Err(Error::Schema("grid must be strictly increasing".into()));
        }
        let t = |i: usize| i as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * t(i) }).collect()),
            Spacing::Log => {
                if a <= 0.0 {
                    return Err(Error::Schema("log grid needs omega_min > 0".into()));
                }
                let (la, lb) = (a.ln(), b.ln());
                Ok((0..n).map(|i| if i == n - 1 { b } else { (la + (lb - la) * t(i)).exp() }).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSpec {
    Named(String),
    Inline(NetworkTopology),
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec::Named("eight-port".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    pub eta: f64,
    #[serde(default = "default_gamma")]
    pub gamma_abs: f64,
    #[serde(default)]
    pub scheme: Option<Scheme>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub policy: Option<ThetaPolicy>,
    #[serde(default)]
    pub large_gamma: bool,
    #[serde(default = "yes")]
    pub include_signal_in_n: bool,
}

fn default_gamma() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub network: NetworkSpec,
    #[serde(default)]
    pub lo: Option<LoProfile>,
    pub model: GwModel,
    pub grid: Grid,
    pub readout: ReadoutSpec,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Command-line values that replace scenario fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub policy: Option<ThetaPolicy>,
    pub gamma_abs: Option<f64>,
    pub large_gamma: bool,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("schema_version {} is not supported", self.schema_version)));
        }
        self.grid.values()?;
        check_eta(self.readout.eta).map_err(|e| Error::Schema(e.to_string()))?;
        if !(self.readout.gamma_abs > 0.0 && self.readout.gamma_abs.is_finite()) {
            return Err(Error::Schema("gamma_abs must be positive".into()));
        }
        if let Some(s) = self.readout.scheme {
            if s != Scheme::DbhdTheta {
                return Err(Error::Schema(format!("scheme {s:?} is not simulated; use dbhd_theta")));
            }
        }
        if let NetworkSpec::Named(n) = &self.network {
            NetworkTopology::by_name(n, self.readout.eta).map_err(|e| Error::Schema(e.to_string()))?;
        }
        Ok(())
    }

    /// `--theta` and `--policy` replace any LO profile with `|γ|e^{iθ}` on
    /// both sidebands.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(eta) = o.eta {
            self.readout.eta = eta;
        }
        if let Some(g) = o.gamma_abs {
            self.readout.gamma_abs = g;
            self.lo = self.lo.as_ref().map(|l| l.with_abs(g));
        }
        if let Some(t) = o.theta {
            self.readout.theta = Some(t);
            self.readout.policy = None;
            self.lo = None;
        }
        if let Some(p) = o.policy {
            self.readout.policy = Some(p);
            self.lo = None;
        }
        if o.large_gamma {
            self.readout.large_gamma = true;
        }
        self.validate()
    }

    pub fn policy(&self) -> Option<ThetaPolicy> {
        self.readout.policy.or(self.readout.theta.map(|theta| ThetaPolicy::Fixed { theta }))
    }

    pub fn readout_params(&self) -> ReadoutParams {
        ReadoutParams {
            eta: self.readout.eta,
            abs_gamma: self.readout.gamma_abs,
            large_gamma: self.readout.large_gamma,
            include_signal_in_n: self.readout.include_signal_in_n,
        }
    }

    fn topology(&self) -> Result<NetworkTopology> {
        let net = match &self.network {
            NetworkSpec::Named(n) => NetworkTopology::by_name(n, self.readout.eta)?,
            NetworkSpec::Inline(t) => t.with_eta(self.readout.eta)?,
        };
        let labels = net.detector_labels();
        if ["D1", "D2", "D3", "D4"].iter().any(|d| !labels.iter().any(|l| l == d)) {
            return Err(Error::Schema("simulate needs a network with detectors D1..D4".into()));
        }
        Ok(net)
    }

    /// LO and homodyne angle at one grid point.
    fn lo_at(&self, omega: f64) -> Result<(LoSpec, f64)> {
        if let Some(p) = self.policy() {
            let theta = p.theta(self.model.k_at(omega)?)?;
            let g = self.readout.gamma_abs;
            return Ok((LoSpec::polar(g, theta, g, theta), theta));
        }
        match &self.lo {
            Some(profile) => {
                let lo = profile.at(omega)?;
                Ok((lo, common_theta(&lo)?))
            }
            None => Err(Error::Schema("set readout.theta, readout.policy or lo".into())),
        }
    }
}

/// One row of the `simulate` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub omega: f64,
    pub theta: f64,
    pub n_d1_plus: f64,
    pub n_d2_plus: f64,
    pub n_d3_plus: f64,
    pub n_d4_plus: f64,
    pub n_d1_minus: f64,
    pub n_d2_minus: f64,
    pub n_d3_minus: f64,
    pub n_d4_minus: f64,
    pub s12_plus: f64,
    pub im_s34_plus: f64,
    pub s12_minus: f64,
    pub im_s34_minus: f64,
    pub re_t_theta: f64,
    pub im_t_theta: f64,
    pub psd_t_theta: f64,
    pub psd_t_b_plus: f64,
}

pub const SIM_COLUMNS: &str = "omega,theta,n_d1_plus,n_d2_plus,n_d3_plus,n_d4_plus,n_d1_minus,n_d2_minus,n_d3_minus,n_d4_minus,s12_plus,im_s34_plus,s12_minus,im_s34_minus,re_t_theta,im_t_theta,psd_t_theta,psd_t_b_plus";

pub const BUDGET_COLUMNS: &str = "omega,theta,s_hn,readout_penalty,s_total,re_h_est,im_h_est";

fn sim_point(sc: &Scenario, net: &NetworkTopology, index: usize, omega: f64) -> Result<SimRow> {
    let sector = SidebandSector::standard(index, omega)?;
    let (lo, theta) = sc.lo_at(omega)?;
    lo.require_nonzero()?;
    let (bp, bm) = sc.model.output(&sector, omega, theta)?;
    let mut over_p = BTreeMap::new();
    over_p.insert("b".to_string(), bp);
    let mut over_m = BTreeMap::new();
    over_m.insert("b".to_string(), bm);
    let pp = propagate_sector(net, &sector, Sideband::Upper, &over_p)?;
    let pm = propagate_sector(net, &sector, Sideband::Lower, &over_m)?;
    let state = InputStateSpec::vacuum()
        .with_coherent(sector.id("l", Sideband::Upper)?, lo.gamma_plus)?
        .with_coherent(sector.id("l", Sideband::Lower)?, lo.gamma_minus)?;
    let eta = sc.readout.eta;
    let (p12, p34) = dbhd_observables(&pp, eta, lo.gamma_plus)?;
    let (m12, m34) = dbhd_observables(&pm, eta, lo.gamma_minus)?;
    let (tbp, _) = t_b(&p12, &p34, lo.gamma_plus)?;
    let tt = t_theta(&pp, &pm, eta, &lo)?;
    let n = |ports: &BTreeMap<String, _>, d: &str| number_expect(&ports[d], &state);
    let t_mean: Complex64 = expect(&tt, &state);
    let row = SimRow {
        omega,
        theta,
        n_d1_plus: n(&pp, "D1"),
        n_d2_plus: n(&pp, "D2"),
        n_d3_plus: n(&pp, "D3"),
        n_d4_plus: n(&pp, "D4"),
        n_d1_minus: n(&pm, "D1"),
        n_d2_minus: n(&pm, "D2"),
        n_d3_minus: n(&pm, "D3"),
        n_d4_minus: n(&pm, "D4"),
        s12_plus: expect(&p12, &state).re,
        im_s34_plus: expect(&p34, &state).im,
        s12_minus: expect(&m12, &state).re,
        im_s34_minus: expect(&m34, &state).im,
        re_t_theta: t_mean.re,
        im_t_theta: t_mean.im,
        psd_t_theta: noise_psd(&tt, &state)?,
        psd_t_b_plus: noise_psd(&tbp, &state)?,
    };
    if [row.psd_t_theta, row.psd_t_b_plus, row.re_t_theta, row.im_t_theta].iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite result at Ω = {omega}")));
    }
    Ok(row)
}

pub fn simulate(sc: &Scenario) -> Result<Vec<SimRow>> {
    let net = sc.topology()?;
    let grid = sc.grid.values()?;
    grid.par_iter().enumerate().map(|(i, &w)| sim_point(sc, &net, i, w)).collect()
}

pub fn budget(sc: &Scenario) -> Result<Vec<NoiseBudgetRow>> {
    let policy = sc.policy().ok_or_else(|| Error::Schema("gw-budget needs readout.theta or readout.policy".into()))?;
    signal_referred_budget(&sc.model, &sc.readout_params(), &policy, &sc.grid.values()?)
}

#[derive(Serialize)]
struct BudgetCsvRow {
    omega: f64,
    theta: f64,
    s_hn: f64,
    readout_penalty: f64,
    s_total: f64,
    re_h_est: f64,
    im_h_est: f64,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &str) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(format!("{header}\n{}", String::from_utf8_lossy(&body)))
}

pub fn render_sim(rows: &[SimRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => csv_string(rows.iter(), SIM_COLUMNS),
        Format::Json => Ok(serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"),
    }
}

pub fn render_budget(rows: &[NoiseBudgetRow], format: Format) -> Result<String> {
    let flat = rows.iter().map(|r| BudgetCsvRow {
        omega: r.omega,
        theta: r.theta,
        s_hn: r.s_hn,
        readout_penalty: r.readout_penalty,
        s_total: r.s_total,
        re_h_est: r.h_estimate.re,
        im_h_est: r.h_estimate.im,
    });
    match format {
        Format::Csv => csv_string(flat, BUDGET_COLUMNS),
        Format::Json => Ok(serde_json::to_string_pretty(&flat.collect::<Vec<_>>()).expect("rows serialize") + "\n"),
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VACUUM: &str = r#"{
        "schema_version": 1,
        "model": {"kind": "pass_through", "response": [1, 0], "h": [0, 0]},
        "grid": {"omega_min": 1, "omega_max": 100, "points": 5, "spacing": "log"},
        "readout": {"eta": 0.5, "gamma_abs": 3, "theta": 0.4}
    }"#;

    #[test]
    fn grid_values() {
        let g = Grid { omega_min: 1.0, omega_max: 100.0, points: 3, spacing: Spacing::Log };
        let v = g.values().unwrap();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(v[2], 100.0);
        assert!(Grid { omega_min: 2.0, omega_max: 1.0, points: 3, spacing: Spacing::Linear }.values().is_err());
        assert_eq!(
            Grid { omega_min: 2.0, omega_max: 2.0, points: 1, spacing: Spacing::Linear }.values().unwrap(),
            vec![2.0]
        );
    }

    #[test]
    fn vacuum_psd_is_two() {
        let sc = Scenario::from_json(VACUUM).unwrap();
        let rows = simulate(&sc).unwrap();
        assert_eq!(rows.len(), 5);
        for r in &rows {
            assert!((r.psd_t_b_plus - 2.0).abs() < 1e-10);
            assert!((r.psd_t_theta - 2.0).abs() < 1e-10);
            assert!(r.re_t_theta.abs() < 1e-12 && r.im_t_theta.abs() < 1e-12);
        }
        let csv = render_sim(&rows, Format::Csv).unwrap();
        assert!(csv.starts_with(SIM_COLUMNS));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn schema_errors() {
        let bad = VACUUM.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        assert!(matches!(Scenario::from_json("{"), Err(Error::Schema(_))));
        let bad = VACUUM.replace("\"eta\": 0.5", "\"eta\": 1.5");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Schema(_))));
        let bad = VACUUM.replace("\"theta\": 0.4", "\"theta\": 0.4, \"colour\": 1");
        assert!(Scenario::from_json(&bad).is_err());
    }

    #[test]
    fn overrides() {
        let mut sc = Scenario::from_json(VACUUM).unwrap();
        sc.apply(&Overrides { eta: Some(0.3), theta: Some(1.0), ..Overrides::default() }).unwrap();
        assert_eq!(sc.readout.eta, 0.3);
        assert_eq!(sc.policy(), Some(ThetaPolicy::Fixed { theta: 1.0 }));
        assert!(sc.apply(&Overrides { eta: Some(0.0), ..Overrides::default() }).is_err());
    }

    #[test]
    fn codes() {
        assert_eq!(exit_code(&Error::Schema("x".into())), 2);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
    }
}
