//! Beam splitters, phase rotators and the wiring of the three canonical
//! readout networks. Propagation is in the Heisenberg picture: detector-port
//! fields come out as [`AffineMode`]s over the source modes.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sideband::{linear_combine, AffineMode, ModeId, Sideband, SidebandSector, SourceKind};

/// Where the minus sign of a beam splitter sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BsConvention {
    /// `out1 = √η in1 + √(1−η) in2`, `out2 = √η in2 − √(1−η) in1`.
    /// Used by the simple and balanced homodyne splitters and by BS2.
    #[default]
    Standard,
    /// `out1 = √η in1 − √(1−η) in2`, `out2 = √η in2 + √(1−η) in1`.
    /// Used by BS1, BS3 and BS4.
    Difference,
}

pub fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::EtaOutOfRange(eta))
    }
}

pub fn beam_splitter_map(
    eta: f64,
    in1: &AffineMode,
    in2: &AffineMode,
    convention: BsConvention,
) -> Result<(AffineMode, AffineMode)> {
    check_eta(eta)?;
    if let (Some(a), Some(b)) = (in1.sector()?, in2.sector()?) {
        if a != b {
            return Err(Error::SectorMismatch(format!("beam splitter inputs in sectors {a} and {b}")));
        }
    }
    let t = Complex64::new(eta.sqrt(), 0.0);
    let r = Complex64::new((1.0 - eta).sqrt(), 0.0);
    Ok(match convention {
        BsConvention::Standard => (linear_combine(&[(t, in1), (r, in2)]), linear_combine(&[(t, in2), (-r, in1)])),
        BsConvention::Difference => (linear_combine(&[(t, in1), (-r, in2)]), linear_combine(&[(t, in2), (r, in1)])),
    })
}

/// `e^{iφ}`, exact at multiples of π/2.
pub fn phase_factor(phi: f64) -> Complex64 {
    let q = phi / FRAC_PI_2;
    if (q - q.round()).abs() < 1e-13 {
        match (q.round() as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, phi)
    }
}

/// Heisenberg action of a phase rotation: `u, d → e^{iφ}`, `v → e^{−iφ}`.
pub fn phase_rotate(x: &AffineMode, phi: f64) -> AffineMode {
    let p = phase_factor(phi);
    AffineMode {
        u: x.u.iter().map(|(k, c)| (k.clone(), c * p)).collect(),
        v: x.v.iter().map(|(k, c)| (k.clone(), c * p.conj())).collect(),
        d: x.d * p,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementKind {
    BeamSplitter {
        eta: f64,
        #[serde(default)]
        convention: BsConvention,
    },
    PhaseRotator {
        phi: f64,
    },
    /// Emits the input field named `mode` on its single output.
    Source {
        mode: String,
    },
    /// Records its single input under `label`.
    Detector {
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    #[serde(flatten)]
    pub kind: ElementKind,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl Element {
    fn new(name: &str, kind: ElementKind, inputs: &[&str], outputs: &[&str]) -> Self {
        Element {
            name: name.to_string(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn arity(&self) -> (usize, usize) {
        match self.kind {
            ElementKind::BeamSplitter { .. } => (2, 2),
            ElementKind::PhaseRotator { .. } => (1, 1),
            ElementKind::Source { .. } => (0, 1),
            ElementKind::Detector { .. } => (1, 0),
        }
    }
}

/// Elements wired by named ports. Every port is written by exactly one
/// element output and read by at most one element input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub name: String,
    pub elements: Vec<Element>,
}

impl NetworkTopology {
    pub fn new(name: &str, elements: Vec<Element>) -> Result<Self> {
        let net = NetworkTopology { name: name.to_string(), elements };
        net.validate()?;
        Ok(net)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: NetworkTopology = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut produced = BTreeSet::new();
        let mut consumed = BTreeSet::new();
        let mut names = BTreeSet::new();
        let mut labels = BTreeSet::new();
        let mut sources = BTreeSet::new();
        for el in &self.elements {
            if !names.insert(el.name.as_str()) {
                return Err(Error::Network(format!("duplicate element name '{}'", el.name)));
            }
            let (ni, no) = el.arity();
            if el.inputs.len() != ni || el.outputs.len() != no {
                return Err(Error::Network(format!(
                    "element '{}' needs {ni} inputs and {no} outputs, has {} and {}",
                    el.name,
                    el.inputs.len(),
                    el.outputs.len()
                )));
            }
            match &el.kind {
                ElementKind::BeamSplitter { eta, .. } => check_eta(*eta)?,
                ElementKind::PhaseRotator { phi } if !phi.is_finite() => {
                    return Err(Error::Network(format!("element '{}' has non-finite phase", el.name)))
                }
                ElementKind::Detector { label } if !labels.insert(label.as_str()) => {
                    return Err(Error::Network(format!("duplicate detector label '{label}'")))
                }
                ElementKind::Source { mode } if !sources.insert(mode.as_str()) => {
                    return Err(Error::Network(format!("source mode '{mode}' used twice")))
                }
                _ => {}
            }
            for p in &el.outputs {
                if !produced.insert(p.as_str()) {
                    return Err(Error::Network(format!("port '{p}' driven twice")));
                }
            }
            for p in &el.inputs {
                if !consumed.insert(p.as_str()) {
                    return Err(Error::Network(format!("port '{p}' read twice")));
                }
            }
        }
        if let Some(p) = consumed.difference(&produced).next() {
            return Err(Error::Network(format!("input port '{p}' is not wired")));
        }
        if labels.is_empty() {
            return Err(Error::Network("network has no detector".into()));
        }
        self.order()?;
        Ok(())
    }

    /// Element indices in an order where every input is ready.
    fn order(&self) -> Result<Vec<usize>> {
        let mut ready: BTreeSet<&str> = BTreeSet::new();
        let mut done = vec![false; self.elements.len()];
        let mut order = Vec::with_capacity(self.elements.len());
        loop {
            let mut progressed = false;
            for (i, el) in self.elements.iter().enumerate() {
                if !done[i] && el.inputs.iter().all(|p| ready.contains(p.as_str())) {
                    done[i] = true;
                    progressed = true;
                    order.push(i);
                    ready.extend(el.outputs.iter().map(|s| s.as_str()));
                }
            }
            if !progressed {
                break;
            }
        }
        if order.len() != self.elements.len() {
            return Err(Error::Network("wiring contains a cycle".into()));
        }
        Ok(order)
    }

    pub fn detector_labels(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter_map(|e| match &e.kind {
                ElementKind::Detector { label } => Some(label.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn source_modes(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter_map(|e| match &e.kind {
                ElementKind::Source { mode } => Some(mode.clone()),
                _ => None,
            })
            .collect()
    }

    /// Canonical network by name: "simple", "balanced" or "eight-port".
    pub fn by_name(name: &str, eta: f64) -> Result<Self> {
        match name {
            "simple" => build_simple_homodyne(eta),
            "balanced" => build_balanced_homodyne(eta),
            "eight-port" | "eight_port" => build_eight_port(eta),
            other => Err(Error::Network(format!("unknown network '{other}'"))),
        }
    }

    /// Returns a copy with every `eta`-parameterized homodyne splitter set to
    /// `eta`. The 50:50 splitters BS1 and BS3 are left alone.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let mut net = self.clone();
        for el in &mut net.elements {
            if el.name == "BS1" || el.name == "BS3" {
                continue;
            }
            if let ElementKind::BeamSplitter { eta: e, .. } = &mut el.kind {
                *e = eta;
            }
        }
        Ok(net)
    }
}

fn source(mode: &str) -> Element {
    Element::new(&format!("src_{mode}"), ElementKind::Source { mode: mode.into() }, &[], &[mode])
}

fn detector(label: &str, port: &str) -> Element {
    Element::new(label, ElementKind::Detector { label: label.into() }, &[port], &[])
}

fn bs(name: &str, eta: f64, convention: BsConvention, inputs: &[&str], outputs: &[&str]) -> Element {
    Element::new(name, ElementKind::BeamSplitter { eta, convention }, inputs, outputs)
}

/// Signal `b` and local oscillator `l` on one splitter; detector on `c_o`.
pub fn build_simple_homodyne(eta: f64) -> Result<NetworkTopology> {
    NetworkTopology::new(
        "simple",
        vec![
            source("b"),
            source("l"),
            bs("BS", eta, BsConvention::Standard, &["b", "l"], &["co", "do"]),
            detector("co", "co"),
        ],
    )
}

/// As the simple homodyne but with detectors on both outputs.
pub fn build_balanced_homodyne(eta: f64) -> Result<NetworkTopology> {
    NetworkTopology::new(
        "balanced",
        vec![
            source("b"),
            source("l"),
            bs("BS", eta, BsConvention::Standard, &["b", "l"], &["co", "do"]),
            detector("co", "co"),
            detector("do", "do"),
        ],
    )
}

/// Eight-port (double balanced) homodyne with one `eta` for BS2 and BS4.
pub fn build_eight_port(eta: f64) -> Result<NetworkTopology> {
    build_eight_port_split(eta, eta)
}

/// Eight-port homodyne with independent BS2 and BS4 transmissivities.
pub fn build_eight_port_split(eta2: f64, eta4: f64) -> Result<NetworkTopology> {
    NetworkTopology::new(
        "eight-port",
        vec![
            source("b"),
            source("e"),
            source("f"),
            source("l"),
            bs("BS1", 0.5, BsConvention::Difference, &["b", "e"], &["b(1)", "b(2)"]),
            bs("BS3", 0.5, BsConvention::Difference, &["l", "f"], &["l(0)", "l(1)"]),
            Element::new("PR", ElementKind::PhaseRotator { phi: FRAC_PI_2 }, &["l(1)"], &["l(1/4)"]),
            bs("BS2", eta2, BsConvention::Standard, &["b(1)", "l(0)"], &["c(1)o", "d(1)o"]),
            bs("BS4", eta4, BsConvention::Difference, &["l(1/4)", "b(2)"], &["c(2)o", "d(2)o"]),
            detector("D1", "c(1)o"),
            detector("D2", "d(1)o"),
            detector("D3", "c(2)o"),
            detector("D4", "d(2)o"),
        ],
    )
}

/// Propagates the given source fields to the detectors.
pub fn propagate(net: &NetworkTopology, inputs: &BTreeMap<String, AffineMode>) -> Result<BTreeMap<String, AffineMode>> {
    let mut wires: BTreeMap<&str, AffineMode> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for i in net.order()? {
        let el = &net.elements[i];
        let take = |w: &mut BTreeMap<&str, AffineMode>, p: &String| {
            w.remove(p.as_str()).ok_or_else(|| Error::Network(format!("port '{p}' not ready")))
        };
        match &el.kind {
            ElementKind::Source { mode } => {
                let x = inputs
                    .get(mode)
                    .cloned()
                    .ok_or_else(|| Error::Network(format!("no input field supplied for source '{mode}'")))?;
                wires.insert(el.outputs[0].as_str(), x);
            }
            ElementKind::Detector { label } => {
                out.insert(label.clone(), take(&mut wires, &el.inputs[0])?);
            }
            ElementKind::PhaseRotator { phi } => {
                let x = take(&mut wires, &el.inputs[0])?;
                wires.insert(el.outputs[0].as_str(), phase_rotate(&x, *phi));
            }
            ElementKind::BeamSplitter { eta, convention } => {
                let a = take(&mut wires, &el.inputs[0])?;
                let b = take(&mut wires, &el.inputs[1])?;
                let (o1, o2) = beam_splitter_map(*eta, &a, &b, *convention)?;
                wires.insert(el.outputs[0].as_str(), o1);
                wires.insert(el.outputs[1].as_str(), o2);
            }
        }
    }
    Ok(out)
}

/// Propagates one sideband of a sector, feeding each source from the
/// registered mode of the same label unless `overrides` supplies a field.
pub fn propagate_sector(
    net: &NetworkTopology,
    sector: &SidebandSector,
    sideband: Sideband,
    overrides: &BTreeMap<String, AffineMode>,
) -> Result<BTreeMap<String, AffineMode>> {
    let mut inputs = BTreeMap::new();
    for m in net.source_modes() {
        let x = match overrides.get(&m) {
            Some(x) => x.clone(),
            None => sector.mode(&m, sideband)?,
        };
        inputs.insert(m, x);
    }
    propagate(net, &inputs)
}

/// Expresses each source field over detector-side vacua entering the
/// detector ports backwards (`<label>_i`), by inverting the passive
/// port map. Only meaningful when the network is lossless and square.
pub fn input_mode_decomposition(net: &NetworkTopology, sector: usize) -> Result<BTreeMap<String, AffineMode>> {
    let sources = net.source_modes();
    let detectors = net.detector_labels();
    if sources.len() != detectors.len() {
        return Err(Error::Network(format!(
            "{} sources but {} detector ports; cannot back-propagate",
            sources.len(),
            detectors.len()
        )));
    }
    let ids: Vec<ModeId> =
        sources.iter().map(|s| ModeId::new(sector, s, Sideband::Upper, SourceKind::MainInput)).collect();
    let inputs = sources.iter().cloned().zip(ids.iter().map(|i| AffineMode::mode(i.clone()))).collect();
    let ports = propagate(net, &inputs)?;
    let mut out = BTreeMap::new();
    for (s, id) in sources.iter().zip(&ids) {
        let mut terms = Vec::new();
        for det in &detectors {
            let p = &ports[det];
            if !p.v.is_empty() || p.d.norm() > 0.0 {
                return Err(Error::Network(format!("port '{det}' is not a passive linear map of the sources")));
            }
            let coeff = p.u.get(id).copied().unwrap_or_default().conj();
            let back = ModeId::new(sector, &format!("{det}_i"), Sideband::Upper, SourceKind::BackProp);
            terms.push((coeff, AffineMode::mode(back)));
        }
        let refs: Vec<(Complex64, &AffineMode)> = terms.iter().map(|(c, x)| (*c, x)).collect();
        out.insert(s.clone(), linear_combine(&refs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sideband::{commutator, commutator_pair};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sector() -> SidebandSector {
        SidebandSector::standard(0, 1.0).unwrap()
    }

    fn ports(eta: f64) -> (SidebandSector, BTreeMap<String, AffineMode>) {
        let s = sector();
        let p = propagate_sector(&build_eight_port(eta).unwrap(), &s, Sideband::Upper, &BTreeMap::new()).unwrap();
        (s, p)
    }

    #[test]
    fn bs1_at_half() {
        let s = sector();
        let a = s.mode("b", Sideband::Upper).unwrap();
        let e = s.mode("e", Sideband::Upper).unwrap();
        let (o1, o2) = beam_splitter_map(0.5, &a, &e, BsConvention::Standard).unwrap();
        assert!(o1.approx_eq(&a.add(&e).scale(c(FRAC_1_SQRT_2, 0.0)), 1e-15));
        assert!(o2.approx_eq(&e.sub(&a).scale(c(FRAC_1_SQRT_2, 0.0)), 1e-15));
        let (d1, _) = beam_splitter_map(0.5, &a, &e, BsConvention::Difference).unwrap();
        assert!(d1.approx_eq(&a.sub(&e).scale(c(FRAC_1_SQRT_2, 0.0)), 1e-15));
        assert!((commutator_pair(&o1, &o1).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(beam_splitter_map(1.0, &a, &e, BsConvention::Standard).is_err());
        assert!(beam_splitter_map(0.0, &a, &e, BsConvention::Standard).is_err());
    }

    #[test]
    fn phase_rotation() {
        let s = sector();
        let l = s.mode("l", Sideband::Upper).unwrap().with_displacement(c(1.0, 2.0));
        let r = phase_rotate(&l, FRAC_PI_2);
        assert_eq!(r, l.scale(c(0.0, 1.0)));
        assert_eq!(phase_rotate(&l, 0.0), l);
        assert!(phase_rotate(&phase_rotate(&l, PI), PI).approx_eq(&l, 1e-15));
        let bare = l.fluctuation();
        let rd = phase_rotate(&bare.adjoint(), 0.3);
        assert!(rd.approx_eq(&phase_rotate(&bare, 0.3).adjoint(), 1e-15));
    }

    #[test]
    fn detector_counts() {
        assert_eq!(build_eight_port(0.5).unwrap().detector_labels(), vec!["D1", "D2", "D3", "D4"]);
        assert_eq!(build_balanced_homodyne(0.5).unwrap().detector_labels().len(), 2);
        assert_eq!(build_simple_homodyne(0.5).unwrap().detector_labels().len(), 1);
    }

    #[test]
    fn eight_port_ports_match_closed_forms() {
        for eta in [0.5, 0.3, 0.81] {
            let (s, p) = ports(eta);
            let m = |l: &str| s.mode(l, Sideband::Upper).unwrap();
            let (b, e, f, l) = (m("b"), m("e"), m("f"), m("l"));
            let t = c((eta / 2.0).sqrt(), 0.0);
            let r = c(((1.0 - eta) / 2.0).sqrt(), 0.0);
            let i = c(0.0, 1.0);
            let lc = |terms: &[(Complex64, &AffineMode)]| linear_combine(terms);
            let c1 = lc(&[(t, &b), (r, &l), (-t, &e), (-r, &f)]);
            let d1 = lc(&[(t, &l), (-r, &b), (-t, &f), (r, &e)]);
            let c2 = lc(&[(i * t, &l), (-r, &b), (i * t, &f), (-r, &e)]);
            let d2 = lc(&[(t, &b), (i * r, &l), (t, &e), (i * r, &f)]);
            assert!(p["D1"].approx_eq(&c1, 1e-15), "D1 at eta {eta}");
            assert!(p["D2"].approx_eq(&d1, 1e-15), "D2 at eta {eta}");
            assert!(p["D3"].approx_eq(&c2, 1e-15), "D3 at eta {eta}");
            assert!(p["D4"].approx_eq(&d2, 1e-15), "D4 at eta {eta}");
        }
        let (s, p) = ports(0.5);
        let m = |l: &str| s.id(l, Sideband::Upper).unwrap();
        assert!((p["D1"].u[&m("b")] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((p["D1"].u[&m("e")] - c(-0.5, 0.0)).norm() < 1e-15);
        let eta: f64 = 0.37;
        let (s, p) = ports(eta);
        let lid = s.id("l", Sideband::Upper).unwrap();
        assert!((p["D3"].u[&lid] - c(0.0, eta.sqrt() / 2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn zero_displacement_in_zero_out() {
        let (_, p) = ports(0.4);
        assert!(p.values().all(|x| x.d.norm() == 0.0));
    }

    #[test]
    fn decomposition_of_signal_input() {
        for eta in [0.5, 0.27] {
            let net = build_eight_port(eta).unwrap();
            let dec = input_mode_decomposition(&net, 0).unwrap();
            let a = &dec["b"];
            let t = c((eta / 2.0).sqrt(), 0.0);
            let r = c(((1.0 - eta) / 2.0).sqrt(), 0.0);
            let back =
                |d: &str| AffineMode::mode(ModeId::new(0, &format!("{d}_i"), Sideband::Upper, SourceKind::BackProp));
            let expect = linear_combine(&[(t, &back("D1")), (t, &back("D4")), (-r, &back("D2")), (-r, &back("D3"))]);
            assert!(a.approx_eq(&expect, 1e-15));
            assert!((commutator_pair(a, a).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
            for other in ["e", "f", "l"] {
                assert!(commutator_pair(a, &dec[other]).unwrap().norm() < 1e-15);
                assert!(commutator(a, &dec[other]).unwrap().norm() < 1e-15);
            }
        }
        assert!(input_mode_decomposition(&build_balanced_homodyne(0.5).unwrap(), 0).is_ok());
        assert!(input_mode_decomposition(&build_simple_homodyne(0.5).unwrap(), 0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let net = build_eight_port(0.42).unwrap();
        let back = NetworkTopology::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);

        let bad = r#"{"name":"x","elements":[
            {"name":"s","kind":"source","mode":"b","outputs":["p"]},
            {"name":"d","kind":"detector","label":"D","inputs":["q"]}]}"#;
        assert!(NetworkTopology::from_json(bad).is_err());
        let cyc = r#"{"name":"x","elements":[
            {"name":"p","kind":"phase_rotator","phi":0.1,"inputs":["a"],"outputs":["b"]},
            {"name":"q","kind":"phase_rotator","phi":0.1,"inputs":["b"],"outputs":["a"]},
            {"name":"d","kind":"detector","label":"D","inputs":[]}]}"#;
        assert!(NetworkTopology::from_json(cyc).is_err());
        let eta = r#"{"name":"x","elements":[
            {"name":"s","kind":"source","mode":"b","outputs":["p"]},
            {"name":"t","kind":"source","mode":"l","outputs":["q"]},
            {"name":"bs","kind":"beam_splitter","eta":1.0,"inputs":["p","q"],"outputs":["r","s"]},
            {"name":"d","kind":"detector","label":"D","inputs":["r"]}]}"#;
        assert!(matches!(NetworkTopology::from_json(eta), Err(Error::EtaOutOfRange(_))));
    }

    #[test]
    fn missing_source_field_is_an_error() {
        let net = build_balanced_homodyne(0.5).unwrap();
        let mut inputs = BTreeMap::new();
        inputs.insert("b".to_string(), AffineMode::zero());
        assert!(propagate(&net, &inputs).is_err());
    }

    proptest! {
        #[test]
        fn ports_stay_canonical(eta in 0.01f64..0.99) {
            for net in [build_simple_homodyne(eta).unwrap(), build_balanced_homodyne(eta).unwrap(), build_eight_port(eta).unwrap()] {
                let p = propagate_sector(&net, &sector(), Sideband::Upper, &BTreeMap::new()).unwrap();
                for (ka, a) in &p {
                    for (kb, b) in &p {
                        let want = if ka == kb { 1.0 } else { 0.0 };
                        prop_assert!((commutator_pair(a, b).unwrap() - c(want, 0.0)).norm() < 1e-12);
                        prop_assert!(commutator(a, b).unwrap().norm() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn splitter_conserves_norm(eta in 0.01f64..0.99, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let s = sector();
            let a = s.mode("b", Sideband::Upper).unwrap().scale(c(x, y));
            let b = s.mode("l", Sideband::Upper).unwrap().add(&s.mode("e", Sideband::Lower).unwrap().adjoint());
            for conv in [BsConvention::Standard, BsConvention::Difference] {
                let (o1, o2) = beam_splitter_map(eta, &a, &b, conv).unwrap();
                let before = a.norms().0 + a.norms().1 + b.norms().0 + b.norms().1;
                let after = o1.norms().0 + o1.norms().1 + o2.norms().0 + o2.norms().1;
                prop_assert!((before - after).abs() < 1e-12);
            }
        }
    }
}
