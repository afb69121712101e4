//! Engine against the truncated Fock-space oracle beyond one sideband.

use hdsim::engine::{expect, symmetrized_correlator};
use hdsim::fock::{oracle_expect, oracle_symmetrized, FockConfig};
use hdsim::readout::DbhdSetup;
use hdsim::sideband::{Sideband, SidebandSector};
use hdsim::states::LoSpec;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn t_theta_on_both_sidebands() {
    // eight modes (b, e, f, l on each sideband) at cutoff 5
    let cfg = FockConfig { cutoff: 5, max_dim: 400_000, ..FockConfig::default() };
    let s = SidebandSector::standard(0, 1.0).unwrap();
    for (eta, theta, bp, bm) in [(0.5, 0.3, c(0.1, 0.05), c(-0.08, 0.1)), (0.27, -1.1, c(0.0, 0.12), c(0.15, 0.0))] {
        let lo = LoSpec::polar(0.2, theta, 0.2, theta);
        let setup = DbhdSetup::new(&s, eta, lo, None).unwrap();
        let st = setup
            .state
            .clone()
            .with_coherent(s.id("b", Sideband::Upper).unwrap(), bp)
            .unwrap()
            .with_coherent(s.id("b", Sideband::Lower).unwrap(), bm)
            .unwrap();
        let t = setup.t_theta().unwrap();
        let e = expect(&t, &st);
        assert!((oracle_expect(&t, &st, &cfg).unwrap() - e).norm() < 1e-6);
        let eng = symmetrized_correlator(&t, &t, &st).unwrap().symmetrized();
        let orc = oracle_symmetrized(&t, &t, &st, &cfg).unwrap();
        assert!((orc - eng).norm() < 1e-6 * eng.norm().max(1.0), "{orc} vs {eng}");
    }
}

#[test]
fn sectors_do_not_correlate() {
    let a = SidebandSector::standard(0, 1.0).unwrap();
    let b = SidebandSector::standard(1, 2.0).unwrap();
    let lo = LoSpec::polar(0.7, 0.2, 0.7, 0.2);
    let sa = DbhdSetup::new(&a, 0.5, lo, None).unwrap();
    let sb = DbhdSetup::new(&b, 0.5, lo, None).unwrap();
    let (ta, _) = sa.t_b(Sideband::Upper).unwrap();
    let (tb, _) = sb.t_b(Sideband::Upper).unwrap();
    let r = symmetrized_correlator(&ta, &tb, &sa.state).unwrap();
    assert_eq!(r.psd, c(0.0, 0.0));
}
