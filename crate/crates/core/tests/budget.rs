//! Signal-referred budget identities for the Fabry-Perot model.

use hdsim::engine::{noise_psd, number_expect};
use hdsim::gw::{
    budget_point, kimble_output, kimble_s_hn, ComplexFn, GwModel, KimblePoint, ReadoutParams, RealFn, ThetaPolicy,
};
use hdsim::readout::DbhdSetup;
use hdsim::sideband::SidebandSector;
use hdsim::states::LoSpec;
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_psd_splits_into_budget(k in 0.05f64..20.0, beta in -3.0f64..3.0, h_sql in 0.2f64..3.0,
                                     theta in 0.05f64..3.09, ga in 0.3f64..30.0, hr in -2.0f64..2.0, hi in -2.0f64..2.0) {
        let s = SidebandSector::standard(0, 1.0).unwrap();
        let p = KimblePoint { k, beta_fp: beta, h_sql, h: Complex64::new(hr, hi) };
        let (bp, bm) = kimble_output(&p, &s).unwrap();
        let setup = DbhdSetup::new(&s, 0.5, LoSpec::polar(ga, theta, ga, theta), Some((bp.clone(), bm.clone()))).unwrap();
        let r = hdsim::gw::kimble_response(&p, theta).unwrap();
        let n = number_expect(&bp, &setup.state) + number_expect(&bm, &setup.state);
        let psd = noise_psd(&setup.t_theta().unwrap(), &setup.state).unwrap();
        let want = kimble_s_hn(&p, theta) + (1.0 + n / (ga * ga)) / r.norm_sqr();
        prop_assert!((psd / r.norm_sqr() - want).abs() < 1e-9 * want);

        let model = GwModel::Kimble { k: RealFn::Const(k), beta_fp: RealFn::Const(beta), h_sql: RealFn::Const(h_sql), h: ComplexFn::Const([hr, hi]) };
        let ro = ReadoutParams { eta: 0.5, abs_gamma: ga, large_gamma: false, include_signal_in_n: true };
        let row = budget_point(&model, &ro, &ThetaPolicy::Fixed { theta }, 0, 1.0).unwrap();
        prop_assert!((row.s_total - want).abs() < 1e-9 * want);
        prop_assert!((row.s_total - row.s_hn - row.readout_penalty).abs() < 1e-12 * want);
    }

    #[test]
    fn off_balance_budget_uses_engine(eta in 0.05f64..0.95, k in 0.1f64..10.0, theta in 0.1f64..3.0) {
        let model = GwModel::Kimble { k: RealFn::Const(k), beta_fp: RealFn::Const(0.2), h_sql: RealFn::Const(1.0), h: ComplexFn::zero() };
        let ro = ReadoutParams { eta, abs_gamma: 2.0, large_gamma: false, include_signal_in_n: true };
        let row = budget_point(&model, &ro, &ThetaPolicy::Fixed { theta }, 0, 1.0).unwrap();
        prop_assert!(row.readout_penalty > 0.0);
        prop_assert!(row.s_total >= row.s_hn);
    }
}

#[test]
fn signal_power_flag() {
    let model = GwModel::Kimble {
        k: RealFn::Const(2.0),
        beta_fp: RealFn::Const(0.0),
        h_sql: RealFn::Const(1.0),
        h: ComplexFn::Const([3.0, 0.0]),
    };
    let mut ro = ReadoutParams { eta: 0.5, abs_gamma: 1.0, large_gamma: false, include_signal_in_n: true };
    let with = budget_point(&model, &ro, &ThetaPolicy::CotHalfK, 0, 1.0).unwrap();
    ro.include_signal_in_n = false;
    let without = budget_point(&model, &ro, &ThetaPolicy::CotHalfK, 0, 1.0).unwrap();
    assert!(with.readout_penalty > without.readout_penalty);
    assert_eq!(with.s_hn, without.s_hn);
    assert!((with.h_estimate - Complex64::new(3.0, 0.0)).norm() < 1e-10);
}
