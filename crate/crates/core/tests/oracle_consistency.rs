use proptest::prelude::*;

use eraser_core::angle::uniform_phi_grid_deg;
use eraser_core::dlm::Channel;
use eraser_core::oracle::{
    detector_probs, sweep_visibility, visibility_mixed, visibility_pure_no_qwp, visibility_pure_qwp0,
    EraserAngles, MixedSpec, OracleState,
};

fn angles(t0: f64, t1: f64, qwp: Option<f64>) -> EraserAngles {
    EraserAngles {
        theta_hwp0_deg: t0,
        theta_hwp1_deg: t1,
        theta_qwp_deg: qwp,
    }
}

fn port() -> impl Strategy<Value = Channel> {
    prop_oneof![Just(Channel::Zero), Just(Channel::One)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pipeline_matches_pure_closed_form(xi in 0.0f64..180.0, t0 in 0.0f64..180.0, t1 in 0.0f64..180.0, p in port()) {
        let grid = uniform_phi_grid_deg(32);
        let v = sweep_visibility(&MixedSpec::linear(xi), &angles(t0, t1, None), &grid, p).unwrap();
        prop_assert!((v.fitted.value - visibility_pure_no_qwp(xi, t0, t1)).abs() < 1e-9);
        let v = sweep_visibility(&MixedSpec::linear(xi), &angles(t0, t1, Some(0.0)), &grid, p).unwrap();
        prop_assert!((v.fitted.value - visibility_pure_qwp0(xi, t0, t1)).abs() < 1e-9);
    }

    #[test]
    fn pipeline_matches_mixed_closed_form(beta in 0.0f64..89.0, t0 in 0.0f64..180.0, t1 in 0.0f64..180.0, p in port()) {
        let grid = uniform_phi_grid_deg(32);
        let p_v = beta.to_radians().sin().powi(2);
        let v = sweep_visibility(&MixedSpec::vh(p_v), &angles(t0, t1, None), &grid, p).unwrap();
        prop_assert!((v.fitted.value - visibility_mixed(beta, t0, t1).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn mixture_is_linear(p_v in 0.0f64..=1.0, t0 in 0.0f64..180.0, t1 in 0.0f64..180.0, q in proptest::option::of(-90.0f64..90.0), phi in 0.0f64..360.0) {
        let a = angles(t0, t1, q);
        let mix = MixedSpec::vh(p_v).p_d0(&a, phi, Channel::One);
        let pv = detector_probs(&OracleState::linear(90.0), &a, phi, Channel::One).d0;
        let ph = detector_probs(&OracleState::linear(0.0), &a, phi, Channel::One).d0;
        prop_assert!((mix - (p_v * pv + (1.0 - p_v) * ph)).abs() < 1e-12);
    }

    #[test]
    fn probabilities_and_visibilities_are_bounded(xi in -180.0f64..180.0, t0 in -180.0f64..180.0, t1 in -180.0f64..180.0, phi in 0.0f64..360.0) {
        let probs = detector_probs(&OracleState::linear(xi), &angles(t0, t1, Some(t1)), phi, Channel::One);
        prop_assert!((probs.d0 + probs.d1 + probs.discard - 1.0).abs() < 1e-12);
        for v in [visibility_pure_no_qwp(xi, t0, t1), visibility_pure_qwp0(xi, t0, t1)] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}

#[test]
fn single_component_mixture_equals_pure_sweep() {
    let grid = uniform_phi_grid_deg(32);
    let a = angles(30.0, 12.0, None);
    let pure = sweep_visibility(&MixedSpec::linear(70.0), &a, &grid, Channel::One).unwrap();
    let mixed = sweep_visibility(&MixedSpec::pure(OracleState::linear(70.0)), &a, &grid, Channel::One).unwrap();
    assert_eq!(pure, mixed);
}
