//! With the DLM vector fixed, the transformation stages reproduce the Born
//! rule of the corresponding optical element acting on `√x_k · a_k`.

use num_complex::Complex64;
use proptest::prelude::*;

use eraser_core::dlm::DlmState;
use eraser_core::messages::Message;
use eraser_core::optics::{bs_transform, pbs_transform};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn arb_message() -> impl Strategy<Value = Message> {
    (-180.0f64..180.0, -180.0f64..180.0, -180.0f64..180.0).prop_map(|(a, b, c)| Message::from_angles_deg(a, b, c))
}

fn weighted(m: &Message, x: f64) -> (Complex64, Complex64) {
    let (h, v) = m.amplitudes();
    (h * x.sqrt(), v * x.sqrt())
}

fn intensity((h, v): (Complex64, Complex64)) -> f64 {
    h.norm_sqr() + v.norm_sqr()
}

fn assert_message_matches(m: &Message, (h, v): (Complex64, Complex64)) -> Result<(), TestCaseError> {
    let n = intensity((h, v)).sqrt();
    let (mh, mv) = m.amplitudes();
    prop_assert!((mh - h / n).norm() < 1e-9, "H {mh} vs {}", h / n);
    prop_assert!((mv - v / n).norm() < 1e-9, "V {mv} vs {}", v / n);
    Ok(())
}

proptest! {
    #[test]
    fn bs_matches_born_rule(m0 in arb_message(), m1 in arb_message(), x0 in 0.0f64..=1.0) {
        let state = DlmState::with_state(0.99, [m0, m1], [x0, 1.0 - x0]).unwrap();
        let (h0, v0) = weighted(&m0, x0);
        let (h1, v1) = weighted(&m1, 1.0 - x0);
        let out0 = (h0 + I * h1, v0 + I * v1);
        let out1 = (h1 + I * h0, v1 + I * v0);
        let split = bs_transform(&state);
        prop_assert!((split.weights[0] - intensity(out0)).abs() < 1e-9);
        prop_assert!((split.weights[1] - intensity(out1)).abs() < 1e-9);
        prop_assert!((split.p0() - intensity(out0) / 2.0).abs() < 1e-9);
        if intensity(out0) > 1e-6 {
            assert_message_matches(&split.messages[0], out0)?;
        }
        if intensity(out1) > 1e-6 {
            assert_message_matches(&split.messages[1], out1)?;
        }
    }

    #[test]
    fn pbs_matches_born_rule(m0 in arb_message(), m1 in arb_message(), x0 in 0.0f64..=1.0) {
        let state = DlmState::with_state(0.99, [m0, m1], [x0, 1.0 - x0]).unwrap();
        let (h0, v0) = weighted(&m0, x0);
        let (h1, v1) = weighted(&m1, 1.0 - x0);
        let out0 = (h0, I * v1);
        let out1 = (h1, I * v0);
        let split = pbs_transform(&state);
        prop_assert!((split.weights[0] - intensity(out0)).abs() < 1e-9);
        prop_assert!((split.weights[1] - intensity(out1)).abs() < 1e-9);
        if intensity(out0) > 1e-6 {
            assert_message_matches(&split.messages[0], out0)?;
        }
        if intensity(out1) > 1e-6 {
            assert_message_matches(&split.messages[1], out1)?;
        }
    }
}
