//! Every engine operation checked against a scalar, matrix-based reference
//! implementation on small ensembles.

mod scalar_oracle;

use proptest::prelude::*;
use scalar_oracle::{apply, ensemble, event, max_deviation, pulse_matrix, TOL};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn each_operation_matches_scalar_oracle(e in ensemble(), ev in event()) {
        let dev = max_deviation(e, std::slice::from_ref(&ev));
        prop_assert!(dev <= TOL, "{:?}: deviation {}", ev, dev);
    }

    #[test]
    fn sequences_match_scalar_oracle(e in ensemble(), evs in prop::collection::vec(event(), 1..12)) {
        let dev = max_deviation(e, &evs);
        prop_assert!(dev <= TOL, "deviation {}", dev);
    }
}

#[test]
fn oracle_rotation_convention() {
    let v = apply(&pulse_matrix(std::f64::consts::FRAC_PI_2, 0.0), [0.0, 0.0, 1.0]);
    assert!(v[0].abs() < 1e-15 && (v[1] + 1.0).abs() < 1e-15 && v[2].abs() < 1e-15);
}
