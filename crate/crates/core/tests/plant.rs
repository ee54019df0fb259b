mod common;

use common::checks::{plant_oracle_error, settled_dc_gain};
use common::rel;
use mfc_aqm::GainStrategy;

#[test]
fn discrete_plant_tracks_fine_oracle() {
    for strategy in [GainStrategy::PaperLiteral, GainStrategy::Hollot] {
        for delay in [None, Some(0.0), Some(0.37)] {
            let err = plant_oracle_error(strategy, delay);
            assert!(err < 0.01, "{strategy:?} delay {delay:?}: {err}");
        }
    }
}

#[test]
fn settled_gain_matches_literal_and_hollot_readings() {
    let literal = settled_dc_gain(GainStrategy::PaperLiteral);
    assert!(literal < 0.0);
    assert!(rel(-literal, 791_453_125.0) < 1e-3, "{literal}");
    let hollot = settled_dc_gain(GainStrategy::Hollot);
    let expected = (3750.0f64 * (175.0 / 3750.0 + 0.2)).powi(3) / (4.0 * 60.0 * 60.0);
    assert!(rel(-hollot, expected) < 1e-3, "{hollot} vs {expected}");
}
