//! End-to-end run of the one-block pipeline through the public API: optimal level,
//! constant-parameter search, then an independent re-check of the chosen controller.

use std::sync::Arc;

use hinfstab::contour::ContourOptions;
use hinfstab::controller::{verify_performance, Controller, UParam};
use hinfstab::infinite::{stabilize_infinite, InfSearchConfig};
use hinfstab::plant::{DelayPlant, WeightPair};
use hinfstab::stability::{default_window, rhp_zero_scan};
use hinfstab::synthesis::gamma_opt;
use hinfstab::{Error, FrequencyGrid, RationalFn};

fn problem() -> (DelayPlant, WeightPair) {
    let g = FrequencyGrid::default();
    let m = RationalFn::from_coeffs(&[-1.0, 1.0], &[1.0, 1.0]).unwrap();
    let p = DelayPlant::new(0.1, m, RationalFn::one(), RationalFn::one(), &g).unwrap();
    let w1 = RationalFn::from_coeffs(&[1.0, 0.6], &[1.0, 1.0]).unwrap();
    (p, WeightPair::new(w1, RationalFn::zero()).unwrap())
}

#[test]
fn search_result_survives_independent_recheck() {
    let (p, w) = problem();
    let gamma = gamma_opt(&p, &w, 0.61, 0.99).unwrap().gamma;
    let rho = 0.814;
    let r = stabilize_infinite(&p, &w, &InfSearchConfig::constant(rho, gamma, 1.985)).unwrap();
    assert!(r.stable);
    assert!(r.admissible.iter().any(|&(lo, hi)| lo < r.u.u_inf && r.u.u_inf < hi));

    let ctrl = Controller { ctx: r.ctx.clone(), u: Arc::new(UParam::constant(r.u.u_inf)) };
    let fine = FrequencyGrid::log(1e-4, 1e5, 16000);
    let (norm, _) = verify_performance(&ctrl, &fine).unwrap();
    assert!(norm <= rho * 1.001, "{norm}");
    let (window, _) = default_window(&ctrl, &fine).unwrap();
    let scan = rhp_zero_scan(&ctrl, &window, &ContourOptions::for_delay(0.1)).unwrap();
    assert!(scan.zeros.is_empty(), "{:?}", scan.zeros);
}

#[test]
fn level_at_or_below_optimum_is_refused() {
    let (p, w) = problem();
    let gamma = gamma_opt(&p, &w, 0.61, 0.99).unwrap().gamma;
    let r = stabilize_infinite(&p, &w, &InfSearchConfig::constant(gamma * 0.99, gamma, 1.985));
    assert!(matches!(r, Err(Error::LevelNotAboveOptimal { .. })));
}
