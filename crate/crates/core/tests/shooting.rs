use hyperbn_core::shooting::{
    count_nodes, default_grid, find_knode, log_grid, nonexistence_scan, scan_grid, solve_knode,
    ScanVerdict,
};
use hyperbn_core::geometry::{gauge_transform, GaugeDirection};
use hyperbn_core::{integrate, Error, Params, ShotClass, ShotControls};
use proptest::prelude::*;

fn ground_state_params() -> Params {
    Params::critical(5, 3.9).unwrap()
}

#[test]
fn ground_state_in_dimension_five() {
    let params = ground_state_params();
    let rec = solve_knode(&params, 0, &default_grid(), 1e-12, &ShotControls::default()).unwrap();
    assert_eq!(rec.nodes, 0);
    assert!(rec.profile.values.iter().all(|u| *u >= 0.0));
    let expected = (4.0 + 0.4f64.sqrt()) / 2.0;
    assert!((rec.expected_decay - expected).abs() < 1e-14);
    assert!((rec.fitted_decay / expected - 1.0).abs() < 0.02, "fit {}", rec.fitted_decay);
    assert!(rec.nehari_residual.abs() < 1e-7, "Nehari {}", rec.nehari_residual);
    assert_eq!(rec.pohozaev_residuals.len(), 3);
    for (s, res) in &rec.pohozaev_residuals {
        assert!(res.abs() <= 1e-6, "Pohozaev at {s}: {res}");
    }
    assert!(rec.ode_residual < 1e-6);
}

#[test]
fn bisection_is_deterministic() {
    let params = ground_state_params();
    let c = ShotControls::default();
    let a = find_knode(&params, 0, (50.0, 150.0), 1e-12, &c).unwrap();
    let b = find_knode(&params, 0, (50.0, 150.0), 1e-12, &c).unwrap();
    assert_eq!(a.amplitude.to_bits(), b.amplitude.to_bits());
    assert_eq!(a.energy_j.to_bits(), b.energy_j.to_bits());
    assert_eq!(a.profile, b.profile);
}

#[test]
fn negative_bracket_gives_the_negated_solution() {
    let params = ground_state_params();
    let c = ShotControls::default();
    let pos = find_knode(&params, 0, (50.0, 150.0), 1e-12, &c).unwrap();
    let neg = find_knode(&params, 0, (-150.0, -50.0), 1e-12, &c).unwrap();
    assert!((pos.amplitude + neg.amplitude).abs() <= 1e-12 * pos.amplitude);
    assert!((pos.energy_j - neg.energy_j).abs() <= 1e-9 * pos.energy_j.abs());
}

#[test]
fn no_bracket_below_the_threshold() {
    let params = Params::critical(5, 3.0).unwrap();
    let err = solve_knode(&params, 0, &default_grid(), 1e-12, &ShotControls::default()).unwrap_err();
    assert!(matches!(err, Error::Empty(_) | Error::InvalidBracket { .. }), "{err}");
}

#[test]
fn nonexistence_scans_find_no_decay() {
    for (dim, lambda) in [(4, 2.0), (5, 3.0), (3, 0.9)] {
        let params = Params::critical(dim, lambda).unwrap();
        let rep = nonexistence_scan(&params, &default_grid(), &ShotControls::default()).unwrap();
        assert_eq!(rep.entries.len(), 60);
        assert_eq!(rep.decay_count, 0, "N = {dim}, λ = {lambda}");
        assert_eq!(rep.verdict, ScanVerdict::ConsistentWithNonexistence);
    }
}

#[test]
fn scan_rejects_lambda_above_the_nonexistence_range() {
    let params = ground_state_params();
    assert!(nonexistence_scan(&params, &default_grid(), &ShotControls::default()).is_err());
}

#[test]
fn scan_is_independent_of_thread_scheduling() {
    let params = ground_state_params();
    let grid = log_grid(1.0, 1e3, 40);
    let a = scan_grid(&params, &grid, &ShotControls::default()).unwrap();
    let b = scan_grid(&params, &grid, &ShotControls::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].amplitude < w[1].amplitude));
}

#[test]
fn one_node_solution_at_a_subcritical_exponent() {
    let params = Params::new(7, 8.9, 2.6).unwrap();
    let grid = log_grid(1e-3, 1e5, 100);
    let rec = solve_knode(&params, 1, &grid, 1e-12, &ShotControls::default()).unwrap();
    assert_eq!(rec.nodes, 1);
    assert!(rec.nehari_residual.abs() < 1e-6);
    assert!(rec.bound_ratio_52.is_finite());
}

#[test]
fn pohozaev_residual_shrinks_with_the_tolerance() {
    let params = ground_state_params();
    let worst: Vec<f64> = [1e-8, 1e-10, 1e-12]
        .iter()
        .map(|&tol| {
            let c = ShotControls { tol, ..ShotControls::default() };
            let rec = find_knode(&params, 0, (50.0, 150.0), 1e-12, &c).unwrap();
            rec.pohozaev_residuals.iter().fold(0.0f64, |m, (_, r)| m.max(r.abs()))
        })
        .collect();
    assert!(worst[2] <= worst[0], "{worst:?}");
    assert!(worst[2] <= 1e-6, "{worst:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shots_are_odd_in_the_amplitude(a in 0.01f64..500.0) {
        let params = ground_state_params();
        let c = ShotControls::default();
        let pos = integrate(a, &params, &c).unwrap();
        let neg = integrate(-a, &params, &c).unwrap();
        prop_assert_eq!(pos.nodes, neg.nodes);
        prop_assert_eq!(pos.profile.len(), neg.profile.len());
        match pos.class {
            ShotClass::BlowupPositive => prop_assert_eq!(neg.class, ShotClass::BlowupNegative),
            ShotClass::BlowupNegative => prop_assert_eq!(neg.class, ShotClass::BlowupPositive),
            other => prop_assert_eq!(neg.class, other),
        }
        for (u, v) in pos.profile.values.iter().zip(&neg.profile.values) {
            prop_assert!((u + v).abs() <= 1e-14 * u.abs().max(1e-300));
        }
    }

    #[test]
    fn node_count_ignores_sign_and_gauge(a in 0.01f64..500.0) {
        let params = ground_state_params();
        let shot = integrate(a, &params, &ShotControls::default()).unwrap();
        let n = count_nodes(&shot.profile).unwrap();
        prop_assert_eq!(count_nodes(&shot.profile.negated()).unwrap(), n);
        let v = gauge_transform(&shot.profile, GaugeDirection::HyperbolicToEuclidean).unwrap();
        let signs = |vals: &[f64]| vals.iter().map(|x| x.signum()).collect::<Vec<_>>();
        prop_assert_eq!(signs(&v.values), signs(&shot.profile.values));
    }
}
