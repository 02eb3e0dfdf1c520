use proptest::prelude::*;

use pmp_core::calibrate::{
    calibrate_lambda, calibrate_shares, lambda_objective, ValuationObservation,
};
use pmp_core::fleet::{
    marginal_products, min_cost_inputs, optimal_output, production, rho_from_sigma, unit_cost,
    CesParams,
};

fn params_strategy(n: usize) -> impl Strategy<Value = CesParams> {
    (
        prop::collection::vec(0.05f64..1.0, n),
        0.1f64..50.0,
        0.1f64..0.9,
        0.05f64..3.0,
    )
        .prop_map(|(raw, alpha, delta, sigma)| {
            let total: f64 = raw.iter().sum();
            CesParams {
                alpha,
                beta: raw.iter().map(|b| b / total).collect(),
                delta,
                rho: rho_from_sigma(sigma).unwrap(),
                mu: 0.0,
            }
        })
}

fn fleet_point() -> impl Strategy<Value = (CesParams, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| (params_strategy(n), prop::collection::vec(0.1f64..1e4, n)))
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #[test]
    fn euler_identity((params, x) in fleet_point()) {
        let y = production(&params, &x).unwrap();
        let mp = marginal_products(&params, &x).unwrap();
        let sum: f64 = x.iter().zip(&mp).map(|(a, b)| a * b).sum();
        prop_assert!(rel(sum, params.delta * y) < 1e-10);
    }

    #[test]
    fn production_is_homogeneous_of_degree_delta((params, x) in fleet_point(), t in 0.1f64..10.0) {
        let scaled: Vec<f64> = x.iter().map(|v| v * t).collect();
        let y = production(&params, &x).unwrap();
        prop_assert!(rel(production(&params, &scaled).unwrap(), t.powf(params.delta) * y) < 1e-10);
    }

    #[test]
    fn min_cost_bundle_produces_target((params, c) in fleet_point(), y in 0.01f64..1e4) {
        let x = min_cost_inputs(&params, y, &c).unwrap();
        prop_assert!(rel(production(&params, &x).unwrap(), y) < 1e-10);
        // Cost-minimizing: marginal product per dollar is equal across inputs.
        let mp = marginal_products(&params, &x).unwrap();
        let ratios: Vec<f64> = mp.iter().zip(&c).map(|(m, p)| m / p).collect();
        for r in &ratios {
            prop_assert!(rel(*r, ratios[0]) < 1e-9);
        }
    }

    #[test]
    fn cost_scales_with_output_power((params, c) in fleet_point(), y in 0.01f64..1e4, k in 0.1f64..10.0) {
        let cost = |y: f64| -> f64 {
            min_cost_inputs(&params, y, &c).unwrap().iter().zip(&c).map(|(a, b)| a * b).sum()
        };
        prop_assert!(rel(cost(k * y), k.powf(1.0 / params.delta) * cost(y)) < 1e-9);
        prop_assert!(rel(cost(y), unit_cost(&params, &c).unwrap() * y.powf(1.0 / params.delta)) < 1e-10);
    }

    #[test]
    fn supply_follows_price_elasticity((params, c) in fleet_point(), p in 0.5f64..50.0, k in 0.2f64..5.0) {
        let (y0, _) = optimal_output(&params, p, &c).unwrap();
        let (y1, _) = optimal_output(&params, k * p, &c).unwrap();
        let eta = params.delta / (1.0 - params.delta);
        prop_assert!(rel(y1 / y0, k.powf(eta)) < 1e-9);
    }

    #[test]
    fn optimal_output_beats_nearby_outputs((params, c) in fleet_point(), p in 0.5f64..50.0, eps in 0.001f64..0.2) {
        let (y, x) = optimal_output(&params, p, &c).unwrap();
        let cost = |x: &[f64]| -> f64 { x.iter().zip(&c).map(|(a, b)| a * b).sum() };
        let best = p * y - cost(&x);
        for factor in [1.0 - eps, 1.0 + eps] {
            let other = min_cost_inputs(&params, factor * y, &c).unwrap();
            prop_assert!(best >= p * factor * y - cost(&other) - 1e-9 * best.abs());
        }
    }

    #[test]
    fn shares_sum_to_one(
        x in prop::collection::vec(0.1f64..1e5, 1..=6),
        sigma in 0.05f64..3.0,
    ) {
        let c = vec![1.0; x.len()];
        let beta = calibrate_shares(&x, &c, rho_from_sigma(sigma).unwrap()).unwrap();
        prop_assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(beta.iter().all(|b| *b > 0.0));
    }

    #[test]
    fn lambda_is_homogeneous_and_duplication_invariant(
        obs in prop::collection::vec((1.0f64..15.0, 100.0f64..1e5, 1e3f64..1e6), 1..20),
        k in 0.1f64..10.0,
        delta in 0.1f64..0.9,
    ) {
        let base: Vec<ValuationObservation> = obs
            .iter()
            .map(|(price, catch, expenditure)| ValuationObservation { price: *price, catch: *catch, expenditure: *expenditure })
            .collect();
        let lambda = calibrate_lambda(&base, delta).unwrap();

        let scaled: Vec<ValuationObservation> = base
            .iter()
            .map(|o| ValuationObservation { price: o.price * k, catch: o.catch, expenditure: o.expenditure * k })
            .collect();
        let scaled_lambda = calibrate_lambda(&scaled, delta).unwrap();
        prop_assert!((scaled_lambda - k * lambda).abs() <= 1e-9 * (k * lambda).abs().max(1.0));

        let doubled: Vec<ValuationObservation> = base.iter().chain(&base).cloned().collect();
        let doubled_lambda = calibrate_lambda(&doubled, delta).unwrap();
        prop_assert!((doubled_lambda - lambda).abs() <= 1e-9 * lambda.abs().max(1.0));

        // Least-squares minimum.
        let at = lambda_objective(&base, lambda, delta);
        let step = 1e-3 * lambda.abs().max(1.0);
        prop_assert!(at <= lambda_objective(&base, lambda + step, delta));
        prop_assert!(at <= lambda_objective(&base, lambda - step, delta));
    }
}
