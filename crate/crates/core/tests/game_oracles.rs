//! The built-in example game has a closed-form quasi-steady-state map and
//! closed-form reduced payoffs; these tests pin the numerical solver against
//! them, plus frozen payoff values computed by hand from the coefficient
//! tables.

use nashseek::game::{
    builtin_example, equilibrium_map, equilibrium_map_from, reduced_payoff, GameModel, Polynomial,
    SolveOptions, Term,
};
use nashseek::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed-form plant equilibrium of the example game under frozen actions.
fn l_exact(u: &[f64]) -> [f64; 2] {
    [4.0 * u[0] / (16.0 - u[1]), u[1] / 4.0]
}

/// Closed-form reduced payoffs of the example game: substituting the plant
/// equilibrium into the payoffs collapses them to
/// `(-u1^2 + 1.5 u1 u2 - (5/32) u1, -u2^3 + 3 u1 u2)`.
fn reduced_exact(u: &[f64]) -> [f64; 2] {
    [
        -u[0] * u[0] + 1.5 * u[0] * u[1] - 5.0 / 32.0 * u[0],
        -u[1] * u[1] * u[1] + 3.0 * u[0] * u[1],
    ]
}

#[test]
fn frozen_payoff_values_from_coefficient_tables() {
    let g = builtin_example();
    // x = (1, 0): J1 = -16 - 5/8 = -16.625, J2 = 0.
    let j = g.eval_payoffs(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
    assert_eq!(j, vec![-16.625, 0.0]);
    // x = (0, 1): J1 = 0, J2 = -64.
    let j = g.eval_payoffs(&[0.0, 1.0], &[0.0, 0.0]).unwrap();
    assert_eq!(j, vec![0.0, -64.0]);
    // x = (1, 1): J1 = -16 + 8 - 1 - 6 + 773/32 - 5/8 = 8.53125,
    //             J2 = -64 + 48 - 12 = -28.
    let j = g.eval_payoffs(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
    assert_eq!(j, vec![8.53125, -28.0]);
    // Dynamics at x = (1, 2), u = (0.5, 0.25):
    // x1' = -4 + 2 + 0.5 = -1.5, x2' = -8 + 0.25 = -7.75.
    let dx = g.eval_dynamics(&[1.0, 2.0], &[0.5, 0.25]).unwrap();
    assert_eq!(dx, vec![-1.5, -7.75]);
}

#[test]
fn equilibrium_map_matches_closed_form_on_sampled_actions() {
    let g = builtin_example();
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let u = [rng.gen_range(0.0..5.0), rng.gen_range(0.0..12.0)];
        let sol = equilibrium_map(&g, &u, &opts).unwrap();
        assert!(sol.converged, "solver must converge at u = {u:?}");
        assert!(sol.residual_norm <= opts.tol);
        let exact = l_exact(&u);
        for i in 0..2 {
            assert!(
                (sol.x_eq[i] - exact[i]).abs() <= 1e-8,
                "component {i} at u = {u:?}: got {}, want {}",
                sol.x_eq[i],
                exact[i]
            );
        }
    }
}

#[test]
fn reduced_payoffs_match_closed_form_on_sampled_actions() {
    let g = builtin_example();
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let u = [rng.gen_range(0.0..5.0), rng.gen_range(0.0..12.0)];
        let j = reduced_payoff(&g, &u, &opts).unwrap();
        let exact = reduced_exact(&u);
        for i in 0..2 {
            let tol = 1e-5 * (1.0 + exact[i].abs());
            assert!(
                (j[i] - exact[i]).abs() <= tol,
                "payoff {i} at u = {u:?}: got {}, want {}",
                j[i],
                exact[i]
            );
        }
    }
}

#[test]
fn reduced_payoffs_at_the_equilibria() {
    let g = builtin_example();
    let opts = SolveOptions::default();
    // Stable equilibrium (25/64, 5/8): reduced payoffs (625/4096, 125/256).
    let j = reduced_payoff(&g, &[0.390625, 0.625], &opts).unwrap();
    assert!((j[0] - 0.152587890625).abs() <= 5e-8, "got {}", j[0]);
    assert!((j[1] - 0.48828125).abs() <= 5e-8, "got {}", j[1]);
    // The plant equilibrium there.
    let sol = equilibrium_map(&g, &[0.390625, 0.625], &opts).unwrap();
    assert!((sol.x_eq[0] - 0.10162601626016261).abs() <= 1e-8);
    assert!((sol.x_eq[1] - 0.15625).abs() <= 1e-9);
}

#[test]
fn equilibrium_map_is_idempotent() {
    let g = builtin_example();
    let opts = SolveOptions::default();
    let u = [0.8, 2.0];
    let first = equilibrium_map(&g, &u, &opts).unwrap();
    assert!(first.converged);
    // Restarting from the converged point returns immediately.
    let again = equilibrium_map_from(&g, &u, &first.x_eq, &opts).unwrap();
    assert!(again.converged);
    assert_eq!(again.time, 0.0);
    assert_eq!(again.x_eq, first.x_eq);
}

#[test]
fn exhausted_budget_returns_best_iterate_unconverged() {
    let g = builtin_example();
    let opts = SolveOptions {
        budget: 0.05,
        ..SolveOptions::default()
    };
    let sol = equilibrium_map(&g, &[2.0, 3.0], &opts).unwrap();
    assert!(!sol.converged);
    assert!(sol.residual_norm > opts.tol);
    assert!(sol.x_eq.iter().all(|v| v.is_finite()));
    assert!(sol.time <= opts.budget);

    let err = reduced_payoff(&g, &[2.0, 3.0], &opts).unwrap_err();
    assert!(matches!(err, Error::PlantSolve(_)), "got {err}");
}

#[test]
fn divergent_plant_is_an_error_with_diagnostics() {
    // x' = x^2 + 1 has no equilibrium and escapes in finite time.
    let dynamics = vec![Polynomial::new(
        2,
        vec![
            Term {
                exps: vec![2, 0],
                coeff: 1.0,
            },
            Term {
                exps: vec![0, 0],
                coeff: 1.0,
            },
        ],
    )
    .unwrap()];
    let payoffs = vec![Polynomial::new(
        2,
        vec![Term {
            exps: vec![1, 0],
            coeff: 1.0,
        }],
    )
    .unwrap()];
    let g = GameModel::from_polynomials(1, dynamics, payoffs, None).unwrap();
    let err = equilibrium_map(&g, &[0.0], &SolveOptions::default()).unwrap_err();
    match err {
        Error::Divergence(msg) => {
            assert!(msg.contains("||x||_inf"), "diagnostic should carry the norm: {msg}");
            assert!(msg.contains("t ="), "diagnostic should carry the time: {msg}");
        }
        other => panic!("expected divergence, got {other}"),
    }
}

#[test]
fn warm_start_from_nearby_point_converges_to_same_equilibrium() {
    let g = builtin_example();
    let opts = SolveOptions::default();
    let cold = equilibrium_map(&g, &[1.0, 1.0], &opts).unwrap();
    let warm = equilibrium_map_from(&g, &[1.0, 1.0], &[0.3, 0.3], &opts).unwrap();
    assert!(warm.converged);
    for i in 0..2 {
        assert!((warm.x_eq[i] - cold.x_eq[i]).abs() <= 1e-8);
    }
    assert!(warm.time <= cold.time + 1e-9, "warm start should not be slower");
}
