use proptest::prelude::*;
use sybil_atsc_core::game::{
    build_payoff_matrix, diagonal_closed_form, solve_game, solve_maxmin, solve_minimax, PayoffMatrix,
};

/// Diagonal game by hand: both players weight lane i by 1/u_i.
fn harmonic_oracle(u: &[f64]) -> (Vec<f64>, f64) {
    let inv: Vec<f64> = u.iter().map(|x| 1.0 / x).collect();
    let total: f64 = inv.iter().sum();
    (inv.iter().map(|x| x / total).collect(), 1.0 / total)
}

/// Best worst-case attacker payoff over a simplex grid of step `1/n`.
fn grid_value(u: &[f64], n: usize) -> f64 {
    let worst = |alpha: &[f64]| u.iter().zip(alpha).map(|(a, b)| a * b).fold(f64::INFINITY, f64::min);
    let step = 1.0 / n as f64;
    match u.len() {
        1 => u[0],
        2 => (0..=n).map(|i| worst(&[i as f64 * step, 1.0 - i as f64 * step])).fold(f64::NEG_INFINITY, f64::max),
        3 => {
            let mut best = f64::NEG_INFINITY;
            for i in 0..=n {
                for j in 0..=n - i {
                    let a = [i as f64 * step, j as f64 * step, (n - i - j) as f64 * step];
                    best = best.max(worst(&a));
                }
            }
            best
        }
        _ => unreachable!(),
    }
}

fn impacts(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..10.0f64, 1..=max_dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_values_agree(u in impacts(16)) {
        let m = PayoffMatrix::diagonal(&u).unwrap();
        let (_, rho) = solve_maxmin(&m).unwrap();
        let (_, phi) = solve_minimax(&m).unwrap();
        prop_assert!((rho - phi).abs() <= 1e-8 * rho.abs().max(1.0));
    }

    #[test]
    fn lp_matches_harmonic_oracle(u in impacts(16)) {
        let sol = solve_game(&PayoffMatrix::diagonal(&u).unwrap()).unwrap();
        let (p, v) = harmonic_oracle(&u);
        prop_assert!((sol.value() - v).abs() <= 1e-8);
        for i in 0..u.len() {
            prop_assert!((sol.attacker.probs()[i] - p[i]).abs() <= 1e-7);
            prop_assert!((sol.defender.probs()[i] - p[i]).abs() <= 1e-7);
        }
        let closed = diagonal_closed_form(&u).unwrap();
        prop_assert!((closed.value() - v).abs() <= 1e-12);
    }

    #[test]
    fn value_scales_with_payoffs(u in impacts(10), c in 0.1..10.0f64) {
        let base = solve_game(&PayoffMatrix::diagonal(&u).unwrap()).unwrap();
        let scaled = solve_game(&PayoffMatrix::diagonal(&u).unwrap().scaled(c)).unwrap();
        prop_assert!((scaled.value() - c * base.value()).abs() <= 1e-8 * c.max(1.0));
        prop_assert!(scaled.attacker.max_abs_diff(&base.attacker) <= 1e-7);
        prop_assert!(scaled.defender.max_abs_diff(&base.defender) <= 1e-7);
    }

    #[test]
    fn general_matrices_have_saddle_points(
        rows in (1usize..=6).prop_flat_map(|d| prop::collection::vec(prop::collection::vec(-5.0..5.0f64, d), d))
    ) {
        let m = PayoffMatrix::from_rows(&rows).unwrap();
        let sol = solve_game(&m).unwrap();
        prop_assert!(sol.saddle_violation(&m) <= 1e-7);
        let sum: f64 = sol.attacker.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(sol.attacker.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn payoff_is_clamped_headroom(theta in prop::collection::vec(0.0..3.0f64, 1..8), shift in -1.0..1.0f64) {
        let f: Vec<f64> = theta.iter().map(|t| (t + shift).max(0.0)).collect();
        let m = build_payoff_matrix(&theta, &f).unwrap();
        for i in 0..theta.len() {
            prop_assert_eq!(m.get(i, i), (theta[i] - f[i]).max(0.0));
        }
        prop_assert!(m.is_diagonal());
    }
}

#[test]
fn grid_search_confirms_small_games() {
    for u in [vec![2.5], vec![1.0, 3.0], vec![0.5, 7.0], vec![1.0, 2.0, 4.0], vec![9.0, 0.3, 5.5]] {
        let sol = solve_game(&PayoffMatrix::diagonal(&u).unwrap()).unwrap();
        assert!((grid_value(&u, 1000) - sol.value()).abs() <= 2e-3, "{u:?}");
    }
}

#[test]
fn matching_pennies() {
    let m = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    let sol = solve_game(&m).unwrap();
    assert!(sol.value().abs() < 1e-9);
    assert!((sol.attacker.probs()[0] - 0.5).abs() < 1e-9);
}
