mod common;

use common::{golden, vmf_brute_force_order, ORDER_CASES};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmfdp::dpconvert::{
    delta_given_epsilon, epsilon_given_delta, vmf_delta_given_epsilon, vmf_optimal_alpha,
    vmf_order_condition, OrderGrid, OrderSearch,
};
use vmfdp::rdp::{GaussParams, RdpCurve, VmfParams};

#[test]
fn vmf_delta_matches_oracle_grid() {
    for row in golden("vmf_delta_grid.csv") {
        let (kappa, eps, ln_delta, alpha, step) = (row[0], row[1], row[2], row[3], row[4]);
        let params = VmfParams::new(13_700, kappa).unwrap();
        let g = vmf_delta_given_epsilon(&params, eps).unwrap();
        let want = ln_delta.min(0.0);
        assert!(
            (g.log_delta - want).abs() <= 0.01 * want.abs().max(1e-3),
            "{row:?}: {}",
            g.log_delta
        );
        let a = g.alpha_star.unwrap();
        assert!((a - alpha).abs() <= step, "{row:?}: alpha {a}");
        // the grid search agrees with the bisection
        let grid = delta_given_epsilon(&RdpCurve::Vmf(params), eps).unwrap();
        assert!((grid.log_delta - g.log_delta).abs() <= 1e-8 * g.log_delta.abs().max(1.0));
    }
}

#[test]
fn bisection_order_is_the_grid_argmin() {
    for &(p, kappa, eps) in ORDER_CASES {
        let params = VmfParams::new(p, kappa).unwrap();
        let a = vmf_optimal_alpha(&params, eps).unwrap();
        let g = |x: f64| vmf_order_condition(&params, eps, x).unwrap();
        // near alpha = 1 the float spacing of alpha limits the residual
        let bracketed = g(a.next_down()) <= 0.0 && g(a.next_up()) >= 0.0;
        assert!(
            g(a).abs() <= 1e-9 || bracketed,
            "p={p} kappa={kappa} eps={eps}"
        );
        let (_, arg, step) = vmf_brute_force_order(&params, eps);
        assert!(
            (a - arg).abs() <= step,
            "p={p} kappa={kappa} eps={eps}: {a} vs {arg} (step {step})"
        );
    }
}

#[test]
fn no_root_beyond_twice_kappa() {
    let params = VmfParams::new(100, 2.0).unwrap();
    assert!(vmf_optimal_alpha(&params, 5.0).is_err());
    // the fallback still yields a valid delta
    let g = vmf_delta_given_epsilon(&params, 5.0).unwrap();
    assert!(g.delta < 1e-2);
}

fn random_curve(rng: &mut ChaCha8Rng) -> RdpCurve {
    if rng.random_bool(0.5) {
        let p = [2usize, 10, 100, 13_700][rng.random_range(0..4)];
        RdpCurve::Vmf(VmfParams::new(p, rng.random_range(0.5..300.0)).unwrap())
    } else {
        RdpCurve::Gaussian(GaussParams::new(rng.random_range(0.3..5.0)).unwrap())
    }
}

#[test]
fn conversion_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = OrderGrid::standard();
    let mut done = 0;
    while done < 50 {
        let curve = random_curve(&mut rng);
        let eps = rng.random_range(0.05..20.0);
        let search = OrderSearch::new(&curve, &grid);
        let d = search.delta_given_epsilon(eps).unwrap();
        if d.log_delta >= 0.0 {
            // no nontrivial guarantee at this epsilon
            continue;
        }
        let e = search.epsilon_given_log_delta(d.log_delta).unwrap();
        assert!(
            (e.epsilon - eps).abs() <= 1e-6,
            "{curve:?} eps={eps}: {} (ln delta {})",
            e.epsilon,
            d.log_delta
        );
        done += 1;
    }
}

#[test]
fn finer_grids_never_loosen_epsilon_much() {
    let curve = RdpCurve::Vmf(VmfParams::new(13_700, 100.0).unwrap());
    let coarse = epsilon_given_delta(&curve, 1e-5).unwrap().epsilon;
    let fine = OrderSearch::new(&curve, &OrderGrid::log_spaced(1e-6, 1e6, 20_000).unwrap())
        .epsilon_given_delta(1e-5)
        .unwrap()
        .epsilon;
    assert!(fine <= coarse + 1e-9 && coarse - fine <= 1e-9 * coarse.max(1.0));
}

proptest! {
    #[test]
    fn gaussian_epsilon_decreases_with_delta(sigma in 0.3f64..10.0, d1 in 1e-10f64..1e-2, d2 in 1e-10f64..1e-2) {
        let curve = RdpCurve::Gaussian(GaussParams::new(sigma).unwrap());
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let e_lo = epsilon_given_delta(&curve, lo).unwrap().epsilon;
        let e_hi = epsilon_given_delta(&curve, hi).unwrap().epsilon;
        prop_assert!(e_lo >= e_hi - 1e-9);
    }

    #[test]
    fn delta_is_a_probability(kappa in 0.0f64..500.0, eps in 0.0f64..100.0) {
        let curve = RdpCurve::Vmf(VmfParams::new(13_700, kappa).unwrap());
        let d = delta_given_epsilon(&curve, eps).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.delta));
    }
}
