//! Estimators against seeded simulation, and cross-checks between solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rbmp::assignment::{solve_assignment, CostMatrix};
use rbmp::estimators::{
    baseline_estimate, closed_unbalanced_estimate, dispatch_estimate, recursive_estimate,
};
use rbmp::exact::optimal_match_1d;
use rbmp::network::{
    build_regular_network, exact_network_match, heuristic_network_match, network_estimate,
    point_distance, sample_instance, NetworkInstance, DEFAULT_KAPPA,
};
use rbmp::{EdgeParams, Instance1D};

/// Mean and standard error of the optimal mean distance over `reps` draws.
fn simulate(m: usize, n: usize, reps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..reps)
        .map(|_| {
            let inst = Instance1D::random(m, n, 1.0, &mut rng).unwrap();
            optimal_match_1d(&inst).mean_distance
        })
        .collect();
    let k = reps as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

#[test]
fn closed_form_near_simulation_for_wide_supply() {
    let (mean, _) = simulate(50, 200, 100, 1);
    let est = closed_unbalanced_estimate(50, 200, 1.0, true).unwrap().value;
    assert!(((est - mean) / mean).abs() <= 0.15, "{est} vs {mean}");
}

#[test]
fn uncorrected_recursive_bounds_simulation() {
    let mut seed = 100;
    for m in [1usize, 2, 5, 10, 15, 20] {
        for n in [m + 1, m + 3, 2 * m, 3 * m + 5] {
            if n <= m {
                continue;
            }
            seed += 1;
            let (mean, sem) = simulate(m, n, 1000, seed);
            let upper = recursive_estimate(m as u64, n as u64, 1.0, false).unwrap().value;
            assert!(upper >= mean - 2.0 * sem, "m = {m}, n = {n}: {upper} < {mean} - 2 x {sem}");
        }
    }
}

#[test]
fn baseline_is_far_off_for_balanced_instances() {
    let (mean, _) = simulate(100, 100, 100, 7);
    let est = baseline_estimate(100, 100, 1.0).unwrap().value;
    let rel = ((est - mean) / mean).abs();
    assert!((0.35..=0.55).contains(&rel), "relative error {rel}");
}

#[test]
fn strongly_unbalanced_edges_sit_near_the_asymptote() {
    // At lambda / mu = 3 the corrected recursive value used by the dispatcher
    // stays within 30% of 1 / (2 lambda); the simulated mean sits between.
    let d = dispatch_estimate(&EdgeParams::new(10.0, 30.0, 1.0).unwrap()).unwrap().value;
    let asym = 1.0 / 60.0;
    assert!(((d - asym) / asym).abs() < 0.3, "{d} vs {asym}");
    let (mean, _) = simulate(10, 30, 2000, 8);
    assert!(((d - mean) / mean).abs() < ((asym - mean) / mean).abs());
}

#[test]
fn assignment_agrees_with_segment_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let n = rng.random_range(1..=40);
        let m = rng.random_range(0..=n);
        let inst = Instance1D::random(m, n, 3.0, &mut rng).unwrap();
        let c = CostMatrix::from_fn(m, n, |i, j| (inst.demand()[i] - inst.supply()[j]).abs()).unwrap();
        let a = solve_assignment(&c).total_distance;
        assert!((a - optimal_match_1d(&inst).total_distance).abs() < 1e-9);
    }
}

fn brute_force_network(inst: &NetworkInstance, dist: impl Fn(usize, usize) -> f64) -> f64 {
    fn go(i: usize, m: usize, n: usize, used: &mut [bool], dist: &dyn Fn(usize, usize) -> f64) -> f64 {
        if i == m {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                best = best.min(dist(i, j) + go(i + 1, m, n, used, dist));
                used[j] = false;
            }
        }
        best
    }
    let (m, n) = (inst.total_demand(), inst.total_supply());
    go(0, m, n, &mut vec![false; n], &dist)
}

#[test]
fn exact_network_match_equals_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for degree in [3, 4, 6] {
        let net = build_regular_network(degree, 36, 1.0).unwrap();
        for _ in 0..60 {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=n);
            let mut inst = NetworkInstance {
                per_edge_demand: vec![Vec::new(); 36],
                per_edge_supply: vec![Vec::new(); 36],
            };
            for _ in 0..m {
                inst.per_edge_demand[rng.random_range(0..36)].push(rng.random());
            }
            for _ in 0..n {
                inst.per_edge_supply[rng.random_range(0..36)].push(rng.random());
            }
            for v in inst.per_edge_demand.iter_mut().chain(inst.per_edge_supply.iter_mut()) {
                v.sort_by(f64::total_cmp);
            }
            let dp = inst.demand_points();
            let sp = inst.supply_points();
            let oracle = brute_force_network(&inst, |i, j| point_distance(&net, dp[i], sp[j]));
            let got = exact_network_match(&net, &inst).unwrap().total_distance;
            assert!((got - oracle).abs() < 1e-9);
        }
    }
}

fn poisson_pmf(rate: f64, k: u64) -> f64 {
    let ln = k as f64 * rate.ln() - rate - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    ln.exp()
}

/// `E[(X - Y)^+] / E[X]` for independent Poisson `X ~ mu`, `Y ~ lambda`.
fn skellam_global_fraction(mu: f64, lambda: f64) -> f64 {
    let mut acc = 0.0;
    for x in 0..120u64 {
        let px = poisson_pmf(mu, x);
        for y in 0..x {
            acc += px * poisson_pmf(lambda, y) * (x - y) as f64;
        }
    }
    acc / mu
}

#[test]
fn heuristic_global_share_matches_count_surplus() {
    let net = build_regular_network(4, 36, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mu, lambda) = (5.0, 5.0);

    // Every surplus demand point on an edge goes global, no more and no less.
    let mut checked = 0;
    while checked < 100 {
        let inst = sample_instance(&net, mu, lambda, &mut rng).unwrap();
        if inst.total_demand() == 0 || inst.total_demand() > inst.total_supply() {
            continue;
        }
        let surplus: usize = inst
            .per_edge_demand
            .iter()
            .zip(&inst.per_edge_supply)
            .map(|(d, s)| d.len().saturating_sub(s.len()))
            .sum();
        let h = heuristic_network_match(&net, &inst).unwrap();
        assert_eq!(h.global_count, surplus);
        checked += 1;
    }

    // Unconditioned per-instance share of surplus demand against the exact
    // count distribution.
    let shares: Vec<f64> = (0..100)
        .map(|_| {
            let inst = sample_instance(&net, mu, lambda, &mut rng).unwrap();
            let surplus: usize = inst
                .per_edge_demand
                .iter()
                .zip(&inst.per_edge_supply)
                .map(|(d, s)| d.len().saturating_sub(s.len()))
                .sum();
            surplus as f64 / inst.total_demand() as f64
        })
        .collect();
    let k = shares.len() as f64;
    let mean = shares.iter().sum::<f64>() / k;
    let sd = (shares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    let oracle = skellam_global_fraction(mu, lambda);
    assert!((mean - oracle).abs() <= 3.0 * sd / k.sqrt(), "{mean} vs {oracle}");

    // The normal approximation behind alpha runs low at these densities.
    let alpha = network_estimate(4, mu, lambda, 1.0, DEFAULT_KAPPA).unwrap().alpha;
    assert!(alpha < oracle && alpha > 0.7 * oracle, "alpha {alpha} vs {oracle}");
}
