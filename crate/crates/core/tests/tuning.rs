use teleportation::prelude::*;
use teleportation::tuning::{
    power_of_two_candidates, theoretical_k_exp, theoretical_k_ring, BoundInputs,
};

#[test]
fn candidate_budget_up_to_ten_thousand() {
    for n in 1..=10_000usize {
        let powers = power_of_two_candidates(n);
        assert!(powers.iter().sum::<usize>() <= n, "n={n}");
        let ks = candidate_ks(n).unwrap();
        assert_eq!(*ks.last().unwrap(), n);
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
        // largest exponent is ⌊log₂(n+1)⌋ − 1
        let top = usize::BITS - 1 - (n + 1).leading_zeros();
        assert_eq!(powers.len() as u32, top);
    }
}

#[test]
fn candidates_cover_small_n_by_brute_force() {
    for n in 2..=300usize {
        let ks = candidate_ks(n).unwrap();
        for k_star in 1..n {
            assert!(
                ks.iter().any(|&k| 4 * k > k_star && k <= k_star),
                "n={n} k★={k_star}"
            );
        }
    }
}

#[test]
fn k_rules_grow_with_horizon_and_noise() {
    let base = BoundInputs {
        t: 10,
        sigma2: 1.0,
        zeta2: 1.0,
        l: 1.0,
        r0: 1.0,
        n: 64,
    };
    for rule in [theoretical_k_ring, theoretical_k_exp] {
        let mut last = 0;
        for t in [1, 10, 100, 1_000, 10_000, 1_000_000, 100_000_000] {
            let k = rule(&BoundInputs { t, ..base });
            assert!(k >= last && (1..=64).contains(&k));
            last = k;
        }
        let mut last = 0;
        for s in [0.0, 0.1, 1.0, 10.0, 1e3, 1e6, 1e12] {
            let k = rule(&BoundInputs { sigma2: s, ..base });
            assert!(k >= last && (1..=64).contains(&k));
            last = k;
        }
    }
}

fn setup_problem(zeta2: f64, seed: u64) -> (QuadraticProblem, StreamPlan) {
    let plan = StreamPlan::new(seed);
    (
        QuadraticProblem::generate(20, 3, zeta2, &mut plan.problem()).unwrap(),
        plan,
    )
}

#[test]
fn search_is_deterministic() {
    let (p, plan) = setup_problem(5.0, 1);
    let setup =
        RunSetup::new(&p, NoiseModel::new(5.0).unwrap(), 0.01, 150, plan).with_init(vec![1.0; 3]);
    let a = search_k(&setup, Family::Ring, Criterion::MinMeanGradNorm).unwrap();
    let b = search_k(&setup, Family::Ring, Criterion::MinMeanGradNorm).unwrap();
    assert_eq!(a.selected_k, b.selected_k);
    assert_eq!(a.criterion_value, b.criterion_value);
    for (x, y) in a.branches.iter().zip(&b.branches) {
        assert_eq!(x.trace, y.trace);
    }
    assert_eq!(a.candidates, vec![1, 2, 4, 8, 20]);
    assert!(a.candidates.contains(&a.selected_k));
    let best = a
        .branches
        .iter()
        .map(|b| b.score)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(a.criterion_value, best);
}

#[test]
fn ties_go_to_the_smallest_k() {
    // Started at the optimum without noise, every branch stays there.
    let (p, plan) = setup_problem(0.0, 2);
    let setup =
        RunSetup::new(&p, NoiseModel::noiseless(), 0.01, 50, plan).with_init(p.optimum().to_vec());
    for criterion in [Criterion::MinMeanGradNorm, Criterion::MinFinalError] {
        let out = search_k(&setup, Family::Ring, criterion).unwrap();
        assert!(out.branches.iter().all(|b| b.score == 0.0));
        assert_eq!(out.selected_k, 1);
    }
}

#[test]
fn power_of_two_branches_fit_the_budget() {
    for n in [7, 20, 100] {
        let plan = StreamPlan::new(3);
        let p = QuadraticProblem::generate(n, 2, 1.0, &mut plan.problem()).unwrap();
        let setup = RunSetup::new(&p, NoiseModel::new(1.0).unwrap(), 0.001, 30, plan)
            .with_init(vec![1.0; 2]);
        let out = search_k(&setup, Family::Exponential, Criterion::MinFinalError).unwrap();
        assert!(out.parallel_gradients_per_iteration() <= n as f64);
    }
}

#[test]
fn diverged_branches_are_never_selected() {
    let (p, plan) = setup_problem(1.0, 4);
    // η = 0.09 is stable only for hosts with curvature below about 22.
    let setup =
        RunSetup::new(&p, NoiseModel::new(1.0).unwrap(), 0.09, 400, plan).with_init(vec![1.0; 3]);
    let out = search_k(&setup, Family::Ring, Criterion::MinFinalError).unwrap();
    let chosen = out.selected();
    assert!(!chosen.trace.diverged());
    for b in &out.branches {
        if b.trace.diverged() {
            assert_eq!(b.score, f64::INFINITY);
        }
    }
}
