mod common;

use persuasion::bp::{find_punishing_action, solve_bp};
use persuasion::decision::{
    induced_matrix, optimal_strategy_set, select_from_set, Branch, DisclosureProblem, DisclosureStrategy, InducedMatrix,
    OptimalSet, TypeStrategy,
};
use persuasion::model::{enumerate_multisets, multiset_probability};
use persuasion::transparent::{binary_split, transparent_equilibrium};
use persuasion::verify::{induced_top_signal_distribution, verify, DEFAULT_TOL};
use persuasion::{Experiment, GameSpec, SignalMultiset, TypeDistribution};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn game(seed: u64, n: usize, a: usize, transparent: bool, nu: TypeDistribution) -> GameSpec {
    use rand::RngExt;
    let mut r = rng(seed);
    let prior = common::strict_prior(&mut r, n).as_slice().to_vec();
    let receiver = (0..a).map(|_| (0..n).map(|_| r.random::<f64>()).collect()).collect();
    let sender = (0..a)
        .map(|_| {
            let v = r.random::<f64>();
            (0..n).map(|_| if transparent { v } else { r.random::<f64>() }).collect()
        })
        .collect();
    GameSpec::new(
        (0..n).map(|i| format!("w{i}")).collect(),
        prior,
        (0..a).map(|i| format!("a{i}")).collect(),
        receiver,
        sender,
        nu,
    )
    .unwrap()
}

/// A pure member of the optimal set: per type, one optimal branch and one
/// optimal signal per info set, picked first or last.
fn pure_member(set: &OptimalSet, last: bool) -> DisclosureStrategy {
    let (m, n) = (set.num_signals, set.num_states);
    let pick = |options: &[usize], ms: &SignalMultiset| -> Vec<f64> {
        let j = if options.is_empty() {
            ms.max_present().unwrap()
        } else if last {
            *options.last().unwrap()
        } else {
            options[0]
        };
        let mut rule = vec![0.0; m];
        rule[j] = 1.0;
        rule
    };
    let types = set
        .types
        .iter()
        .map(|t| {
            let mut s = TypeStrategy::max_index(m, n, t.k);
            let branch = if last { *t.optimal_branches.last().unwrap() } else { t.optimal_branches[0] };
            for (rank, info) in t.all_signals.infosets.iter().enumerate() {
                s.all_signals[rank] = pick(&info.optimal, &info.multiset);
            }
            if let Some(st) = &t.state_revealed {
                for (idx, info) in st.infosets.iter().enumerate() {
                    s.state_revealed[idx / n][info.state.unwrap()] = pick(&info.optimal, &info.multiset);
                }
            }
            s.state_branch_weight = if branch == Branch::StateRevealed { 1.0 } else { 0.0 };
            s
        })
        .collect();
    DisclosureStrategy {
        num_signals: m,
        num_states: n,
        types,
        silent_signal: None,
    }
}

fn explicit_law(seed: u64) -> TypeDistribution {
    use rand::RngExt;
    let mut r = rng(seed);
    let size = r.random_range(1..=3usize);
    let masses = common::simplex_point(&mut r, size, 0.0);
    TypeDistribution::explicit((1..=size as u32).zip(masses).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiset_probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..4, m in 1usize..5, k in 0u32..7) {
        let q = common::random_experiment(&mut rng(seed), n.max(1), m);
        for i in 0..q.num_states() {
            let total: f64 = enumerate_multisets(m, k).iter().map(|ms| multiset_probability(&q, i, ms)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multiset_probability_ignores_signal_order(seed in any::<u64>(), m in 2usize..5, k in 1u32..6, shift in 1usize..4) {
        let q = common::random_experiment(&mut rng(seed), 2, m);
        let perm: Vec<usize> = (0..m).map(|j| (j + shift) % m).collect();
        let permuted = Experiment::from_matrix(
            q.matrix().iter().map(|row| perm.iter().map(|&j| row[j]).collect()).collect(),
        ).unwrap();
        for ms in enumerate_multisets(m, k) {
            let moved = SignalMultiset::new(perm.iter().map(|&j| ms.counts[j]).collect());
            for i in 0..2 {
                let a = multiset_probability(&q, i, &ms);
                let b = multiset_probability(&permuted, i, &moved);
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn truncation_keeps_geometric_ratios(r in 0.05f64..0.95, tol_exp in 4i32..13) {
        let tol = 10f64.powi(-tol_exp);
        let nu = TypeDistribution::geometric(r).unwrap().truncate(tol);
        let support = nu.support();
        let diag = nu.truncation_diagnostics().unwrap();
        prop_assert!(diag.discarded_mass < tol);
        prop_assert_eq!(support.len() as u32, diag.max_k);
        let total: f64 = support.iter().map(|(_, m)| m).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for pair in support.windows(2) {
            prop_assert!((pair[1].1 / pair[0].1 - (1.0 - r)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing_strategies_mixes_induced_matrices(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let q = common::random_experiment(&mut r, 2, 3);
        let problem = common::random_problem(&mut r, 2, 3);
        let nu = explicit_law(seed);
        let set = optimal_strategy_set(&q, &nu, &problem, 1e-9).unwrap();
        let (a, b) = (pure_member(&set, false), pure_member(&set, true));
        let a = a.mix(&DisclosureStrategy::max_index(3, 2, &a.ks()), 0.5).unwrap();
        let mixed = a.mix(&b, lambda).unwrap();
        let ma = induced_matrix(&a, &q, &nu).unwrap();
        let mb = induced_matrix(&b, &q, &nu).unwrap();
        let mm = induced_matrix(&mixed, &q, &nu).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let expected = lambda * ma.matrix[i][j] + (1.0 - lambda) * mb.matrix[i][j];
                prop_assert!((mm.matrix[i][j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn selection_beats_every_pure_optimal_strategy(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = common::random_experiment(&mut r, 2, 2);
        let problem = common::random_problem(&mut r, 2, 2);
        let nu = explicit_law(seed ^ 1);
        let target = InducedMatrix::new(common::random_experiment(&mut r, 2, 2).matrix().to_vec());
        let set = optimal_strategy_set(&q, &nu, &problem, 1e-9).unwrap();
        let selection = select_from_set(&set, &target);
        for last in [false, true] {
            let pure = induced_matrix(&pure_member(&set, last), &q, &nu).unwrap();
            prop_assert!(selection.distance <= pure.frobenius_distance(&target) + 1e-9);
        }
        let own = induced_matrix(&selection.strategy, &q, &nu).unwrap();
        prop_assert!((own.frobenius_distance(&target) - selection.distance).abs() < 1e-9);
    }

    #[test]
    fn benchmark_matches_two_state_concavification(seed in any::<u64>(), a in 2usize..5) {
        let g = game(seed, 2, a, false, TypeDistribution::deterministic(1).unwrap());
        let bp = solve_bp(&g).unwrap();
        let (u, v) = (g.receiver_utility(), g.sender_utility());
        let at = |x: f64, row: &[f64]| row[0] * (1.0 - x) + row[1] * x;
        let value = |x: f64| {
            let best = (0..a).map(|b| at(x, &u[b])).fold(f64::NEG_INFINITY, f64::max);
            (0..a).filter(|&b| at(x, &u[b]) >= best - 1e-12).map(|b| at(x, &v[b])).fold(f64::NEG_INFINITY, f64::max)
        };
        let mut points = vec![0.0, 1.0];
        for b in 0..a {
            for c in 0..b {
                let slope = (u[b][1] - u[b][0]) - (u[c][1] - u[c][0]);
                if slope.abs() > 1e-12 {
                    let x = (u[c][0] - u[b][0]) / slope;
                    if (0.0..=1.0).contains(&x) {
                        points.push(x);
                    }
                }
            }
        }
        let p = g.prior()[1];
        let mut envelope = value(p);
        for &lo in points.iter().filter(|&&x| x < p) {
            for &hi in points.iter().filter(|&&x| x > p) {
                let w = (hi - p) / (hi - lo);
                envelope = envelope.max(w * value(lo) + (1.0 - w) * value(hi));
            }
        }
        prop_assert!((bp.sender_value - envelope).abs() < 1e-7, "{} vs {}", bp.sender_value, envelope);
    }

    #[test]
    fn benchmark_is_bayes_plausible(seed in any::<u64>(), n in 2usize..5, a in 2usize..5) {
        let g = game(seed, n, a, false, TypeDistribution::deterministic(1).unwrap());
        let bp = solve_bp(&g).unwrap();
        prop_assert!(bp.bayes_plausibility_residual(g.prior()) < 1e-9);
        let total: f64 = bp.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn punishing_actions_pass_their_audit(seed in any::<u64>(), n in 2usize..4, a in 2usize..5) {
        let g = game(seed, n, a, false, TypeDistribution::deterministic(1).unwrap());
        let bp = solve_bp(&g).unwrap();
        if let Some(punish) = find_punishing_action(&g, &bp.support_actions).unwrap() {
            prop_assert!(punish.audit(&g, &bp.support_actions).is_ok());
        }
    }

    #[test]
    fn transparent_certificates_make_all_signals_optimal(seed in any::<u64>(), n in 2usize..4, a in 2usize..4) {
        let g = game(seed, n, a, true, explicit_law(seed));
        let bp = solve_bp(&g).unwrap();
        if let Ok(cert) = transparent_equilibrium(&g, &bp) {
            let report = verify(&cert, DEFAULT_TOL);
            prop_assert!(report.passed());
            prop_assert!(report.sender_value <= bp.sender_value + 1e-8);
            let actions: Vec<usize> = cert.on_path.iter().map(|e| e.as_ref().unwrap().action).collect();
            let problem = DisclosureProblem::new(&g, &actions);
            let set = optimal_strategy_set(&cert.experiment, &cert.nu, &problem, 1e-9).unwrap();
            for t in &set.types {
                prop_assert!(t.optimal_branches.contains(&Branch::AllSignals), "type {} avoids the all-signals branch", t.k);
            }
        }
    }

    #[test]
    fn top_signal_law_agrees_with_binary_split(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let prior = common::strict_prior(&mut r, n);
        let targets = common::plausible_targets(&mut r, &prior, 2);
        let nu = common::random_type_law(&mut r).truncated();
        let (gamma, q_low) = &targets[0];
        let split = binary_split(&prior, &nu, *gamma, q_low).unwrap();
        let q = Experiment::from_matrix(split.low_column.iter().map(|x| vec![*x, 1.0 - x]).collect()).unwrap();
        let events = induced_top_signal_distribution(&q, &nu, &prior).unwrap();
        let total: f64 = events.iter().map(|e| e.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!((events[0].probability - gamma).abs() < 1e-10);
        prop_assert!(events[0].posterior.as_ref().unwrap().distance(q_low) < 1e-10);
    }
}
