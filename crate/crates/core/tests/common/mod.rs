//! Instance generators and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use persuasion::decision::DisclosureProblem;
use persuasion::{Belief, Experiment, TypeDistribution};
use rand::{Rng, RngExt};

/// Random point of the simplex, optionally with some coordinates forced to zero.
pub fn simplex_point<R: Rng>(rng: &mut R, n: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < zero_prob {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|x| x / total).collect();
        }
    }
}

pub fn strict_prior<R: Rng>(rng: &mut R, n: usize) -> Belief {
    let p: Vec<f64> = simplex_point(rng, n, 0.0).iter().map(|x| 0.05 + x).collect();
    Belief::from_weights(&p).unwrap()
}

/// Bayes-plausible targets: a random joint law of (target, state) with the
/// prior as its state marginal. Every target keeps mass at least 1e-3.
pub fn plausible_targets<R: Rng>(rng: &mut R, prior: &Belief, l: usize) -> Vec<(f64, Belief)> {
    let n = prior.len();
    loop {
        let columns: Vec<Vec<f64>> = (0..n).map(|_| simplex_point(rng, l, 0.2)).collect();
        let joint: Vec<Vec<f64>> = (0..l).map(|j| (0..n).map(|i| prior[i] * columns[i][j]).collect()).collect();
        if joint.iter().all(|w| w.iter().sum::<f64>() > 1e-3) {
            return joint
                .iter()
                .map(|w| (w.iter().sum(), Belief::from_weights(w).unwrap()))
                .collect();
        }
    }
}

pub fn random_type_law<R: Rng>(rng: &mut R) -> TypeDistribution {
    if rng.random::<f64>() < 0.25 {
        let r = if rng.random::<bool>() { 0.3 } else { 0.7 };
        return TypeDistribution::geometric(r).unwrap();
    }
    let size = rng.random_range(1..=6usize);
    let mut ks: Vec<u32> = (1..=8).collect();
    for i in (1..ks.len()).rev() {
        ks.swap(i, rng.random_range(0..=i));
    }
    let masses = simplex_point(rng, size, 0.0);
    TypeDistribution::explicit(ks.into_iter().take(size).zip(masses).collect()).unwrap()
}

pub fn random_experiment<R: Rng>(rng: &mut R, n: usize, m: usize) -> Experiment {
    Experiment::from_matrix((0..n).map(|_| simplex_point(rng, m, 0.2)).collect()).unwrap()
}

pub fn random_problem<R: Rng>(rng: &mut R, n: usize, m: usize) -> DisclosureProblem {
    DisclosureProblem {
        prior: strict_prior(rng, n),
        payoffs: (0..m)
            .map(|_| (0..n).map(|_| (rng.random::<f64>() * 4.0 - 2.0).round() / 2.0 + rng.random::<f64>() * 0.1).collect())
            .collect(),
    }
}

/// Best value of a type-`k` sender over every pure strategy, evaluated on
/// ordered draw tuples rather than multisets.
pub fn brute_force_value(q: &Experiment, k: u32, problem: &DisclosureProblem) -> f64 {
    let (n, m) = (q.num_states(), q.num_signals());
    let tuples = |len: u32| -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|t| (0..m).map(move |s| [t.clone(), vec![s]].concat()))
                .collect();
        }
        out
    };
    let key = |t: &[usize]| -> Vec<u32> {
        let mut c = vec![0u32; m];
        t.iter().for_each(|&s| c[s] += 1);
        c
    };
    let prob = |i: usize, t: &[usize]| -> f64 { t.iter().map(|&s| q.prob(i, s)).product() };

    // Every assignment of a held signal to each (count vector, state) cell.
    let best_over = |cells: Vec<(Vec<u32>, Option<usize>)>, draws: u32| -> f64 {
        let choices: Vec<Vec<usize>> = cells
            .iter()
            .map(|(c, _)| (0..m).filter(|&j| c[j] > 0).collect::<Vec<_>>())
            .map(|v| if v.is_empty() { vec![usize::MAX] } else { v })
            .collect();
        let total: usize = choices.iter().map(Vec::len).product();
        let all = tuples(draws);
        let mut best = f64::NEG_INFINITY;
        for mut code in 0..total {
            let pick: Vec<usize> = choices
                .iter()
                .map(|c| {
                    let j = c[code % c.len()];
                    code /= c.len();
                    j
                })
                .collect();
            let mut value = 0.0;
            for t in &all {
                let c = key(t);
                for i in 0..n {
                    let cell = cells
                        .iter()
                        .position(|(cc, st)| *cc == c && st.is_none_or(|s| s == i))
                        .unwrap();
                    value += problem.prior[i] * prob(i, t) * problem.payoffs[pick[cell]][i];
                }
            }
            best = best.max(value);
        }
        best
    };

    let mut counts: Vec<Vec<u32>> = tuples(k).iter().map(|t| key(t)).collect();
    counts.sort();
    counts.dedup();
    let all_branch = best_over(counts.into_iter().map(|c| (c, None)).collect(), k);
    if k < 2 {
        return all_branch;
    }
    let mut counts: Vec<Vec<u32>> = tuples(k - 1).iter().map(|t| key(t)).collect();
    counts.sort();
    counts.dedup();
    let cells = counts.into_iter().flat_map(|c| (0..n).map(move |i| (c.clone(), Some(i)))).collect();
    all_branch.max(best_over(cells, k - 1))
}
