//! The sender's single-agent problem given a fixed experiment `Q`.
//!
//! A type-`k` sender either draws `k` signals from `Q`, or draws `k - 1`
//! signals and also learns the state. She then discloses exactly one signal
//! she holds; disclosing signal `j` earns her the payoff of the action the
//! receiver associates with `j`. The optimal mixed strategies of this problem
//! induce a convex set of disclosure matrices, from which [`select_from_c`]
//! picks the point nearest a target.

mod select;
mod strategy;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::BpSolution;
use crate::error::{Error, Result};
use crate::model::{enumerate_multisets, multiset_probability, Belief, Experiment, GameSpec, SignalMultiset, TypeDistribution};

pub use select::{select_from_c, select_from_set, Selection};
pub use strategy::{DisclosureStrategy, TypeStrategy};

/// Default tolerance for treating two payoffs as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Draw `k` signals.
    AllSignals,
    /// Draw `k - 1` signals and observe the state.
    StateRevealed,
}

/// Prior and the sender's payoff from disclosing each signal, `[signal][state]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisclosureProblem {
    pub prior: Belief,
    pub payoffs: Vec<Vec<f64>>,
}

impl DisclosureProblem {
    /// Signal `j` is read as a recommendation of `signal_actions[j]`.
    pub fn new(game: &GameSpec, signal_actions: &[usize]) -> Self {
        DisclosureProblem {
            prior: game.prior().clone(),
            payoffs: signal_actions
                .iter()
                .map(|&a| game.sender_utility()[a].clone())
                .collect(),
        }
    }

    /// One signal per benchmark action, in the benchmark's order.
    pub fn for_benchmark(game: &GameSpec, bp: &BpSolution) -> Self {
        Self::new(game, &bp.support_actions)
    }

    pub fn num_signals(&self) -> usize {
        self.payoffs.len()
    }

    pub fn num_states(&self) -> usize {
        self.prior.len()
    }
}

/// An information set of the sender and the disclosures optimal there.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoSet {
    pub multiset: SignalMultiset,
    /// Set for the state branch.
    pub state: Option<usize>,
    /// `P(info set | w_i)`.
    pub likelihood: Vec<f64>,
    /// Optimal signals; empty when the info set is never reached.
    pub optimal: Vec<usize>,
}

impl InfoSet {
    pub fn is_reachable(&self) -> bool {
        !self.optimal.is_empty()
    }
}

/// Optimal disclosures and the value of one branch for one type.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchOptimum {
    pub branch: Branch,
    pub k: u32,
    pub value: f64,
    pub infosets: Vec<InfoSet>,
}

fn argmax_within(payoffs: impl Iterator<Item = (usize, f64)>, tie_tol: f64) -> (f64, Vec<usize>) {
    let scored: Vec<(usize, f64)> = payoffs.collect();
    let best = scored.iter().map(|(_, p)| *p).fold(f64::NEG_INFINITY, f64::max);
    let winners = scored
        .iter()
        .filter(|(_, p)| *p >= best - tie_tol)
        .map(|(j, _)| *j)
        .collect();
    (best, winners)
}

fn check_dims(q: &Experiment, problem: &DisclosureProblem) -> Result<()> {
    if q.num_signals() != problem.num_signals() || q.num_states() != problem.num_states() {
        return Err(Error::Dimension(format!(
            "experiment is {}x{}, problem is {}x{}",
            q.num_states(),
            q.num_signals(),
            problem.num_states(),
            problem.num_signals()
        )));
    }
    Ok(())
}

/// Value of drawing `k` signals and disclosing the best one given the
/// sender's posterior, with the optimal disclosures at each multiset.
pub fn branch_value_all_k(
    q: &Experiment,
    k: u32,
    problem: &DisclosureProblem,
    tie_tol: f64,
) -> Result<BranchOptimum> {
    check_dims(q, problem)?;
    let n = q.num_states();
    let mut value = 0.0;
    let mut infosets = Vec::new();
    for multiset in enumerate_multisets(q.num_signals(), k) {
        let likelihood: Vec<f64> = (0..n).map(|i| multiset_probability(q, i, &multiset)).collect();
        let weights: Vec<f64> = (0..n).map(|i| problem.prior[i] * likelihood[i]).collect();
        let total: f64 = weights.iter().sum();
        let optimal = if total > 0.0 {
            let payoff = |j: usize| -> f64 {
                weights.iter().zip(&problem.payoffs[j]).map(|(w, v)| w * v).sum::<f64>() / total
            };
            let (best, winners) = argmax_within(multiset.present().map(|j| (j, payoff(j))), tie_tol);
            value += total * best;
            winners
        } else {
            Vec::new()
        };
        infosets.push(InfoSet {
            multiset,
            state: None,
            likelihood,
            optimal,
        });
    }
    Ok(BranchOptimum {
        branch: Branch::AllSignals,
        k,
        value,
        infosets,
    })
}

/// Value of drawing `k - 1` signals, learning the state, and disclosing the
/// held signal that pays most in that state. Info sets are ordered by
/// multiset, then state.
pub fn branch_value_state(
    q: &Experiment,
    k: u32,
    problem: &DisclosureProblem,
    tie_tol: f64,
) -> Result<BranchOptimum> {
    check_dims(q, problem)?;
    if k < 2 {
        return Err(Error::BranchUnavailable);
    }
    let n = q.num_states();
    let mut value = 0.0;
    let mut infosets = Vec::new();
    for multiset in enumerate_multisets(q.num_signals(), k - 1) {
        for state in 0..n {
            let p = multiset_probability(q, state, &multiset);
            let mut likelihood = vec![0.0; n];
            likelihood[state] = p;
            let optimal = if p * problem.prior[state] > 0.0 {
                let (best, winners) = argmax_within(
                    multiset.present().map(|j| (j, problem.payoffs[j][state])),
                    tie_tol,
                );
                value += problem.prior[state] * p * best;
                winners
            } else {
                Vec::new()
            };
            infosets.push(InfoSet {
                multiset: multiset.clone(),
                state: Some(state),
                likelihood,
                optimal,
            });
        }
    }
    Ok(BranchOptimum {
        branch: Branch::StateRevealed,
        k,
        value,
        infosets,
    })
}

/// Both branches of one type and which of them are optimal.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeOptimum {
    pub k: u32,
    pub mass: f64,
    pub all_signals: BranchOptimum,
    /// `None` for `k = 1`.
    pub state_revealed: Option<BranchOptimum>,
    pub optimal_branches: Vec<Branch>,
}

impl TypeOptimum {
    pub fn value(&self) -> f64 {
        let state = self.state_revealed.as_ref().map_or(f64::NEG_INFINITY, |b| b.value);
        self.all_signals.value.max(state)
    }

    pub fn branch(&self, branch: Branch) -> Option<&BranchOptimum> {
        match branch {
            Branch::AllSignals => Some(&self.all_signals),
            Branch::StateRevealed => self.state_revealed.as_ref(),
        }
    }
}

/// Optimal branches and disclosures for every type in the support; all
/// independent mixings of these parametrize the optimal strategy set.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSet {
    pub num_signals: usize,
    pub num_states: usize,
    pub types: Vec<TypeOptimum>,
}

impl OptimalSet {
    /// Ex-ante value, summed in ascending `k`.
    pub fn value(&self) -> f64 {
        self.types.iter().map(|t| t.mass * t.value()).sum()
    }
}

pub fn optimal_strategy_set(
    q: &Experiment,
    nu: &TypeDistribution,
    problem: &DisclosureProblem,
    tie_tol: f64,
) -> Result<OptimalSet> {
    check_dims(q, problem)?;
    let support = nu.support();
    if support.iter().any(|(k, _)| *k == 0) {
        return Err(Error::ZeroTypeMass);
    }
    let types = support
        .par_iter()
        .map(|&(k, mass)| -> Result<TypeOptimum> {
            let all_signals = branch_value_all_k(q, k, problem, tie_tol)?;
            let state_revealed = if k >= 2 {
                Some(branch_value_state(q, k, problem, tie_tol)?)
            } else {
                None
            };
            let best = all_signals
                .value
                .max(state_revealed.as_ref().map_or(f64::NEG_INFINITY, |b| b.value));
            let mut optimal_branches = Vec::new();
            if all_signals.value >= best - tie_tol {
                optimal_branches.push(Branch::AllSignals);
            }
            if let Some(s) = &state_revealed {
                if s.value >= best - tie_tol {
                    optimal_branches.push(Branch::StateRevealed);
                }
            }
            Ok(TypeOptimum {
                k,
                mass,
                all_signals,
                state_revealed,
                optimal_branches,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalSet {
        num_signals: q.num_signals(),
        num_states: q.num_states(),
        types,
    })
}

/// A row-stochastic disclosure matrix: `P(disclose s_j | w_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InducedMatrix {
    pub matrix: Vec<Vec<f64>>,
}

impl InducedMatrix {
    pub fn new(matrix: Vec<Vec<f64>>) -> Self {
        InducedMatrix { matrix }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        InducedMatrix {
            matrix: vec![vec![0.0; m]; n],
        }
    }

    pub fn num_states(&self) -> usize {
        self.matrix.len()
    }

    pub fn num_signals(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    pub fn frobenius_distance(&self, other: &InducedMatrix) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.matrix
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest positive entry.
    pub fn min_positive(&self) -> Option<f64> {
        self.matrix
            .iter()
            .flatten()
            .copied()
            .filter(|x| *x > 0.0)
            .min_by(f64::total_cmp)
    }

    fn add_scaled(&mut self, likelihood: &[f64], rule: &[f64], scale: f64) {
        for (i, lik) in likelihood.iter().enumerate() {
            if *lik == 0.0 {
                continue;
            }
            for (j, r) in rule.iter().enumerate() {
                self.matrix[i][j] += scale * lik * r;
            }
        }
    }
}

/// Disclosure matrix induced by `strategy` when every type draws from `q`.
pub fn induced_matrix(
    strategy: &DisclosureStrategy,
    q: &Experiment,
    nu: &TypeDistribution,
) -> Result<InducedMatrix> {
    strategy.validate()?;
    let (n, m) = (q.num_states(), q.num_signals());
    if strategy.num_signals != m || strategy.num_states != n {
        return Err(Error::Dimension("strategy and experiment disagree".into()));
    }
    let mut out = InducedMatrix::zeros(n, m);
    for (k, mass) in nu.support() {
        if k == 0 {
            return Err(Error::ZeroTypeMass);
        }
        let t = strategy
            .type_strategy(k)
            .ok_or_else(|| Error::Dimension(format!("strategy has no rule for k = {k}")))?;
        let b = t.state_branch_weight;
        if b < 1.0 {
            for (ms, rule) in enumerate_multisets(m, k).iter().zip(&t.all_signals) {
                let lik: Vec<f64> = (0..n).map(|i| multiset_probability(q, i, ms)).collect();
                out.add_scaled(&lik, rule, mass * (1.0 - b));
            }
        }
        if b > 0.0 {
            for (ms, rules) in enumerate_multisets(m, k - 1).iter().zip(&t.state_revealed) {
                for (state, rule) in rules.iter().enumerate() {
                    let mut lik = vec![0.0; n];
                    lik[state] = multiset_probability(q, state, ms);
                    out.add_scaled(&lik, rule, mass * b);
                }
            }
        }
    }
    Ok(out)
}
