//! Constructive equilibria when the sender's payoff does not depend on the
//! state.
//!
//! The sender reveals the best signal she draws. The experiment is built so
//! that "the highest-indexed draw is `s_j`" happens with the benchmark weight
//! of the `j`-th target and induces its posterior. Targets are added one at a
//! time: the two highest are merged, an experiment for the shorter list is
//! built, and its top signal is split in two by a per-state bisection.

use serde::{Deserialize, Serialize};

use crate::bp::{BpSolution, PunishingAction};
use crate::decision::DisclosureStrategy;
use crate::error::{Error, Result};
use crate::model::{Belief, Experiment, GameSpec, TypeDistribution, NORMALIZATION_TOL};
use crate::root::bisect;
use crate::verify::{induced_top_signal_distribution, verify, EquilibriumCertificate, OnPathEntry, VerificationReport, DEFAULT_TOL};

/// Tolerance of the split reconstruction checks.
const SPLIT_CHECK_TOL: f64 = 1e-10;
/// Tolerance when re-evaluating a constructed experiment.
const CONSTRUCTION_CHECK_TOL: f64 = 1e-9;
/// Largest state-wise spread of a sender payoff still treated as constant.
const TRANSPARENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    /// Per-state probability of the low signal in a single draw.
    pub low_column: Vec<f64>,
    /// Single-draw probability of the low signal.
    pub alpha: f64,
    /// Posterior after one low draw; `None` when `alpha` is zero.
    pub low_posterior: Option<Belief>,
}

/// `sum_k nu_k x^k` by Horner's rule over a sorted support.
fn draw_polynomial(masses: &[(u32, f64)], x: f64) -> f64 {
    let max_k = masses.last().map_or(0, |(k, _)| *k) as usize;
    let mut coeffs = vec![0.0; max_k + 1];
    for &(k, m) in masses {
        coeffs[k as usize] += m;
    }
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Binary signal such that "every draw is low" has probability `gamma` and
/// induces posterior `q_low`. `nu` may be state-conditional.
pub fn binary_split(prior: &Belief, nu: &TypeDistribution, gamma: f64, q_low: &Belief) -> Result<SplitResult> {
    let n = prior.len();
    if q_low.len() != n {
        return Err(Error::Dimension("split target has the wrong dimension".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidBelief(format!("split weight {gamma} outside (0,1)")));
    }
    for i in 0..n {
        let required = gamma * q_low[i];
        if required > prior[i] + NORMALIZATION_TOL {
            return Err(Error::InfeasibleSplit {
                state: i,
                required,
                available: prior[i],
            });
        }
    }
    let mut low_column = Vec::with_capacity(n);
    let mut all_low = vec![0.0; n];
    for i in 0..n {
        let masses = nu.state_masses(i);
        if masses.iter().any(|(k, m)| *k == 0 && *m > 0.0) {
            return Err(Error::ZeroTypeMass);
        }
        let target = if prior[i] > 0.0 {
            (gamma * q_low[i] / prior[i]).min(1.0)
        } else {
            0.0
        };
        let x = if target <= 0.0 {
            0.0
        } else if target >= 1.0 {
            1.0
        } else {
            // Without a sign change the target sits within rounding of an endpoint.
            bisect(|x| draw_polynomial(&masses, x) - target, 0.0, 1.0, 0.0, 200)
                .unwrap_or(if draw_polynomial(&masses, 1.0) <= target { 1.0 } else { 0.0 })
        };
        all_low[i] = prior[i] * draw_polynomial(&masses, x);
        low_column.push(x);
    }

    let total: f64 = all_low.iter().sum();
    if (total - gamma).abs() > SPLIT_CHECK_TOL {
        return Err(Error::ConstructionCheck(format!("all-low mass {total} instead of {gamma}")));
    }
    let posterior = Belief::from_weights(&all_low)?;
    if posterior.distance(q_low) > SPLIT_CHECK_TOL {
        return Err(Error::ConstructionCheck("all-low posterior misses its target".into()));
    }
    let alpha: f64 = (0..n).map(|i| low_column[i] * prior[i]).sum();
    let low_posterior = (alpha > 0.0)
        .then(|| Belief::from_weights(&(0..n).map(|i| low_column[i] * prior[i]).collect::<Vec<_>>()))
        .transpose()?;
    Ok(SplitResult {
        low_column,
        alpha,
        low_posterior,
    })
}

/// Laws of the event `L = {highest-indexed draw is top}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TopConditional {
    /// `P(L)`.
    pub probability: f64,
    /// `P(state | L)`.
    pub prior: Belief,
    /// `P(k | state, L)`.
    pub draws: TypeDistribution,
    /// `P(N = n | state, L)` where `N` counts the draws equal to `top`.
    pub top_draws: TypeDistribution,
}

fn binomial(k: u32, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * f64::from(k - i) / f64::from(i + 1))
}

/// Conditions the number of draws on the top signal of `pi_prime` being
/// `top`. Splitting that signal later must use the law of `N`, the number of
/// draws that show it: all draws are low exactly when those `N` draws are.
pub fn conditional_nu_given_top(
    pi_prime: &Experiment,
    nu: &TypeDistribution,
    prior: &Belief,
    top: usize,
) -> Result<TopConditional> {
    let n = pi_prime.num_states();
    if prior.len() != n || top >= pi_prime.num_signals() {
        return Err(Error::Dimension("conditioning on a signal outside the experiment".into()));
    }
    let mut k_rows = Vec::with_capacity(n);
    let mut n_rows = Vec::with_capacity(n);
    let mut joint = vec![0.0; n];
    for (i, w) in joint.iter_mut().enumerate() {
        let below: f64 = (0..top).map(|j| pi_prime.prob(i, j)).sum();
        let at = pi_prime.prob(i, top);
        let masses = nu.state_masses(i);
        let max_k = masses.last().map_or(0, |(k, _)| *k);
        let mut k_row = Vec::new();
        let mut n_row = vec![0.0; max_k as usize + 1];
        for &(k, mass) in &masses {
            let p = (below + at).powi(k as i32) - below.powi(k as i32);
            if p > 0.0 {
                k_row.push((k, mass * p));
            }
            for c in 1..=k {
                n_row[c as usize] += mass * binomial(k, c) * at.powi(c as i32) * below.powi((k - c) as i32);
            }
        }
        let p_l: f64 = k_row.iter().map(|(_, m)| m).sum();
        *w = prior[i] * p_l;
        if p_l > 0.0 {
            k_rows.push(k_row);
            n_rows.push(n_row.iter().enumerate().filter(|(_, m)| **m > 0.0).map(|(c, m)| (c as u32, *m)).collect());
        } else {
            // The state is impossible given L; its row never matters.
            k_rows.push(masses.clone());
            n_rows.push(vec![(1, 1.0)]);
        }
    }
    let probability: f64 = joint.iter().sum();
    if !(probability > 0.0) {
        return Err(Error::NullEvent);
    }
    Ok(TopConditional {
        probability,
        prior: Belief::from_weights(&joint)?,
        draws: TypeDistribution::state_conditional(k_rows)?,
        top_draws: TypeDistribution::state_conditional(n_rows)?,
    })
}

fn build(prior: &Belief, nu: &TypeDistribution, targets: &[(f64, Belief)]) -> Result<Vec<Vec<f64>>> {
    let n = prior.len();
    let l = targets.len();
    if l == 1 {
        return Ok(vec![vec![1.0]; n]);
    }
    let (g_low, q_low) = &targets[l - 2];
    let (g_high, q_high) = &targets[l - 1];
    let merged_weight = g_low + g_high;
    let merged = Belief::from_weights(
        &(0..n)
            .map(|i| (g_low * q_low[i] + g_high * q_high[i]) / merged_weight)
            .collect::<Vec<_>>(),
    )?;
    let mut shorter = targets[..l - 2].to_vec();
    shorter.push((merged_weight, merged));
    let pi_prime = build(prior, nu, &shorter)?;
    let exp = Experiment::from_matrix(pi_prime.clone())?;
    let cond = conditional_nu_given_top(&exp, nu, prior, l - 2)?;
    let split = binary_split(&cond.prior, &cond.top_draws, g_low / merged_weight, q_low)?;
    Ok(pi_prime
        .into_iter()
        .zip(&split.low_column)
        .map(|(mut row, x)| {
            let top = row[l - 2];
            row[l - 2] = top * x;
            row.push(top * (1.0 - x));
            row
        })
        .collect())
}

/// Experiment whose top-signal events reproduce `targets` (weights and
/// posteriors, lowest signal first) under i.i.d. draws with `nu`. The result
/// is re-evaluated exactly before it is returned.
pub fn construct_experiment(prior: &Belief, nu: &TypeDistribution, targets: &[(f64, Belief)]) -> Result<Experiment> {
    let n = prior.len();
    if targets.is_empty() || targets.iter().any(|(g, q)| !(*g > 0.0) || q.len() != n) {
        return Err(Error::BadBarycenter(f64::NAN));
    }
    if nu.zero_mass() > 0.0 {
        return Err(Error::ZeroTypeMass);
    }
    let total: f64 = targets.iter().map(|(g, _)| g).sum();
    let barycenter = (0..n)
        .map(|i| (targets.iter().map(|(g, q)| g * q[i]).sum::<f64>() - prior[i]).abs())
        .fold((total - 1.0).abs(), f64::max);
    if barycenter > 1e-10 {
        return Err(Error::BadBarycenter(barycenter));
    }
    let nu = nu.truncated();
    let mut matrix = build(prior, &nu, targets)?;
    for row in &mut matrix {
        for x in row.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
    }
    let experiment = Experiment::from_matrix(matrix)?;

    let events = induced_top_signal_distribution(&experiment, &nu, prior)?;
    for (j, ((g, q), ev)) in targets.iter().zip(&events).enumerate() {
        let mass_err = (ev.probability - g).abs();
        let belief_err = ev.posterior.as_ref().map_or(f64::INFINITY, |p| p.distance(q));
        if mass_err > CONSTRUCTION_CHECK_TOL || belief_err > CONSTRUCTION_CHECK_TOL {
            return Err(Error::ConstructionCheck(format!(
                "signal {j}: mass error {mass_err:e}, posterior error {belief_err:e}"
            )));
        }
    }
    Ok(experiment)
}

fn require_transparent(game: &GameSpec) -> Result<()> {
    game.check_transparent(TRANSPARENT_TOL)
        .map_err(|(action, spread)| Error::NotTransparent { action, spread })
}

/// Benchmark support positions ordered by the sender's payoff, ties by index.
fn ordered_support(game: &GameSpec, bp: &BpSolution) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bp.support_actions.len()).collect();
    order.sort_by(|&a, &b| {
        let va = game.sender_utility()[bp.support_actions[a]][0];
        let vb = game.sender_utility()[bp.support_actions[b]][0];
        va.total_cmp(&vb).then(bp.support_actions[a].cmp(&bp.support_actions[b]))
    });
    order
}

fn audited(cert: EquilibriumCertificate) -> Result<EquilibriumCertificate> {
    let report = verify(&cert, DEFAULT_TOL);
    if report.passed() {
        Ok(cert)
    } else {
        Err(Error::VerificationFailed(Box::new(report)))
    }
}

/// Max-signal equilibrium attaining the benchmark under transparent motives.
pub fn transparent_equilibrium(game: &GameSpec, bp: &BpSolution) -> Result<EquilibriumCertificate> {
    require_transparent(game)?;
    let nu = game.type_dist().truncated();
    if nu.zero_mass() > 0.0 {
        return Err(Error::ZeroTypeMass);
    }
    let order = ordered_support(game, bp);
    let targets: Vec<(f64, Belief)> = order.iter().map(|&i| (bp.weights[i], bp.posteriors[i].clone())).collect();
    let experiment = construct_experiment(game.prior(), &nu, &targets)?;
    let ks: Vec<u32> = nu.support().iter().map(|(k, _)| *k).collect();
    let worst = order[0];
    audited(EquilibriumCertificate {
        game: game.clone(),
        strategy: DisclosureStrategy::max_index(order.len(), game.num_states(), &ks),
        nu,
        experiment,
        on_path: order
            .iter()
            .map(|&i| {
                Some(OnPathEntry {
                    belief: bp.posteriors[i].clone(),
                    action: bp.support_actions[i],
                })
            })
            .collect(),
        empty_disclosure: None,
        off_path: PunishingAction::pure(bp.posteriors[worst].clone(), game.num_actions(), bp.support_actions[worst]),
        bp_value: bp.sender_value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustConstruction {
    /// Posterior of the lowest signal after pooling with uninformed types.
    pub q_star: Belief,
    /// Target weights after removing the uninformed mass.
    pub weights: Vec<f64>,
    /// Law of `k` given `k >= 1`.
    pub nu_prime: TypeDistribution,
    pub certificate: EquilibriumCertificate,
    pub verification: VerificationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    /// `None` when the lowest posterior is the prior (unbounded stretch).
    pub beta: Option<f64>,
    pub alpha_q: f64,
    pub alpha_1: f64,
    pub q1: Belief,
    pub threshold: f64,
    pub nu0: f64,
    pub feasible: bool,
    pub construction: Option<RobustConstruction>,
}

/// Largest `beta` with `prior + beta * (q - prior)` in the simplex, or `None`
/// when `q` is the prior.
pub fn stretch(prior: &Belief, q: &Belief) -> Option<f64> {
    (0..prior.len())
        .filter(|&i| q[i] < prior[i])
        .map(|i| prior[i] / (prior[i] - q[i]))
        .min_by(f64::total_cmp)
}

/// Whether the benchmark survives uninformed types (mass at `k = 0`), and an
/// equilibrium attaining it when it does.
pub fn robustness_check(game: &GameSpec, bp: &BpSolution) -> Result<RobustnessReport> {
    require_transparent(game)?;
    let nu = game.type_dist().truncated();
    let prior = game.prior();
    let n = prior.len();
    let order = ordered_support(game, bp);
    let (alpha_1, q1) = (bp.weights[order[0]], bp.posteriors[order[0]].clone());
    let beta = stretch(prior, &q1);
    let alpha_q = beta.map_or(1.0, |b| 1.0 - 1.0 / b);
    let threshold = alpha_q * alpha_1;
    let nu0 = nu.zero_mass();
    let feasible = nu0 <= threshold + NORMALIZATION_TOL;
    let mut report = RobustnessReport {
        beta,
        alpha_q,
        alpha_1,
        q1: q1.clone(),
        threshold,
        nu0,
        feasible,
        construction: None,
    };
    if !feasible || nu0 >= 1.0 {
        return Ok(report);
    }

    let delta = nu0 / alpha_1;
    let alpha_first = (alpha_1 - nu0) / (1.0 - nu0);
    let keep_first = alpha_first > NORMALIZATION_TOL;
    let q_star = if keep_first {
        let raw: Vec<f64> = (0..n).map(|i| ((q1[i] - delta * prior[i]) / (1.0 - delta)).max(0.0)).collect();
        Belief::from_weights(&raw)?
    } else {
        q1.clone()
    };
    let mut targets = Vec::new();
    if keep_first {
        targets.push((alpha_first, q_star.clone()));
    }
    for &i in &order[1..] {
        targets.push((bp.weights[i] / (1.0 - nu0), bp.posteriors[i].clone()));
    }
    let nu_prime = nu.positive_part()?;
    let experiment = construct_experiment(prior, &nu_prime, &targets)?;
    let ks: Vec<u32> = nu_prime.support().iter().map(|(k, _)| *k).collect();
    let first_action = bp.support_actions[order[0]];
    let mut on_path: Vec<Option<OnPathEntry>> = order[1..]
        .iter()
        .map(|&i| {
            Some(OnPathEntry {
                belief: bp.posteriors[i].clone(),
                action: bp.support_actions[i],
            })
        })
        .collect();
    if keep_first {
        on_path.insert(0, None);
    }
    let certificate = EquilibriumCertificate {
        game: game.clone(),
        nu,
        strategy: DisclosureStrategy::max_index(targets.len(), n, &ks).with_silent_signal(keep_first.then_some(0)),
        experiment,
        on_path,
        empty_disclosure: Some(OnPathEntry {
            belief: q1.clone(),
            action: first_action,
        }),
        off_path: PunishingAction::pure(q1, game.num_actions(), first_action),
        bp_value: bp.sender_value,
    };
    let verification = verify(&certificate, DEFAULT_TOL);
    report.construction = Some(RobustConstruction {
        q_star,
        weights: targets.iter().map(|(g, _)| *g).collect(),
        nu_prime,
        certificate,
        verification,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Belief {
        Belief::uniform(2)
    }

    #[test]
    fn single_draw_split_is_bayes_inversion() {
        let prior = Belief::new(vec![0.3, 0.7]).unwrap();
        let q = Belief::new(vec![0.6, 0.4]).unwrap();
        let s = binary_split(&prior, &TypeDistribution::deterministic(1).unwrap(), 0.25, &q).unwrap();
        assert!((s.low_column[0] - 0.25 * 0.6 / 0.3).abs() < 1e-15);
        assert!((s.low_column[1] - 0.25 * 0.4 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn example_one_split() {
        let nu = TypeDistribution::geometric(1.0).unwrap();
        let s = binary_split(&half(), &nu, 1.0 / 3.0, &Belief::degenerate(2, 0)).unwrap();
        assert!((s.low_column[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.low_column[1], 0.0);
    }

    #[test]
    fn two_draw_split() {
        let nu = TypeDistribution::deterministic(2).unwrap();
        let s = binary_split(&half(), &nu, 1.0 / 3.0, &Belief::degenerate(2, 0)).unwrap();
        assert!((s.low_column[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.low_column[1], 0.0);
    }

    #[test]
    fn split_rejects_excess_target() {
        let nu = TypeDistribution::deterministic(2).unwrap();
        let err = binary_split(&half(), &nu, 0.8, &Belief::degenerate(2, 0)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSplit { state: 0, .. }));
    }

    #[test]
    fn conditioning_on_a_sure_signal_changes_nothing() {
        let q = Experiment::from_matrix(vec![vec![1.0], vec![1.0]]).unwrap();
        let nu = TypeDistribution::explicit(vec![(1, 0.4), (3, 0.6)]).unwrap();
        let c = conditional_nu_given_top(&q, &nu, &half(), 0).unwrap();
        assert!((c.probability - 1.0).abs() < 1e-15);
        assert_eq!(c.prior, half());
        assert_eq!(c.draws.state_masses(1), nu.support());
        assert_eq!(c.top_draws.state_masses(0), nu.support());
    }

    #[test]
    fn example_one_conditional_prior() {
        let q = Experiment::from_matrix(vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![0.0, 1.0]]).unwrap();
        let nu = TypeDistribution::geometric(1.0).unwrap();
        let c = conditional_nu_given_top(&q, &nu, &half(), 1).unwrap();
        assert!((c.prior[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_draws_from_a_fair_coin() {
        // Outcomes lo-lo, lo-hi, hi-lo, hi-hi; the top is `hi` in three.
        let q = Experiment::from_matrix(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let nu = TypeDistribution::deterministic(2).unwrap();
        let c = conditional_nu_given_top(&q, &nu, &half(), 1).unwrap();
        assert!((c.probability - 0.75).abs() < 1e-15);
        assert_eq!(c.prior, half());
        assert_eq!(c.draws.state_masses(0), vec![(2, 1.0)]);
        let top = c.top_draws.state_masses(0);
        assert!((top[0].1 - 2.0 / 3.0).abs() < 1e-15 && (top[1].1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn null_event() {
        let q = Experiment::from_matrix(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let nu = TypeDistribution::deterministic(2).unwrap();
        assert!(matches!(conditional_nu_given_top(&q, &nu, &half(), 1), Err(Error::NullEvent)));
    }

    #[test]
    fn example_one_experiment() {
        for r in [1.0, 0.5, 0.2] {
            let nu = TypeDistribution::geometric(r).unwrap();
            let targets = vec![(1.0 / 3.0, Belief::degenerate(2, 0)), (2.0 / 3.0, Belief::new(vec![0.25, 0.75]).unwrap())];
            let e = construct_experiment(&half(), &nu, &targets).unwrap();
            assert!((e.prob(0, 1) - r / (r + 2.0)).abs() < 1e-9);
            assert!((e.prob(1, 1) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_targets_two_draws() {
        let nu = TypeDistribution::deterministic(2).unwrap();
        let mut targets = vec![
            (0.5, Belief::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap()),
            (0.25, half()),
            (0.25, Belief::degenerate(2, 1)),
        ];
        // These weights average to 11/24 on the first state, not 1/2.
        let err = construct_experiment(&half(), &nu, &targets).unwrap_err();
        assert!(matches!(err, Error::BadBarycenter(b) if (b - 1.0 / 24.0).abs() < 1e-12));
        targets[2].1 = Belief::new(vec![1.0 / 6.0, 5.0 / 6.0]).unwrap();
        let e = construct_experiment(&half(), &nu, &targets).unwrap();
        assert_eq!(e.num_signals(), 3);
        let events = induced_top_signal_distribution(&e, &nu, &half()).unwrap();
        for ((g, q), ev) in targets.iter().zip(&events) {
            assert!((ev.probability - g).abs() < 1e-9);
            assert!(ev.posterior.as_ref().unwrap().distance(q) < 1e-9);
        }
    }

    #[test]
    fn single_target_is_uninformative() {
        let e = construct_experiment(&half(), &TypeDistribution::deterministic(2).unwrap(), &[(1.0, half())]).unwrap();
        assert_eq!(e.matrix(), &[vec![1.0], vec![1.0]]);
    }

    #[test]
    fn bad_barycenter() {
        let targets = vec![(0.5, Belief::degenerate(2, 0)), (0.5, Belief::new(vec![0.2, 0.8]).unwrap())];
        let err = construct_experiment(&half(), &TypeDistribution::deterministic(1).unwrap(), &targets).unwrap_err();
        assert!(matches!(err, Error::BadBarycenter(_)));
    }

    #[test]
    fn stretch_factor() {
        let q = Belief::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((stretch(&half(), &q).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(stretch(&half(), &Belief::degenerate(2, 0)), Some(1.0));
        assert_eq!(stretch(&half(), &half()), None);
    }
}
