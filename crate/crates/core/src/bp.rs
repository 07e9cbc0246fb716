//! The full-commitment benchmark: an obedience-constrained linear program over
//! direct recommendation policies, plus the search for a punishing action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpStatus, Relation, Sense};
use crate::model::{Belief, GameSpec, SOLVER_TOL};

/// Actions recommended with less than this probability are dropped from the
/// benchmark support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Spread of an optimal coordinate above which the optimum is not unique.
const UNIQUENESS_TOL: f64 = 1e-6;

/// Optimal direct recommendation policy and the quantities derived from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpSolution {
    /// Joint law `P(a, w)`, indexed `[action][state]`.
    pub policy: Vec<Vec<f64>>,
    /// Actions recommended with positive probability, ascending index.
    pub support_actions: Vec<usize>,
    /// `P(. | a)` for each support action.
    pub posteriors: Vec<Belief>,
    /// `P(a)` for each support action.
    pub weights: Vec<f64>,
    /// `Q*[i][j] = P(a_j | w_i)` over the support actions.
    pub recommendation_matrix: Vec<Vec<f64>>,
    pub sender_value: f64,
    pub unique: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BpSolution {
    /// `sum_i weights[i] * posteriors[i]` minus the prior, sup norm.
    pub fn bayes_plausibility_residual(&self, prior: &Belief) -> f64 {
        (0..prior.len())
            .map(|w| {
                let mean: f64 = self
                    .weights
                    .iter()
                    .zip(&self.posteriors)
                    .map(|(a, q)| a * q[w])
                    .sum();
                (mean - prior[w]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Position of `action` within the support, if recommended.
    pub fn support_position(&self, action: usize) -> Option<usize> {
        self.support_actions.iter().position(|a| *a == action)
    }
}

fn var(a: usize, w: usize, n: usize) -> usize {
    a * n + w
}

fn obedience_program(game: &GameSpec) -> LinearProgram {
    let (n, na) = (game.num_states(), game.num_actions());
    let u = game.receiver_utility();
    let v = game.sender_utility();
    let mut lp = LinearProgram::new(Sense::Maximize);
    for a in 0..na {
        for w in 0..n {
            lp.add_var(v[a][w], (0.0, f64::INFINITY));
        }
    }
    for w in 0..n {
        let row = (0..na).map(|a| (var(a, w, n), 1.0)).collect();
        lp.add_constraint(row, Relation::Eq, game.prior()[w]);
    }
    for a in 0..na {
        for b in 0..na {
            if a == b {
                continue;
            }
            let row = (0..n).map(|w| (var(a, w, n), u[a][w] - u[b][w])).collect();
            lp.add_constraint(row, Relation::Ge, 0.0);
        }
    }
    lp
}

/// Sender value of the policy that reveals nothing, with receiver ties
/// broken in the sender's favor.
pub fn uninformative_value(game: &GameSpec) -> f64 {
    let prior = game.prior();
    (0..game.num_actions())
        .filter(|a| game.best_reply_gap(*a, prior) <= SOLVER_TOL)
        .map(|a| game.sender_payoff(a, prior))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves the obedience LP and extracts posteriors, weights and `Q*`.
///
/// When the optimum is not unique, the policy that lexicographically
/// maximizes `P(a, w)` in `(action, state)` order is selected and
/// `unique` is cleared.
pub fn solve_bp(game: &GameSpec) -> Result<BpSolution> {
    let (n, na) = (game.num_states(), game.num_actions());
    let mut lp = obedience_program(game);
    let first = lp
        .solve()
        .map_err(|e| Error::Lp(format!("benchmark program: {e}")))?;
    let value = first.objective;
    let slack = SOLVER_TOL * value.abs().max(1.0);
    let objective = lp_objective(game);
    lp.add_constraint(
        objective.iter().copied().enumerate().collect(),
        Relation::Ge,
        value - slack,
    );

    let mut unique = true;
    'outer: for i in 0..lp.num_vars() {
        let mut extremes = [0.0; 2];
        for (slot, sense) in [Sense::Maximize, Sense::Minimize].into_iter().enumerate() {
            let mut probe = lp.clone();
            let mut c = vec![0.0; probe.num_vars()];
            c[i] = 1.0;
            probe.set_objective(sense, c);
            extremes[slot] = probe.solve()?.objective;
        }
        if extremes[0] - extremes[1] > UNIQUENESS_TOL {
            unique = false;
            break 'outer;
        }
    }

    let mut warnings = Vec::new();
    let values = if unique {
        first.values
    } else {
        warnings.push(
            "benchmark policy is not unique; selected the lexicographically maximal optimum".into(),
        );
        let mut probe = lp.clone();
        let mut last = first.values;
        for i in 0..probe.num_vars() {
            let mut c = vec![0.0; probe.num_vars()];
            c[i] = 1.0;
            probe.set_objective(Sense::Maximize, c);
            let sol = probe.solve()?;
            probe.add_constraint(vec![(i, 1.0)], Relation::Ge, sol.objective - 1e-12);
            last = sol.values;
        }
        last
    };

    let mut policy = vec![vec![0.0; n]; na];
    for a in 0..na {
        for w in 0..n {
            policy[a][w] = values[var(a, w, n)].max(0.0);
        }
    }
    // Column sums must reproduce the prior exactly.
    for w in 0..n {
        let total: f64 = (0..na).map(|a| policy[a][w]).sum();
        let scale = game.prior()[w] / total;
        (0..na).for_each(|a| policy[a][w] *= scale);
    }

    let mut support_actions = Vec::new();
    let mut posteriors = Vec::new();
    let mut weights = Vec::new();
    for (a, row) in policy.iter().enumerate() {
        let weight: f64 = row.iter().sum();
        if weight > SUPPORT_TOL {
            support_actions.push(a);
            posteriors.push(Belief::from_weights(row)?);
            weights.push(weight);
        }
    }
    let total_weight: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total_weight);

    let recommendation_matrix = (0..n)
        .map(|w| {
            let row: Vec<f64> = support_actions.iter().map(|&a| policy[a][w]).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();

    let sender_value = (0..na)
        .flat_map(|a| (0..n).map(move |w| (a, w)))
        .map(|(a, w)| policy[a][w] * game.sender_utility()[a][w])
        .sum();

    Ok(BpSolution {
        policy,
        support_actions,
        posteriors,
        weights,
        recommendation_matrix,
        sender_value,
        unique,
        warnings,
    })
}

fn lp_objective(game: &GameSpec) -> Vec<f64> {
    game.sender_utility().iter().flatten().copied().collect()
}

/// A receiver best reply that is statewise no better for the sender than any
/// benchmark action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PunishingAction {
    pub belief: Belief,
    /// Mixed action over all of `A`.
    pub mixture: Vec<f64>,
}

impl PunishingAction {
    pub fn pure(belief: Belief, num_actions: usize, action: usize) -> Self {
        let mut mixture = vec![0.0; num_actions];
        mixture[action] = 1.0;
        PunishingAction { belief, mixture }
    }

    /// Largest receiver loss from any action in the mixture's support.
    pub fn optimality_residual(&self, game: &GameSpec) -> f64 {
        self.mixture
            .iter()
            .enumerate()
            .filter(|(_, x)| **x > 0.0)
            .map(|(a, _)| game.best_reply_gap(a, &self.belief))
            .fold(0.0, f64::max)
    }

    /// Largest statewise excess of the mixture's sender payoff over the
    /// worst payoff among `reference` actions (nonpositive when punishing).
    pub fn dominance_residual(&self, game: &GameSpec, reference: &[usize]) -> f64 {
        let payoffs = game.sender_mixture_payoffs(&self.mixture);
        (0..game.num_states())
            .map(|w| {
                let floor = reference
                    .iter()
                    .map(|&b| game.sender_utility()[b][w])
                    .fold(f64::INFINITY, f64::min);
                payoffs[w] - floor
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Re-checks both defining properties from scratch.
    pub fn audit(&self, game: &GameSpec, reference: &[usize]) -> std::result::Result<(), String> {
        let sum: f64 = self.mixture.iter().sum();
        if self.mixture.len() != game.num_actions()
            || self.mixture.iter().any(|x| *x < -SOLVER_TOL)
            || (sum - 1.0).abs() > SOLVER_TOL
        {
            return Err(format!("mixture {:?} is not a distribution over actions", self.mixture));
        }
        let opt = self.optimality_residual(game);
        if opt > SOLVER_TOL {
            return Err(format!("mixture is not a best reply (loss {opt:e})"));
        }
        let dom = self.dominance_residual(game, reference);
        if dom > SOLVER_TOL {
            return Err(format!("mixture beats a benchmark action by {dom:e}"));
        }
        Ok(())
    }
}

/// Subsets of `0..n` of size `size`, lexicographic.
fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Most central belief at which every action in `actions` is a best reply;
/// `None` when no such belief exists.
fn belief_supporting(game: &GameSpec, actions: &[usize]) -> Result<Option<Belief>> {
    let n = game.num_states();
    let u = game.receiver_utility();
    let mut lp = LinearProgram::new(Sense::Maximize);
    for _ in 0..n {
        lp.add_var(0.0, (0.0, 1.0));
    }
    let margin = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    lp.add_constraint((0..n).map(|w| (w, 1.0)).collect(), Relation::Eq, 1.0);
    let lead = actions[0];
    for &d in &actions[1..] {
        lp.add_constraint((0..n).map(|w| (w, u[lead][w] - u[d][w])).collect(), Relation::Eq, 0.0);
    }
    for b in (0..game.num_actions()).filter(|b| !actions.contains(b)) {
        let mut row: Vec<(usize, f64)> = (0..n).map(|w| (w, u[lead][w] - u[b][w])).collect();
        row.push((margin, -1.0));
        lp.add_constraint(row, Relation::Ge, 0.0);
    }
    match lp.solve_status() {
        Ok(sol) if sol.objective >= -1e-12 => {
            let q: Vec<f64> = sol.values[..n].iter().map(|x| x.max(0.0)).collect();
            Ok(Some(Belief::from_weights(&q)?))
        }
        Ok(_) | Err(LpStatus::Infeasible) => Ok(None),
        Err(LpStatus::Unbounded) => Err(Error::Lp("belief program unbounded".into())),
    }
}

/// Mixture over `actions` that is statewise below `floor`, if any.
fn dominated_mixture(game: &GameSpec, actions: &[usize], floor: &[f64]) -> Result<Option<Vec<f64>>> {
    let v = game.sender_utility();
    let n = game.num_states();
    let mut mixture = vec![0.0; game.num_actions()];
    if let [only] = actions {
        if (0..n).all(|w| v[*only][w] <= floor[w] + 1e-12) {
            mixture[*only] = 1.0;
            return Ok(Some(mixture));
        }
        return Ok(None);
    }
    let mut lp = LinearProgram::new(Sense::Maximize);
    for _ in actions {
        lp.add_var(0.0, (0.0, 1.0));
    }
    let slack = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    lp.add_constraint((0..actions.len()).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    for w in 0..n {
        let mut row: Vec<(usize, f64)> = actions.iter().enumerate().map(|(i, &d)| (i, v[d][w])).collect();
        row.push((slack, 1.0));
        lp.add_constraint(row, Relation::Le, floor[w]);
    }
    match lp.solve_status() {
        Ok(sol) if sol.objective >= -1e-12 => {
            let total: f64 = sol.values[..actions.len()].iter().map(|x| x.max(0.0)).sum();
            for (i, &d) in actions.iter().enumerate() {
                mixture[d] = sol.values[i].max(0.0) / total;
            }
            Ok(Some(mixture))
        }
        Ok(_) | Err(LpStatus::Infeasible) => Ok(None),
        Err(LpStatus::Unbounded) => Err(Error::Lp("mixture program unbounded".into())),
    }
}

/// Searches supports of increasing size (lexicographic within a size) for a
/// punishing action with respect to `support_actions`; the first witness wins.
pub fn find_punishing_action(game: &GameSpec, support_actions: &[usize]) -> Result<Option<PunishingAction>> {
    if support_actions.is_empty() {
        return Err(Error::InvalidGame("empty benchmark support".into()));
    }
    let floor: Vec<f64> = (0..game.num_states())
        .map(|w| {
            support_actions
                .iter()
                .map(|&b| game.sender_utility()[b][w])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    for size in 1..=game.num_actions() {
        for actions in combinations(game.num_actions(), size) {
            let Some(mixture) = dominated_mixture(game, &actions, &floor)? else {
                continue;
            };
            let Some(belief) = belief_supporting(game, &actions)? else {
                continue;
            };
            return Ok(Some(PunishingAction { belief, mixture }));
        }
    }
    Ok(None)
}
