//! Problem instances, posterior algebra, type distributions, and the multiset
//! bookkeeping shared by every solver in the crate.
//!
//! Draws from an experiment are exchangeable, so an information set of a
//! sender who ran the same experiment `k` times is the multiset of signal
//! counts rather than the ordered tuple of outcomes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that probability vectors are normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance used when comparing solver outputs.
pub const SOLVER_TOL: f64 = 1e-9;

/// Default tail mass discarded when an infinite-support type law is truncated.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

fn check_distribution(values: &[f64], what: &str) -> std::result::Result<f64, String> {
    if values.is_empty() {
        return Err(format!("{what} is empty"));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(format!("{what} entry {i} is {v}"));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(format!("{what} sums to {sum}"));
    }
    Ok(sum)
}

/// A probability vector over states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_distribution(&values, "belief").map_err(Error::InvalidBelief)?;
        Ok(Belief(values))
    }

    /// Normalizes nonnegative weights into a belief.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBelief(format!("weights {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(Belief(weights.iter().map(|w| w / total).collect()))
    }

    /// Point mass on `state`.
    pub fn degenerate(num_states: usize, state: usize) -> Self {
        let mut v = vec![0.0; num_states];
        v[state] = 1.0;
        Belief(v)
    }

    pub fn uniform(num_states: usize) -> Self {
        Belief(vec![1.0 / num_states as f64; num_states])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sup-norm distance to another belief.
    pub fn distance(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Expected value of a per-state quantity.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Belief::new(v)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

/// A row-stochastic state-by-signal matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExperimentRepr", into = "ExperimentRepr")]
pub struct Experiment {
    signal_labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ExperimentRepr {
    signal_labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<ExperimentRepr> for Experiment {
    type Error = Error;

    fn try_from(r: ExperimentRepr) -> Result<Self> {
        Experiment::new(r.signal_labels, r.matrix)
    }
}

impl From<Experiment> for ExperimentRepr {
    fn from(e: Experiment) -> Self {
        ExperimentRepr {
            signal_labels: e.signal_labels,
            matrix: e.matrix,
        }
    }
}

/// Canonical signal labels `s1, ..., sm`.
pub fn default_signal_labels(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("s{j}")).collect()
}

impl Experiment {
    pub fn new(signal_labels: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::InvalidExperiment("no rows".into()));
        }
        let m = signal_labels.len();
        if m == 0 {
            return Err(Error::InvalidExperiment("no signals".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidExperiment(format!(
                    "row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidExperiment(format!("row {i} has entries outside [0,1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidExperiment(format!("row {i} sums to {s}")));
            }
        }
        Ok(Experiment {
            signal_labels,
            matrix,
        })
    }

    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = matrix.first().map_or(0, Vec::len);
        Experiment::new(default_signal_labels(m), matrix)
    }

    /// The single-signal experiment that reveals nothing.
    pub fn uninformative(num_states: usize) -> Self {
        Experiment {
            signal_labels: default_signal_labels(1),
            matrix: vec![vec![1.0]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.matrix.len()
    }

    pub fn num_signals(&self) -> usize {
        self.signal_labels.len()
    }

    pub fn signal_labels(&self) -> &[String] {
        &self.signal_labels
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn prob(&self, state: usize, signal: usize) -> f64 {
        self.matrix[state][signal]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.matrix[state]
    }

    pub fn column(&self, signal: usize) -> Vec<f64> {
        self.matrix.iter().map(|row| row[signal]).collect()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_signals() {
            return Err(Error::Dimension(format!(
                "{} labels for {} signals",
                labels.len(),
                self.num_signals()
            )));
        }
        self.signal_labels = labels;
        Ok(self)
    }
}

/// Unordered outcome of `k` draws: `counts[j]` draws showed signal `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalMultiset {
    pub counts: Vec<u32>,
}

impl SignalMultiset {
    pub fn new(counts: Vec<u32>) -> Self {
        SignalMultiset { counts }
    }

    /// Number of draws.
    pub fn size(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn contains(&self, signal: usize) -> bool {
        self.counts[signal] > 0
    }

    /// Indices of signals drawn at least once.
    pub fn present(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, c)| **c > 0).map(|(j, _)| j)
    }

    /// Highest signal index drawn at least once.
    pub fn max_present(&self) -> Option<usize> {
        self.counts.iter().rposition(|c| *c > 0)
    }

    pub fn concat(&self, other: &SignalMultiset) -> SignalMultiset {
        SignalMultiset {
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
        }
    }
}

/// All multisets of size `k` over `m` signals, in descending lexicographic
/// order of the count vector: `(k,0,..)` first, `(..,0,k)` last.
pub fn enumerate_multisets(m: usize, k: u32) -> Vec<SignalMultiset> {
    fn fill(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<SignalMultiset>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(SignalMultiset::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for c in (0..=remaining).rev() {
            prefix.push(c);
            fill(prefix, remaining - c, slots - 1, out);
            prefix.pop();
        }
    }
    assert!(m >= 1, "need at least one signal");
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(m), k, m, &mut out);
    out
}

/// Number of multisets of size `k` over `m` signals, `C(k+m-1, m-1)`.
pub fn multiset_count(m: usize, k: u32) -> usize {
    let (n, r) = (k as usize + m - 1, m - 1);
    let r = r.min(n - r);
    (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Position lookup for the multisets of one size.
#[derive(Clone, Debug)]
pub struct MultisetIndex {
    multisets: Vec<SignalMultiset>,
    rank: HashMap<Vec<u32>, usize>,
}

impl MultisetIndex {
    pub fn new(m: usize, k: u32) -> Self {
        let multisets = enumerate_multisets(m, k);
        let rank = multisets
            .iter()
            .enumerate()
            .map(|(i, ms)| (ms.counts.clone(), i))
            .collect();
        MultisetIndex { multisets, rank }
    }

    pub fn multisets(&self) -> &[SignalMultiset] {
        &self.multisets
    }

    pub fn len(&self) -> usize {
        self.multisets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multisets.is_empty()
    }

    pub fn rank(&self, counts: &[u32]) -> Option<usize> {
        self.rank.get(counts).copied()
    }
}

fn multinomial_coefficient(counts: &[u32]) -> f64 {
    let mut coeff = 1.0;
    let mut seen = 0u32;
    for &c in counts {
        for i in 1..=c {
            seen += 1;
            coeff *= seen as f64 / i as f64;
        }
    }
    coeff
}

/// Probability of drawing exactly these counts in the given state, under
/// i.i.d. draws (multinomial mass function).
pub fn multiset_probability(experiment: &Experiment, state: usize, multiset: &SignalMultiset) -> f64 {
    multinomial_coefficient(&multiset.counts) * likelihood(experiment.row(state), multiset)
}

/// `prod_j row[j]^counts[j]`; the multinomial coefficient is omitted.
pub fn likelihood(row: &[f64], multiset: &SignalMultiset) -> f64 {
    row.iter()
        .zip(&multiset.counts)
        .map(|(q, &c)| q.powi(c as i32))
        .product()
}

/// Bayes update of `prior` on observing the multiset of draws.
pub fn posterior_update(
    prior: &Belief,
    experiment: &Experiment,
    multiset: &SignalMultiset,
) -> Result<Belief> {
    if multiset.counts.len() != experiment.num_signals() {
        return Err(Error::Dimension(format!(
            "multiset over {} signals, experiment has {}",
            multiset.counts.len(),
            experiment.num_signals()
        )));
    }
    if prior.len() != experiment.num_states() {
        return Err(Error::Dimension("prior and experiment disagree on states".into()));
    }
    let weights: Vec<f64> = (0..prior.len())
        .map(|i| prior[i] * likelihood(experiment.row(i), multiset))
        .collect();
    Belief::from_weights(&weights)
}

/// Parametric family of the number of experiments the sender may run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeLaw {
    /// Listed `(k, mass)` pairs.
    Explicit { masses: Vec<(u32, f64)> },
    /// `nu_k = (1-r)^(k-1) r` for `k >= 1`.
    Geometric { r: f64 },
}

/// Where a truncation cut an infinite support.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub max_k: u32,
    pub discarded_mass: f64,
}

/// Distribution of the sender's type `k`.
///
/// An optional state-conditional table replaces the marginal law when the
/// number of draws depends on the state; the transparent-motives recursion
/// produces such tables when it conditions on an event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TypeDistributionRepr", into = "TypeDistributionRepr")]
pub struct TypeDistribution {
    law: TypeLaw,
    allow_zero: bool,
    state_conditional: Option<Vec<Vec<(u32, f64)>>>,
    truncation_tail_tol: f64,
    truncation: Option<Truncation>,
}

#[derive(Serialize, Deserialize)]
struct TypeDistributionRepr {
    #[serde(flatten)]
    law: TypeLaw,
    #[serde(default)]
    allow_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_conditional: Option<Vec<Vec<(u32, f64)>>>,
    #[serde(default = "default_tail_tol")]
    truncation_tail_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation: Option<Truncation>,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

impl TryFrom<TypeDistributionRepr> for TypeDistribution {
    type Error = Error;

    fn try_from(r: TypeDistributionRepr) -> Result<Self> {
        let mut dist = match r.law {
            TypeLaw::Explicit { masses } => TypeDistribution::build_explicit(masses, r.allow_zero)?,
            TypeLaw::Geometric { r: rate } => TypeDistribution::geometric(rate)?,
        };
        dist.allow_zero = r.allow_zero;
        if r.truncation_tail_tol.is_nan() || r.truncation_tail_tol <= 0.0 {
            return Err(Error::InvalidTypes("truncation_tail_tol must be positive".into()));
        }
        dist.truncation_tail_tol = r.truncation_tail_tol;
        dist.truncation = r.truncation;
        if let Some(table) = r.state_conditional {
            dist.state_conditional = Some(normalize_table(table, r.allow_zero)?);
        }
        Ok(dist)
    }
}

impl From<TypeDistribution> for TypeDistributionRepr {
    fn from(d: TypeDistribution) -> Self {
        TypeDistributionRepr {
            law: d.law,
            allow_zero: d.allow_zero,
            state_conditional: d.state_conditional,
            truncation_tail_tol: d.truncation_tail_tol,
            truncation: d.truncation,
        }
    }
}

fn normalize_masses(masses: Vec<(u32, f64)>, allow_zero: bool) -> Result<Vec<(u32, f64)>> {
    let mut merged: Vec<(u32, f64)> = Vec::new();
    let mut sorted = masses;
    sorted.sort_by_key(|(k, _)| *k);
    for (k, mass) in sorted {
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::InvalidTypes(format!("mass {mass} at k = {k}")));
        }
        if k == 0 && mass > 0.0 && !allow_zero {
            return Err(Error::ZeroTypeMass);
        }
        match merged.last_mut() {
            Some((last, m)) if *last == k => *m += mass,
            _ => merged.push((k, mass)),
        }
    }
    merged.retain(|(_, m)| *m > 0.0);
    let total: f64 = merged.iter().map(|(_, m)| m).sum();
    if merged.is_empty() || (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidTypes(format!("masses sum to {total}")));
    }
    Ok(merged.into_iter().map(|(k, m)| (k, m / total)).collect())
}

fn normalize_table(table: Vec<Vec<(u32, f64)>>, allow_zero: bool) -> Result<Vec<Vec<(u32, f64)>>> {
    table
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().map(|(_, m)| m).sum();
            if !(total > 0.0) {
                return Err(Error::InvalidTypes("state-conditional row has no mass".into()));
            }
            normalize_masses(row.into_iter().map(|(k, m)| (k, m / total)).collect(), allow_zero)
        })
        .collect()
}

impl TypeDistribution {
    fn build_explicit(masses: Vec<(u32, f64)>, allow_zero: bool) -> Result<Self> {
        Ok(TypeDistribution {
            law: TypeLaw::Explicit {
                masses: normalize_masses(masses, allow_zero)?,
            },
            allow_zero,
            state_conditional: None,
            truncation_tail_tol: DEFAULT_TAIL_TOL,
            truncation: None,
        })
    }

    /// Explicit `(k, mass)` pairs with support in the positive integers.
    pub fn explicit(masses: Vec<(u32, f64)>) -> Result<Self> {
        Self::build_explicit(masses, false)
    }

    /// Explicit masses that may include `k = 0` (robustness analysis).
    pub fn explicit_with_zero(masses: Vec<(u32, f64)>) -> Result<Self> {
        Self::build_explicit(masses, true)
    }

    pub fn deterministic(k: u32) -> Result<Self> {
        Self::explicit(vec![(k, 1.0)])
    }

    pub fn geometric(r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidTypes(format!("geometric rate {r} outside (0,1]")));
        }
        Ok(TypeDistribution {
            law: TypeLaw::Geometric { r },
            allow_zero: false,
            state_conditional: None,
            truncation_tail_tol: DEFAULT_TAIL_TOL,
            truncation: None,
        })
    }

    /// Per-state laws `nu(k | state)`; each row is renormalized.
    pub fn state_conditional(table: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let table = normalize_table(table, true)?;
        let mut marginal: Vec<(u32, f64)> = table.iter().flatten().copied().collect();
        let n = table.len() as f64;
        marginal.iter_mut().for_each(|(_, m)| *m /= n);
        let mut dist = Self::build_explicit(marginal, true)?;
        dist.state_conditional = Some(table);
        Ok(dist)
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Result<Self> {
        if tail_tol.is_nan() || tail_tol <= 0.0 {
            return Err(Error::InvalidTypes("tail tolerance must be positive".into()));
        }
        self.truncation_tail_tol = tail_tol;
        Ok(self)
    }

    pub fn law(&self) -> &TypeLaw {
        &self.law
    }

    pub fn allow_zero(&self) -> bool {
        self.allow_zero
    }

    pub fn tail_tol(&self) -> f64 {
        self.truncation_tail_tol
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn is_state_conditional(&self) -> bool {
        self.state_conditional.is_some()
    }

    /// Explicit law on `{1, ..., K}` with discarded tail below `tail_tol`,
    /// renormalized. Explicit laws are returned unchanged.
    pub fn truncate(&self, tail_tol: f64) -> TypeDistribution {
        match self.law {
            TypeLaw::Explicit { .. } => self.clone(),
            TypeLaw::Geometric { r } => {
                let survival = 1.0 - r;
                let mut max_k = 1u32;
                let mut tail = survival;
                while tail >= tail_tol {
                    max_k += 1;
                    tail *= survival;
                }
                let kept = 1.0 - tail;
                let masses = (1..=max_k)
                    .map(|k| (k, survival.powi(k as i32 - 1) * r / kept))
                    .collect();
                TypeDistribution {
                    law: TypeLaw::Explicit { masses },
                    allow_zero: self.allow_zero,
                    state_conditional: None,
                    truncation_tail_tol: tail_tol,
                    truncation: Some(Truncation {
                        max_k,
                        discarded_mass: tail,
                    }),
                }
            }
        }
    }

    /// Truncates with the distribution's own tail tolerance.
    pub fn truncated(&self) -> TypeDistribution {
        self.truncate(self.truncation_tail_tol)
    }

    /// Marginal `(k, mass)` pairs in ascending `k`.
    pub fn support(&self) -> Vec<(u32, f64)> {
        match &self.law {
            TypeLaw::Explicit { masses } => masses.clone(),
            TypeLaw::Geometric { .. } => self.truncated().support(),
        }
    }

    /// Law of `k` in the given state.
    pub fn state_masses(&self, state: usize) -> Vec<(u32, f64)> {
        match &self.state_conditional {
            Some(table) => table[state].clone(),
            None => self.support(),
        }
    }

    pub fn mass_at(&self, k: u32) -> f64 {
        self.support()
            .iter()
            .find(|(kk, _)| *kk == k)
            .map_or(0.0, |(_, m)| *m)
    }

    pub fn zero_mass(&self) -> f64 {
        self.mass_at(0)
    }

    pub fn max_k(&self) -> u32 {
        match &self.state_conditional {
            Some(table) => table.iter().flatten().map(|(k, _)| *k).max().unwrap_or(0),
            None => self.support().last().map_or(0, |(k, _)| *k),
        }
    }

    /// The law conditional on `k >= 1`.
    pub fn positive_part(&self) -> Result<TypeDistribution> {
        let support = self.support();
        let zero = self.zero_mass();
        if zero >= 1.0 {
            return Err(Error::InvalidTypes("all mass sits at k = 0".into()));
        }
        let masses = support
            .into_iter()
            .filter(|(k, _)| *k > 0)
            .map(|(k, m)| (k, m / (1.0 - zero)))
            .collect();
        let mut out = Self::explicit(masses)?;
        out.truncation = self.truncation_diagnostics();
        out.truncation_tail_tol = self.truncation_tail_tol;
        Ok(out)
    }

    /// Truncation bound and discarded mass, computing them for laws that
    /// have not been truncated yet.
    pub fn truncation_diagnostics(&self) -> Option<Truncation> {
        match self.law {
            TypeLaw::Geometric { .. } => self.truncated().truncation,
            TypeLaw::Explicit { .. } => self.truncation,
        }
    }
}

/// A finite persuasion game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameSpecRepr", into = "GameSpecRepr")]
pub struct GameSpec {
    states: Vec<String>,
    prior: Belief,
    actions: Vec<String>,
    receiver_utility: Vec<Vec<f64>>,
    sender_utility: Vec<Vec<f64>>,
    type_dist: TypeDistribution,
}

#[derive(Serialize, Deserialize)]
struct GameSpecRepr {
    states: Vec<String>,
    prior: Vec<f64>,
    actions: Vec<String>,
    receiver_utility: Vec<Vec<f64>>,
    sender_utility: Vec<Vec<f64>>,
    type_dist: TypeDistribution,
}

impl TryFrom<GameSpecRepr> for GameSpec {
    type Error = Error;

    fn try_from(r: GameSpecRepr) -> Result<Self> {
        GameSpec::new(
            r.states,
            r.prior,
            r.actions,
            r.receiver_utility,
            r.sender_utility,
            r.type_dist,
        )
    }
}

impl From<GameSpec> for GameSpecRepr {
    fn from(g: GameSpec) -> Self {
        GameSpecRepr {
            states: g.states,
            prior: g.prior.into(),
            actions: g.actions,
            receiver_utility: g.receiver_utility,
            sender_utility: g.sender_utility,
            type_dist: g.type_dist,
        }
    }
}

impl GameSpec {
    /// Utilities are indexed `[action][state]`.
    pub fn new(
        states: Vec<String>,
        prior: Vec<f64>,
        actions: Vec<String>,
        receiver_utility: Vec<Vec<f64>>,
        sender_utility: Vec<Vec<f64>>,
        type_dist: TypeDistribution,
    ) -> Result<Self> {
        let n = states.len();
        if n < 2 {
            return Err(Error::InvalidGame("need at least two states".into()));
        }
        if actions.len() < 2 {
            return Err(Error::InvalidGame("need at least two actions".into()));
        }
        if prior.len() != n {
            return Err(Error::InvalidGame(format!(
                "prior has {} entries for {n} states",
                prior.len()
            )));
        }
        if let Some((state, &mass)) = prior.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::NonPositivePrior { state, mass });
        }
        let sum: f64 = prior.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::PriorNotNormalized(sum));
        }
        for (name, table) in [("receiver_utility", &receiver_utility), ("sender_utility", &sender_utility)] {
            if table.len() != actions.len() {
                return Err(Error::InvalidGame(format!(
                    "{name} has {} rows for {} actions",
                    table.len(),
                    actions.len()
                )));
            }
            for (a, row) in table.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::InvalidGame(format!(
                        "{name} row {a} has {} entries for {n} states",
                        row.len()
                    )));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGame(format!("{name} row {a} is not finite")));
                }
            }
        }
        if let Some(table) = &type_dist.state_conditional {
            if table.len() != n {
                return Err(Error::InvalidGame("state-conditional type table has wrong row count".into()));
            }
        }
        Ok(GameSpec {
            states,
            prior: Belief(prior),
            actions,
            receiver_utility,
            sender_utility,
            type_dist,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn prior(&self) -> &Belief {
        &self.prior
    }

    pub fn type_dist(&self) -> &TypeDistribution {
        &self.type_dist
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn receiver_utility(&self) -> &[Vec<f64>] {
        &self.receiver_utility
    }

    pub fn sender_utility(&self) -> &[Vec<f64>] {
        &self.sender_utility
    }

    pub fn with_type_dist(mut self, type_dist: TypeDistribution) -> Self {
        self.type_dist = type_dist;
        self
    }

    pub fn receiver_payoff(&self, action: usize, belief: &Belief) -> f64 {
        belief.expect(&self.receiver_utility[action])
    }

    pub fn sender_payoff(&self, action: usize, belief: &Belief) -> f64 {
        belief.expect(&self.sender_utility[action])
    }

    /// Expected sender payoff of a mixed action in each state.
    pub fn sender_mixture_payoffs(&self, mixture: &[f64]) -> Vec<f64> {
        (0..self.num_states())
            .map(|w| {
                mixture
                    .iter()
                    .enumerate()
                    .map(|(a, x)| x * self.sender_utility[a][w])
                    .sum()
            })
            .collect()
    }

    /// How much the receiver loses by playing `action` instead of a best
    /// reply at `belief` (zero when `action` is optimal).
    pub fn best_reply_gap(&self, action: usize, belief: &Belief) -> f64 {
        let best = (0..self.num_actions())
            .map(|a| self.receiver_payoff(a, belief))
            .fold(f64::NEG_INFINITY, f64::max);
        best - self.receiver_payoff(action, belief)
    }

    /// `Err((action, spread))` for the first action whose sender payoff varies
    /// across states by more than `tol`.
    pub fn check_transparent(&self, tol: f64) -> std::result::Result<(), (usize, f64)> {
        for (a, row) in self.sender_utility.iter().enumerate() {
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            if hi - lo > tol {
                return Err((a, hi - lo));
            }
        }
        Ok(())
    }

    pub fn is_transparent(&self) -> bool {
        self.check_transparent(NORMALIZATION_TOL).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_experiment(r: f64) -> Experiment {
        let y = r / (r + 2.0);
        Experiment::from_matrix(vec![vec![1.0 - y, y], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn high_signal_posterior_matches_example_one() {
        let prior = Belief::uniform(2);
        let post = posterior_update(&prior, &example1_experiment(1.0), &SignalMultiset::new(vec![0, 1])).unwrap();
        assert!((post[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn uninformative_experiment_keeps_prior() {
        let prior = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        let e = Experiment::from_matrix(vec![vec![0.1, 0.9]; 3]).unwrap();
        let post = posterior_update(&prior, &e, &SignalMultiset::new(vec![4, 3])).unwrap();
        assert!(post.distance(&prior) < 1e-15);
    }

    #[test]
    fn two_draw_posterior() {
        let prior = Belief::uniform(2);
        let e = Experiment::from_matrix(vec![vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let post = posterior_update(&prior, &e, &SignalMultiset::new(vec![2, 0])).unwrap();
        assert!((post[0] - 0.9).abs() < 1e-15);
        assert!((post[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn impossible_evidence_is_an_error() {
        let e = Experiment::from_matrix(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let err = posterior_update(&Belief::uniform(2), &e, &SignalMultiset::new(vec![0, 1]));
        assert!(matches!(err, Err(Error::ImpossibleEvidence)));
    }

    #[test]
    fn geometric_truncation_bound() {
        let t = TypeDistribution::geometric(0.5).unwrap().truncate(1e-10);
        let support = t.support();
        assert_eq!(support.len(), 34);
        assert_eq!(t.truncation().unwrap().max_k, 34);
        let total: f64 = support.iter().map(|(_, m)| m).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(t.truncation().unwrap().discarded_mass < 1e-10);
    }

    #[test]
    fn degenerate_geometric_and_explicit_truncation() {
        let t = TypeDistribution::geometric(1.0).unwrap().truncate(1e-10);
        assert_eq!(t.support(), vec![(1, 1.0)]);
        let d = TypeDistribution::deterministic(3).unwrap();
        assert_eq!(d.truncate(1e-10), d);
    }

    #[test]
    fn multiset_enumeration_order_and_counts() {
        let got: Vec<Vec<u32>> = enumerate_multisets(2, 3).into_iter().map(|m| m.counts).collect();
        assert_eq!(got, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        assert_eq!(enumerate_multisets(3, 2).len(), 6);
        assert_eq!(enumerate_multisets(1, 5), vec![SignalMultiset::new(vec![5])]);
        for m in 1..5 {
            for k in 0..7 {
                assert_eq!(enumerate_multisets(m, k).len(), multiset_count(m, k));
            }
        }
    }

    #[test]
    fn multiset_probability_examples() {
        let det = Experiment::from_matrix(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(multiset_probability(&det, 0, &SignalMultiset::new(vec![4, 0])), 1.0);
        assert!((multiset_probability(&det, 1, &SignalMultiset::new(vec![1, 1])) - 0.5).abs() < 1e-15);
        let s = 1.0 / 3f64.sqrt();
        let ex3 = Experiment::from_matrix(vec![vec![1.0 - s, s], vec![s, 1.0 - s]]).unwrap();
        let p = multiset_probability(&ex3, 1, &SignalMultiset::new(vec![2, 0]));
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constructors_reject_bad_inputs() {
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        assert!(Experiment::from_matrix(vec![vec![0.5, 0.6], vec![1.0, 0.0]]).is_err());
        assert!(Experiment::from_matrix(vec![vec![1.5, -0.5], vec![1.0, 0.0]]).is_err());
        assert!(matches!(
            TypeDistribution::explicit(vec![(0, 0.1), (1, 0.9)]),
            Err(Error::ZeroTypeMass)
        ));
        assert!(TypeDistribution::explicit_with_zero(vec![(0, 0.1), (1, 0.9)]).is_ok());
        assert!(TypeDistribution::geometric(0.0).is_err());
        let nu = TypeDistribution::deterministic(1).unwrap();
        let u = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let names = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        assert!(matches!(
            GameSpec::new(names(2), vec![0.5, 0.4], names(2), u.clone(), u.clone(), nu.clone()),
            Err(Error::PriorNotNormalized(_))
        ));
        assert!(matches!(
            GameSpec::new(names(2), vec![1.0, 0.0], names(2), u.clone(), u.clone(), nu.clone()),
            Err(Error::NonPositivePrior { .. })
        ));
        assert!(GameSpec::new(names(1), vec![1.0], names(2), u.clone(), u, nu).is_err());
    }

    #[test]
    fn positive_part_renormalizes() {
        let nu = TypeDistribution::explicit_with_zero(vec![(0, 0.2), (1, 0.4), (2, 0.4)]).unwrap();
        let pos = nu.positive_part().unwrap();
        assert_eq!(pos.support(), vec![(1, 0.5), (2, 0.5)]);
    }
}
