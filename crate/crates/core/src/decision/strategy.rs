use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_multisets, SignalMultiset};

/// Behavior of one type. Rules are indexed by the rank of the multiset in
/// [`enumerate_multisets`] order; each rule is a distribution over signals
/// supported on the signals present in that multiset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeStrategy {
    pub k: u32,
    /// Probability of drawing `k - 1` signals and learning the state.
    pub state_branch_weight: f64,
    /// `[multiset of size k][signal]`.
    pub all_signals: Vec<Vec<f64>>,
    /// `[multiset of size k - 1][state][signal]`; empty for `k = 1`.
    pub state_revealed: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisclosureStrategy {
    pub num_signals: usize,
    pub num_states: usize,
    /// Sorted by ascending `k`.
    pub types: Vec<TypeStrategy>,
    /// A signal whose disclosure is replaced by disclosing nothing.
    #[serde(default)]
    pub silent_signal: Option<usize>,
}

fn point_mass(m: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[j] = 1.0;
    v
}

fn top(ms: &SignalMultiset) -> usize {
    ms.max_present().expect("nonempty multiset")
}

impl TypeStrategy {
    /// Always draws `k` signals and discloses the highest-indexed one.
    pub fn max_index(m: usize, n: usize, k: u32) -> Self {
        let all_signals = enumerate_multisets(m, k).iter().map(|ms| point_mass(m, top(ms))).collect();
        let state_revealed = if k >= 2 {
            enumerate_multisets(m, k - 1)
                .iter()
                .map(|ms| vec![point_mass(m, top(ms)); n])
                .collect()
        } else {
            Vec::new()
        };
        TypeStrategy {
            k,
            state_branch_weight: 0.0,
            all_signals,
            state_revealed,
        }
    }

    pub fn rule(&self, branch_state: Option<usize>, rank: usize) -> &[f64] {
        match branch_state {
            None => &self.all_signals[rank],
            Some(state) => &self.state_revealed[rank][state],
        }
    }
}

impl DisclosureStrategy {
    /// Max-signal disclosure for every listed type.
    pub fn max_index(m: usize, n: usize, ks: &[u32]) -> Self {
        let mut ks = ks.to_vec();
        ks.sort_unstable();
        ks.dedup();
        DisclosureStrategy {
            num_signals: m,
            num_states: n,
            types: ks.into_iter().filter(|k| *k > 0).map(|k| TypeStrategy::max_index(m, n, k)).collect(),
            silent_signal: None,
        }
    }

    /// Types with `k >= 2` learn the state and disclose `preferred[state]`
    /// when they hold it, otherwise their highest-indexed signal. Types with
    /// `k = 1` disclose their single draw.
    pub fn state_preferred(m: usize, n: usize, ks: &[u32], preferred: &[usize]) -> Self {
        let mut s = Self::max_index(m, n, ks);
        for t in s.types.iter_mut().filter(|t| t.k >= 2) {
            t.state_branch_weight = 1.0;
            for (ms, rules) in enumerate_multisets(m, t.k - 1).iter().zip(t.state_revealed.iter_mut()) {
                for (state, rule) in rules.iter_mut().enumerate() {
                    let j = if ms.contains(preferred[state]) { preferred[state] } else { top(ms) };
                    *rule = point_mass(m, j);
                }
            }
        }
        s
    }

    pub fn with_silent_signal(mut self, signal: Option<usize>) -> Self {
        self.silent_signal = signal;
        self
    }

    pub fn type_strategy(&self, k: u32) -> Option<&TypeStrategy> {
        self.types.binary_search_by_key(&k, |t| t.k).ok().map(|i| &self.types[i])
    }

    pub fn ks(&self) -> Vec<u32> {
        self.types.iter().map(|t| t.k).collect()
    }

    /// `lambda * self + (1 - lambda) * other`, type by type.
    pub fn mix(&self, other: &DisclosureStrategy, lambda: f64) -> Result<DisclosureStrategy> {
        if self.ks() != other.ks() || self.num_signals != other.num_signals || self.num_states != other.num_states {
            return Err(Error::Dimension("strategies cover different types".into()));
        }
        let blend = |a: &[f64], wa: f64, b: &[f64], wb: f64| -> Vec<f64> {
            let total = wa + wb;
            if total <= 0.0 {
                return a.to_vec();
            }
            a.iter().zip(b).map(|(x, y)| (wa * x + wb * y) / total).collect()
        };
        let types = self
            .types
            .iter()
            .zip(&other.types)
            .map(|(a, b)| {
                // Rules are mixed in proportion to how often each strategy
                // reaches them, so the induced matrix mixes linearly.
                let (ba, bb) = (a.state_branch_weight, b.state_branch_weight);
                let (wa_all, wb_all) = (lambda * (1.0 - ba), (1.0 - lambda) * (1.0 - bb));
                let (wa_st, wb_st) = (lambda * ba, (1.0 - lambda) * bb);
                TypeStrategy {
                    k: a.k,
                    state_branch_weight: lambda * ba + (1.0 - lambda) * bb,
                    all_signals: a
                        .all_signals
                        .iter()
                        .zip(&b.all_signals)
                        .map(|(x, y)| blend(x, wa_all, y, wb_all))
                        .collect(),
                    state_revealed: a
                        .state_revealed
                        .iter()
                        .zip(&b.state_revealed)
                        .map(|(xs, ys)| xs.iter().zip(ys).map(|(x, y)| blend(x, wa_st, y, wb_st)).collect())
                        .collect(),
                }
            })
            .collect();
        Ok(DisclosureStrategy {
            num_signals: self.num_signals,
            num_states: self.num_states,
            types,
            silent_signal: self.silent_signal,
        })
    }

    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        let m = self.num_signals;
        let bad = |msg: String| Err(Error::Dimension(msg));
        let check_rule = |rule: &[f64], ms: &SignalMultiset, k: u32| -> Result<()> {
            if rule.len() != m {
                return bad(format!("rule for k = {k} has {} entries", rule.len()));
            }
            let sum: f64 = rule.iter().sum();
            if (sum - 1.0).abs() > TOL || rule.iter().any(|x| !(*x >= -TOL)) {
                return bad(format!("rule for k = {k} is not a distribution"));
            }
            if rule.iter().enumerate().any(|(j, x)| *x > TOL && !ms.contains(j)) {
                return bad(format!("rule for k = {k} discloses a signal not held"));
            }
            Ok(())
        };
        if let Some(s) = self.silent_signal {
            if s >= m {
                return bad(format!("silent signal {s} out of range"));
            }
        }
        for (i, t) in self.types.iter().enumerate() {
            if t.k == 0 || (i > 0 && self.types[i - 1].k >= t.k) {
                return bad("types must be positive and strictly ascending".into());
            }
            let b = t.state_branch_weight;
            if !(0.0..=1.0).contains(&b) || (t.k == 1 && b != 0.0) {
                return bad(format!("invalid branch weight {b} for k = {}", t.k));
            }
            let full = enumerate_multisets(m, t.k);
            if full.len() != t.all_signals.len() {
                return bad(format!("k = {} needs {} rules", t.k, full.len()));
            }
            for (ms, rule) in full.iter().zip(&t.all_signals) {
                check_rule(rule, ms, t.k)?;
            }
            if t.k >= 2 {
                let partial = enumerate_multisets(m, t.k - 1);
                if partial.len() != t.state_revealed.len() {
                    return bad(format!("k = {} needs {} state rules", t.k, partial.len()));
                }
                for (ms, rules) in partial.iter().zip(&t.state_revealed) {
                    if rules.len() != self.num_states {
                        return bad(format!("state rules for k = {} cover {} states", t.k, rules.len()));
                    }
                    for rule in rules {
                        check_rule(rule, ms, t.k)?;
                    }
                }
            } else if !t.state_revealed.is_empty() {
                return bad("k = 1 has no state branch".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_index_validates() {
        let s = DisclosureStrategy::max_index(3, 2, &[4, 1, 2, 2]);
        assert_eq!(s.ks(), vec![1, 2, 4]);
        s.validate().unwrap();
        assert_eq!(s.type_strategy(4).unwrap().all_signals[0], vec![1.0, 0.0, 0.0]);
        assert!(s.type_strategy(3).is_none());
    }

    #[test]
    fn rejects_undrawn_disclosure() {
        let mut s = DisclosureStrategy::max_index(2, 2, &[2]);
        s.types[0].all_signals[0] = vec![0.0, 1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn single_draw_cannot_learn_state() {
        let mut s = DisclosureStrategy::max_index(2, 2, &[1]);
        s.types[0].state_branch_weight = 0.5;
        assert!(s.validate().is_err());
    }
}
