//! Bundled two-state games used as regression fixtures.
//!
//! States are `(w0, w1)` and beliefs are often quoted as the probability of
//! `w1`. Where only the receiver's decision thresholds are pinned down, the
//! receiver utilities below are one linear choice realizing them.

use crate::error::Result;
use crate::model::{GameSpec, TypeDistribution};

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Product adoption: adopting pays the receiver -3 in the low state and 1 in
/// the high state, so adoption needs belief at least 3/4. The sender gets 1
/// from adoption. Types are geometric with rate `r`.
pub fn product_adoption(r: f64) -> Result<GameSpec> {
    product_adoption_with(TypeDistribution::geometric(r)?)
}

pub fn product_adoption_with(nu: TypeDistribution) -> Result<GameSpec> {
    GameSpec::new(
        labels(&["low", "high"]),
        vec![0.5, 0.5],
        labels(&["reject", "adopt"]),
        vec![vec![0.0, 0.0], vec![-3.0, 1.0]],
        vec![vec![0.0, 0.0], vec![1.0, 1.0]],
        nu,
    )
}

/// Receiver with cutoffs 1/3 and 2/3: `a0` below 1/3, `a1` in between,
/// `a2` above 2/3.
fn three_band_receiver() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![2.0 / 3.0, 2.0 / 3.0], vec![0.0, 1.0]]
}

/// State-dependent sender preferences opposed to the receiver's: `a0` pays
/// the sender 3/2 in `w1`, `a2` pays 3/2 in `w0`, and `a1` pays nothing.
pub fn state_dependent(nu: TypeDistribution) -> Result<GameSpec> {
    GameSpec::new(
        labels(&["w0", "w1"]),
        vec![0.5, 0.5],
        labels(&["a0", "a1", "a2"]),
        three_band_receiver(),
        vec![vec![0.0, 1.5], vec![0.0, 0.0], vec![1.5, 0.0]],
        nu,
    )
}

/// Same payoffs as [`state_dependent`]; with mass at `k = 0` this is the
/// game where ignorance breaks the benchmark.
pub fn ignorance(nu: TypeDistribution) -> Result<GameSpec> {
    state_dependent(nu)
}

/// Four actions with receiver cutoffs 1/3, 1/2, 2/3 and a sender who likes
/// `a2` in `w0` and `a3` in `w1`; `k` experiments with certainty.
///
/// The receiver minimizes quadratic loss around centers 3/12, 5/12, 7/12,
/// 9/12, which puts the indifference points at the required cutoffs.
pub fn majority_vs_state(k: u32) -> Result<GameSpec> {
    let centers = [3.0 / 12.0, 5.0 / 12.0, 7.0 / 12.0, 9.0 / 12.0];
    let receiver = centers
        .iter()
        .map(|c: &f64| vec![-c * c, 2.0 * c - c * c])
        .collect();
    GameSpec::new(
        labels(&["w0", "w1"]),
        vec![0.5, 0.5],
        labels(&["a1", "a2", "a3", "a4"]),
        receiver,
        vec![
            vec![-0.5, -0.5],
            vec![0.5, -0.5],
            vec![-0.5, 0.5],
            vec![-0.5, -0.5],
        ],
        TypeDistribution::deterministic(k)?,
    )
}

/// Two actions with cutoff 2/3 where no punishing action exists; types 1
/// and 2 are equally likely.
pub fn no_punishment(epsilon: f64) -> Result<GameSpec> {
    GameSpec::new(
        labels(&["w0", "w1"]),
        vec![0.5, 0.5],
        labels(&["a0", "a1"]),
        vec![vec![0.0, 0.0], vec![-2.0, 1.0]],
        vec![vec![1.0, 1.0], vec![5.0 / 3.0 + epsilon, 2.0 / 3.0 + epsilon]],
        TypeDistribution::explicit(vec![(1, 0.5), (2, 0.5)])?,
    )
}

/// Transparent motives with sender values 0, 1, 1.2 on the three-band
/// receiver; the benchmark splits the prior evenly onto 1/3 and 2/3.
pub fn three_action_transparent(nu: TypeDistribution) -> Result<GameSpec> {
    GameSpec::new(
        labels(&["w0", "w1"]),
        vec![0.5, 0.5],
        labels(&["a0", "a1", "a2"]),
        three_band_receiver(),
        vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.2, 1.2]],
        nu,
    )
}
