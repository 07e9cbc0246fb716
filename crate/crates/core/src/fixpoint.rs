//! Fixed points of `T(Q) = Q + a * (Q* - Q')`, where `Q'` is the element of
//! the sender's optimal disclosure set nearest the benchmark matrix `Q*`.
//! A fixed point is an experiment under which optimal disclosure reproduces
//! the benchmark recommendation frequencies exactly.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{BpSolution, PunishingAction};
use crate::decision::{select_from_c, DisclosureProblem, DisclosureStrategy, InducedMatrix, TIE_TOL};
use crate::error::{Error, Result};
use crate::model::{Experiment, GameSpec, TypeDistribution};
use crate::root::bisect;
use crate::verify::{verify, EquilibriumCertificate, OnPathEntry, DEFAULT_TOL};

/// Residual windows without improvement before the step is halved.
const STALL_WINDOW: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixpointConfig {
    /// Step size used instead of the computed bound.
    pub alpha_override: Option<f64>,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub damping: f64,
    pub restarts: usize,
    pub seed: u64,
    pub tie_tol: f64,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        FixpointConfig {
            alpha_override: None,
            max_iters: 10_000,
            residual_tol: 1e-6,
            damping: 1.0,
            restarts: 8,
            seed: 0,
            tie_tol: TIE_TOL,
        }
    }
}

impl FixpointConfig {
    fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || self.max_iters == 0 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidTypes(format!("invalid fixed-point configuration {self:?}")));
        }
        if let Some(a) = self.alpha_override {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidTypes(format!("step size {a} outside (0,1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixpointResult {
    pub experiment: Experiment,
    /// Optimal strategy whose induced matrix is nearest `Q*`.
    pub strategy: DisclosureStrategy,
    pub residual: f64,
    pub iterations: usize,
    pub alpha_star: f64,
    /// Residual after each evaluation of the map.
    pub trace: Vec<f64>,
    /// 0 for the run started at `Q*`, `i` for the `i`-th random restart.
    pub start: usize,
}

/// Probability that at least one of the sender's draws shows a signal whose
/// per-draw probability is `q`.
pub fn capital_pi(q: f64, nu: &TypeDistribution) -> f64 {
    nu.support()
        .iter()
        .map(|&(k, mass)| mass * (1.0 - (1.0 - q).powi(k as i32)))
        .sum()
}

/// Largest step that keeps every iterate inside the zero pattern of `Q*`.
pub fn alpha_star(qstar: &InducedMatrix, nu: &TypeDistribution) -> Result<f64> {
    let a_min = qstar
        .min_positive()
        .ok_or_else(|| Error::Dimension("benchmark matrix has no positive entry".into()))?;
    if a_min >= 1.0 {
        return Ok(1.0);
    }
    let q0 = bisect(|q| capital_pi(q, nu) - a_min, 0.0, 1.0, 0.0, 200)
        .ok_or_else(|| Error::InvalidTypes("type law has no positive support".into()))?;
    Ok((q0 / (1.0 - a_min)).min(1.0))
}

struct Run {
    experiment: Vec<Vec<f64>>,
    strategy: DisclosureStrategy,
    residual: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn check_range(q: &mut [Vec<f64>], pattern: &[Vec<f64>]) -> Result<()> {
    const TOL: f64 = 1e-9;
    for (row, target) in q.iter_mut().zip(pattern) {
        for (x, t) in row.iter_mut().zip(target) {
            if *x < -TOL || *x > 1.0 + TOL || (*t == 0.0 && x.abs() > TOL) {
                return Err(Error::ConstructionCheck(format!("iterate left the benchmark pattern: entry {x}")));
            }
            *x = if *t == 0.0 { 0.0 } else { x.clamp(0.0, 1.0) };
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::ConstructionCheck(format!("iterate row sums to {sum}")));
        }
        row.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(())
}

fn run_from(
    start: Vec<Vec<f64>>,
    nu: &TypeDistribution,
    problem: &DisclosureProblem,
    qstar: &InducedMatrix,
    alpha: f64,
    cfg: &FixpointConfig,
) -> Result<Run> {
    let mut q = start;
    let mut damping = cfg.damping;
    let mut trace = Vec::new();
    let mut best: Option<Run> = None;
    for iter in 0..cfg.max_iters {
        let exp = Experiment::from_matrix(q.clone())?;
        let sel = select_from_c(&exp, nu, problem, qstar, cfg.tie_tol)?;
        trace.push(sel.distance);
        if best.as_ref().is_none_or(|b| sel.distance < b.residual) {
            best = Some(Run {
                experiment: q.clone(),
                strategy: sel.strategy.clone(),
                residual: sel.distance,
                iterations: iter,
                trace: Vec::new(),
            });
        }
        if sel.distance < cfg.residual_tol {
            break;
        }
        if iter >= STALL_WINDOW && iter % STALL_WINDOW == 0 && sel.distance >= trace[iter - STALL_WINDOW] {
            damping *= 0.5;
        }
        let step = damping * alpha;
        for (i, row) in q.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x += step * (qstar.matrix[i][j] - sel.matrix.matrix[i][j]);
            }
        }
        check_range(&mut q, &qstar.matrix)?;
    }
    let mut run = best.expect("at least one iteration");
    run.trace = trace;
    Ok(run)
}

/// Seeded point drawn uniformly from the rows of the benchmark zero pattern.
fn random_start(pattern: &[Vec<f64>], seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    pattern
        .iter()
        .map(|row| {
            let draws: Vec<f64> = row
                .iter()
                .map(|t| if *t > 0.0 { -(1.0 - rng.random::<f64>()).ln() } else { 0.0 })
                .collect();
            let total: f64 = draws.iter().sum();
            draws.iter().map(|d| d / total).collect()
        })
        .collect()
}

/// Iterates the map from `Q*` and, if that stalls, from seeded random points
/// of the zero pattern; returns the first run reaching the tolerance, or
/// [`Error::NoConvergence`] carrying the best run.
pub fn iterate_fixpoint(game: &GameSpec, bp: &BpSolution, cfg: &FixpointConfig) -> Result<FixpointResult> {
    cfg.validate()?;
    let nu = game.type_dist().truncated();
    if nu.zero_mass() > 0.0 {
        return Err(Error::ZeroTypeMass);
    }
    let problem = DisclosureProblem::for_benchmark(game, bp);
    let qstar = InducedMatrix::new(bp.recommendation_matrix.clone());
    let alpha = match cfg.alpha_override {
        Some(a) => a,
        None => alpha_star(&qstar, &nu)?,
    };
    let finish = |run: Run, start: usize| -> Result<FixpointResult> {
        Ok(FixpointResult {
            experiment: Experiment::from_matrix(run.experiment)?,
            strategy: run.strategy,
            residual: run.residual,
            iterations: run.iterations,
            alpha_star: alpha,
            trace: run.trace,
            start,
        })
    };

    let first = run_from(qstar.matrix.clone(), &nu, &problem, &qstar, alpha, cfg)?;
    if first.residual < cfg.residual_tol {
        return finish(first, 0);
    }
    let restarts: Vec<Result<Run>> = (1..=cfg.restarts)
        .into_par_iter()
        .map(|i| run_from(random_start(&qstar.matrix, cfg.seed, i as u64), &nu, &problem, &qstar, alpha, cfg))
        .collect();
    let mut best = (first, 0);
    for (i, run) in restarts.into_iter().enumerate() {
        let run = run?;
        if run.residual < best.0.residual {
            best = (run, i + 1);
        }
    }
    let residual = best.0.residual;
    let result = finish(best.0, best.1)?;
    if residual < cfg.residual_tol {
        Ok(result)
    } else {
        Err(Error::NoConvergence {
            residual,
            best: Box::new(result),
        })
    }
}

/// Bundles a fixed point with the benchmark beliefs and the punishment and
/// audits the result. The audit tolerance is widened to ten times the
/// fixed-point residual when that exceeds the default.
pub fn assemble_certificate(
    game: &GameSpec,
    bp: &BpSolution,
    fp: &FixpointResult,
    punish: &PunishingAction,
) -> Result<EquilibriumCertificate> {
    let on_path = bp
        .posteriors
        .iter()
        .zip(&bp.support_actions)
        .map(|(belief, &action)| {
            Some(OnPathEntry {
                belief: belief.clone(),
                action,
            })
        })
        .collect();
    let cert = EquilibriumCertificate {
        game: game.clone(),
        nu: game.type_dist().truncated(),
        experiment: fp.experiment.clone(),
        strategy: fp.strategy.clone(),
        on_path,
        empty_disclosure: None,
        off_path: punish.clone(),
        bp_value: bp.sender_value,
    };
    let report = verify(&cert, DEFAULT_TOL.max(10.0 * fp.residual));
    if report.passed() {
        Ok(cert)
    } else {
        Err(Error::VerificationFailed(Box::new(report)))
    }
}
