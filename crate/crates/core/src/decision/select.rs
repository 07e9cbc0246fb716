//! Nearest-point selection from the set of disclosure matrices induced by
//! optimal strategies.
//!
//! The set is parametrized by a branch weight `t` per type (free only when
//! both branches are optimal) and, for every info set with tied optima, a
//! vector `z = w * rule` lying in the simplex scaled by the weight `w` of its
//! branch. The induced matrix is affine in `(t, z)` and the feasible set is
//! convex, so the squared Frobenius distance is minimized with accelerated
//! projected gradient.

use crate::error::Result;
use crate::model::{Experiment, TypeDistribution};

use super::{optimal_strategy_set, Branch, DisclosureProblem, DisclosureStrategy, InducedMatrix, OptimalSet, TypeStrategy};

const GRAD_MAP_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 100_000;

/// Chosen element of the optimal set with the strategy that realizes it.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub matrix: InducedMatrix,
    pub distance: f64,
    pub strategy: DisclosureStrategy,
    pub iterations: usize,
}

/// A tied info set: its likelihood row, optimal signals, owning type and branch.
struct Tie {
    ty: usize,
    branch: Branch,
    likelihood: Vec<f64>,
    signals: Vec<usize>,
    /// Offset of the first coordinate in the parameter vector.
    offset: usize,
}

struct TypeParams {
    mass: f64,
    /// Parameter index of `t` when the branch weight is free.
    free_t: Option<usize>,
    fixed_t: f64,
    /// Induced matrices of the untied info sets of each branch.
    base_all: Vec<Vec<f64>>,
    base_state: Vec<Vec<f64>>,
    ties: Vec<usize>,
}

struct Parametrization {
    n: usize,
    m: usize,
    dim: usize,
    types: Vec<TypeParams>,
    ties: Vec<Tie>,
}

fn project_scaled_simplex(v: &[f64], scale: f64) -> Vec<f64> {
    if scale <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumulative += ui;
        let candidate = (cumulative - scale) / (i as f64 + 1.0);
        if ui - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Parametrization {
    fn new(set: &OptimalSet) -> Self {
        let (n, m) = (set.num_states, set.num_signals);
        let mut dim = 0;
        let mut ties = Vec::new();
        let mut types = Vec::new();
        for (ty, t) in set.types.iter().enumerate() {
            let both = t.optimal_branches.len() == 2;
            let free_t = both.then(|| {
                dim += 1;
                dim - 1
            });
            let fixed_t = if t.optimal_branches == [Branch::StateRevealed] { 1.0 } else { 0.0 };
            let mut params = TypeParams {
                mass: t.mass,
                free_t,
                fixed_t,
                base_all: vec![vec![0.0; m]; n],
                base_state: vec![vec![0.0; m]; n],
                ties: Vec::new(),
            };
            for &branch in &t.optimal_branches {
                let opt = t.branch(branch).expect("optimal branch exists");
                for info in &opt.infosets {
                    match info.optimal.len() {
                        0 => {}
                        1 => {
                            let base = match branch {
                                Branch::AllSignals => &mut params.base_all,
                                Branch::StateRevealed => &mut params.base_state,
                            };
                            for i in 0..n {
                                base[i][info.optimal[0]] += info.likelihood[i];
                            }
                        }
                        len => {
                            params.ties.push(ties.len());
                            ties.push(Tie {
                                ty,
                                branch,
                                likelihood: info.likelihood.clone(),
                                signals: info.optimal.clone(),
                                offset: dim,
                            });
                            dim += len;
                        }
                    }
                }
            }
            types.push(params);
        }
        Parametrization { n, m, dim, types, ties }
    }

    fn weight(&self, x: &[f64], ty: usize) -> f64 {
        let t = &self.types[ty];
        t.free_t.map_or(t.fixed_t, |i| x[i])
    }

    fn branch_scale(&self, x: &[f64], tie: &Tie) -> f64 {
        let t = self.weight(x, tie.ty);
        match tie.branch {
            Branch::AllSignals => 1.0 - t,
            Branch::StateRevealed => t,
        }
    }

    fn matrix(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.m]; self.n];
        for (ty, t) in self.types.iter().enumerate() {
            let b = self.weight(x, ty);
            for i in 0..self.n {
                for j in 0..self.m {
                    q[i][j] += t.mass * ((1.0 - b) * t.base_all[i][j] + b * t.base_state[i][j]);
                }
            }
        }
        for tie in &self.ties {
            let mass = self.types[tie.ty].mass;
            for (i, lik) in tie.likelihood.iter().enumerate() {
                for (c, &j) in tie.signals.iter().enumerate() {
                    q[i][j] += mass * lik * x[tie.offset + c];
                }
            }
        }
        q
    }

    fn objective_and_gradient(&self, x: &[f64], target: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let q = self.matrix(x);
        let resid: Vec<Vec<f64>> = q
            .iter()
            .zip(target)
            .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a - b).collect())
            .collect();
        let f = resid.iter().flatten().map(|r| r * r).sum();
        let mut grad = vec![0.0; self.dim];
        for t in &self.types {
            if let Some(idx) = t.free_t {
                let mut g = 0.0;
                for i in 0..self.n {
                    for j in 0..self.m {
                        g += resid[i][j] * (t.base_state[i][j] - t.base_all[i][j]);
                    }
                }
                grad[idx] = 2.0 * t.mass * g;
            }
        }
        for tie in &self.ties {
            let mass = self.types[tie.ty].mass;
            for (c, &j) in tie.signals.iter().enumerate() {
                let g: f64 = tie.likelihood.iter().enumerate().map(|(i, lik)| lik * resid[i][j]).sum();
                grad[tie.offset + c] = 2.0 * mass * g;
            }
        }
        (f, grad)
    }

    /// Euclidean projection onto the feasible set. Types are independent; a
    /// free branch weight is found by golden-section search on the convex
    /// profile `t -> (t - t0)^2 + sum of squared distances to scaled simplices`.
    fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for (ty, t) in self.types.iter().enumerate() {
            let ties: Vec<&Tie> = t.ties.iter().map(|&i| &self.ties[i]).collect();
            let block = |tie: &Tie| &y[tie.offset..tie.offset + tie.signals.len()];
            let scale_for = |tie: &Tie, b: f64| match tie.branch {
                Branch::AllSignals => 1.0 - b,
                Branch::StateRevealed => b,
            };
            let b = match t.free_t {
                None => t.fixed_t,
                Some(idx) => {
                    let t0 = y[idx];
                    let profile = |b: f64| -> f64 {
                        let mut v = (b - t0) * (b - t0);
                        for tie in &ties {
                            let z = block(tie);
                            v += sq_dist(z, &project_scaled_simplex(z, scale_for(tie, b)));
                        }
                        v
                    };
                    let b = golden_section(profile, 0.0, 1.0);
                    x[idx] = b;
                    b
                }
            };
            debug_assert_eq!(self.weight(&x, ty), b);
            for tie in &ties {
                let p = project_scaled_simplex(block(tie), scale_for(tie, b));
                x[tie.offset..tie.offset + p.len()].copy_from_slice(&p);
            }
        }
        x
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for t in &self.types {
            if let Some(i) = t.free_t {
                x[i] = 0.5;
            }
        }
        for tie in &self.ties {
            let w = self.branch_scale(&x, tie) / tie.signals.len() as f64;
            for c in 0..tie.signals.len() {
                x[tie.offset + c] = w;
            }
        }
        x
    }

    fn strategy(&self, set: &OptimalSet, x: &[f64]) -> DisclosureStrategy {
        let (n, m) = (self.n, self.m);
        let mut types = Vec::with_capacity(set.types.len());
        let mut tie_iter = 0;
        for (ty, t) in set.types.iter().enumerate() {
            let mut ts = TypeStrategy::max_index(m, n, t.k);
            ts.state_branch_weight = self.weight(x, ty);
            for branch in [Branch::AllSignals, Branch::StateRevealed] {
                let Some(opt) = t.branch(branch) else { continue };
                let branch_optimal = t.optimal_branches.contains(&branch);
                for (idx, info) in opt.infosets.iter().enumerate() {
                    if info.optimal.is_empty() {
                        continue;
                    }
                    let mut rule = vec![0.0; m];
                    if branch_optimal && info.optimal.len() > 1 {
                        let tie = &self.ties[self.types[ty].ties[tie_iter]];
                        tie_iter += 1;
                        let scale = self.branch_scale(x, tie);
                        let z = &x[tie.offset..tie.offset + tie.signals.len()];
                        let total: f64 = z.iter().sum();
                        for (c, &j) in tie.signals.iter().enumerate() {
                            rule[j] = if scale > 0.0 && total > 0.0 {
                                z[c] / total
                            } else {
                                1.0 / tie.signals.len() as f64
                            };
                        }
                    } else {
                        rule[info.optimal[0]] = 1.0;
                    }
                    match info.state {
                        None => ts.all_signals[idx] = rule,
                        Some(state) => ts.state_revealed[idx / n][state] = rule,
                    }
                }
            }
            tie_iter = 0;
            types.push(ts);
        }
        DisclosureStrategy {
            num_signals: m,
            num_states: n,
            types,
            silent_signal: None,
        }
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-14 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // The minimizer often sits exactly on a bound.
    [lo, 0.5 * (a + b), hi]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .expect("nonempty")
}

/// Minimizes `||Q' - target||_F` over the matrices induced by optimal
/// strategies in `set`.
pub fn select_from_set(set: &OptimalSet, target: &InducedMatrix) -> Selection {
    let p = Parametrization::new(set);
    let mut iterations = 0;
    let x = if p.dim == 0 {
        Vec::new()
    } else {
        let mut x = p.project(&p.initial_point());
        let mut y = x.clone();
        let mut momentum = 1.0f64;
        let mut lipschitz = 1.0f64;
        let (mut fx, _) = p.objective_and_gradient(&x, &target.matrix);
        while iterations < MAX_ITERS {
            iterations += 1;
            let (fy, gy) = p.objective_and_gradient(&y, &target.matrix);
            let (x_next, f_next) = loop {
                let step: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - gi / lipschitz).collect();
                let cand = p.project(&step);
                let (fc, _) = p.objective_and_gradient(&cand, &target.matrix);
                let diff: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
                let model = fy
                    + gy.iter().zip(&diff).map(|(g, d)| g * d).sum::<f64>()
                    + 0.5 * lipschitz * diff.iter().map(|d| d * d).sum::<f64>();
                if fc <= model + 1e-15 || lipschitz > 1e15 {
                    break (cand, fc);
                }
                lipschitz *= 2.0;
            };
            let grad_map = lipschitz * sq_dist(&x_next, &y).sqrt();
            if f_next > fx {
                // Adaptive restart: drop momentum and retry from the last iterate.
                momentum = 1.0;
                y = x.clone();
                if grad_map < GRAD_MAP_TOL {
                    break;
                }
                continue;
            }
            let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            let beta = (momentum - 1.0) / next_momentum;
            y = x_next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            x = x_next;
            fx = f_next;
            momentum = next_momentum;
            if grad_map < GRAD_MAP_TOL {
                break;
            }
        }
        x
    };
    let matrix = InducedMatrix::new(p.matrix(&x));
    let distance = matrix.frobenius_distance(target);
    Selection {
        strategy: p.strategy(set, &x),
        matrix,
        distance,
        iterations,
    }
}

/// Computes the optimal set of `Q` and selects the induced matrix nearest `target`.
pub fn select_from_c(
    q: &Experiment,
    nu: &TypeDistribution,
    problem: &DisclosureProblem,
    target: &InducedMatrix,
    tie_tol: f64,
) -> Result<Selection> {
    let set = optimal_strategy_set(q, nu, problem, tie_tol)?;
    Ok(select_from_set(&set, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_simplex_projection() {
        let p = project_scaled_simplex(&[0.9, 0.5, -0.2], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.7).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12);
        assert_eq!(project_scaled_simplex(&[0.3, 0.1], 0.0), vec![0.0, 0.0]);
        let q = project_scaled_simplex(&[0.1, 0.1], 0.5);
        assert!((q[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn golden_section_hits_endpoints() {
        assert_eq!(golden_section(|t| (t + 1.0) * (t + 1.0), 0.0, 1.0), 0.0);
        assert!((golden_section(|t| (t - 0.3) * (t - 0.3), 0.0, 1.0) - 0.3).abs() < 1e-7);
    }
}
