//! Narrow linear-programming interface. The backend is `minilp`, a dense
//! primal/dual simplex with deterministic pivoting.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Constraint {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

/// A linear program built column by column.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            bounds: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable with objective coefficient and bounds; returns its index.
    pub fn add_var(&mut self, cost: f64, bounds: (f64, f64)) -> usize {
        self.objective.push(cost);
        self.bounds.push(bounds);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, sense: Sense, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.objective.len());
        self.sense = sense;
        self.objective = objective;
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Solves the program; infeasibility and unboundedness come back as
    /// `Ok(Err(status))` so callers can treat them as answers.
    pub fn solve_status(&self) -> std::result::Result<LpSolution, LpStatus> {
        let direction = match self.sense {
            Sense::Maximize => OptimizationDirection::Maximize,
            Sense::Minimize => OptimizationDirection::Minimize,
        };
        let mut problem = Problem::new(direction);
        let vars: Vec<Variable> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(c, b)| problem.add_var(*c, *b))
            .collect();
        for c in &self.constraints {
            let expr: Vec<(Variable, f64)> = c
                .coeffs
                .iter()
                .filter(|(_, a)| *a != 0.0)
                .map(|(i, a)| (vars[*i], *a))
                .collect();
            let op = match c.relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Ge => ComparisonOp::Ge,
                Relation::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, c.rhs);
        }
        match problem.solve() {
            Ok(sol) => Ok(LpSolution {
                values: vars.iter().map(|v| *sol.var_value(*v)).collect(),
                objective: sol.objective(),
            }),
            Err(minilp::Error::Infeasible) => Err(LpStatus::Infeasible),
            Err(minilp::Error::Unbounded) => Err(LpStatus::Unbounded),
        }
    }

    /// Solves the program, treating any non-optimal outcome as an error.
    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_status()
            .map_err(|status| Error::Lp(format!("{status:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var(1.0, (0.0, f64::INFINITY));
        let y = lp.add_var(2.0, (0.0, 3.0));
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(x, 2.0), (y, 1.0)], Relation::Ge, 2.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 7.0).abs() < 1e-12);
        assert!((sol.values[x] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_program_reports_status() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(1.0, (0.0, 1.0));
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(lp.solve_status(), Err(LpStatus::Infeasible));
    }
}
