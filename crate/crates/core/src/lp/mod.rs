//! Small dense linear programs and a bounded-variable primal simplex.
//!
//! Problems are always minimizations over variables with a finite lower
//! bound and an optional upper bound.

mod mps;
mod simplex;

pub use mps::write_mps;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarBounds {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl VarBounds {
    pub const NONNEG: VarBounds = VarBounds {
        lower: 0.0,
        upper: None,
    };

    pub fn new(lower: f64, upper: Option<f64>) -> Self {
        VarBounds { lower, upper }
    }

    pub fn fixed(value: f64) -> Self {
        VarBounds {
            lower: value,
            upper: Some(value),
        }
    }
}

/// `minimize objective . x + objective_offset` subject to the constraints
/// and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
    pub var_names: Vec<String>,
}

impl LinearProgram {
    /// `num_vars` nonnegative variables with zero cost.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            objective_offset: 0.0,
            constraints: Vec::new(),
            bounds: vec![VarBounds::NONNEG; num_vars],
            var_names: (0..num_vars).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Add a row given as sparse `(column, coefficient)` terms. Repeated
    /// columns accumulate.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: &[(usize, f64)],
        relation: Relation,
        rhs: f64,
    ) {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
            name: name.into(),
        });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n || self.var_names.len() != n {
            return Err(Error::input(
                "bounds and names must have one entry per variable",
            ));
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(Error::input("objective coefficients must be finite"));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if !b.lower.is_finite() {
                return Err(Error::input(format!(
                    "variable {j} needs a finite lower bound"
                )));
            }
            if let Some(u) = b.upper {
                if !u.is_finite() || u < b.lower {
                    return Err(Error::input(format!(
                        "variable {j} has bounds [{}, {u}]",
                        b.lower
                    )));
                }
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::input(format!(
                    "constraint {r} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::input(format!("constraint {r} has non-finite data")));
            }
        }
        Ok(())
    }

    /// Objective value at `x`, offset included.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.objective_offset
    }

    /// Largest constraint or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let excess = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(excess);
        }
        for (b, &v) in self.bounds.iter().zip(x) {
            worst = worst.max(b.lower - v);
            if let Some(u) = b.upper {
                worst = worst.max(v - u);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn objective(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }
}

/// Solve `lp` to optimality or prove it infeasible or unbounded.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    simplex::Tableau::build(lp).run()
}
