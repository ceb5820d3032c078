//! Alternating two-phase heuristic for the bilinear LSMS model.
//!
//! Each cycle solves SP1 at the current processing times, then SP2 at the
//! production it returned. The loop stops at a fixed point: no decision
//! variable moved by more than `eps` (relative) since the previous cycle and
//! the two subproblem objectives agree.
//!
//! SP1 usually has many optimal vertices that differ only in when upstream
//! production happens. When the previous cycle's plan is still optimal for
//! SP1 at the new processing times, it is kept instead of whichever vertex
//! the simplex lands on, so a fixed point is recognized as one.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlowMode, Instance, Solution};
use crate::subproblems::{solve_sp1, solve_sp2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub eps: f64,
    pub max_iter: usize,
    /// Starting processing times; `v_min` everywhere when `None`.
    pub v_init: Option<Vec<Vec<f64>>>,
    pub flow_mode: FlowMode,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            eps: 1e-6,
            max_iter: 100,
            v_init: None,
            flow_mode: FlowMode::Aggregate,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::input("eps must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::input("max_iter must be at least 1"));
        }
        if let Some(v) = &self.v_init {
            let shape_ok =
                v.len() == inst.num_machines && v.iter().all(|row| row.len() == inst.num_periods);
            if !shape_ok {
                return Err(Error::input("v_init has the wrong shape"));
            }
            for (m, row) in v.iter().enumerate() {
                let (lo, hi) = inst.proc_time_bounds[m];
                if row.iter().any(|&x| !(x >= lo && x <= hi)) {
                    return Err(Error::input(format!("v_init row {m} leaves [{lo}, {hi}]")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationLimit,
    SubproblemInfeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub sp1_objective: f64,
    pub sp2_objective: f64,
    /// Largest relative change of any variable since the previous cycle;
    /// absent on the first cycle.
    pub max_rel_change: Option<f64>,
    /// SP1 kept the previous plan as still optimal.
    pub sp1_retained: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicTrace {
    pub cycles: Vec<CycleRecord>,
    pub termination: Termination,
    /// Cycle whose solution was returned (1-based).
    pub returned_cycle: usize,
    pub total_ms: f64,
}

impl HeuristicTrace {
    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    /// Objectives in visiting order: SP1(1), SP2(1), SP1(2), ...
    pub fn objective_sequence(&self) -> Vec<f64> {
        self.cycles
            .iter()
            .flat_map(|c| [c.sp1_objective, c.sp2_objective])
            .collect()
    }

    /// True when the objective sequence never rises by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective_sequence()
            .windows(2)
            .all(|w| w[1] <= w[0] + slack)
    }
}

/// Largest `|a - b| / max(1, |b|)` over every decision variable.
pub fn max_relative_change(prev: &Solution, next: &Solution) -> f64 {
    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }
    let pairs = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(&x, &y)| rel(y, x))
            .fold(0.0, f64::max)
    };
    let y = prev
        .production
        .iter()
        .zip(&next.production)
        .map(|(a, b)| pairs(a, b))
        .fold(0.0, f64::max);
    y.max(pairs(&prev.proc_time, &next.proc_time))
        .max(pairs(&prev.end_inventory, &next.end_inventory))
        .max(pairs(&prev.wip_inventory, &next.wip_inventory))
}

fn infeasible(inst: &Instance, trace: HeuristicTrace, which: &str, v_hat: &[Vec<f64>]) -> Error {
    let demand: f64 = (0..inst.num_products).map(|i| inst.total_demand(i)).sum();
    let fastest: f64 = inst.capacity.iter().sum::<f64>() / inst.v_min(0);
    let current: f64 = inst
        .capacity
        .iter()
        .zip(&v_hat[0])
        .map(|(c, v)| c / v)
        .sum();
    Error::Infeasible {
        message: format!(
            "{which} has no feasible plan in cycle {}: total demand {demand} units, machine 0 \
             can process {current:.2} units at the current processing times and {fastest:.2} at \
             maximum speed over the horizon",
            trace.cycles.len() + 1
        ),
        trace: Box::new(trace),
    }
}

/// Run the alternating heuristic to a fixed point or the iteration cap.
///
/// On convergence the last SP2 solution is returned. When the cap is hit the
/// lowest-cost solution seen is returned instead, with the trace flagged.
pub fn two_phase(inst: &Instance, config: &HeuristicConfig) -> Result<(Solution, HeuristicTrace)> {
    inst.validate()?;
    config.validate(inst)?;
    let started = Instant::now();
    let mut v_hat = config.v_init.clone().unwrap_or_else(|| inst.v_min_matrix());
    let mut cycles: Vec<CycleRecord> = Vec::new();
    let mut previous: Option<Solution> = None;
    let mut best: Option<(Solution, usize)> = None;

    let trace_so_far = |cycles: &[CycleRecord], termination, returned_cycle| HeuristicTrace {
        cycles: cycles.to_vec(),
        termination,
        returned_cycle,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
    };

    for cycle in 1..=config.max_iter {
        let cycle_start = Instant::now();

        let Some(mut sp1) = solve_sp1(inst, &v_hat, config.flow_mode)? else {
            let trace = trace_so_far(&cycles, Termination::SubproblemInfeasible, 0);
            return Err(infeasible(inst, trace, "SP1", &v_hat));
        };
        let mut retained = false;
        if let Some(prev) = &previous {
            let tol = 1e-9 * prev.objective.abs().max(1.0);
            if sp1.objective >= prev.objective - tol {
                sp1 = prev.clone();
                retained = true;
            }
        }

        let Some(sp2) = solve_sp2(inst, &sp1.production, config.flow_mode)? else {
            let trace = trace_so_far(&cycles, Termination::SubproblemInfeasible, 0);
            return Err(infeasible(inst, trace, "SP2", &v_hat));
        };

        let change = previous.as_ref().map(|p| max_relative_change(p, &sp2));
        cycles.push(CycleRecord {
            cycle,
            sp1_objective: sp1.objective,
            sp2_objective: sp2.objective,
            max_rel_change: change,
            sp1_retained: retained,
            wall_ms: cycle_start.elapsed().as_secs_f64() * 1e3,
        });

        for candidate in [&sp1, &sp2] {
            if best
                .as_ref()
                .is_none_or(|(b, _)| candidate.objective < b.objective)
            {
                best = Some((candidate.clone(), cycle));
            }
        }

        let objectives_agree =
            (sp1.objective - sp2.objective).abs() <= config.eps * (1.0 + sp2.objective.abs());
        let converged = change.is_some_and(|c| c <= config.eps) && objectives_agree;
        v_hat = sp2.proc_time.clone();
        if converged {
            let trace = trace_so_far(&cycles, Termination::Converged, cycle);
            return Ok((sp2, trace));
        }
        previous = Some(sp2);
    }

    let (sol, returned_cycle) = best.expect("at least one cycle ran");
    Ok((
        sol,
        trace_so_far(&cycles, Termination::IterationLimit, returned_cycle),
    ))
}
