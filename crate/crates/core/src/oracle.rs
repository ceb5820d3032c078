//! Brute-force reference for small instances: enumerate processing times on
//! a uniform grid and solve SP1 exactly at every grid point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{draw_demand, plant_instance, PRODUCT_SHARES};
use crate::model::{FlowMode, Instance, Solution};
use crate::subproblems::solve_sp1;

/// Largest number of grid points the search will visit.
pub const GRID_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub solution: Solution,
    pub objective: f64,
    /// Grid points visited, and how many of them admitted a feasible plan.
    pub points: u64,
    pub feasible_points: u64,
}

/// `(m, t)` cells whose processing time has a nondegenerate range.
pub fn free_cells(inst: &Instance) -> Vec<(usize, usize)> {
    (0..inst.num_machines)
        .filter(|&m| inst.v_min(m) < inst.v_max(m))
        .flat_map(|m| (0..inst.num_periods).map(move |t| (m, t)))
        .collect()
}

/// `k`-th of `points` evenly spaced values in `[lo, hi]`, endpoints exact.
fn grid_value(lo: f64, hi: f64, k: usize, points: usize) -> f64 {
    if k + 1 == points {
        hi
    } else {
        lo + (hi - lo) * k as f64 / (points - 1) as f64
    }
}

/// Minimum-cost plan over all grid assignments of the free processing
/// times. Ties go to the lexicographically smallest grid index, with the
/// first free cell most significant.
pub fn grid_search_solve(inst: &Instance, points: usize) -> Result<OracleResult> {
    grid_search_solve_with(inst, points, FlowMode::Aggregate)
}

pub fn grid_search_solve_with(
    inst: &Instance,
    points: usize,
    flow_mode: FlowMode,
) -> Result<OracleResult> {
    inst.validate()?;
    let cells = free_cells(inst);
    if !cells.is_empty() && points < 2 {
        return Err(Error::input("need at least two grid points per free cell"));
    }
    let total = u32::try_from(cells.len())
        .ok()
        .and_then(|n| (points as u64).checked_pow(n))
        .filter(|&n| n <= GRID_BUDGET)
        .ok_or_else(|| {
            Error::input(format!(
                "{points}^{} grid points exceeds the budget of {GRID_BUDGET}",
                cells.len()
            ))
        })?;

    let evaluate = |index: u64| -> Result<Option<(u64, Solution)>> {
        let mut v = inst.v_min_matrix();
        let mut rest = index;
        for &(m, t) in cells.iter().rev() {
            let k = (rest % points as u64) as usize;
            rest /= points as u64;
            v[m][t] = grid_value(inst.v_min(m), inst.v_max(m), k, points);
        }
        Ok(solve_sp1(inst, &v, flow_mode)?.map(|sol| (index, sol)))
    };

    let results: Vec<Option<(u64, Solution)>> = (0..total)
        .into_par_iter()
        .map(evaluate)
        .collect::<Result<_>>()?;
    let feasible_points = results.iter().filter(|r| r.is_some()).count() as u64;
    let best = results.into_iter().flatten().reduce(|a, b| {
        if b.1.objective < a.1.objective || (b.1.objective == a.1.objective && b.0 < a.0) {
            b
        } else {
            a
        }
    });
    let Some((_, solution)) = best else {
        return Err(Error::Contract(
            "no grid point admits a feasible plan".into(),
        ));
    };
    Ok(OracleResult {
        objective: solution.objective,
        solution,
        points: total,
        feasible_points,
    })
}

/// Scaled-down plant instance for oracle comparisons: `num_periods` periods
/// at high capacity and storage, total demand drawn from `[8T, 12T]`, and
/// machine 1 (PL2) pinned at its slowest setting so only PL1 is searched.
pub fn toy_instance(seed: u64, num_periods: usize) -> Instance {
    let nt = num_periods as u64;
    let demand = draw_demand(seed, num_periods, (8 * nt, 12 * nt), &PRODUCT_SHARES);
    let mut inst = plant_instance(num_periods, 810.0, 18.0, 9.0, demand);
    let slow = inst.v_max(1);
    inst.proc_time_bounds[1] = (slow, slow);
    inst
}
