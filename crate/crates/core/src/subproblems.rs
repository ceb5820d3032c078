//! The two linear subproblems obtained by freezing one factor of the
//! bilinear capacity rows `sum_i y[i][m][t] * v[m][t] <= m_t`.
//!
//! * SP1 fixes processing times and optimizes production and stocks.
//! * SP2 fixes production and optimizes processing times and stocks.
//!
//! Both carry the cost of the frozen block as a constant objective offset so
//! their optimal values are directly comparable with each other and with
//! [`evaluate_objective`]. The demand bound on production is expressed as an
//! upper bound on each production column rather than as a separate row.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation, VarBounds};
use crate::model::{evaluate_objective, FlowMode, Instance, LinkKind, Solution};

const INPUT_TOL: f64 = 1e-6;

/// Column layout of a subproblem. Every block is contiguous; within a block
/// the period index varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndexMap {
    num_products: usize,
    num_machines: usize,
    num_periods: usize,
    y_base: Option<usize>,
    v_base: Option<usize>,
    s_base: usize,
    u_base: usize,
}

impl VarIndexMap {
    fn sp1(inst: &Instance) -> Self {
        let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);
        VarIndexMap {
            num_products: ni,
            num_machines: nm,
            num_periods: nt,
            y_base: Some(0),
            v_base: None,
            s_base: ni * nm * nt,
            u_base: ni * nm * nt + ni * nt,
        }
    }

    fn sp2(inst: &Instance) -> Self {
        let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);
        VarIndexMap {
            num_products: ni,
            num_machines: nm,
            num_periods: nt,
            y_base: None,
            v_base: Some(0),
            s_base: nm * nt,
            u_base: nm * nt + ni * nt,
        }
    }

    pub fn num_columns(&self) -> usize {
        self.u_base + self.num_products * self.num_periods
    }

    pub fn has_production(&self) -> bool {
        self.y_base.is_some()
    }

    pub fn has_proc_time(&self) -> bool {
        self.v_base.is_some()
    }

    /// Column of `y[i][m][t]`; panics on an SP2 map.
    pub fn y(&self, i: usize, m: usize, t: usize) -> usize {
        let base = self
            .y_base
            .expect("production block is not a variable here");
        base + (i * self.num_machines + m) * self.num_periods + t
    }

    /// Column of `v[m][t]`; panics on an SP1 map.
    pub fn v(&self, m: usize, t: usize) -> usize {
        let base = self
            .v_base
            .expect("processing-time block is not a variable here");
        base + m * self.num_periods + t
    }

    pub fn s(&self, i: usize, t: usize) -> usize {
        self.s_base + i * self.num_periods + t
    }

    pub fn u(&self, i: usize, t: usize) -> usize {
        self.u_base + i * self.num_periods + t
    }
}

/// The block that was held constant while building a subproblem.
#[derive(Debug, Clone, Copy)]
pub enum FixedBlock<'a> {
    ProcTime(&'a [Vec<f64>]),
    Production(&'a [Vec<Vec<f64>>]),
}

fn check_proc_time(inst: &Instance, v_hat: &[Vec<f64>]) -> Result<()> {
    if v_hat.len() != inst.num_machines || v_hat.iter().any(|r| r.len() != inst.num_periods) {
        return Err(Error::input("fixed processing times have the wrong shape"));
    }
    for (m, row) in v_hat.iter().enumerate() {
        let (lo, hi) = inst.proc_time_bounds[m];
        for (t, &v) in row.iter().enumerate() {
            if !(v >= lo - INPUT_TOL && v <= hi + INPUT_TOL) {
                return Err(Error::input(format!(
                    "fixed processing time v[{m}][{t}] = {v} is outside [{lo}, {hi}]"
                )));
            }
        }
    }
    Ok(())
}

fn check_production(inst: &Instance, y_hat: &[Vec<Vec<f64>>]) -> Result<()> {
    let shape_ok = y_hat.len() == inst.num_products
        && y_hat.iter().all(|per_m| {
            per_m.len() == inst.num_machines && per_m.iter().all(|r| r.len() == inst.num_periods)
        });
    if !shape_ok {
        return Err(Error::input("fixed production has the wrong shape"));
    }
    for (i, per_m) in y_hat.iter().enumerate() {
        for (m, row) in per_m.iter().enumerate() {
            let bound = inst.production_bound(i, m);
            for (t, &y) in row.iter().enumerate() {
                if !(y >= -INPUT_TOL && y <= bound + INPUT_TOL) {
                    return Err(Error::input(format!(
                        "fixed production y[{i}][{m}][{t}] = {y} is outside [0, {bound}]"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn add_flow_rows(lp: &mut LinearProgram, inst: &Instance, map: &VarIndexMap, flow_mode: FlowMode) {
    let nt = inst.num_periods;
    for link in inst
        .all_links()
        .into_iter()
        .filter(|l| l.kind == LinkKind::Flow)
    {
        let i = link.product;
        match flow_mode {
            FlowMode::Aggregate => {
                let terms: Vec<(usize, f64)> = (0..nt)
                    .flat_map(|t| [(map.y(i, link.from, t), 1.0), (map.y(i, link.to, t), -1.0)])
                    .collect();
                lp.add_constraint(
                    format!("flow_{i}_{}_{}", link.from, link.to),
                    &terms,
                    Relation::Eq,
                    0.0,
                );
            }
            FlowMode::PerPeriod => {
                for t in 0..nt {
                    lp.add_constraint(
                        format!("flow_{i}_{}_{}_{t}", link.from, link.to),
                        &[(map.y(i, link.from, t), 1.0), (map.y(i, link.to, t), -1.0)],
                        Relation::Eq,
                        0.0,
                    );
                }
            }
        }
    }
}

/// Stock columns, their costs, bounds, the storage caps, and the end-item and
/// WIP balance rows. `production(i, m, t)` yields either a column (SP1) or a
/// constant (SP2).
fn add_stock_block<F>(lp: &mut LinearProgram, inst: &Instance, map: &VarIndexMap, production: F)
where
    F: Fn(usize, usize, usize) -> Production,
{
    let (ni, nt) = (inst.num_products, inst.num_periods);
    for i in 0..ni {
        let wip_allowed = inst.wip_link(i).is_some();
        for t in 0..nt {
            let s = map.s(i, t);
            lp.objective[s] = inst.end_hold_cost[i] + inst.transport_cost[i];
            lp.var_names[s] = format!("s_{i}_{t}");
            let u = map.u(i, t);
            lp.objective[u] = inst.wip_hold_cost[i] + inst.transport_cost[i];
            lp.var_names[u] = format!("u_{i}_{t}");
            if !wip_allowed {
                lp.bounds[u] = VarBounds::fixed(0.0);
            }
        }
    }

    // s[i][t-1] + y[i][m*][t] - s[i][t] = d[i][t]
    for i in 0..ni {
        let finish = inst.last_machine(i);
        for t in 0..nt {
            let mut terms = vec![(map.s(i, t), -1.0)];
            if t > 0 {
                terms.push((map.s(i, t - 1), 1.0));
            }
            let mut rhs = inst.demand[i][t];
            match production(i, finish, t) {
                Production::Column(j) => terms.push((j, 1.0)),
                Production::Constant(y) => rhs -= y,
            }
            lp.add_constraint(format!("end_{i}_{t}"), &terms, Relation::Eq, rhs);
        }
    }

    // u[i][t-1] + y[i][from][t] - y[i][to][t] - u[i][t] = 0
    for i in 0..ni {
        let Some(link) = inst.wip_link(i) else {
            continue;
        };
        for t in 0..nt {
            let mut terms = vec![(map.u(i, t), -1.0)];
            if t > 0 {
                terms.push((map.u(i, t - 1), 1.0));
            }
            let mut rhs = 0.0;
            for (m, sign) in [(link.from, 1.0), (link.to, -1.0)] {
                match production(i, m, t) {
                    Production::Column(j) => terms.push((j, sign)),
                    Production::Constant(y) => rhs -= sign * y,
                }
            }
            lp.add_constraint(format!("wip_{i}_{t}"), &terms, Relation::Eq, rhs);
        }
    }

    for t in 0..nt {
        let s_terms: Vec<_> = (0..ni).map(|i| (map.s(i, t), 1.0)).collect();
        lp.add_constraint(
            format!("scap_{t}"),
            &s_terms,
            Relation::Le,
            inst.end_inv_cap,
        );
        let u_terms: Vec<_> = (0..ni).map(|i| (map.u(i, t), 1.0)).collect();
        lp.add_constraint(
            format!("ucap_{t}"),
            &u_terms,
            Relation::Le,
            inst.wip_inv_cap,
        );
    }
}

enum Production {
    Column(usize),
    Constant(f64),
}

/// Production LP with processing times frozen at `v_hat`.
pub fn build_sp1(
    inst: &Instance,
    v_hat: &[Vec<f64>],
    flow_mode: FlowMode,
) -> Result<(LinearProgram, VarIndexMap)> {
    check_proc_time(inst, v_hat)?;
    let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);
    let map = VarIndexMap::sp1(inst);
    let mut lp = LinearProgram::new(map.num_columns());

    for i in 0..ni {
        for m in 0..nm {
            let bound = inst.production_bound(i, m);
            for t in 0..nt {
                let j = map.y(i, m, t);
                lp.objective[j] = inst.vao_cost[m];
                lp.bounds[j] = VarBounds::new(0.0, Some(bound));
                lp.var_names[j] = format!("y_{i}_{m}_{t}");
            }
        }
    }
    lp.objective_offset = -(0..nm)
        .map(|m| inst.energy_rate[m] * v_hat[m].iter().sum::<f64>())
        .sum::<f64>();

    for m in 0..nm {
        for t in 0..nt {
            let terms: Vec<_> = (0..ni).map(|i| (map.y(i, m, t), v_hat[m][t])).collect();
            lp.add_constraint(
                format!("cap_{m}_{t}"),
                &terms,
                Relation::Le,
                inst.capacity[t],
            );
        }
    }
    add_flow_rows(&mut lp, inst, &map, flow_mode);
    add_stock_block(&mut lp, inst, &map, |i, m, t| {
        Production::Column(map.y(i, m, t))
    });
    Ok((lp, map))
}

/// Processing-time LP with production frozen at `y_hat`.
pub fn build_sp2(
    inst: &Instance,
    y_hat: &[Vec<Vec<f64>>],
    flow_mode: FlowMode,
) -> Result<(LinearProgram, VarIndexMap)> {
    check_production(inst, y_hat)?;
    for link in inst
        .all_links()
        .into_iter()
        .filter(|l| l.kind == LinkKind::Flow)
    {
        let i = link.product;
        let gap = match flow_mode {
            FlowMode::Aggregate => (y_hat[i][link.from].iter().sum::<f64>()
                - y_hat[i][link.to].iter().sum::<f64>())
            .abs(),
            FlowMode::PerPeriod => (0..inst.num_periods)
                .map(|t| (y_hat[i][link.from][t] - y_hat[i][link.to][t]).abs())
                .fold(0.0, f64::max),
        };
        if gap > INPUT_TOL {
            return Err(Error::input(format!(
                "fixed production of product {i} breaks flow between machines {} and {}",
                link.from, link.to
            )));
        }
    }

    let (nm, nt) = (inst.num_machines, inst.num_periods);
    let map = VarIndexMap::sp2(inst);
    let mut lp = LinearProgram::new(map.num_columns());

    for m in 0..nm {
        let (lo, hi) = inst.proc_time_bounds[m];
        for t in 0..nt {
            let j = map.v(m, t);
            lp.objective[j] = -inst.energy_rate[m];
            lp.bounds[j] = VarBounds::new(lo, Some(hi));
            lp.var_names[j] = format!("v_{m}_{t}");
        }
    }
    lp.objective_offset = y_hat
        .iter()
        .map(|per_m| {
            per_m
                .iter()
                .enumerate()
                .map(|(m, row)| inst.vao_cost[m] * row.iter().sum::<f64>())
                .sum::<f64>()
        })
        .sum();

    for m in 0..nm {
        for t in 0..nt {
            let load: f64 = y_hat.iter().map(|per_m| per_m[m][t]).sum();
            lp.add_constraint(
                format!("cap_{m}_{t}"),
                &[(map.v(m, t), load)],
                Relation::Le,
                inst.capacity[t],
            );
        }
    }
    add_stock_block(&mut lp, inst, &map, |i, m, t| {
        Production::Constant(y_hat[i][m][t])
    });
    Ok((lp, map))
}

/// Assemble a full [`Solution`] from an optimal subproblem outcome and the
/// block that was held fixed.
///
/// Processing times of machines with a zero energy rate carry no cost in
/// SP2, so the LP may return any value in their range. They are normalized
/// to the slowest setting the machine's load allows.
pub fn extract_solution(
    inst: &Instance,
    outcome: &LpOutcome,
    map: &VarIndexMap,
    fixed: FixedBlock<'_>,
) -> Result<Solution> {
    let LpOutcome::Optimal { x, objective } = outcome else {
        return Err(Error::Contract(format!(
            "cannot extract a solution from {outcome:?}"
        )));
    };
    if x.len() != map.num_columns() {
        return Err(Error::Contract(
            "LP vector does not match the column map".into(),
        ));
    }
    let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);

    let production = match fixed {
        FixedBlock::Production(y_hat) if !map.has_production() => {
            check_production(inst, y_hat)?;
            y_hat
                .iter()
                .map(|per_m| {
                    per_m
                        .iter()
                        .map(|row| row.iter().map(|&y| y.max(0.0)).collect())
                        .collect()
                })
                .collect()
        }
        FixedBlock::ProcTime(_) if map.has_production() => (0..ni)
            .map(|i| {
                (0..nm)
                    .map(|m| (0..nt).map(|t| x[map.y(i, m, t)]).collect())
                    .collect()
            })
            .collect::<Vec<Vec<Vec<f64>>>>(),
        _ => {
            return Err(Error::Contract(
                "fixed block does not match the subproblem".into(),
            ))
        }
    };

    let proc_time = match fixed {
        FixedBlock::ProcTime(v_hat) => {
            check_proc_time(inst, v_hat)?;
            v_hat.to_vec()
        }
        FixedBlock::Production(_) => {
            let mut v: Vec<Vec<f64>> = (0..nm)
                .map(|m| (0..nt).map(|t| x[map.v(m, t)]).collect())
                .collect();
            for m in 0..nm {
                if inst.energy_rate[m] != 0.0 {
                    continue;
                }
                let (lo, hi) = inst.proc_time_bounds[m];
                for t in 0..nt {
                    let load: f64 = production
                        .iter()
                        .map(|per_m: &Vec<Vec<f64>>| per_m[m][t])
                        .sum();
                    let slowest = if load > 0.0 {
                        hi.min(inst.capacity[t] / load)
                    } else {
                        hi
                    };
                    v[m][t] = slowest.max(v[m][t]).clamp(lo, hi);
                }
            }
            v
        }
    };

    let grab = |col: &dyn Fn(usize, usize) -> usize| -> Vec<Vec<f64>> {
        (0..ni)
            .map(|i| (0..nt).map(|t| x[col(i, t)].max(0.0)).collect())
            .collect()
    };
    let mut sol = Solution {
        production,
        proc_time,
        end_inventory: grab(&|i, t| map.s(i, t)),
        wip_inventory: grab(&|i, t| map.u(i, t)),
        objective: 0.0,
    };
    sol.objective = evaluate_objective(inst, &sol)?;
    if (sol.objective - objective).abs() > 1e-7 * objective.abs().max(1.0) {
        return Err(Error::Contract(format!(
            "recomputed objective {} disagrees with LP objective {objective}",
            sol.objective
        )));
    }
    Ok(sol)
}

/// Solve SP1 at `v_hat` and return the full solution, or `None` when the
/// subproblem is infeasible.
pub fn solve_sp1(
    inst: &Instance,
    v_hat: &[Vec<f64>],
    flow_mode: FlowMode,
) -> Result<Option<Solution>> {
    let (lp, map) = build_sp1(inst, v_hat, flow_mode)?;
    match crate::lp::solve(&lp)? {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Solver("SP1 reported unbounded".into())),
        outcome => extract_solution(inst, &outcome, &map, FixedBlock::ProcTime(v_hat)).map(Some),
    }
}

/// Solve SP2 at `y_hat`; `None` when infeasible.
pub fn solve_sp2(
    inst: &Instance,
    y_hat: &[Vec<Vec<f64>>],
    flow_mode: FlowMode,
) -> Result<Option<Solution>> {
    let (lp, map) = build_sp2(inst, y_hat, flow_mode)?;
    match crate::lp::solve(&lp)? {
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Solver("SP2 reported unbounded".into())),
        outcome => extract_solution(inst, &outcome, &map, FixedBlock::Production(y_hat)).map(Some),
    }
}
