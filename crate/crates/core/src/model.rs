//! Problem data, solutions, the cost function and the full feasibility check
//! for the lot-sizing and machine-speed (LSMS) model.
//!
//! All indices are zero-based: product `i` in `0..I`, machine `m` in `0..M`,
//! period `t` in `0..T`. Opening stocks are zero.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for [`check_feasibility`].
pub const FEAS_TOL: f64 = 1e-6;

/// Complete problem data for one planning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub num_products: usize,
    pub num_machines: usize,
    pub num_periods: usize,
    /// `route[i][m]` is 1 when product `i` visits machine `m`.
    pub route: Vec<Vec<u8>>,
    /// Visit order per product; the last entry is the finishing machine.
    pub sequence: Vec<Vec<usize>>,
    /// Value-added cost per unit processed on each machine.
    pub vao_cost: Vec<f64>,
    /// Per-unit cost of moving stock of each product to the warehouse.
    pub transport_cost: Vec<f64>,
    /// Per-unit, per-period holding cost of finished goods.
    pub end_hold_cost: Vec<f64>,
    /// Per-unit, per-period holding cost of work in process.
    pub wip_hold_cost: Vec<f64>,
    /// Energy rate per minute of unit processing time, per machine.
    pub energy_rate: Vec<f64>,
    /// `(v_min, v_max)` in minutes per unit, per machine.
    pub proc_time_bounds: Vec<(f64, f64)>,
    /// `demand[i][t]` in units.
    pub demand: Vec<Vec<f64>>,
    /// Available minutes per period (same for every machine).
    pub capacity: Vec<f64>,
    /// Aggregate finished-goods storage limit.
    pub end_inv_cap: f64,
    /// Aggregate work-in-process storage limit.
    pub wip_inv_cap: f64,
    /// Meters of material per unit; reporting only.
    pub unit_length: f64,
}

/// How material moves between two consecutive machines of a routing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Direct transfer with no buffer. Upstream and downstream totals over the
    /// horizon must match (or per period in strict mode).
    Flow,
    /// Buffered transfer into the last machine of the plant; the buffer is
    /// the product's work-in-process stock.
    Wip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub product: usize,
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
}

/// Interpretation of the flow-equality constraint between machines that are
/// linked without a buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// Totals over the horizon must match.
    #[default]
    Aggregate,
    /// Quantities must match in every period.
    PerPeriod,
}

impl Instance {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Check dimensions and the documented data invariants.
    pub fn validate(&self) -> Result<()> {
        let (ni, nm, nt) = (self.num_products, self.num_machines, self.num_periods);
        if ni == 0 || nm == 0 || nt == 0 {
            return Err(Error::input(
                "instance needs at least one product, machine and period",
            ));
        }
        let check_len = |name: &str, len: usize, want: usize| -> Result<()> {
            if len != want {
                Err(Error::input(format!(
                    "{name} has length {len}, expected {want}"
                )))
            } else {
                Ok(())
            }
        };
        check_len("route", self.route.len(), ni)?;
        check_len("sequence", self.sequence.len(), ni)?;
        check_len("vao_cost", self.vao_cost.len(), nm)?;
        check_len("transport_cost", self.transport_cost.len(), ni)?;
        check_len("end_hold_cost", self.end_hold_cost.len(), ni)?;
        check_len("wip_hold_cost", self.wip_hold_cost.len(), ni)?;
        check_len("energy_rate", self.energy_rate.len(), nm)?;
        check_len("proc_time_bounds", self.proc_time_bounds.len(), nm)?;
        check_len("demand", self.demand.len(), ni)?;
        check_len("capacity", self.capacity.len(), nt)?;

        for (i, row) in self.route.iter().enumerate() {
            check_len(&format!("route[{i}]"), row.len(), nm)?;
            if row.iter().any(|&a| a > 1) {
                return Err(Error::input(format!("route[{i}] must be binary")));
            }
            let seq = &self.sequence[i];
            if seq.first() != Some(&0) {
                return Err(Error::input(format!(
                    "sequence[{i}] must start with machine 0"
                )));
            }
            let mut seen = vec![false; nm];
            for &m in seq {
                if m >= nm || seen[m] {
                    return Err(Error::input(format!(
                        "sequence[{i}] has an invalid or repeated machine {m}"
                    )));
                }
                seen[m] = true;
            }
            for m in 0..nm {
                if seen[m] != (row[m] == 1) {
                    return Err(Error::input(format!(
                        "sequence[{i}] disagrees with route[{i}] at machine {m}"
                    )));
                }
            }
        }
        for (i, row) in self.demand.iter().enumerate() {
            check_len(&format!("demand[{i}]"), row.len(), nt)?;
            if row.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
                return Err(Error::input(format!(
                    "demand[{i}] must be finite and nonnegative"
                )));
            }
        }
        for (m, &(lo, hi)) in self.proc_time_bounds.iter().enumerate() {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::input(format!(
                    "proc_time_bounds[{m}] = ({lo}, {hi}) must satisfy 0 < min <= max"
                )));
            }
        }
        if self.capacity.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::input("capacity must be positive in every period"));
        }
        if !(self.end_inv_cap >= 0.0) || !(self.wip_inv_cap >= 0.0) {
            return Err(Error::input("inventory caps must be nonnegative"));
        }
        let all_costs = self
            .vao_cost
            .iter()
            .chain(&self.transport_cost)
            .chain(&self.end_hold_cost)
            .chain(&self.wip_hold_cost)
            .chain(&self.energy_rate);
        if all_costs.into_iter().any(|c| !c.is_finite()) {
            return Err(Error::input("cost coefficients must be finite"));
        }
        Ok(())
    }

    /// Finishing machine (`m*`) of product `i`.
    pub fn last_machine(&self, i: usize) -> usize {
        *self.sequence[i]
            .last()
            .expect("validated sequence is non-empty")
    }

    /// Consecutive machine pairs of a product's routing. The final hop into
    /// the plant's last machine is buffered by WIP; every other hop is a
    /// direct flow.
    pub fn links(&self, i: usize) -> Vec<Link> {
        let seq = &self.sequence[i];
        let last_plant_machine = self.num_machines - 1;
        seq.windows(2)
            .enumerate()
            .map(|(k, w)| {
                let is_final = k + 2 == seq.len();
                let kind = if is_final && w[1] == last_plant_machine {
                    LinkKind::Wip
                } else {
                    LinkKind::Flow
                };
                Link {
                    product: i,
                    from: w[0],
                    to: w[1],
                    kind,
                }
            })
            .collect()
    }

    pub fn all_links(&self) -> Vec<Link> {
        (0..self.num_products).flat_map(|i| self.links(i)).collect()
    }

    /// WIP link of product `i`, if it may hold work in process.
    pub fn wip_link(&self, i: usize) -> Option<Link> {
        self.links(i).into_iter().find(|l| l.kind == LinkKind::Wip)
    }

    pub fn total_demand(&self, i: usize) -> f64 {
        self.demand[i].iter().sum()
    }

    pub fn period_demand(&self, t: usize) -> f64 {
        self.demand.iter().map(|row| row[t]).sum()
    }

    pub fn v_min(&self, m: usize) -> f64 {
        self.proc_time_bounds[m].0
    }

    pub fn v_max(&self, m: usize) -> f64 {
        self.proc_time_bounds[m].1
    }

    /// Upper bound on `y[i][m][t]`: total demand when the machine is on the
    /// product's route, zero otherwise.
    pub fn production_bound(&self, i: usize, m: usize) -> f64 {
        if self.route[i][m] == 1 {
            self.total_demand(i)
        } else {
            0.0
        }
    }

    /// `v_min` on every machine and period.
    pub fn v_min_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.num_machines)
            .map(|m| vec![self.v_min(m); self.num_periods])
            .collect()
    }
}

/// Values of all decision variables plus the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    /// `production[i][m][t]`
    pub production: Vec<Vec<Vec<f64>>>,
    /// `proc_time[m][t]`
    pub proc_time: Vec<Vec<f64>>,
    /// `end_inventory[i][t]`
    pub end_inventory: Vec<Vec<f64>>,
    /// `wip_inventory[i][t]`
    pub wip_inventory: Vec<Vec<f64>>,
    pub objective: f64,
}

impl Solution {
    /// All-zero production and stocks with processing times at their minimum.
    pub fn zeros(inst: &Instance) -> Self {
        let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);
        let mut sol = Solution {
            production: vec![vec![vec![0.0; nt]; nm]; ni],
            proc_time: inst.v_min_matrix(),
            end_inventory: vec![vec![0.0; nt]; ni],
            wip_inventory: vec![vec![0.0; nt]; ni],
            objective: 0.0,
        };
        sol.objective = evaluate_objective(inst, &sol).expect("dimensions match");
        sol
    }

    pub fn check_dimensions(&self, inst: &Instance) -> Result<()> {
        let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);
        let ok = self.production.len() == ni
            && self
                .production
                .iter()
                .all(|per_m| per_m.len() == nm && per_m.iter().all(|r| r.len() == nt))
            && self.proc_time.len() == nm
            && self.proc_time.iter().all(|r| r.len() == nt)
            && self.end_inventory.len() == ni
            && self.end_inventory.iter().all(|r| r.len() == nt)
            && self.wip_inventory.len() == ni
            && self.wip_inventory.iter().all(|r| r.len() == nt);
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!(
                "solution arrays do not match instance dimensions (I={ni}, M={nm}, T={nt})"
            )))
        }
    }

    /// Machine load in units: `sum_i y[i][m][t]`.
    pub fn machine_load(&self, m: usize, t: usize) -> f64 {
        self.production.iter().map(|per_m| per_m[m][t]).sum()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Total cost: value-added processing, holding plus transport of both stock
/// kinds, minus the energy credit of slower operation.
pub fn evaluate_objective(inst: &Instance, sol: &Solution) -> Result<f64> {
    sol.check_dimensions(inst)?;
    let mut z = 0.0;
    for i in 0..inst.num_products {
        for m in 0..inst.num_machines {
            z += inst.vao_cost[m] * sol.production[i][m].iter().sum::<f64>();
        }
        let end_rate = inst.end_hold_cost[i] + inst.transport_cost[i];
        let wip_rate = inst.wip_hold_cost[i] + inst.transport_cost[i];
        z += end_rate * sol.end_inventory[i].iter().sum::<f64>();
        z += wip_rate * sol.wip_inventory[i].iter().sum::<f64>();
    }
    for m in 0..inst.num_machines {
        z -= inst.energy_rate[m] * sol.proc_time[m].iter().sum::<f64>();
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    Capacity,
    DemandBound,
    #[serde(rename = "chem_flow")]
    Flow,
    EndBalance,
    WipBalance,
    #[serde(rename = "v_bounds")]
    ProcTimeBounds,
    EndCap,
    WipCap,
    NoWip,
    Nonnegativity,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintId::Capacity => "capacity",
            ConstraintId::DemandBound => "demand_bound",
            ConstraintId::Flow => "chem_flow",
            ConstraintId::EndBalance => "end_balance",
            ConstraintId::WipBalance => "wip_balance",
            ConstraintId::ProcTimeBounds => "v_bounds",
            ConstraintId::EndCap => "end_cap",
            ConstraintId::WipCap => "wip_cap",
            ConstraintId::NoWip => "no_wip",
            ConstraintId::Nonnegativity => "nonnegativity",
        };
        f.write_str(s)
    }
}

/// One violated constraint. `index` holds the zero-based indices that
/// identify the row, e.g. `[m, t]` for capacity or `[i, t]` for a balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub index: Vec<usize>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, id: ConstraintId) -> usize {
        self.violations
            .iter()
            .filter(|v| v.constraint == id)
            .count()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {} {:?}: {:.3e}", v.constraint, v.index, v.magnitude)?;
        }
        Ok(())
    }
}

/// Check every model constraint with the default aggregate flow mode.
pub fn check_feasibility(inst: &Instance, sol: &Solution, tol: f64) -> FeasibilityReport {
    check_feasibility_with(inst, sol, tol, FlowMode::Aggregate)
}

/// Check every model constraint at absolute tolerance `tol`. Dimension
/// mismatches are reported as a single nonnegativity violation with an
/// infinite magnitude rather than a panic.
pub fn check_feasibility_with(
    inst: &Instance,
    sol: &Solution,
    tol: f64,
    flow_mode: FlowMode,
) -> FeasibilityReport {
    let mut out = Vec::new();
    if sol.check_dimensions(inst).is_err() {
        out.push(Violation {
            constraint: ConstraintId::Nonnegativity,
            index: vec![],
            magnitude: f64::INFINITY,
        });
        return FeasibilityReport { violations: out };
    }
    let (ni, nm, nt) = (inst.num_products, inst.num_machines, inst.num_periods);
    let mut push = |constraint, index: Vec<usize>, excess: f64| {
        if excess > tol || excess.is_nan() {
            out.push(Violation {
                constraint,
                index,
                magnitude: excess,
            });
        }
    };

    for i in 0..ni {
        for t in 0..nt {
            for m in 0..nm {
                push(
                    ConstraintId::Nonnegativity,
                    vec![i, m, t],
                    -sol.production[i][m][t],
                );
            }
            push(
                ConstraintId::Nonnegativity,
                vec![i, t],
                -sol.end_inventory[i][t],
            );
            push(
                ConstraintId::Nonnegativity,
                vec![i, t],
                -sol.wip_inventory[i][t],
            );
        }
    }

    for m in 0..nm {
        for t in 0..nt {
            let used = sol.machine_load(m, t) * sol.proc_time[m][t];
            push(ConstraintId::Capacity, vec![m, t], used - inst.capacity[t]);
        }
    }

    for i in 0..ni {
        for m in 0..nm {
            let bound = inst.production_bound(i, m);
            for t in 0..nt {
                push(
                    ConstraintId::DemandBound,
                    vec![i, m, t],
                    sol.production[i][m][t] - bound,
                );
            }
        }
    }

    for link in inst.all_links() {
        let i = link.product;
        match link.kind {
            LinkKind::Flow => match flow_mode {
                FlowMode::Aggregate => {
                    let up: f64 = sol.production[i][link.from].iter().sum();
                    let down: f64 = sol.production[i][link.to].iter().sum();
                    push(
                        ConstraintId::Flow,
                        vec![i, link.from, link.to],
                        (up - down).abs(),
                    );
                }
                FlowMode::PerPeriod => {
                    for t in 0..nt {
                        let gap = sol.production[i][link.from][t] - sol.production[i][link.to][t];
                        push(
                            ConstraintId::Flow,
                            vec![i, link.from, link.to, t],
                            gap.abs(),
                        );
                    }
                }
            },
            LinkKind::Wip => {
                let mut prev = 0.0;
                for t in 0..nt {
                    let u = sol.wip_inventory[i][t];
                    let lhs = prev + sol.production[i][link.from][t];
                    let rhs = sol.production[i][link.to][t] + u;
                    push(ConstraintId::WipBalance, vec![i, t], (lhs - rhs).abs());
                    prev = u;
                }
            }
        }
    }

    for i in 0..ni {
        let finish = inst.last_machine(i);
        let mut prev = 0.0;
        for t in 0..nt {
            let s = sol.end_inventory[i][t];
            let lhs = prev + sol.production[i][finish][t];
            let rhs = inst.demand[i][t] + s;
            push(ConstraintId::EndBalance, vec![i, t], (lhs - rhs).abs());
            prev = s;
        }
    }

    for m in 0..nm {
        let (lo, hi) = inst.proc_time_bounds[m];
        for t in 0..nt {
            let v = sol.proc_time[m][t];
            push(
                ConstraintId::ProcTimeBounds,
                vec![m, t],
                (lo - v).max(v - hi),
            );
        }
    }

    for t in 0..nt {
        let s_total: f64 = (0..ni).map(|i| sol.end_inventory[i][t]).sum();
        let u_total: f64 = (0..ni).map(|i| sol.wip_inventory[i][t]).sum();
        push(ConstraintId::EndCap, vec![t], s_total - inst.end_inv_cap);
        push(ConstraintId::WipCap, vec![t], u_total - inst.wip_inv_cap);
    }

    for i in 0..ni {
        if inst.wip_link(i).is_none() {
            for t in 0..nt {
                push(
                    ConstraintId::NoWip,
                    vec![i, t],
                    sol.wip_inventory[i][t].abs(),
                );
            }
        }
    }

    FeasibilityReport { violations: out }
}
