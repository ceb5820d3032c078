//! Dense-tableau primal simplex with implicit variable bounds.
//!
//! Variables are shifted so every lower bound is zero; nonbasic columns sit
//! at either zero or their upper bound. Phase one minimizes the sum of
//! artificial variables, phase two the true objective. Pricing is Dantzig's
//! rule until a run of degenerate pivots is seen, after which the phase
//! switches to Bland's smallest-index rule for good, which cannot cycle.

use super::{LinearProgram, LpOutcome, Relation};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;
const DEGENERATE_STREAK_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

enum Step {
    Optimal,
    Unbounded,
}

pub(super) struct Tableau<'a> {
    lp: &'a LinearProgram,
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`, always holds `B^-1 A`.
    tab: Vec<f64>,
    /// Original (sign-normalized) constraint matrix, used for the final refresh.
    a0: Vec<f64>,
    b: Vec<f64>,
    kind: Vec<ColKind>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    /// Basic row of each column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    basis: Vec<usize>,
    /// Column that formed the identity in each row at start.
    initial_basis: Vec<usize>,
    xb: Vec<f64>,
    reduced: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl<'a> Tableau<'a> {
    pub(super) fn build(lp: &'a LinearProgram) -> Self {
        let n = lp.num_vars();
        let rows = lp.constraints.len();

        // Flip rows with a negative right-hand side.
        let mut norm_rows = Vec::with_capacity(rows);
        let (mut n_slack, mut n_art) = (0, 0);
        for c in &lp.constraints {
            let shift: f64 = c
                .coeffs
                .iter()
                .zip(&lp.bounds)
                .map(|(a, b)| a * b.lower)
                .sum();
            let mut rhs = c.rhs - shift;
            let mut coeffs = c.coeffs.clone();
            let mut rel = c.relation;
            if rhs < 0.0 {
                rhs = -rhs;
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            match rel {
                Relation::Le => n_slack += 1,
                Relation::Ge => {
                    n_slack += 1;
                    n_art += 1;
                }
                Relation::Eq => n_art += 1,
            }
            norm_rows.push((coeffs, rel, rhs));
        }

        let cols = n + n_slack + n_art;
        let mut tab = vec![0.0; rows * cols];
        let mut kind = vec![ColKind::Structural; n];
        kind.extend(std::iter::repeat_n(ColKind::Slack, n_slack));
        kind.extend(std::iter::repeat_n(ColKind::Artificial, n_art));
        let mut upper: Vec<f64> = lp
            .bounds
            .iter()
            .map(|b| b.upper.map_or(f64::INFINITY, |u| u - b.lower))
            .collect();
        upper.extend(std::iter::repeat_n(f64::INFINITY, n_slack + n_art));

        let mut b = Vec::with_capacity(rows);
        let mut basis = Vec::with_capacity(rows);
        let (mut next_slack, mut next_art) = (n, n + n_slack);
        for (r, (coeffs, rel, rhs)) in norm_rows.into_iter().enumerate() {
            let row = &mut tab[r * cols..(r + 1) * cols];
            row[..n].copy_from_slice(&coeffs);
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            b.push(rhs);
        }

        let mut row_of = vec![usize::MAX; cols];
        for (r, &j) in basis.iter().enumerate() {
            row_of[j] = r;
        }
        Tableau {
            lp,
            rows,
            cols,
            a0: tab.clone(),
            tab,
            xb: b.clone(),
            b,
            kind,
            upper,
            at_upper: vec![false; cols],
            row_of,
            initial_basis: basis.clone(),
            basis,
            reduced: vec![0.0; cols],
            iterations: 0,
            max_iterations: 20_000 + 50 * (rows + cols),
        }
    }

    pub(super) fn run(mut self) -> Result<LpOutcome> {
        let has_artificials = self.kind.contains(&ColKind::Artificial);
        if has_artificials {
            let phase_one: Vec<f64> = self
                .kind
                .iter()
                .map(|&k| if k == ColKind::Artificial { 1.0 } else { 0.0 })
                .collect();
            self.price(&phase_one);
            if let Step::Unbounded = self.iterate(1.0)? {
                return Err(Error::Solver("phase one reported an unbounded ray".into()));
            }
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&j, _)| self.kind[j] == ColKind::Artificial)
                .map(|(_, &v)| v)
                .sum();
            let scale = self.b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if infeasibility > 1e-9 * scale {
                return Ok(LpOutcome::Infeasible);
            }
            for j in 0..self.cols {
                if self.kind[j] == ColKind::Artificial {
                    self.upper[j] = 0.0;
                }
            }
            self.drive_out_artificials();
        }

        let n = self.lp.num_vars();
        let mut phase_two = vec![0.0; self.cols];
        phase_two[..n].copy_from_slice(&self.lp.objective);
        let cost_scale = self
            .lp
            .objective
            .iter()
            .fold(1.0f64, |acc, c| acc.max(c.abs()));
        self.price(&phase_two);
        if let Step::Unbounded = self.iterate(cost_scale)? {
            return Ok(LpOutcome::Unbounded);
        }

        self.refresh_basic_values();
        let mut x = vec![0.0; n];
        for (j, xj) in x.iter_mut().enumerate() {
            let shifted = if self.row_of[j] != usize::MAX {
                self.xb[self.row_of[j]]
            } else if self.at_upper[j] {
                self.upper[j]
            } else {
                0.0
            };
            let shifted = shifted.clamp(0.0, self.upper[j]);
            *xj = self.lp.bounds[j].lower + shifted;
        }
        let objective = self.lp.objective_at(&x);
        Ok(LpOutcome::Optimal { x, objective })
    }

    /// Reduced costs `c - c_B B^-1 A` for cost vector `cost`.
    fn price(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.tab[r * self.cols..(r + 1) * self.cols];
                for (d, a) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for &j in &self.basis {
            self.reduced[j] = 0.0;
        }
    }

    fn iterate(&mut self, cost_scale: f64) -> Result<Step> {
        let opt_tol = 1e-9 * cost_scale;
        let mut bland = false;
        let mut degenerate_streak = 0;
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::Solver(format!(
                    "simplex exceeded {} iterations",
                    self.max_iterations
                )));
            }

            let Some(enter) = self.choose_entering(opt_tol, bland) else {
                return Ok(Step::Optimal);
            };
            let dir = if self.at_upper[enter] { -1.0 } else { 1.0 };

            // Ratio test over basic variables.
            let mut best: Option<(usize, f64, f64)> = None;
            for r in 0..self.rows {
                let g = self.tab[r * self.cols + enter] * dir;
                let limit = if g > PIVOT_TOL {
                    self.xb[r].max(0.0) / g
                } else if g < -PIVOT_TOL {
                    let ub = self.upper[self.basis[r]];
                    if ub.is_infinite() {
                        continue;
                    }
                    (ub - self.xb[r]).max(0.0) / -g
                } else {
                    continue;
                };
                let better = match best {
                    None => true,
                    Some((br, bl, bg)) => {
                        if limit < bl - RATIO_TIE {
                            true
                        } else if limit <= bl + RATIO_TIE {
                            if bland {
                                self.basis[r] < self.basis[br]
                            } else {
                                g.abs() > bg.abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((r, limit, g));
                }
            }

            let flip = self.upper[enter];
            let (theta, leave) = match best {
                Some((r, limit, _)) if limit < flip => (limit, Some(r)),
                _ if flip.is_finite() => (flip, None),
                _ => return Ok(Step::Unbounded),
            };

            if theta <= RATIO_TIE {
                degenerate_streak += 1;
                if degenerate_streak > DEGENERATE_STREAK_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
            }

            if theta != 0.0 {
                for r in 0..self.rows {
                    let g = self.tab[r * self.cols + enter] * dir;
                    if g != 0.0 {
                        self.xb[r] -= g * theta;
                    }
                }
            }

            match leave {
                None => self.at_upper[enter] = !self.at_upper[enter],
                Some(r) => {
                    let g = self.tab[r * self.cols + enter] * dir;
                    let leaving = self.basis[r];
                    self.at_upper[leaving] = g < 0.0;
                    let entering_value = if dir > 0.0 {
                        theta
                    } else {
                        self.upper[enter] - theta
                    };
                    self.at_upper[enter] = false;
                    self.pivot(r, enter);
                    self.xb[r] = entering_value;
                }
            }
        }
    }

    fn choose_entering(&self, opt_tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.row_of[j] != usize::MAX || self.upper[j] == 0.0 {
                continue;
            }
            let d = self.reduced[j];
            let improving = if self.at_upper[j] {
                d > opt_tol
            } else {
                d < -opt_tol
            };
            if !improving {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, bd)| d.abs() > bd) {
                best = Some((j, d.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Make column `enter` basic in row `r`.
    fn pivot(&mut self, r: usize, enter: usize) {
        let cols = self.cols;
        let leaving = self.basis[r];
        let p = self.tab[r * cols + enter];
        {
            let row = &mut self.tab[r * cols..(r + 1) * cols];
            for a in row.iter_mut() {
                *a /= p;
            }
            row[enter] = 1.0;
        }
        let nonzero: Vec<usize> = (0..cols)
            .filter(|&k| self.tab[r * cols + k] != 0.0)
            .collect();
        let pivot_row: Vec<f64> = nonzero.iter().map(|&k| self.tab[r * cols + k]).collect();

        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.tab[i * cols + enter];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * cols..(i + 1) * cols];
            for (&k, &a) in nonzero.iter().zip(&pivot_row) {
                row[k] -= f * a;
            }
            row[enter] = 0.0;
        }
        let f = self.reduced[enter];
        if f != 0.0 {
            for (&k, &a) in nonzero.iter().zip(&pivot_row) {
                self.reduced[k] -= f * a;
            }
            self.reduced[enter] = 0.0;
        }

        self.row_of[leaving] = usize::MAX;
        self.row_of[enter] = r;
        self.basis[r] = enter;
    }

    /// After phase one, swap zero-valued artificials out of the basis where a
    /// usable pivot exists. Rows with none left are redundant.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                if self.kind[j] == ColKind::Artificial || self.row_of[j] != usize::MAX {
                    continue;
                }
                let a = self.tab[r * self.cols + j].abs();
                if a > 1e-7 && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                let value = if self.at_upper[j] { self.upper[j] } else { 0.0 };
                let leaving = self.basis[r];
                self.at_upper[leaving] = false;
                self.at_upper[j] = false;
                self.pivot(r, j);
                self.xb[r] = value;
            }
        }
    }

    /// Recompute basic values from the original data to shed accumulated
    /// rounding from the incremental updates.
    fn refresh_basic_values(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.cols {
            if self.row_of[j] == usize::MAX && self.at_upper[j] {
                let u = self.upper[j];
                for (r, v) in rhs.iter_mut().enumerate() {
                    *v -= self.a0[r * self.cols + j] * u;
                }
            }
        }
        for i in 0..self.rows {
            let row = &self.tab[i * self.cols..(i + 1) * self.cols];
            self.xb[i] = self
                .initial_basis
                .iter()
                .zip(&rhs)
                .map(|(&col, v)| row[col] * v)
                .sum();
        }
    }
}
