//! Test-only helpers: an LP oracle that enumerates basic points directly,
//! and a generator of small random LPs.

#![allow(dead_code, clippy::needless_range_loop)]

use lsms::lp::{LinearProgram, Relation, VarBounds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// A hyperplane `a . x = b` candidate for an active set.
struct Plane {
    a: Vec<f64>,
    b: f64,
}

/// Solve an n x n system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum of `cost . x` over the basic points of `{x : rows, bounds}`;
/// `None` when no basic point is feasible.
fn min_over_vertices(
    n: usize,
    planes: &[Plane],
    feasible: &dyn Fn(&[f64]) -> bool,
    cost: &[f64],
) -> Option<f64> {
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, |pick| {
        let a = pick.iter().map(|&p| planes[p].a.clone()).collect();
        let b = pick.iter().map(|&p| planes[p].b).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let z: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(z, |bz: f64| bz.min(z)));
            }
        }
    });
    best
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

/// Reference answer for `lp` by brute-force vertex enumeration. Every
/// variable has a finite lower bound, so a nonempty feasible set has a
/// vertex; unboundedness is decided on the normalized recession cone.
pub fn vertex_oracle(lp: &LinearProgram) -> Verdict {
    let n = lp.num_vars();
    let tol = 1e-7;
    let mut planes: Vec<Plane> = lp
        .constraints
        .iter()
        .map(|c| Plane {
            a: c.coeffs.clone(),
            b: c.rhs,
        })
        .collect();
    for (j, b) in lp.bounds.iter().enumerate() {
        planes.push(Plane {
            a: unit(n, j),
            b: b.lower,
        });
        if let Some(u) = b.upper {
            planes.push(Plane {
                a: unit(n, j),
                b: u,
            });
        }
    }
    let feasible = |x: &[f64]| lp.max_violation(x) <= tol;
    let Some(best) = min_over_vertices(n, &planes, &feasible, &lp.objective) else {
        return Verdict::Infeasible;
    };

    // Recession cone: rows become homogeneous, d >= 0, d_j = 0 for bounded
    // variables, plus sum d <= 1 to make it a polytope.
    let mut cone: Vec<Plane> = lp
        .constraints
        .iter()
        .map(|c| Plane {
            a: c.coeffs.clone(),
            b: 0.0,
        })
        .collect();
    for j in 0..n {
        cone.push(Plane {
            a: unit(n, j),
            b: 0.0,
        });
    }
    cone.push(Plane {
        a: vec![1.0; n],
        b: 1.0,
    });
    let in_cone = |d: &[f64]| {
        let rows_ok = lp.constraints.iter().all(|c| {
            let ad: f64 = c.coeffs.iter().zip(d).map(|(a, v)| a * v).sum();
            match c.relation {
                Relation::Le => ad <= tol,
                Relation::Ge => ad >= -tol,
                Relation::Eq => ad.abs() <= tol,
            }
        });
        let bounds_ok = d
            .iter()
            .zip(&lp.bounds)
            .all(|(&dj, b)| dj >= -tol && (b.upper.is_none() || dj.abs() <= tol));
        rows_ok && bounds_ok && d.iter().sum::<f64>() <= 1.0 + tol
    };
    let ray = min_over_vertices(n, &cone, &in_cone, &lp.objective).unwrap_or(0.0);
    if ray < -1e-9 {
        Verdict::Unbounded
    } else {
        Verdict::Optimal(best + lp.objective_offset)
    }
}

/// Small random LP with integer data: 1..=6 variables, 1..=8 rows.
pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=8);
    let mut lp = LinearProgram::new(n);
    for c in lp.objective.iter_mut() {
        *c = rng.gen_range(-5..=5) as f64;
    }
    for b in lp.bounds.iter_mut() {
        let lower = if rng.gen_bool(0.6) {
            0.0
        } else {
            rng.gen_range(-3..=3) as f64
        };
        let upper = if rng.gen_bool(0.5) {
            Some(lower + rng.gen_range(0..=8) as f64)
        } else {
            None
        };
        *b = VarBounds::new(lower, upper);
    }
    // Most instances are built around a point that satisfies every row.
    let anchor: Option<Vec<f64>> = rng.gen_bool(0.75).then(|| {
        lp.bounds
            .iter()
            .map(|b| {
                b.lower + rng.gen_range(0..=b.upper.map_or(6, |u| (u - b.lower) as i32)) as f64
            })
            .collect()
    });
    for r in 0..m {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                terms.push((j, rng.gen_range(-5..=5) as f64));
            }
        }
        let relation = match rng.gen_range(0..10) {
            0..=4 => Relation::Le,
            5..=7 => Relation::Ge,
            _ => Relation::Eq,
        };
        let rhs = match &anchor {
            Some(x) => {
                let ax: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
                let slack = rng.gen_range(0..=4) as f64;
                match relation {
                    Relation::Le => ax + slack,
                    Relation::Ge => ax - slack,
                    Relation::Eq => ax,
                }
            }
            None => rng.gen_range(-10..=20) as f64,
        };
        lp.add_constraint(format!("r{r}"), &terms, relation, rhs);
    }
    lp
}
