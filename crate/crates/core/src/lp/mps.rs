use std::fmt::Write;

use super::{LinearProgram, Relation};

/// Render `lp` as a free-format MPS listing. Columns appear in index order
/// and rows in insertion order, so equal programs give equal text. The
/// objective offset is written as the negated RHS of the cost row, which is
/// how most MPS readers pick up a constant term.
pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let row_name = |r: usize| -> String {
        let n = &lp.constraints[r].name;
        if n.is_empty() {
            format!("R{r}")
        } else {
            n.clone()
        }
    };

    writeln!(out, "NAME          {name}").unwrap();
    writeln!(out, "ROWS").unwrap();
    writeln!(out, " N  COST").unwrap();
    for (r, c) in lp.constraints.iter().enumerate() {
        let tag = match c.relation {
            Relation::Le => "L",
            Relation::Eq => "E",
            Relation::Ge => "G",
        };
        writeln!(out, " {tag}  {}", row_name(r)).unwrap();
    }

    writeln!(out, "COLUMNS").unwrap();
    for j in 0..lp.num_vars() {
        let col = &lp.var_names[j];
        if lp.objective[j] != 0.0 {
            writeln!(out, "    {col}  COST  {}", lp.objective[j]).unwrap();
        }
        for (r, c) in lp.constraints.iter().enumerate() {
            if c.coeffs[j] != 0.0 {
                writeln!(out, "    {col}  {}  {}", row_name(r), c.coeffs[j]).unwrap();
            }
        }
    }

    writeln!(out, "RHS").unwrap();
    if lp.objective_offset != 0.0 {
        writeln!(out, "    RHS  COST  {}", -lp.objective_offset).unwrap();
    }
    for (r, c) in lp.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            writeln!(out, "    RHS  {}  {}", row_name(r), c.rhs).unwrap();
        }
    }

    writeln!(out, "BOUNDS").unwrap();
    for (j, b) in lp.bounds.iter().enumerate() {
        let col = &lp.var_names[j];
        match b.upper {
            Some(u) if u == b.lower => writeln!(out, " FX BND  {col}  {u}").unwrap(),
            Some(u) => {
                if b.lower != 0.0 {
                    writeln!(out, " LO BND  {col}  {}", b.lower).unwrap();
                }
                writeln!(out, " UP BND  {col}  {u}").unwrap();
            }
            None if b.lower != 0.0 => writeln!(out, " LO BND  {col}  {}", b.lower).unwrap(),
            None => {}
        }
    }
    writeln!(out, "ENDATA").unwrap();
    out
}
