//! Writer for the CPLEX-style LP text format, for cross-checking with
//! external solvers.

use alloc::string::String;
use core::fmt::{self, Write};

use super::LpProblem;

const TERMS_PER_OBJECTIVE_LINE: usize = 8;

/// Maps a name onto the characters the LP format accepts.
fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "!\"#$%&()/,.;?@_`'{}|~".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert(0, '_');
    }
    out
}

fn write_term(out: &mut impl Write, coef: f64, name: &str) -> fmt::Result {
    if coef < 0.0 {
        write!(out, " - {} {}", -coef, name)
    } else {
        write!(out, " + {coef} {name}")
    }
}

/// Writes `problem` with one constraint per line.
pub fn write_lp_format(problem: &LpProblem, out: &mut impl Write) -> fmt::Result {
    let names: alloc::vec::Vec<String> =
        problem.variables().iter().map(|v| sanitize(&v.name)).collect();
    writeln!(out, "\\ {} variables, {} constraints", problem.num_vars(), problem.num_constraints())?;
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    let mut on_line = 0;
    for (v, name) in problem.variables().iter().zip(&names) {
        if v.cost == 0.0 {
            continue;
        }
        if on_line == TERMS_PER_OBJECTIVE_LINE {
            write!(out, "\n     ")?;
            on_line = 0;
        }
        write_term(out, v.cost, name)?;
        on_line += 1;
    }
    writeln!(out)?;
    writeln!(out, "Subject To")?;
    for (i, c) in problem.constraints().iter().enumerate() {
        let label = if c.name.is_empty() {
            alloc::format!("r{i}")
        } else {
            sanitize(&c.name)
        };
        write!(out, " {label}:")?;
        if c.terms.is_empty() {
            // The format needs at least one variable per row.
            write!(out, " 0 {}", names.first().map_or("_", String::as_str))?;
        }
        for &(v, a) in &c.terms {
            write_term(out, a, &names[v.0])?;
        }
        writeln!(out, " {} {}", c.relation, c.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for (v, name) in problem.variables().iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => writeln!(out, " {name} = {}", v.lower)?,
            (true, true) => writeln!(out, " {} <= {name} <= {}", v.lower, v.upper)?,
            (true, false) if v.lower == 0.0 => {}
            (true, false) => writeln!(out, " {name} >= {}", v.lower)?,
            (false, true) => writeln!(out, " -inf <= {name} <= {}", v.upper)?,
            (false, false) => writeln!(out, " {name} free")?,
        }
    }
    writeln!(out, "End")
}
