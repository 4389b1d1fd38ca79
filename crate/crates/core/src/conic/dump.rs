//! Plain-text dump of a [`ConicProgram`] for offline inspection.
//!
//! ```text
//! # offgrid-conic v1
//! variables <n>
//! objective <i>:<c> ...
//! linear <= <bound> | <i>:<c> ... const <c0>
//! soc head <i>:<c> ... const <c0> | tail <i>:<c> ... const <c0> ; ...
//! nonneg <i> ...
//! box <i> <lower> <upper>
//! ```

use std::io::Write;

use super::{AffineExpr, ConicProgram, Relation};

pub const DUMP_HEADER: &str = "# offgrid-conic v1";

fn expr(e: &AffineExpr) -> String {
    let mut out = String::new();
    for (i, c) in &e.terms {
        out.push_str(&format!("{i}:{c} "));
    }
    out.push_str(&format!("const {}", e.constant));
    out
}

pub fn write_program<W: Write>(program: &ConicProgram, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DUMP_HEADER}")?;
    writeln!(out, "variables {}", program.num_vars())?;
    let obj: Vec<String> = program
        .objective()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| format!("{i}:{c}"))
        .collect();
    writeln!(out, "objective {}", obj.join(" "))?;
    for c in program.linear_constraints() {
        let rel = match c.relation {
            Relation::LessEqual => "<=",
            Relation::Equal => "=",
        };
        writeln!(out, "linear {rel} {} | {}", c.bound, expr(&c.expr))?;
    }
    for c in program.soc_constraints() {
        let tail: Vec<String> = c.tail.iter().map(expr).collect();
        writeln!(out, "soc head {} | tail {}", expr(&c.head), tail.join(" ; "))?;
    }
    if !program.nonneg_indices().is_empty() {
        let idx: Vec<String> = program.nonneg_indices().iter().map(|i| i.to_string()).collect();
        writeln!(out, "nonneg {}", idx.join(" "))?;
    }
    for b in program.box_constraints() {
        writeln!(out, "box {} {} {}", b.index, b.lower, b.upper)?;
    }
    Ok(())
}
