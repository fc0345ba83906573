//! Plain-text model dump for debugging.
//!
//! Grammar (one statement per line, variables named `x<index>`):
//!
//! ```text
//! model    := sense "obj:" expr  "subject to" row*  "bounds" bound*
//!             ["general" var*] ["binaries" var*] "end"
//! sense    := "minimize" | "maximize"
//! row      := "c<index>:" expr ("<=" | ">=" | "=") number
//! bound    := number "<=" var "<=" number | var "free"
//!           | var ">=" number | var "<=" number
//! expr     := term (("+" | "-") term)* | "0"
//! term     := number var
//! ```
//!
//! Integer variables bounded to `[0, 1]` go under `binaries`, the rest under
//! `general`. Bounds equal to the default `[0, ∞)` are omitted.

use alloc::string::String;
use core::fmt::Write;

use super::{Direction, MilpModel, Sense};

fn write_expr(out: &mut String, terms: impl Iterator<Item = (usize, f64)>) {
    let mut first = true;
    for (j, a) in terms {
        if a == 0.0 {
            continue;
        }
        if first {
            let _ = write!(out, " {} x{}", a, j);
        } else if a < 0.0 {
            let _ = write!(out, " - {} x{}", -a, j);
        } else {
            let _ = write!(out, " + {} x{}", a, j);
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders `model` in the grammar above.
pub fn write_lp(model: &MilpModel) -> String {
    let lp = &model.lp;
    let mut out = String::new();
    out.push_str(match lp.direction {
        Direction::Minimize => "minimize\n",
        Direction::Maximize => "maximize\n",
    });
    out.push_str(" obj:");
    write_expr(&mut out, lp.objective.iter().copied().enumerate());
    out.push_str("\nsubject to\n");
    for (i, r) in lp.rows.iter().enumerate() {
        let _ = write!(out, " c{}:", i);
        write_expr(&mut out, r.coefs.iter().copied());
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {} {}", op, r.rhs);
    }
    out.push_str("bounds\n");
    for j in 0..lp.var_count() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let binary = model.integer.get(j) == Some(&true) && lo == 0.0 && hi == 1.0;
        if binary || (lo == 0.0 && hi == f64::INFINITY) {
            continue;
        }
        let _ = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => writeln!(out, " {} <= x{} <= {}", lo, j, hi),
            (true, false) => writeln!(out, " x{} >= {}", j, lo),
            (false, true) => writeln!(out, " x{} <= {}", j, hi),
            (false, false) => writeln!(out, " x{} free", j),
        };
    }
    let mut general = String::new();
    let mut binaries = String::new();
    for (j, &int) in model.integer.iter().enumerate() {
        if int {
            let target = if lp.lower[j] == 0.0 && lp.upper[j] == 1.0 { &mut binaries } else { &mut general };
            let _ = write!(target, " x{}", j);
        }
    }
    if !general.is_empty() {
        let _ = writeln!(out, "general\n{}", general);
    }
    if !binaries.is_empty() {
        let _ = writeln!(out, "binaries\n{}", binaries);
    }
    out.push_str("end\n");
    out
}
