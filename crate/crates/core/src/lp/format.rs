//! CPLEX LP text output.
//!
//! Names are reduced to `[A-Za-z0-9_]`, prefixed with `c_`/`r_` when they
//! would start with a digit, and suffixed with the index on collision.
//! Every column gets an explicit entry in the `Bounds` section.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{LinearProgram, Relation};

fn sanitize(raw: &str, prefix: &str, idx: usize, seen: &mut HashSet<String>) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s = format!("{prefix}{s}");
    }
    if !seen.insert(s.clone()) {
        s = format!("{s}_{idx}");
        seen.insert(s.clone());
    }
    s
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn push_expr(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    let mut first = true;
    for &(j, v) in terms {
        if v == 0.0 {
            continue;
        }
        let sign = if v < 0.0 { "-" } else { "+" };
        if first {
            if v < 0.0 {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        let _ = write!(out, " {} {}", num(v.abs()), names[j]);
        first = false;
    }
    if first {
        let _ = write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("x"));
    }
}

pub fn write_lp_format(lp: &LinearProgram) -> String {
    let mut seen = HashSet::new();
    let cols: Vec<String> = lp
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| sanitize(&c.label, "c_", j, &mut seen))
        .collect();
    let rows: Vec<String> = lp
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| sanitize(&r.label, "r_", i, &mut seen))
        .collect();

    let mut out = String::from("Minimize\n obj:");
    let obj: Vec<(usize, f64)> = lp.columns.iter().enumerate().map(|(j, c)| (j, c.cost)).collect();
    push_expr(&mut out, &obj, &cols);
    out.push_str("\nSubject To\n");
    for (row, name) in lp.rows.iter().zip(&rows) {
        let _ = write!(out, " {name}:");
        push_expr(&mut out, &row.coeffs, &cols);
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for (c, name) in lp.columns.iter().zip(&cols) {
        match (c.lower.is_finite(), c.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            _ if c.lower == c.upper => {
                let _ = writeln!(out, " {name} = {}", num(c.lower));
            }
            _ => {
                let _ = writeln!(out, " {} <= {name} <= {}", num(c.lower), num(c.upper));
            }
        }
    }
    out.push_str("End\n");
    out
}
