//! Text export in the common LP file format.
//!
//! ```text
//! \ <comment>
//! Minimize
//!  obj: + 1 C
//! Subject To
//!  <row>: <terms> (>= | <= | =) <rhs>
//! Bounds
//!  <lo> <= <var> <= <hi> | <var> >= <lo> | <var> <= <hi> | <var> free
//! End
//! ```
//!
//! Each term is `+ <coef> <var>` or `- <coef> <var>`. Row names follow the
//! model (`c1_3`, `c3_0_3_1`, ...). Variables without a bounds line keep the
//! format default `[0, inf)`.

use std::fmt::Write;

use super::{LpModel, Sense};

fn terms(out: &mut String, model: &LpModel, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        let _ = write!(out, " 0 {}", model.vars.first().map_or("x", |v| &v.name));
    }
    for &(j, a) in terms {
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", a.abs(), model.vars[j].name);
    }
}

pub fn to_lp_format(model: &LpModel, comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "\\ {line}");
    }
    out.push_str("Minimize\n obj:");
    terms(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for row in &model.rows {
        let _ = write!(out, " {}:", row.name);
        terms(&mut out, model, &row.terms);
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", row.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.vars {
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => format!("{} <= {} <= {}", v.lower, v.name, v.upper),
            (true, false) if v.lower == 0.0 => continue,
            (true, false) => format!("{} >= {}", v.name, v.lower),
            (false, true) => format!("-inf <= {} <= {}", v.name, v.upper),
            (false, false) => format!("{} free", v.name),
        };
        let _ = writeln!(out, " {line}");
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_sections() {
        let mut m = LpModel::default();
        let x = m.add_var("x", 0.0, 1.0);
        let c = m.add_var("C", 0.0, f64::INFINITY);
        m.objective = vec![(c, 1.0)];
        m.add_row("c1_0", vec![(c, 1.0), (x, -2.5)], Sense::Ge, 0.0);
        let text = to_lp_format(&m, "demo");
        assert_eq!(
            text,
            "\\ demo\nMinimize\n obj: + 1 C\nSubject To\n c1_0: + 1 C - 2.5 x >= 0\nBounds\n 0 <= x <= 1\nEnd\n"
        );
    }
}
