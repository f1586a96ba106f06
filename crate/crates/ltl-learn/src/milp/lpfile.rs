//! CPLEX LP-format export of a [`Model`] for offline debugging.

use std::io::Write;

use super::{Model, Sense, VarKind};

fn var_name(model: &Model, idx: usize) -> String {
    // LP format forbids a handful of characters; normalize to be safe.
    let raw = &model.vars[idx].name;
    let mut s: String = raw
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().next().unwrap().is_ascii_digit() {
        s = format!("v{idx}_{s}");
    }
    format!("{s}_{idx}")
}

pub(super) fn write_lp<W: Write>(model: &Model, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "\\ model: {}", model.name)?;
    match model.sense {
        Sense::Minimize => writeln!(w, "Minimize")?,
        Sense::Maximize => writeln!(w, "Maximize")?,
    }
    write!(w, " obj:")?;
    for &(v, c) in &model.obj.terms {
        write!(w, " {:+} {}", c, var_name(model, v.0 as usize))?;
    }
    if !model.quad.is_empty() {
        // Expand sum(w e^2) into the [ q ] / 2 quadratic block.
        let mut lin = super::LinExpr::default();
        let mut quad_terms: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for (wt, e) in &model.quad {
            for &(vi, ci) in &e.terms {
                lin.add_term(vi, 2.0 * wt * e.constant * ci);
                for &(vj, cj) in &e.terms {
                    let key = if vi.0 <= vj.0 {
                        (vi.0 as usize, vj.0 as usize)
                    } else {
                        (vj.0 as usize, vi.0 as usize)
                    };
                    *quad_terms.entry(key).or_insert(0.0) += wt * ci * cj;
                }
            }
        }
        for &(v, c) in &lin.normalized().terms {
            write!(w, " {:+} {}", c, var_name(model, v.0 as usize))?;
        }
        write!(w, " + [")?;
        for (&(i, j), &c) in &quad_terms {
            if i == j {
                write!(w, " {:+} {} ^ 2", 2.0 * c, var_name(model, i))?;
            } else {
                write!(w, " {:+} {} * {}", 2.0 * c, var_name(model, i), var_name(model, j))?;
            }
        }
        write!(w, " ] / 2")?;
    }
    writeln!(w)?;

    writeln!(w, "Subject To")?;
    for (k, row) in model.rows.iter().enumerate() {
        let body = row
            .terms
            .iter()
            .map(|&(v, c)| format!("{:+} {}", c, var_name(model, v.0 as usize)))
            .collect::<Vec<_>>()
            .join(" ");
        match (row.lb.is_finite(), row.ub.is_finite()) {
            (true, true) if row.lb == row.ub => writeln!(w, " c{k}: {body} = {}", row.lb)?,
            (true, true) => {
                writeln!(w, " c{k}a: {body} >= {}", row.lb)?;
                writeln!(w, " c{k}b: {body} <= {}", row.ub)?;
            }
            (true, false) => writeln!(w, " c{k}: {body} >= {}", row.lb)?,
            (false, true) => writeln!(w, " c{k}: {body} <= {}", row.ub)?,
            (false, false) => {}
        }
    }

    writeln!(w, "Bounds")?;
    for (i, info) in model.vars.iter().enumerate() {
        writeln!(w, " {} <= {} <= {}", info.lb, var_name(model, i), info.ub)?;
    }
    let binaries: Vec<String> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| var_name(model, i))
        .collect();
    if !binaries.is_empty() {
        writeln!(w, "Binaries")?;
        for chunk in binaries.chunks(10) {
            writeln!(w, " {}", chunk.join(" "))?;
        }
    }
    writeln!(w, "End")?;
    Ok(())
}
