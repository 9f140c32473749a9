//! LP text export and variable=value solution import.

use std::fmt::Write as _;

use super::model::{ModelInstance, Sense, VarKind};
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    for (count, (c, name)) in terms.enumerate() {
        if count > 0 && count % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        if first {
            if c < 0.0 {
                out.push_str(" -");
            }
        } else {
            out.push_str(if c < 0.0 { " -" } else { " +" });
        }
        let c = c.abs();
        if c == 1.0 {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {c:?} {name}");
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// The instance in CPLEX LP format. Output depends only on the instance.
pub fn export_lp(m: &ModelInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} demand(s), scenario {}, splits {}, {} traffic",
        m.problem.demands.len(),
        m.problem.scenario,
        m.problem.splits,
        m.problem.mode
    );
    out.push_str("Minimize\n obj:");
    write_terms(
        &mut out,
        m.vars
            .iter()
            .filter(|v| v.cost != 0.0)
            .map(|v| (v.cost, v.name.clone())),
    );
    out.push_str("\nSubject To\n");
    for r in &m.rows {
        let _ = write!(out, " {}:", r.name);
        write_terms(
            &mut out,
            r.terms.iter().map(|&(v, c)| (c, m.vars[v.0].name.clone())),
        );
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {:?}", r.rhs);
    }
    out.push_str("Bounds\n");
    for v in m.vars.iter().filter(|v| v.kind == VarKind::Continuous) {
        if v.upper.is_finite() {
            let _ = writeln!(out, " {:?} <= {} <= {:?}", v.lower, v.name, v.upper);
        }
    }
    out.push_str("Binary\n");
    for v in m.vars.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

/// Reads `name = value` lines (blank lines and `#` comments ignored) into a
/// value per model variable. Unlisted variables are zero.
pub fn parse_solution(m: &ModelInstance, text: &str) -> Result<Vec<f64>> {
    let index: std::collections::HashMap<&str, usize> = m
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut values = vec![0.0; m.vars.len()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("solution line {}: expected name=value", lineno + 1))
        })?;
        let name = name.trim();
        let i = *index.get(name).ok_or_else(|| {
            Error::Parse(format!(
                "solution line {}: unknown variable `{name}`",
                lineno + 1
            ))
        })?;
        values[i] = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("solution line {}: bad value", lineno + 1)))?;
    }
    Ok(values)
}

/// Writes the non-zero entries of `values` as `name = value` lines.
pub fn format_solution(m: &ModelInstance, values: &[f64]) -> String {
    let mut out = String::new();
    for (v, &x) in m.vars.iter().zip(values) {
        if x != 0.0 {
            let _ = writeln!(out, "{} = {x:?}", v.name);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{Demand, Scenario, SplitLimit, TrafficMode};
    use crate::optimizer::model::{build_model, FlowLayout, Problem};
    use crate::topo::canonical_parking_lot;

    #[test]
    fn binary_section_lists_selection_and_activation_only() {
        let t = canonical_parking_lot();
        let s = t.lookup("v01").unwrap();
        let p = Problem::new(
            vec![Demand::from_mbps(s, 4.0).unwrap()],
            Scenario::VEC,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
        );
        let m = build_model(&t, &p, FlowLayout::PerCommodity).unwrap();
        let text = export_lp(&m);
        let binaries: Vec<&str> = text
            .split("Binary\n")
            .nth(1)
            .unwrap()
            .lines()
            .take_while(|l| *l != "End")
            .map(str::trim)
            .collect();
        assert!(!binaries.is_empty());
        assert!(binaries.iter().all(|b| b.starts_with("a_")
            || b.starts_with("bnet_")
            || b.starts_with("bpr_")
            || b.starts_with("bonu_")));
        assert_eq!(binaries.len(), m.binaries().count());
        // idle charges enter through activation coefficients, no constant term
        let obj = text.split("Subject To").next().unwrap();
        assert!(obj.contains("bnet_v01"));
        assert!(!obj.lines().any(|l| l.trim().parse::<f64>().is_ok()));
        assert!(text.contains("lam_v01_v02_v01_v02"));
        assert_eq!(
            text,
            export_lp(&build_model(&t, &p, FlowLayout::PerCommodity).unwrap())
        );
    }

    #[test]
    fn solution_lines_round_trip() {
        let t = canonical_parking_lot();
        let s = t.lookup("v01").unwrap();
        let p = Problem::new(
            vec![Demand::from_mbps(s, 2.0).unwrap()],
            Scenario::C,
            SplitLimit::Unlimited,
            TrafficMode::Ft,
        );
        let m = build_model(&t, &p, FlowLayout::PerSource).unwrap();
        let mut values = vec![0.0; m.vars.len()];
        values[0] = 4000.0;
        values[3] = 1.0 / 3.0;
        let back = parse_solution(&m, &format_solution(&m, &values)).unwrap();
        assert_eq!(back, values);
        assert!(parse_solution(&m, "nope = 1").is_err());
        assert!(parse_solution(&m, "om_v01_cloud 1").is_err());
    }
}
