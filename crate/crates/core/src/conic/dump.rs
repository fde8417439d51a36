//! Plain-text dump of a [`ConicProgram`] for cross-checking with other solvers.
//!
//! ```text
//! hostcap-conic 1
//! vars <n> eq <p> ineq <q> soc <r> psi <k>
//! var <j> <label> <cost>
//! psi <j> <value>
//! eq <row> <class> <rhs>
//! eqa <row> <var> <coef>          one per nonzero of A_eq
//! eqpsi <row> <psi index> <coef>  one per nonzero of C_psi
//! in <row> <class> <rhs>
//! ina <row> <var> <coef>
//! soc <block> <class> <dim>
//! socr <block> <row> <constant>   row 0 is the head, rows 1.. the tail
//! soca <block> <row> <var> <coef>
//! ```
//!
//! Values use the shortest representation that parses back to the same bits.

use std::fmt::Write as _;

use super::{AffineRow, ConicProgram, EqualityRow, InequalityRow, RowClass, SocBlock, VarKind, VarLabel};
use crate::error::{Error, Result};

pub fn write_dump(prog: &ConicProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "hostcap-conic 1");
    let _ = writeln!(
        out,
        "vars {} eq {} ineq {} soc {} psi {}",
        prog.num_vars(),
        prog.equalities.len(),
        prog.inequalities.len(),
        prog.cones.len(),
        prog.psi.len()
    );
    for (j, (label, cost)) in prog.labels.iter().zip(&prog.objective).enumerate() {
        let scen = label.scenario.map_or("-".to_string(), |k| k.to_string());
        let _ = writeln!(out, "var {j} {:?}:{}:{} {cost:?}", label.kind, scen, label.index);
    }
    for (j, v) in prog.psi.iter().enumerate() {
        let _ = writeln!(out, "psi {j} {v:?}");
    }
    for (r, row) in prog.equalities.iter().enumerate() {
        let _ = writeln!(out, "eq {r} {:?} {:?}", row.class, row.rhs);
        for &(j, a) in &row.coeffs {
            let _ = writeln!(out, "eqa {r} {j} {a:?}");
        }
        for &(j, a) in &row.psi_coeffs {
            let _ = writeln!(out, "eqpsi {r} {j} {a:?}");
        }
    }
    for (r, row) in prog.inequalities.iter().enumerate() {
        let _ = writeln!(out, "in {r} {:?} {:?}", row.class, row.rhs);
        for &(j, a) in &row.coeffs {
            let _ = writeln!(out, "ina {r} {j} {a:?}");
        }
    }
    for (i, block) in prog.cones.iter().enumerate() {
        let _ = writeln!(out, "soc {i} {:?} {}", block.class, block.dim());
        for (r, row) in std::iter::once(&block.head).chain(&block.tail).enumerate() {
            let _ = writeln!(out, "socr {i} {r} {:?}", row.constant);
            for &(j, a) in &row.coeffs {
                let _ = writeln!(out, "soca {i} {r} {j} {a:?}");
            }
        }
    }
    out
}

fn parse_class(s: &str) -> Result<RowClass> {
    let json = format!("\"{s}\"");
    serde_json::from_str(&json).map_err(|_| Error::parse(None, format!("unknown row class {s}")))
}

fn parse_kind(s: &str) -> Result<VarKind> {
    let json = format!("\"{s}\"");
    serde_json::from_str(&json).map_err(|_| Error::parse(None, format!("unknown variable kind {s}")))
}

pub fn read_dump(text: &str) -> Result<ConicProgram> {
    let mut prog = ConicProgram::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "hostcap-conic 1")) => {}
        _ => return Err(Error::parse(Some(1), "missing dump header")),
    }
    for (no, line) in lines {
        let line_no = Some(no + 1);
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let num = |i: usize| -> Result<f64> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(line_no, "bad number"))
        };
        let idx = |i: usize| -> Result<usize> {
            f.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(line_no, "bad index"))
        };
        match f[0] {
            "vars" => {}
            "var" => {
                let parts: Vec<&str> = f.get(2).copied().unwrap_or("").split(':').collect();
                if parts.len() != 3 {
                    return Err(Error::parse(line_no, "bad variable label"));
                }
                let scenario = if parts[1] == "-" {
                    None
                } else {
                    Some(parts[1].parse().map_err(|_| Error::parse(line_no, "bad scenario"))?)
                };
                let index = parts[2].parse().map_err(|_| Error::parse(line_no, "bad label index"))?;
                prog.add_var(
                    VarLabel {
                        kind: parse_kind(parts[0])?,
                        scenario,
                        index,
                    },
                    num(3)?,
                );
            }
            "psi" => prog.psi.push(num(2)?),
            "eq" => prog.equalities.push(EqualityRow {
                coeffs: Vec::new(),
                rhs: num(3)?,
                psi_coeffs: Vec::new(),
                class: parse_class(f.get(2).copied().unwrap_or(""))?,
            }),
            "eqa" => {
                let r = idx(1)?;
                let row = prog.equalities.get_mut(r).ok_or_else(|| Error::parse(line_no, "row out of order"))?;
                row.coeffs.push((idx(2)?, num(3)?));
            }
            "eqpsi" => {
                let r = idx(1)?;
                let row = prog.equalities.get_mut(r).ok_or_else(|| Error::parse(line_no, "row out of order"))?;
                row.psi_coeffs.push((idx(2)?, num(3)?));
            }
            "in" => prog.inequalities.push(InequalityRow {
                coeffs: Vec::new(),
                rhs: num(3)?,
                class: parse_class(f.get(2).copied().unwrap_or(""))?,
            }),
            "ina" => {
                let r = idx(1)?;
                let row = prog.inequalities.get_mut(r).ok_or_else(|| Error::parse(line_no, "row out of order"))?;
                row.coeffs.push((idx(2)?, num(3)?));
            }
            "soc" => {
                let dim = idx(3)?;
                if dim < 2 {
                    return Err(Error::parse(line_no, "cone dimension below 2"));
                }
                prog.cones.push(SocBlock {
                    head: AffineRow::default(),
                    tail: vec![AffineRow::default(); dim - 1],
                    class: parse_class(f.get(2).copied().unwrap_or(""))?,
                });
            }
            "socr" | "soca" => {
                let (i, r) = (idx(1)?, idx(2)?);
                let block = prog.cones.get_mut(i).ok_or_else(|| Error::parse(line_no, "cone out of order"))?;
                let row = if r == 0 {
                    &mut block.head
                } else {
                    block.tail.get_mut(r - 1).ok_or_else(|| Error::parse(line_no, "cone row out of range"))?
                };
                if f[0] == "socr" {
                    row.constant = num(3)?;
                } else {
                    row.coeffs.push((idx(3)?, num(4)?));
                }
            }
            other => return Err(Error::parse(line_no, format!("unknown record {other}"))),
        }
    }
    prog.check()?;
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::soc_rotated;

    #[test]
    fn dump_round_trip() {
        let mut p = ConicProgram::new();
        let x = p.add_generic_var(0.1 + 0.2);
        let y = p.add_var(
            VarLabel {
                kind: VarKind::W,
                scenario: Some(3),
                index: 1,
            },
            -1.0,
        );
        p.psi = vec![0.7];
        p.equalities.push(EqualityRow {
            coeffs: vec![(x, 1.0), (y, -2.5)],
            rhs: 1.0 / 3.0,
            psi_coeffs: vec![(0, 0.8)],
            class: RowClass::RealBalance,
        });
        p.add_inequality(vec![(y, 1.0)], 1.21, RowClass::SlackNonneg);
        let blk = soc_rotated(&AffineRow::var(x), &AffineRow::constant(1.0), &AffineRow::var(y), &AffineRow::constant(0.0));
        p.add_cone(blk, RowClass::FlowHinge);
        let text = write_dump(&p);
        let back = read_dump(&text).unwrap();
        assert_eq!(back, p);
        assert!(read_dump("nonsense").is_err());
    }
}
