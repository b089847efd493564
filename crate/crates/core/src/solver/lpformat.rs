//! Export to (and re-import from) the CPLEX LP text format.
//!
//! Names are sanitized and prefixed with their index so any model can be
//! written; the reader accepts the subset the writer emits.

use std::fmt::Write as _;

use super::model::{Model, RowSense, Sense, VarId, VarKind};

#[derive(Debug, thiserror::Error)]
pub enum LpFormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn sanitize(prefix: char, idx: usize, name: &str) -> String {
    let body: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{prefix}{idx}_{body}")
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:e}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut any = false;
    for (name, c) in terms {
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {name}", fmt_num(c.abs()));
        any = true;
    }
    if !any {
        out.push_str(" 0");
    }
}

pub fn write_lp(model: &Model) -> String {
    let names: Vec<String> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(j, v)| sanitize('x', j, &v.name))
        .collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(
        &mut out,
        model
            .vars()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.obj != 0.0)
            .map(|(j, v)| (names[j].clone(), v.obj)),
    );
    out.push_str("\nSubject To\n");
    for (i, r) in model.rows().iter().enumerate() {
        let _ = write!(out, " {}:", sanitize('c', i, &r.name));
        write_terms(&mut out, r.terms.iter().map(|&(v, c)| (names[v.0].clone(), c)));
        let _ = writeln!(out, " {} {}", r.sense, fmt_num(r.rhs));
    }
    out.push_str("Bounds\n");
    for (j, v) in model.vars().iter().enumerate() {
        if v.kind == VarKind::Binary {
            continue;
        }
        if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
            let _ = writeln!(out, " {} free", names[j]);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lb), names[j], fmt_num(v.ub));
        }
    }
    let binaries: Vec<&str> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| names[j].as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(PartialEq)]
enum Section {
    Objective,
    Rows,
    Bounds,
    Binaries,
}

fn parse_num(tok: &str, line: usize) -> Result<f64, LpFormatError> {
    match tok {
        "+inf" | "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| LpFormatError::Parse {
            line,
            msg: format!("bad number `{t}`"),
        }),
    }
}

/// Parses `+ c name - c name ...` into terms, creating variables on first sight.
fn parse_terms(
    toks: &[&str],
    line: usize,
    model: &mut Model,
) -> Result<Vec<(VarId, f64)>, LpFormatError> {
    let mut terms = Vec::new();
    let mut k = 0;
    if toks == ["0"] {
        return Ok(terms);
    }
    while k < toks.len() {
        let sign = match toks[k] {
            "+" => 1.0,
            "-" => -1.0,
            t => {
                return Err(LpFormatError::Parse {
                    line,
                    msg: format!("expected sign, found `{t}`"),
                })
            }
        };
        let coef = parse_num(toks.get(k + 1).copied().unwrap_or(""), line)?;
        let name = toks.get(k + 2).ok_or(LpFormatError::Parse {
            line,
            msg: "dangling coefficient".into(),
        })?;
        let v = match model.find_var(name) {
            Some(v) => v,
            None => model.add_var(*name, 0.0, f64::INFINITY, 0.0),
        };
        terms.push((v, sign * coef));
        k += 3;
    }
    Ok(terms)
}

pub fn read_lp(text: &str) -> Result<Model, LpFormatError> {
    let mut model = Model::new(Sense::Minimize);
    let mut section = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('\\') {
            continue;
        }
        match s {
            "Minimize" | "Maximize" => {
                model.sense = if s == "Minimize" { Sense::Minimize } else { Sense::Maximize };
                section = Some(Section::Objective);
                continue;
            }
            "Subject To" => {
                section = Some(Section::Rows);
                continue;
            }
            "Bounds" => {
                section = Some(Section::Bounds);
                continue;
            }
            "Binaries" => {
                section = Some(Section::Binaries);
                continue;
            }
            "End" => break,
            _ => {}
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        match section {
            Some(Section::Objective) => {
                let terms = parse_terms(&toks[1..], line, &mut model)?;
                for (v, c) in terms {
                    model.set_obj(v, c);
                }
            }
            Some(Section::Rows) => {
                let name = toks[0].trim_end_matches(':').to_string();
                let n = toks.len();
                if n < 3 {
                    return Err(LpFormatError::Parse { line, msg: "short row".into() });
                }
                let sense = match toks[n - 2] {
                    "<=" => RowSense::Le,
                    ">=" => RowSense::Ge,
                    "=" => RowSense::Eq,
                    t => {
                        return Err(LpFormatError::Parse {
                            line,
                            msg: format!("bad row sense `{t}`"),
                        })
                    }
                };
                let rhs = parse_num(toks[n - 1], line)?;
                let terms = parse_terms(&toks[1..n - 2], line, &mut model)?;
                model.add_row(name, terms, sense, rhs);
            }
            Some(Section::Bounds) => {
                let (name, lb, ub) = if toks.len() == 2 && toks[1] == "free" {
                    (toks[0], f64::NEG_INFINITY, f64::INFINITY)
                } else if toks.len() == 5 {
                    (toks[2], parse_num(toks[0], line)?, parse_num(toks[4], line)?)
                } else {
                    return Err(LpFormatError::Parse { line, msg: "bad bound".into() });
                };
                let v = match model.find_var(name) {
                    Some(v) => v,
                    None => model.add_var(name, 0.0, f64::INFINITY, 0.0),
                };
                model.set_bounds(v, lb, ub);
            }
            Some(Section::Binaries) => {
                let v = match model.find_var(toks[0]) {
                    Some(v) => v,
                    None => model.add_binary(toks[0], 0.0),
                };
                let var = model.var_mut(v);
                var.kind = VarKind::Binary;
                var.lb = 0.0;
                var.ub = 1.0;
            }
            None => {
                return Err(LpFormatError::Parse {
                    line,
                    msg: "content before objective section".into(),
                })
            }
        }
    }
    Ok(model)
}
