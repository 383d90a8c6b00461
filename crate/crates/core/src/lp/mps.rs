//! Fixed-format MPS export and a matching reader.
//!
//! The objective row is always minimized. A maximization problem is written
//! with negated costs and a `* OBJSENSE MAXIMIZE` comment, which the reader
//! uses to restore the original sense and signs. Negation is exact, so
//! `write_mps` followed by `parse_mps` reproduces `A`, `b`, `c` bit for bit.
//!
//! Numbers are written in their shortest round-trip form. That can exceed
//! the 12-character value fields, so the reader splits on whitespace rather
//! than on column positions.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::problem::{LpProblem, RowSense, Sense};
use crate::error::{Error, Result};

const MAX_MARKER: &str = "* OBJSENSE MAXIMIZE";

fn num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        plain
    } else {
        format!("{v:e}")
    }
}

fn objective_name(p: &LpProblem) -> String {
    let mut name = "COST".to_string();
    let mut k = 0;
    while p.constraints.iter().any(|c| c.name == name) {
        k += 1;
        name = format!("COST{k}");
    }
    name
}

pub fn write_mps<W: Write>(p: &LpProblem, mut w: W) -> std::io::Result<()> {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let obj = objective_name(p);
    writeln!(w, "* {} rows, {} columns", p.n_rows(), p.n_vars())?;
    writeln!(w, "* The objective row {obj} is minimized.")?;
    if p.sense == Sense::Maximize {
        writeln!(w, "{MAX_MARKER}")?;
        writeln!(
            w,
            "* Costs and constant are negated: minimizing {obj} maximizes the original objective."
        )?;
    }
    writeln!(w, "* The objective constant is stored as minus the RHS of {obj}.")?;
    writeln!(w, "NAME          {}", p.name)?;

    writeln!(w, "ROWS")?;
    writeln!(w, " N  {obj}")?;
    for c in &p.constraints {
        let t = match c.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        writeln!(w, " {t}  {}", c.name)?;
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.n_vars()];
    for (i, c) in p.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            if a != 0.0 {
                by_col[j].push((i, a));
            }
        }
    }
    writeln!(w, "COLUMNS")?;
    for (j, v) in p.variables.iter().enumerate() {
        let cost = sign * v.cost;
        if cost != 0.0 || by_col[j].is_empty() {
            writeln!(w, "    {:<8}  {:<8}  {}", v.name, obj, num(cost))?;
        }
        for &(i, a) in &by_col[j] {
            writeln!(w, "    {:<8}  {:<8}  {}", v.name, p.constraints[i].name, num(a))?;
        }
    }

    writeln!(w, "RHS")?;
    let offset = sign * p.objective_offset;
    if offset != 0.0 {
        writeln!(w, "    {:<8}  {:<8}  {}", "RHS", obj, num(-offset))?;
    }
    for c in &p.constraints {
        if c.rhs != 0.0 {
            writeln!(w, "    {:<8}  {:<8}  {}", "RHS", c.name, num(c.rhs))?;
        }
    }

    writeln!(w, "RANGES")?;

    writeln!(w, "BOUNDS")?;
    for v in &p.variables {
        let (l, u) = (v.lower, v.upper);
        let line = |t: &str, val: Option<f64>| match val {
            Some(x) => format!(" {t} BND       {:<8}  {}", v.name, num(x)),
            None => format!(" {t} BND       {}", v.name),
        };
        if l == u {
            writeln!(w, "{}", line("FX", Some(l)))?;
            continue;
        }
        match (l.is_finite(), u.is_finite()) {
            (false, false) => writeln!(w, "{}", line("FR", None))?,
            (false, true) => {
                writeln!(w, "{}", line("MI", None))?;
                writeln!(w, "{}", line("UP", Some(u)))?;
            }
            (true, fin_u) => {
                if l != 0.0 || (fin_u && u < 0.0) {
                    writeln!(w, "{}", line("LO", Some(l)))?;
                }
                if fin_u {
                    writeln!(w, "{}", line("UP", Some(u)))?;
                }
            }
        }
    }
    writeln!(w, "ENDATA")?;
    Ok(())
}

pub fn export_mps(p: &LpProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    write_mps(p, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

/// Reads the subset of fixed-format MPS that [`write_mps`] emits: one
/// objective row, `L`/`G`/`E` rows, an empty RANGES section, and
/// `LO`/`UP`/`FX`/`FR`/`MI`/`PL` bounds.
pub fn parse_mps<R: Read>(reader: R) -> Result<LpProblem> {
    let mut p = LpProblem::new("", Sense::Minimize);
    let mut maximize = false;
    let mut obj: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut section = Section::Start;

    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::Mps {
            line: lineno,
            message: e.to_string(),
        })?;
        let err = |message: String| Error::Mps { line: lineno, message };
        if line.starts_with('*') {
            if line.trim_end() == MAX_MARKER {
                maximize = true;
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let number = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        if !line.starts_with(' ') {
            section = match tokens[0] {
                "NAME" => {
                    p.name = tokens.get(1).unwrap_or(&"").to_string();
                    Section::Start
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                s => return Err(err(format!("unknown section {s:?}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [t, name] = tokens[..] else {
                    return Err(err("expected row type and name".into()));
                };
                let sense = match t {
                    "N" => {
                        if obj.is_some() {
                            return Err(err("more than one objective row".into()));
                        }
                        obj = Some(name.to_string());
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    other => return Err(err(format!("unknown row type {other:?}"))),
                };
                let i = p.add_constraint(name, Vec::new(), sense, 0.0);
                row_index.insert(name.to_string(), i);
            }
            Section::Columns => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err("expected column, row, value".into()));
                }
                let col = tokens[0];
                let j = match col_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let j = p.add_variable(col, 0.0, f64::INFINITY, 0.0);
                        col_index.insert(col.to_string(), j);
                        j
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let v = number(pair[1])?;
                    if Some(pair[0]) == obj.as_deref() {
                        p.variables[j].cost = v;
                    } else {
                        let &i = row_index
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row {:?}", pair[0])))?;
                        p.constraints[i].coeffs.push((j, v));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err("expected set, row, value".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let v = number(pair[1])?;
                    if Some(pair[0]) == obj.as_deref() {
                        p.objective_offset = -v;
                    } else {
                        let &i = row_index
                            .get(pair[0])
                            .ok_or_else(|| err(format!("unknown row {:?}", pair[0])))?;
                        p.constraints[i].rhs = v;
                    }
                }
            }
            Section::Ranges => return Err(err("ranged rows are not supported".into())),
            Section::Bounds => {
                if tokens.len() < 3 {
                    return Err(err("expected bound type, set, column".into()));
                }
                let &j = col_index
                    .get(tokens[2])
                    .ok_or_else(|| err(format!("unknown column {:?}", tokens[2])))?;
                let val = || {
                    tokens
                        .get(3)
                        .ok_or_else(|| err("missing bound value".into()))
                        .and_then(|s| number(s))
                };
                let v = &mut p.variables[j];
                match tokens[0] {
                    "LO" => v.lower = val()?,
                    "UP" => v.upper = val()?,
                    "FX" => {
                        let x = val()?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    other => return Err(err(format!("unknown bound type {other:?}"))),
                }
            }
            Section::Start | Section::End => return Err(err("data outside a section".into())),
        }
    }
    if section != Section::End {
        return Err(Error::Mps {
            line: 0,
            message: "missing ENDATA".into(),
        });
    }
    if maximize {
        p.sense = Sense::Maximize;
        for v in &mut p.variables {
            v.cost = -v.cost;
        }
        p.objective_offset = -p.objective_offset;
    }
    Ok(p)
}
