//! Fixed-format MPS with integer markers.
//!
//! Names longer than eight characters (or containing spaces) are replaced by
//! canonical `R0000001` / `C0000001` names on export. Numbers occupy at most
//! twelve characters: the shortest round-trip representation when it fits,
//! otherwise the closest fixed or scientific form that does.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::SolverError;
use crate::problem::{CscMatrix, LpProblem, MilpProblem, RowSense, Sense};

const OBJ_ROW: &str = "OBJ";

pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    let best = if plain.len() <= sci.len() { plain } else { sci };
    if best.len() <= 12 {
        return best;
    }
    let mut cands: Vec<String> = Vec::new();
    for prec in 0..=11usize {
        cands.push(format!("{v:.prec$e}"));
        let f = format!("{v:.prec$}");
        let f = if f.contains('.') { f.trim_end_matches('0').trim_end_matches('.').to_string() } else { f };
        cands.push(f);
    }
    cands
        .into_iter()
        .filter(|s| s.len() <= 12 && s.parse::<f64>().is_ok_and(|x| x != 0.0))
        .min_by(|a, b| {
            let ea = (a.parse::<f64>().unwrap() - v).abs();
            let eb = (b.parse::<f64>().unwrap() - v).abs();
            ea.partial_cmp(&eb).unwrap().then(a.len().cmp(&b.len()))
        })
        .unwrap_or(best)
}

fn usable(names: &[String], reserved: &str) -> bool {
    let mut seen = std::collections::HashSet::new();
    names.iter().all(|s| {
        !s.is_empty()
            && s.len() <= 8
            && s.is_ascii()
            && !s.chars().any(|c| c.is_whitespace())
            && !s.starts_with('*')
            && s != reserved
            && seen.insert(s.as_str())
    })
}

fn export_names(p: &LpProblem) -> (Vec<String>, Vec<String>) {
    let rows = if usable(&p.row_names, OBJ_ROW) {
        p.row_names.clone()
    } else {
        (0..p.num_rows()).map(|i| format!("R{:07}", i + 1)).collect()
    };
    let cols = if usable(&p.col_names, "") {
        p.col_names.clone()
    } else {
        (0..p.num_cols()).map(|j| format!("C{:07}", j + 1)).collect()
    };
    (rows, cols)
}

fn entry(out: &mut String, name: &str, row: &str, v: f64) {
    let _ = writeln!(out, "    {name:<8}  {row:<8}  {:>12}", format_number(v));
}

fn bound(out: &mut String, kind: &str, col: &str, v: Option<f64>) {
    match v {
        Some(v) => {
            let _ = writeln!(out, " {kind} BND       {col:<8}  {:>12}", format_number(v));
        }
        None => {
            let _ = writeln!(out, " {kind} BND       {col}");
        }
    }
}

pub fn to_mps_string(p: &MilpProblem) -> String {
    let lp = &p.lp;
    let (rnames, cnames) = export_names(lp);
    let mut out = String::new();
    let name = if lp.name.is_empty() { "PROBLEM".to_string() } else { lp.name.replace(' ', "_") };
    let _ = writeln!(out, "NAME          {name}");
    if lp.sense == Sense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for i in 0..lp.num_rows() {
        let t = match lp.row_sense[i] {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {}", rnames[i]);
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for j in 0..lp.num_cols() {
        if p.integer[j] != in_int {
            let tag = if p.integer[j] { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 {tag}");
            markers += 1;
            in_int = p.integer[j];
        }
        let mut any = false;
        if lp.obj[j] != 0.0 {
            entry(&mut out, &cnames[j], OBJ_ROW, lp.obj[j]);
            any = true;
        }
        for (i, v) in lp.matrix.col(j) {
            entry(&mut out, &cnames[j], &rnames[i], v);
            any = true;
        }
        if !any {
            entry(&mut out, &cnames[j], OBJ_ROW, 0.0);
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 'INTEND'");
    }
    out.push_str("RHS\n");
    if lp.obj_offset != 0.0 {
        entry(&mut out, "RHS", OBJ_ROW, -lp.obj_offset);
    }
    for i in 0..lp.num_rows() {
        if lp.rhs[i] != 0.0 {
            entry(&mut out, "RHS", &rnames[i], lp.rhs[i]);
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..lp.num_cols() {
        let (l, u) = (lp.col_lower[j], lp.col_upper[j]);
        let c = &cnames[j];
        if l == u {
            bound(&mut out, "FX", c, Some(l));
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            bound(&mut out, "FR", c, None);
        } else if l == f64::NEG_INFINITY {
            bound(&mut out, "MI", c, None);
            bound(&mut out, "UP", c, Some(u));
        } else {
            if l != 0.0 || p.integer[j] {
                bound(&mut out, "LO", c, Some(l));
            }
            if u != f64::INFINITY {
                bound(&mut out, "UP", c, Some(u));
            } else if p.integer[j] {
                bound(&mut out, "PL", c, None);
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_mps(p: &MilpProblem, path: impl AsRef<Path>) -> Result<(), SolverError> {
    std::fs::write(path, to_mps_string(p))?;
    Ok(())
}

pub fn import_mps(path: impl AsRef<Path>) -> Result<MilpProblem, SolverError> {
    let text = std::fs::read_to_string(path)?;
    parse_mps(&text)
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

fn err(line: usize, msg: impl Into<String>) -> SolverError {
    SolverError::Mps { line, msg: msg.into() }
}

fn num(line: usize, s: &str) -> Result<f64, SolverError> {
    s.parse::<f64>().map_err(|_| err(line, format!("invalid number '{s}'")))
}

pub fn parse_mps(text: &str) -> Result<MilpProblem, SolverError> {
    let mut name = String::new();
    let mut sense = Sense::Minimize;
    let mut obj_row: Option<String> = None;
    let mut row_names: Vec<String> = Vec::new();
    let mut row_sense: Vec<RowSense> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut free_rows: std::collections::HashSet<String> = Default::default();
    let mut col_names: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut obj: Vec<f64> = Vec::new();
    let mut integer: Vec<bool> = Vec::new();
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut explicit_upper: Vec<bool> = Vec::new();
    let mut in_int = false;
    let mut section = Section::None;
    let mut ended = false;
    let mut last_line = 0;

    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        last_line = ln;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if ended {
            return Err(err(ln, "content after ENDATA"));
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = match tok[0] {
                "NAME" => {
                    name = tok.get(1..).map(|t| t.join(" ")).unwrap_or_default();
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(s) = tok.get(1) {
                        sense = parse_sense(ln, s)?;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => return Err(err(ln, "RANGES section is not supported")),
                "ENDATA" => {
                    ended = true;
                    Section::None
                }
                other => return Err(err(ln, format!("unknown section '{other}'"))),
            };
            continue;
        }
        match section {
            Section::None | Section::Name => return Err(err(ln, "data line outside of a section")),
            Section::ObjSense => sense = parse_sense(ln, tok[0])?,
            Section::Rows => {
                if tok.len() != 2 {
                    return Err(err(ln, "ROWS entry needs a type and a name"));
                }
                let rn = tok[1].to_string();
                if row_index.contains_key(&rn) || obj_row.as_deref() == Some(tok[1]) || free_rows.contains(&rn) {
                    return Err(err(ln, format!("duplicate row '{rn}'")));
                }
                let s = match tok[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(rn);
                        } else {
                            free_rows.insert(rn);
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(err(ln, format!("unknown row type '{t}'"))),
                };
                row_index.insert(rn.clone(), row_names.len());
                row_names.push(rn);
                row_sense.push(s);
                rhs.push(0.0);
            }
            Section::Columns => {
                if tok.len() >= 3 && tok[1] == "'MARKER'" {
                    match tok[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        m => return Err(err(ln, format!("unknown marker {m}"))),
                    }
                    continue;
                }
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(err(ln, "COLUMNS entry needs a column and one or two (row, value) pairs"));
                }
                let cn = tok[0];
                let j = match col_index.get(cn) {
                    Some(&j) => j,
                    None => {
                        let j = col_names.len();
                        col_index.insert(cn.to_string(), j);
                        col_names.push(cn.to_string());
                        obj.push(0.0);
                        integer.push(in_int);
                        lower.push(0.0);
                        upper.push(f64::INFINITY);
                        explicit_upper.push(false);
                        j
                    }
                };
                for pair in tok[1..].chunks(2) {
                    let v = num(ln, pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj[j] += v;
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        trip.push((i, j, v));
                    } else if !free_rows.contains(pair[0]) {
                        return Err(err(ln, format!("unknown row '{}'", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                let pairs = if tok.len() % 2 == 1 { &tok[1..] } else { &tok[..] };
                if pairs.is_empty() || pairs.len() > 4 {
                    return Err(err(ln, "malformed RHS entry"));
                }
                for pair in pairs.chunks(2) {
                    let v = num(ln, pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        offset = -v;
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        rhs[i] = v;
                    } else if !free_rows.contains(pair[0]) {
                        return Err(err(ln, format!("unknown row '{}'", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                let kind = tok[0];
                let needs_value = !matches!(kind, "FR" | "MI" | "PL" | "BV");
                let (cn, val) = match (tok.len(), needs_value) {
                    (4, _) => (tok[2], Some(num(ln, tok[3])?)),
                    (3, true) => (tok[1], Some(num(ln, tok[2])?)),
                    (3, false) => (tok[2], None),
                    (2, false) => (tok[1], None),
                    _ => return Err(err(ln, "malformed BOUNDS entry")),
                };
                let &j = col_index.get(cn).ok_or_else(|| err(ln, format!("unknown column '{cn}'")))?;
                match (kind, val) {
                    ("UP", Some(v)) => {
                        upper[j] = v;
                        explicit_upper[j] = true;
                    }
                    ("LO", Some(v)) => lower[j] = v,
                    ("FX", Some(v)) => {
                        lower[j] = v;
                        upper[j] = v;
                        explicit_upper[j] = true;
                    }
                    ("FR", _) => {
                        lower[j] = f64::NEG_INFINITY;
                        upper[j] = f64::INFINITY;
                    }
                    ("MI", _) => lower[j] = f64::NEG_INFINITY,
                    ("PL", _) => {
                        upper[j] = f64::INFINITY;
                        explicit_upper[j] = true;
                    }
                    ("BV", _) => {
                        lower[j] = 0.0;
                        upper[j] = 1.0;
                        integer[j] = true;
                        explicit_upper[j] = true;
                    }
                    (k, _) => return Err(err(ln, format!("unsupported bound type '{k}'"))),
                }
            }
        }
    }
    if !ended {
        return Err(err(last_line + 1, "missing ENDATA (truncated file?)"));
    }
    if obj_row.is_none() {
        return Err(err(last_line, "no objective row"));
    }
    for j in 0..col_names.len() {
        if integer[j] && !explicit_upper[j] && upper[j] == f64::INFINITY {
            upper[j] = 1.0;
        }
    }
    let m = row_names.len();
    let n = col_names.len();
    let lp = LpProblem {
        name,
        sense,
        obj,
        obj_offset: offset,
        col_lower: lower,
        col_upper: upper,
        col_names,
        row_sense,
        rhs,
        row_names,
        matrix: CscMatrix::from_triplets(m, n, &trip),
    };
    let p = MilpProblem { lp, integer, priority: vec![0; n] };
    p.check().map_err(|e| err(last_line, e.to_string()))?;
    Ok(p)
}

fn parse_sense(ln: usize, s: &str) -> Result<Sense, SolverError> {
    match s {
        "MAX" | "MAXIMIZE" => Ok(Sense::Maximize),
        "MIN" | "MINIMIZE" => Ok(Sense::Minimize),
        o => Err(err(ln, format!("unknown objective sense '{o}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_fit_field() {
        for v in [1.0, -0.25, 1e-7, 123456.789, std::f64::consts::PI, -1.0 / 3.0, 6.02e23, 1e300] {
            let s = format_number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= 1e-9 * v.abs());
        }
        assert_eq!(format_number(250.0), "250");
        assert_eq!(format_number(0.07), "0.07");
    }
}
