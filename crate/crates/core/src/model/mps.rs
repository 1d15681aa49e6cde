//! MPS export and import.
//!
//! The writer uses the classic section layout (NAME, ROWS, COLUMNS with
//! `MARKER INTORG/INTEND` pairs around each run of binary columns, RHS,
//! BOUNDS, ENDATA) with whitespace-separated fields, so that the semantic
//! row and column names survive instead of being cut to eight characters.
//! Names are sanitized (whitespace replaced by `_`, at most 255 bytes).
//!
//! The reader accepts the same free layout, plus `OBJSENSE`, `MI`, `PL`,
//! `FR`, `FX`, `BV` bounds. Integer-marked columns must end up with bounds
//! inside `[0, 1]` since the model only knows binary integrality.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::{Integrality, MilpModel, ModelError, Sense};

const OBJ_ROW: &str = "OBJ";
const MAX_NAME: usize = 255;

/// Replace whitespace and control characters by `_` and cap the length.
pub fn sanitize_name(name: &str) -> String {
    let mut out: String = name.chars().map(|c| if c.is_whitespace() || c.is_control() { '_' } else { c }).collect();
    if out.is_empty() {
        out.push('_');
    }
    if out.len() > MAX_NAME {
        let mut cut = MAX_NAME;
        while !out.is_char_boundary(cut) {
            cut -= 1;
        }
        out.truncate(cut);
    }
    out
}

/// Shortest text that parses back to exactly `x`.
pub fn format_number(x: f64) -> String {
    let x = x + 0.0;
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>, reserved: &[&str]) -> Result<Vec<String>, ModelError> {
    let mut seen: HashSet<String> = reserved.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    for n in names {
        let s = sanitize_name(n);
        if !seen.insert(s.clone()) {
            return Err(ModelError::NameCollision(s));
        }
        out.push(s);
    }
    Ok(out)
}

/// Render `model` as MPS text.
pub fn export_mps(model: &MilpModel) -> Result<String, ModelError> {
    if model.num_columns() == 0 && model.num_rows() == 0 {
        return Err(ModelError::Empty);
    }
    model.check()?;
    let cols = unique_names(model.columns.iter().map(|c| c.name.as_str()), &[])?;
    let rows = unique_names(model.rows.iter().map(|r| r.name.as_str()), &[OBJ_ROW])?;

    // Column-major view of the row coefficients.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_columns()];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.coefs {
            by_col[j].push((i, a));
        }
    }
    let cost = model.cost_vector();

    let mut out = String::new();
    let name = sanitize_name(if model.name.is_empty() { "model" } else { &model.name });
    writeln!(out, "NAME          {name}").unwrap();
    out.push_str("ROWS\n");
    writeln!(out, " N  {OBJ_ROW}").unwrap();
    for (r, n) in model.rows.iter().zip(&rows) {
        let s = match r.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        writeln!(out, " {s}  {n}").unwrap();
    }

    out.push_str("COLUMNS\n");
    let mut in_marker = false;
    let mut marker_id = 0;
    for (j, c) in model.columns.iter().enumerate() {
        if c.is_binary() != in_marker {
            let kind = if in_marker { "INTEND" } else { "INTORG" };
            writeln!(out, "    MARKER{marker_id:<6}  'MARKER'  '{kind}'").unwrap();
            if in_marker {
                marker_id += 1;
            }
            in_marker = !in_marker;
        }
        let n = &cols[j];
        let mut wrote = false;
        if cost[j] != 0.0 {
            writeln!(out, "    {n}  {OBJ_ROW}  {}", format_number(cost[j])).unwrap();
            wrote = true;
        }
        for &(i, a) in &by_col[j] {
            writeln!(out, "    {n}  {}  {}", rows[i], format_number(a)).unwrap();
            wrote = true;
        }
        if !wrote {
            writeln!(out, "    {n}  {OBJ_ROW}  0").unwrap();
        }
    }
    if in_marker {
        writeln!(out, "    MARKER{marker_id:<6}  'MARKER'  'INTEND'").unwrap();
    }

    out.push_str("RHS\n");
    if model.objective.constant != 0.0 {
        writeln!(out, "    RHS  {OBJ_ROW}  {}", format_number(-model.objective.constant)).unwrap();
    }
    for (r, n) in model.rows.iter().zip(&rows) {
        if r.rhs != 0.0 {
            writeln!(out, "    RHS  {n}  {}", format_number(r.rhs)).unwrap();
        }
    }

    out.push_str("BOUNDS\n");
    for (c, n) in model.columns.iter().zip(&cols) {
        let (lo, hi) = (c.lower, c.upper);
        if c.is_binary() && lo == 0.0 && hi == 1.0 {
            writeln!(out, " BV BND  {n}").unwrap();
            continue;
        }
        if lo == hi {
            writeln!(out, " FX BND  {n}  {}", format_number(lo)).unwrap();
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " FR BND  {n}").unwrap(),
            (false, true) => {
                writeln!(out, " MI BND  {n}").unwrap();
                writeln!(out, " UP BND  {n}  {}", format_number(hi)).unwrap();
            }
            (true, _) => {
                if lo != 0.0 || c.is_binary() || hi < 0.0 {
                    writeln!(out, " LO BND  {n}  {}", format_number(lo)).unwrap();
                }
                if hi.is_finite() {
                    writeln!(out, " UP BND  {n}  {}", format_number(hi)).unwrap();
                } else if c.is_binary() {
                    writeln!(out, " PL BND  {n}").unwrap();
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Parse MPS text into a model. The semantic variable index is left empty.
pub fn parse_mps(text: &str) -> Result<MilpModel, ModelError> {
    let err = |line: usize, m: &str| ModelError::Mps { line, message: m.to_string() };
    let mut model = MilpModel::new("");
    let mut section = Section::None;
    let mut obj_name: Option<String> = None;
    let mut free_rows: HashSet<String> = HashSet::new();
    let mut row_ids: HashMap<String, usize> = HashMap::new();
    let mut col_ids: HashMap<String, usize> = HashMap::new();
    let mut row_coefs: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut obj: Vec<(usize, f64)> = Vec::new();
    let mut integer = false;
    let mut maximize = false;

    let number = |line: usize, s: &str| -> Result<f64, ModelError> {
        let v: f64 = s.parse().map_err(|_| err(line, &format!("bad number {s:?}")))?;
        if v.is_nan() {
            return Err(err(line, "NaN value"));
        }
        Ok(v)
    };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let header = !raw.starts_with(' ') && !raw.starts_with('\t');
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if header {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(s) = fields.get(1) {
                        maximize = parse_sense_word(line, s)?;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => return Err(err(line, "RANGES section is not supported")),
                "ENDATA" => Section::End,
                other => return Err(err(line, &format!("unknown section {other:?}"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => maximize = parse_sense_word(line, fields[0])?,
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(err(line, "ROWS entry needs a type and a name"));
                }
                let name = fields[1].to_string();
                let sense = match fields[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name);
                        } else {
                            free_rows.insert(name);
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(err(line, &format!("unknown row type {t:?}"))),
                };
                if row_ids.contains_key(&name) || obj_name.as_deref() == Some(&name) {
                    return Err(err(line, &format!("duplicate row {name:?}")));
                }
                row_ids.insert(name.clone(), model.rows.len());
                model.add_row(name, sense, 0.0, std::iter::empty());
                row_coefs.push(Vec::new());
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    integer = match fields[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        m => return Err(err(line, &format!("unknown marker {m}"))),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(line, "COLUMNS entry needs 3 or 5 fields"));
                }
                let name = fields[0];
                let j = match col_ids.get(name) {
                    Some(&j) => {
                        if model.columns[j].is_binary() != integer {
                            return Err(err(line, "column entries split across a marker"));
                        }
                        j
                    }
                    None => {
                        let j = model.add_continuous(name, 0.0, f64::INFINITY);
                        if integer {
                            model.columns[j].integrality = Integrality::Binary;
                        }
                        col_ids.insert(name.to_string(), j);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = number(line, pair[1])?;
                    if obj_name.as_deref() == Some(pair[0]) {
                        obj.push((j, value));
                    } else if let Some(&i) = row_ids.get(pair[0]) {
                        row_coefs[i].push((j, value));
                    } else if !free_rows.contains(pair[0]) {
                        return Err(err(line, &format!("unknown row {:?}", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                let rest = match fields.len() {
                    2 => &fields[..],
                    3 | 5 => &fields[1..],
                    4 => &fields[..],
                    _ => return Err(err(line, "RHS entry has the wrong number of fields")),
                };
                for pair in rest.chunks(2) {
                    let value = number(line, pair[1])?;
                    if obj_name.as_deref() == Some(pair[0]) {
                        model.objective.constant = -value;
                    } else if let Some(&i) = row_ids.get(pair[0]) {
                        model.rows[i].rhs = value;
                    } else if !free_rows.contains(pair[0]) {
                        return Err(err(line, &format!("unknown row {:?}", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(line, "BOUNDS entry too short"));
                }
                let kind = fields[0];
                let j = *col_ids.get(fields[2]).ok_or_else(|| err(line, &format!("unknown column {:?}", fields[2])))?;
                let value = match kind {
                    "FR" | "MI" | "PL" | "BV" => None,
                    _ => Some(number(line, fields.get(3).ok_or_else(|| err(line, "bound value missing"))?)?),
                };
                let c = &mut model.columns[j];
                match (kind, value) {
                    ("UP", Some(v)) => {
                        c.upper = v;
                    }
                    ("LO", Some(v)) => c.lower = v,
                    ("FX", Some(v)) => {
                        c.lower = v;
                        c.upper = v;
                    }
                    ("FR", None) => {
                        c.lower = f64::NEG_INFINITY;
                        c.upper = f64::INFINITY;
                    }
                    ("MI", None) => c.lower = f64::NEG_INFINITY,
                    ("PL", None) => c.upper = f64::INFINITY,
                    ("BV", None) => {
                        c.lower = 0.0;
                        c.upper = 1.0;
                        c.integrality = Integrality::Binary;
                    }
                    (k, _) => return Err(err(line, &format!("unsupported bound type {k:?}"))),
                }
            }
            Section::Name | Section::None | Section::End => {
                return Err(err(line, "data outside of a section"));
            }
        }
    }
    if section != Section::End {
        return Err(err(text.lines().count(), "missing ENDATA"));
    }

    for (row, coefs) in model.rows.iter_mut().zip(row_coefs) {
        row.coefs = super::normalize(coefs);
    }
    if maximize {
        obj.iter_mut().for_each(|(_, c)| *c = -*c);
        model.objective.constant = -model.objective.constant;
    }
    let constant = model.objective.constant;
    model.set_objective(obj, constant);

    for c in &model.columns {
        if c.is_binary() && (c.lower < 0.0 || c.upper > 1.0) {
            return Err(ModelError::Invalid(format!(
                "integer column {} is not binary; general integers are not supported",
                c.name
            )));
        }
    }
    model.check()?;
    Ok(model)
}

fn parse_sense_word(line: usize, word: &str) -> Result<bool, ModelError> {
    match word {
        "MIN" | "MINIMIZE" => Ok(false),
        "MAX" | "MAXIMIZE" => Ok(true),
        other => Err(ModelError::Mps { line, message: format!("unknown objective sense {other:?}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_rejected() {
        assert!(matches!(export_mps(&MilpModel::new("e")), Err(ModelError::Empty)));
    }

    #[test]
    fn single_binary_gets_one_marker_pair() {
        let mut m = MilpModel::new("b");
        let x = m.add_continuous("x", 0.0, 10.0);
        let b = m.add_binary("b");
        m.add_row("r", Sense::Ge, 1.0, [(x, 1.0), (b, 1.0)]);
        let text = export_mps(&m).unwrap();
        assert_eq!(text.matches("'INTORG'").count(), 1);
        assert_eq!(text.matches("'INTEND'").count(), 1);
    }

    #[test]
    fn sanitized_collision_is_an_error() {
        let mut m = MilpModel::new("c");
        m.add_continuous("a b", 0.0, 1.0);
        m.add_continuous("a_b", 0.0, 1.0);
        assert!(matches!(export_mps(&m), Err(ModelError::NameCollision(_))));
    }

    #[test]
    fn long_names_truncated() {
        let long = "x".repeat(400);
        assert_eq!(sanitize_name(&long).len(), 255);
        assert_eq!(sanitize_name("Haemophilus influenzae"), "Haemophilus_influenzae");
    }

    #[test]
    fn numbers_roundtrip_exactly() {
        for x in [0.1, 1.0 / 3.0, 1e-9, 12345678.9, -2.5e20, 7.0, 0.95f64.powi(29)] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn parse_reads_back_writer_output() {
        let mut m = MilpModel::new("rt");
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY);
        let b = m.add_binary("b");
        m.add_row("c1", Sense::Ge, 1.0, [(x, 1.0), (y, 2.0)]);
        m.add_row("c2", Sense::Eq, -3.5, [(y, 1.0), (b, -4.0)]);
        m.set_objective([(x, 1.0), (b, 0.25)], 2.0);
        let back = parse_mps(&export_mps(&m).unwrap()).unwrap();
        assert_eq!(back.columns, m.columns);
        assert_eq!(back.rows, m.rows);
        assert_eq!(back.objective, m.objective);
    }

    #[test]
    fn parse_reports_line_of_bad_number() {
        let text = "NAME t\nROWS\n N OBJ\n L r\nCOLUMNS\n    x OBJ abc\nRHS\nBOUNDS\nENDATA\n";
        match parse_mps(text) {
            Err(ModelError::Mps { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }
}
