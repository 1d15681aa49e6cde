//! Minimal MPS reader written against the format description, used to
//! check the exporter without going through its own parser.

use std::collections::HashMap;

use vaxtender::model::{MilpModel, Sense};

#[derive(Debug, Default)]
pub struct MpsColumn {
    pub name: String,
    pub integer: bool,
    pub entries: Vec<(String, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Default)]
pub struct MpsFile {
    pub name: String,
    pub objective_row: String,
    /// `(name, 'L' | 'G' | 'E')` in file order.
    pub rows: Vec<(String, char)>,
    pub columns: Vec<MpsColumn>,
    pub rhs: HashMap<String, f64>,
}

pub fn read(text: &str) -> Result<MpsFile, String> {
    let mut f = MpsFile::default();
    let mut section = "";
    let mut integer = false;
    let mut col_at: HashMap<String, usize> = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let fail = |m: &str| format!("line {}: {m}", no + 1);
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') {
            section = t[0];
            if section == "NAME" {
                f.name = t.get(1).unwrap_or(&"").to_string();
            }
            continue;
        }
        match section {
            "ROWS" => {
                let kind = t[0].chars().next().ok_or_else(|| fail("row type"))?;
                if kind == 'N' {
                    f.objective_row = t[1].to_string();
                } else {
                    f.rows.push((t[1].to_string(), kind));
                }
            }
            "COLUMNS" => {
                if t.len() == 3 && t[1] == "'MARKER'" {
                    integer = t[2] == "'INTORG'";
                    continue;
                }
                let at = *col_at.entry(t[0].to_string()).or_insert_with(|| {
                    f.columns.push(MpsColumn {
                        name: t[0].to_string(),
                        integer,
                        lower: 0.0,
                        upper: f64::INFINITY,
                        ..Default::default()
                    });
                    f.columns.len() - 1
                });
                for pair in t[1..].chunks(2) {
                    let v: f64 =
                        pair.get(1).ok_or_else(|| fail("missing value"))?.parse().map_err(|_| fail("number"))?;
                    f.columns[at].entries.push((pair[0].to_string(), v));
                }
            }
            "RHS" => {
                for pair in t[1..].chunks(2) {
                    let v: f64 =
                        pair.get(1).ok_or_else(|| fail("missing value"))?.parse().map_err(|_| fail("number"))?;
                    f.rhs.insert(pair[0].to_string(), v);
                }
            }
            "BOUNDS" => {
                let at = *col_at.get(t[2]).ok_or_else(|| fail("bound on unknown column"))?;
                let value = || -> Result<f64, String> {
                    t.get(3).ok_or_else(|| fail("value"))?.parse().map_err(|_| fail("number"))
                };
                let c = &mut f.columns[at];
                match t[0] {
                    "UP" => c.upper = value()?,
                    "LO" => c.lower = value()?,
                    "FX" => {
                        c.lower = value()?;
                        c.upper = c.lower;
                    }
                    "MI" => c.lower = f64::NEG_INFINITY,
                    "PL" => c.upper = f64::INFINITY,
                    "FR" => {
                        c.lower = f64::NEG_INFINITY;
                        c.upper = f64::INFINITY;
                    }
                    "BV" => {
                        c.integer = true;
                        c.lower = 0.0;
                        c.upper = 1.0;
                    }
                    other => return Err(fail(&format!("bound type {other}"))),
                }
            }
            _ => return Err(fail(&format!("data line in section {section:?}"))),
        }
    }
    if section != "ENDATA" {
        return Err("missing ENDATA".into());
    }
    Ok(f)
}

fn same(a: f64, b: f64) -> bool {
    (a + 0.0).to_bits() == (b + 0.0).to_bits()
}

/// Every difference between the file and `model`; empty when they agree
/// bit for bit on names, senses, bounds, coefficients and integrality.
pub fn diff(file: &MpsFile, model: &MilpModel) -> Vec<String> {
    let mut out = Vec::new();
    if file.rows.len() != model.rows.len() {
        out.push(format!("{} rows vs {}", file.rows.len(), model.rows.len()));
    }
    if file.columns.len() != model.columns.len() {
        out.push(format!("{} columns vs {}", file.columns.len(), model.columns.len()));
    }
    for ((name, kind), r) in file.rows.iter().zip(&model.rows) {
        let want = match r.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        if *name != r.name || *kind != want {
            out.push(format!("row {name} {kind} vs {} {want}", r.name));
        }
        let rhs = file.rhs.get(name).copied().unwrap_or(0.0);
        if !same(rhs, r.rhs) {
            out.push(format!("rhs of {name}: {rhs} vs {}", r.rhs));
        }
    }
    let constant = -file.rhs.get(&file.objective_row).copied().unwrap_or(0.0);
    if !same(constant, model.objective.constant) {
        out.push(format!("objective constant {constant} vs {}", model.objective.constant));
    }

    let row_at: HashMap<&str, usize> = model.rows.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.columns.len()];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.coefs {
            by_col[j].push((i, a));
        }
    }
    let cost = model.cost_vector();
    for (j, (fc, mc)) in file.columns.iter().zip(&model.columns).enumerate() {
        if fc.name != mc.name {
            out.push(format!("column {j}: {} vs {}", fc.name, mc.name));
        }
        if fc.integer != mc.is_binary() {
            out.push(format!("integrality of {}", mc.name));
        }
        if !same(fc.lower, mc.lower) || !same(fc.upper, mc.upper) {
            out.push(format!("bounds of {}: [{}, {}] vs [{}, {}]", mc.name, fc.lower, fc.upper, mc.lower, mc.upper));
        }
        let mut obj = 0.0;
        let mut entries = Vec::new();
        for (row, v) in &fc.entries {
            if *row == file.objective_row {
                obj = *v;
            } else if let Some(&i) = row_at.get(row.as_str()) {
                entries.push((i, *v));
            } else {
                out.push(format!("{} references unknown row {row}", mc.name));
            }
        }
        if !same(obj, cost[j]) {
            out.push(format!("objective of {}: {obj} vs {}", mc.name, cost[j]));
        }
        entries.sort_by_key(|e| e.0);
        let mut want = by_col[j].clone();
        want.sort_by_key(|e| e.0);
        if entries.len() != want.len() || entries.iter().zip(&want).any(|(a, b)| a.0 != b.0 || !same(a.1, b.1)) {
            out.push(format!("coefficients of {}", mc.name));
        }
    }
    out
}
