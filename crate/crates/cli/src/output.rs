//! CSV and JSON writers shared by the subcommands.

use serde::Serialize;
use serde_json::{json, Value};

/// One CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(u128),
    Float(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as u128)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u128)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as u128)
    }
}

impl From<u128> for Cell {
    fn from(x: u128) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

/// 12 significant digits, `.` decimal; plain notation for moderate
/// magnitudes, exponent notation otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-5..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(k) => k.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Key/value table from the top level of a JSON object.
    pub fn from_fields(value: &Value) -> Self {
        let mut table = Table::new(["field", "value"]);
        if let Value::Object(map) = value {
            for (k, v) in map {
                table.push(vec![Cell::Text(k.clone()), json_cell(v)]);
            }
        }
        table
    }

    /// CSV with the run context as leading `# ` comment lines.
    pub fn to_csv(&self, context: &Value) -> String {
        let mut out = String::new();
        for line in context_lines(context) {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn json_cell(v: &Value) -> Cell {
    match v {
        Value::Null => Cell::Empty,
        Value::Bool(b) => Cell::Text(b.to_string()),
        Value::Number(n) => match n.as_u64() {
            Some(k) => Cell::Int(k as u128),
            None => Cell::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => Cell::Text(s.clone()),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|x| json_cell(x).render()).collect();
            Cell::Text(parts.join(";"))
        }
        Value::Object(_) => Cell::Text(v.to_string().replace(',', ";")),
    }
}

fn context_lines(context: &Value) -> Vec<String> {
    match context {
        Value::Object(map) => map.iter().map(|(k, v)| format!("{k}: {v}")).collect(),
        other => vec![other.to_string()],
    }
}

/// JSON envelope holding the run context and the result.
pub fn to_json(context: &Value, result: &impl Serialize) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(&json!({ "context": context, "result": result }))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0 / 3.0 * 1e-8), "6.66666666667e-9");
        assert_eq!(format_float(151.0), "151");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(-0.0), "0");
    }
}
