use serde_json::{Map, Value};

use crate::args::Format;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Decimal rendering with 15 significant digits and trailing zeros trimmed.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn round_sig(v: f64) -> Value {
    match fmt_sig(v).parse::<f64>() {
        Ok(r) if r.is_finite() => Value::from(r),
        _ => Value::Null,
    }
}

fn cell_text(c: Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Num(v) => fmt_sig(v),
    }
}

fn cell_json(c: Cell) -> Value {
    match c {
        Cell::Int(i) => Value::from(i),
        Cell::Num(v) => round_sig(v),
    }
}

fn metadata_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if !n.is_u64() && !n.is_i64() => fmt_sig(f),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

pub fn render(table: &Table, metadata: &Map<String, Value>, format: Format) -> String {
    match format {
        Format::Csv => render_csv(table, metadata),
        Format::Json => render_json(table, metadata),
    }
}

fn render_csv(table: &Table, metadata: &Map<String, Value>) -> String {
    let mut out = String::new();
    for (key, value) in metadata {
        out.push_str(&format!("# {key}: {}\n", metadata_text(value)));
    }
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&c| cell_text(c)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_json(table: &Table, metadata: &Map<String, Value>) -> String {
    let records: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(&k, &c)| (k.to_string(), cell_json(c)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let mut top = Map::new();
    top.insert("metadata".into(), Value::Object(metadata.clone()));
    top.insert("records".into(), Value::Array(records));
    let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
    s.push('\n');
    s
}
