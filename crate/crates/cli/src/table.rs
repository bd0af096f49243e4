use serde_json::{json, Map, Value};

/// Rectangular data destined for CSV and/or JSON.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        json!({ "columns": self.columns, "rows": self.rows })
    }
}

/// Finite floats become numbers, everything else `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Output of one sweep cell: named tables and named JSON documents.
#[derive(Clone, Debug, Default)]
pub struct CellOutput {
    pub tables: Vec<(&'static str, Table)>,
    pub docs: Vec<(&'static str, Value)>,
}

impl CellOutput {
    pub fn table(&mut self, name: &'static str, t: Table) {
        self.tables.push((name, t));
    }

    pub fn doc(&mut self, name: &'static str, v: Value) {
        self.docs.push((name, v));
    }
}

/// Merged output of a whole run, in first-seen order of names.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<(String, Table)>,
    pub docs: Vec<(String, Value)>,
}

impl RunOutput {
    /// Concatenates per-cell tables, prefixing each row with the cell index
    /// and swept values; JSON documents become arrays over cells.
    pub fn merge(prefix_names: &[&str], cells: Vec<(Vec<f64>, CellOutput)>) -> Self {
        let mut out = RunOutput::default();
        let mut docs: Vec<(String, Vec<Value>)> = Vec::new();
        for (idx, (params, cell)) in cells.into_iter().enumerate() {
            let mut prefix = vec![Value::from(idx as u64)];
            prefix.extend(params.iter().map(|&p| num(p)));
            for (name, t) in cell.tables {
                let pos = match out.tables.iter().position(|(n, _)| n == name) {
                    Some(p) => p,
                    None => {
                        let mut cols = vec!["cell".to_string()];
                        cols.extend(prefix_names.iter().map(|s| s.to_string()));
                        cols.extend(t.columns.iter().cloned());
                        out.tables.push((name.to_string(), Table { columns: cols, rows: Vec::new() }));
                        out.tables.len() - 1
                    }
                };
                let dst = &mut out.tables[pos].1;
                for row in t.rows {
                    let mut r = prefix.clone();
                    r.extend(row);
                    dst.rows.push(r);
                }
            }
            for (name, v) in cell.docs {
                let mut entry = Map::new();
                entry.insert("cell".into(), Value::from(idx as u64));
                let p: Map<String, Value> = prefix_names.iter().zip(&params).map(|(n, &x)| (n.to_string(), num(x))).collect();
                entry.insert("params".into(), Value::Object(p));
                entry.insert("data".into(), v);
                match docs.iter_mut().find(|(n, _)| n == name) {
                    Some((_, list)) => list.push(Value::Object(entry)),
                    None => docs.push((name.to_string(), vec![Value::Object(entry)])),
                }
            }
        }
        out.docs = docs.into_iter().map(|(n, v)| (n, Value::Array(v))).collect();
        out
    }
}
