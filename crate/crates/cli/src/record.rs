//! The serialized result of one invocation, and its three renderings.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputRecord {
    pub request: Map<String, Value>,
    pub results: Map<String, Value>,
    pub metadata: Map<String, Value>,
}

/// Builder for ordered JSON objects.
#[derive(Default)]
pub struct Obj(Map<String, Value>);

impl Obj {
    pub fn new() -> Self {
        Obj(Map::new())
    }

    pub fn put(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    /// Anything displayable, as a JSON string.
    pub fn text(self, key: &str, value: impl ToString) -> Self {
        self.put(key, value.to_string())
    }

    pub fn build(self) -> Map<String, Value> {
        self.0
    }
}

impl From<Obj> for Value {
    fn from(o: Obj) -> Value {
        Value::Object(o.0)
    }
}

impl OutputRecord {
    pub fn new(command: &str) -> Self {
        let mut request = Map::new();
        request.insert("command".into(), command.into());
        let mut metadata = Map::new();
        metadata.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        OutputRecord {
            request,
            results: Map::new(),
            metadata,
        }
    }

    pub fn request(&mut self, key: &str, value: impl Into<Value>) {
        self.request.insert(key.to_string(), value.into());
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// The `rows` result as CSV when present, otherwise one `field,value`
    /// line per scalar result.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(Value::Array(rows)) = self.results.get("rows") {
            let header: Vec<&String> = match rows.first() {
                Some(Value::Object(first)) => first.keys().collect(),
                _ => Vec::new(),
            };
            out.push_str(&csv_line(header.iter().map(|h| h.to_string())));
            for row in rows {
                if let Value::Object(row) = row {
                    out.push_str(&csv_line(header.iter().map(|h| scalar_owned(&row[*h]))));
                }
            }
            return out;
        }
        out.push_str("field,value\n");
        let mut flat = Vec::new();
        flatten("", &Value::Object(self.results.clone()), &mut flat);
        for (k, v) in flat {
            out.push_str(&csv_line([k, v].into_iter()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let params: Vec<String> = self
            .request
            .iter()
            .filter(|(k, _)| k.as_str() != "command")
            .map(|(k, v)| format!("{k}={}", scalar_owned(v)))
            .collect();
        out.push_str(&format!(
            "{} {}\n",
            self.request["command"].as_str().unwrap_or_default(),
            params.join(" ")
        ));
        for (key, value) in &self.results {
            match value {
                Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
                    out.push_str(&format!("{key}:\n"));
                    out.push_str(&table(items));
                }
                Value::Object(_) | Value::Array(_) => {
                    let mut flat = Vec::new();
                    flatten(key, value, &mut flat);
                    for (k, v) in flat {
                        out.push_str(&format!("{k}: {v}\n"));
                    }
                }
                _ => out.push_str(&format!("{key}: {}\n", scalar_owned(value))),
            }
        }
        out
    }
}

fn scalar(v: &Value) -> &str {
    match v {
        Value::String(s) => s,
        Value::Null => "",
        Value::Bool(true) => "true",
        Value::Bool(false) => "false",
        _ => "",
    }
}

fn scalar_owned(v: &Value) -> String {
    match v {
        Value::Number(n) => n.to_string(),
        other => scalar(other).to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar_owned(other))),
    }
}

fn csv_line(cells: impl Iterator<Item = String>) -> String {
    let mut line = cells.collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

/// Left-aligned columns, two spaces apart, for a list of flat objects.
fn table(rows: &[Value]) -> String {
    let Some(Value::Object(first)) = rows.first() else {
        return String::new();
    };
    let header: Vec<&String> = first.keys().collect();
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| header.iter().map(|h| scalar_owned(&r[*h])).collect())
        .collect();
    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| {
            cells
                .iter()
                .map(|c| c[i].len())
                .chain([h.len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let render = |row: Vec<&str>| {
        let padded: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        format!("  {}\n", padded.join("  ").trim_end())
    };
    let mut out = render(header.iter().map(|h| h.as_str()).collect());
    for row in &cells {
        out.push_str(&render(row.iter().map(String::as_str).collect()));
    }
    out
}
