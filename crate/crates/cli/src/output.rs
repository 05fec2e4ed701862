use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// One CSV table plus the key=value lines for its sidecar.
#[derive(Debug, Default)]
pub struct Artifact {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Results worth echoing (fitted slopes, maxima) in the sidecar.
    pub summary: Vec<(String, String)>,
}

impl Artifact {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

/// Shortest round-trip decimal form, so equal values print identically.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:?}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Flattens a serializable argument struct into sorted `config.key=value` lines.
pub fn config_echo(args: &impl Serialize) -> Vec<(String, String)> {
    let value = serde_json::to_value(args).unwrap_or_default();
    let mut out = Vec::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let s = match v {
                serde_json::Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
                other => scalar(&other),
            };
            out.push((format!("config.{}", k.replace('_', "-")), s));
        }
    }
    out.sort();
    out
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

pub struct Written {
    pub csv: PathBuf,
    pub meta: PathBuf,
}

pub fn write(dir: &Path, name: &str, art: &Artifact, mut meta: Vec<(String, String)>) -> Result<Written, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let csv_path = dir.join(format!("{name}.csv"));
    let meta_path = dir.join(format!("{name}.meta"));
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", csv_path.display()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(io)?;
    w.write_record(&art.header).map_err(io)?;
    for r in &art.rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    meta.push(("rows".into(), art.rows.len().to_string()));
    meta.push(("columns".into(), art.header.join(",")));
    meta.extend(art.summary.iter().cloned());
    let body: String = meta.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    std::fs::write(&meta_path, body).map_err(|e| CliError::Io(format!("{}: {e}", meta_path.display())))?;
    Ok(Written { csv: csv_path, meta: meta_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, -2.5e-17, 1e300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn echo_flattens_lists() {
        #[derive(Serialize)]
        struct A {
            eps: Vec<f64>,
            some_flag: bool,
        }
        let e = config_echo(&A { eps: vec![1.0, 0.5], some_flag: true });
        assert_eq!(e, vec![("config.eps".into(), "1.0,0.5".into()), ("config.some-flag".into(), "true".into())]);
    }
}
