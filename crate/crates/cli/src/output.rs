//! Result rendering: numbers at 12 significant digits, CSV tables, and
//! output files that appear only once every one of them is complete.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

pub const SIG_DIGITS: usize = 12;

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        let r = round_sig(x);
        let a = r.abs();
        if a != 0.0 && !(1e-5..1e16).contains(&a) {
            format!("{r:e}")
        } else {
            r.to_string()
        }
    }
}

/// Rounds every float in a JSON tree in place.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    /// Schema key and file-name suffix.
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            name,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt_num(*x)))
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Output {
    pub json: Value,
    pub tables: Vec<Table>,
}

impl Output {
    pub fn render_json(&self) -> Result<String, CliError> {
        let mut v = self.json.clone();
        round_json(&mut v);
        serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Writes `<prefix>.json` and `<prefix>_<table>.csv` into `dir`. Every file
/// goes to a temporary name first; nothing is renamed into place until all
/// of them have been written.
pub fn write_files(out: &Output, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = vec![(
        dir.join(format!("{prefix}.json")),
        out.render_json()? + "\n",
    )];
    for t in &out.tables {
        files.push((dir.join(format!("{prefix}_{}.csv", t.name)), t.to_csv()?));
    }
    let pid = std::process::id();
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (path, body) in files {
        let tmp = path.with_extension(format!("tmp-{pid}"));
        let res = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(body.as_bytes())?;
            f.sync_all()
        });
        staged.push((tmp.clone(), path));
        if let Err(e) = res {
            cleanup(&staged);
            return Err(io(&tmp, e));
        }
    }
    let mut done = Vec::new();
    for (i, (tmp, path)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, path) {
            cleanup(&staged[i..]);
            return Err(io(path, e));
        }
        done.push(path.clone());
    }
    Ok(done)
}
