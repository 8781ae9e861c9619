//! Writers for JSON (17 significant digits) and CSV (12 significant digits).

use std::io::Write;
use std::path::Path;

use hcbound::experiments::{format_csv_number, json_string};
use hcbound::{Error, Result};
use serde::Serialize;

/// A CSV cell.
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_csv_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv: {e}")))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = json_string(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to `path`, creating parent directories, or to stdout when
/// no path is given. A closed stdout is not an error.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
            }
            std::fs::write(p, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display())))
        }
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Config(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}
