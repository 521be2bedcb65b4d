//! Tabular results and CSV emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t",
    "delta",
    "sx",
    "sy",
    "sz",
    "e_expected",
    "e1",
    "e2",
    "p_work",
    "p_switch",
];

pub const DISSIPATION_COLUMNS: [&str; 8] = [
    "lambda", "t_s", "t_d", "k_t", "beta", "e_switch", "e_excess", "e_diss",
];

pub const STEADY_COLUMNS: [&str; 6] = ["delta", "branch_index", "x", "z", "energy", "stable"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// 17 significant digits, enough for an exact `f64` round trip.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// If the row width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float value at `(row, column)`, if that cell holds one.
    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(name)?)? {
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

/// Writes `table` as CSV to any sink.
pub fn write_csv_to<W: Write>(table: &Table, sink: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv_to(table, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn csv_string(table: &Table) -> String {
    let mut buf = Vec::new();
    write_csv_to(table, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 output")
}

/// Every `stride`-th sample plus the last one.
pub fn trajectory_table(traj: &Trajectory<f64>, stride: usize) -> Table {
    let mut t = Table::new(&TRAJECTORY_COLUMNS);
    let stride = stride.max(1);
    let n = traj.samples.len();
    for (i, s) in traj.samples.iter().enumerate() {
        if i % stride != 0 && i + 1 != n {
            continue;
        }
        t.push(vec![
            s.t.into(),
            s.delta.into(),
            s.state.x.into(),
            s.state.y.into(),
            s.state.z.into(),
            s.e_expected.into(),
            s.e1.into(),
            s.e2.into(),
            s.power.p_work.into(),
            s.power.p_switch.into(),
        ]);
    }
    t
}
