//! Tables with fixed 10-significant-digit number formatting, written and read
//! back as CSV or JSON.

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

/// Rounds to 10 significant digits, the precision every table carries.
pub fn round10(x: f64) -> f64 {
    format!("{x:.9e}").parse().expect("formatted float parses")
}

impl Cell {
    /// Finite values are rounded; `inf` and `NaN` become text.
    pub fn num(x: f64) -> Cell {
        if x.is_finite() {
            Cell::Num(round10(x))
        } else {
            Cell::Text(x.to_string())
        }
    }

    pub fn int(x: impl TryInto<i64>) -> Cell {
        x.try_into().map(Cell::Int).unwrap_or(Cell::Missing)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn flag(b: bool) -> Cell {
        Cell::Text(if b { "true" } else { "false" }.into())
    }

    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Missing, Cell::num)
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.9e}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn from_csv(s: &str) -> Cell {
        if s.is_empty() {
            Cell::Missing
        } else if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else {
            match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Cell::Num(x),
                _ => Cell::Text(s.to_string()),
            }
        }
    }

    /// Numeric value, if any.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(
            row.len(),
            self.columns.len(),
            "row width in table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            tables: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("json report: {e}")))
    }

    /// `# gapsit <command>`, then per table a blank line, `# <name>`, a header
    /// row and the data rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# gapsit {}\n", self.command);
        for t in &self.tables {
            out.push_str(&format!("\n# {}\n", t.name));
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(&t.columns).expect("write to memory");
            for row in &t.rows {
                w.write_record(row.iter().map(Cell::to_csv))
                    .expect("write to memory");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let bad = |m: String| CliError::Parse(format!("csv report: {m}"));
        let mut blocks = text.split("\n\n");
        let head = blocks.next().unwrap_or_default();
        let command = head
            .trim_end()
            .strip_prefix("# gapsit ")
            .ok_or_else(|| bad("missing `# gapsit <command>` line".into()))?
            .to_string();
        let mut tables = Vec::new();
        for block in blocks {
            let (title, body) = block
                .split_once('\n')
                .ok_or_else(|| bad("table without header".into()))?;
            let name = title
                .strip_prefix("# ")
                .ok_or_else(|| bad(format!("expected `# <table>`, got `{title}`")))?;
            let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
            let columns = r
                .headers()
                .map_err(|e| bad(e.to_string()))?
                .iter()
                .map(str::to_string)
                .collect();
            let rows = r
                .records()
                .map(|rec| {
                    rec.map(|rec| rec.iter().map(Cell::from_csv).collect())
                        .map_err(|e| bad(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            tables.push(Table {
                name: name.to_string(),
                columns,
                rows,
            });
        }
        Ok(Report { command, tables })
    }
}
