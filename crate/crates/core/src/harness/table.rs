use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel_profile::{integrated_profile, JumpKernel, StepProfileParams};
use crate::observables::predicted_second_class_mass;

pub const COLUMNS: [&str; 9] = [
    "seed", "kind", "u", "v", "t", "empirical", "predicted", "error", "runtime_ms",
];

/// One measurement. Diagnostic rows use `kind = "<experiment>:<name>"`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub kind: String,
    pub u: f64,
    pub v: f64,
    pub t: f64,
    pub empirical: f64,
    pub predicted: f64,
    pub error: f64,
    pub runtime_ms: u64,
}

impl ResultRow {
    pub fn is_diagnostic(&self) -> bool {
        self.kind.contains(':')
    }

    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.kind,
            self.u,
            self.v,
            self.t,
            self.empirical,
            self.predicted,
            self.error,
            self.runtime_ms
        )
    }
}

/// Rows plus `# key = value` metadata, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_metadata(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Orders rows by `(seed, u, v)`, keeping insertion order among ties.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.seed
                .cmp(&b.seed)
                .then(a.u.total_cmp(&b.u))
                .then(a.v.total_cmp(&b.v))
        });
    }

    /// Rows of exactly this kind.
    pub fn rows_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.kind == kind)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_line());
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut table = ResultTable::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| err(format!("bad metadata line `{line}`")))?;
                table.push_metadata(k.trim(), v.trim());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line != COLUMNS.join(",") {
                    return Err(err(format!("unexpected header `{line}`")));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != COLUMNS.len() {
                return Err(err(format!("expected {} fields, got {}", COLUMNS.len(), f.len())));
            }
            let num = |j: usize| -> Result<f64> {
                f[j].parse()
                    .map_err(|_| err(format!("bad {} `{}`", COLUMNS[j], f[j])))
            };
            table.rows.push(ResultRow {
                seed: f[0].parse().map_err(|_| err(format!("bad seed `{}`", f[0])))?,
                kind: f[1].to_string(),
                u: num(2)?,
                v: num(3)?,
                t: num(4)?,
                empirical: num(5)?,
                predicted: num(6)?,
                error: num(7)?,
                runtime_ms: f[8]
                    .parse()
                    .map_err(|_| err(format!("bad runtime_ms `{}`", f[8])))?,
            });
        }
        if !header_seen {
            return Err(Error::Format("missing CSV header".into()));
        }
        Ok(table)
    }
}

/// Writes the table as CSV. The output depends only on the table contents.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    fs::write(path, table.to_csv_string())?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<ResultTable> {
    ResultTable::parse_csv(&fs::read_to_string(path)?)
}

/// Recomputes every closed-form `predicted` value from the metadata and
/// checks that it matches to the bit. Diagnostic rows other than
/// `subadditive:x_infinity` carry no closed form and are skipped.
pub fn check_predictions(table: &ResultTable) -> Result<usize> {
    let meta = |key: &str| {
        table
            .metadata_value(key)
            .ok_or_else(|| Error::Format(format!("missing metadata `{key}`")))
    };
    let kernel: JumpKernel = meta("kernel")?.parse()?;
    let parse_f = |key: &str| -> Result<f64> {
        meta(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad metadata `{key}`")))
    };
    let params = StepProfileParams::new(parse_f("lambda")?, parse_f("rho")?)?;
    let mut checked = 0;
    for row in &table.rows {
        let expected = match row.kind.as_str() {
            "subadditive:x_infinity" => predicted_second_class_mass(row.u, &kernel, &params)? / row.u,
            k if !row.is_diagnostic() && k != "invariants" => {
                integrated_profile(row.u, row.v, &kernel, &params)?
            }
            _ => continue,
        };
        if expected.to_bits() != row.predicted.to_bits() {
            return Err(Error::Format(format!(
                "row seed={} kind={} ({}, {}): predicted {} but closed form gives {}",
                row.seed, row.kind, row.u, row.v, row.predicted, expected
            )));
        }
        checked += 1;
    }
    Ok(checked)
}
