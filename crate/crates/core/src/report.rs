//! Deterministic report formatting: fixed-precision floats, CSV and
//! Markdown tables, and the coordinate text dump for matrices.

use crate::linalg::SymTriplets;

/// Format with 12 significant digits; reruns of identical computations
/// produce byte-identical text.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.11e}")
}

/// One table with a header row; renders as CSV or a Markdown pipe table.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(crate::Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
                out
            }
            ReportFormat::Markdown => {
                let mut out = format!("| {} |\n", self.header.join(" | "));
                out.push_str(&format!(
                    "|{}\n",
                    " --- |".repeat(self.header.len())
                ));
                for row in &self.rows {
                    out.push_str(&format!("| {} |\n", row.join(" | ")));
                }
                out
            }
        }
    }
}

/// Coordinate text dump: header `rows cols nnz`, then `i j value` lines.
pub fn dump_matrix(m: &SymTriplets) -> String {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, v) in m.entries() {
        *acc.entry((i, j)).or_insert(0.0) += v;
        if i != j {
            *acc.entry((j, i)).or_insert(0.0) += v;
        }
    }
    acc.retain(|_, v| *v != 0.0);
    let mut out = format!("{} {} {}\n", m.n, m.n, acc.len());
    for ((i, j), v) in acc {
        out.push_str(&format!("{i} {j} {}\n", fmt_sig12(v)));
    }
    out
}

/// Least-squares slope of `log e` against `log h`; the fitted convergence
/// rate over a level sequence.
pub fn fitted_rate(hs: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(hs.len(), errors.len());
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
