//! Human-readable summaries for standard output.

use crate::dimension::DimensionEstimate;

/// One cell of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => sig6(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => if *b { "yes" } else { "no" }.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Table {
        title: String,
        headers: Vec<String>,
        rows: Vec<Vec<Cell>>,
    },
    Dimension {
        method: String,
        /// Name of the abscissa variable.
        axis: String,
        estimate: DimensionEstimate,
    },
    Note(String),
}

/// `x` to 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Render reports as aligned text. An empty slice renders as `no results`.
pub fn report_render(reports: &[Report]) -> String {
    if reports.is_empty() {
        return "no results\n".to_string();
    }
    let mut out = String::new();
    for r in reports {
        match r {
            Report::Table {
                title,
                headers,
                rows,
            } => {
                out.push_str(title);
                out.push('\n');
                if rows.is_empty() {
                    out.push_str("no results\n");
                    continue;
                }
                let cells: Vec<Vec<String>> = rows
                    .iter()
                    .map(|row| row.iter().map(Cell::render).collect())
                    .collect();
                let widths: Vec<usize> = (0..headers.len())
                    .map(|c| {
                        cells
                            .iter()
                            .map(|r| r.get(c).map_or(0, String::len))
                            .chain([headers[c].len()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |items: &[String]| {
                    items
                        .iter()
                        .zip(&widths)
                        .map(|(s, w)| format!("{s:>w$}"))
                        .collect::<Vec<_>>()
                        .join("  ")
                };
                out.push_str(&line(headers));
                out.push('\n');
                for r in &cells {
                    out.push_str(&line(r));
                    out.push('\n');
                }
            }
            Report::Dimension {
                method,
                axis,
                estimate,
            } => {
                out.push_str(&format!(
                    "{method} dimension: slope {} window {axis} in [{}, {}] r² {}\n",
                    sig6(estimate.slope),
                    sig6(estimate.window.0.exp()),
                    sig6(estimate.window.1.exp()),
                    sig6(estimate.r_squared),
                ));
            }
            Report::Note(text) => {
                out.push_str(text);
                out.push('\n');
            }
        }
    }
    out
}
