//! Deterministic report rendering.
//!
//! Reports are a metadata header (tool version, seeds, config echo, data
//! counts) followed by named tables. Rendering is byte-deterministic for a
//! fixed input: floats use 6 fixed decimals, missing values stay empty, and
//! nothing time- or environment-dependent is embedded.

use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Tsv,
    Markdown,
}

/// One named table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A full report: header key/value pairs plus tables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub meta: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut report = Report::default();
        report.meta("tool", format!("indexical {TOOL_VERSION}"));
        report.meta("command", command);
        report
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.push((key.into(), value.into()));
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Tsv => self.render_tsv(),
            ReportFormat::Markdown => self.render_markdown(),
        }
    }

    fn render_tsv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.meta {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        for table in &self.tables {
            out.push('\n');
            out.push_str(&format!("# [{}]\n", table.title));
            out.push_str(&table.columns.join("\t"));
            out.push('\n');
            for row in &table.rows {
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
        }
        out
    }

    fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# indexical report\n\n");
        for (key, value) in &self.meta {
            out.push_str(&format!("- **{key}**: {value}\n"));
        }
        for table in &self.tables {
            out.push_str(&format!("\n## {}\n\n", table.title));
            out.push_str(&format!("| {} |\n", table.columns.join(" | ")));
            out.push_str(&format!(
                "|{}\n",
                " --- |".repeat(table.columns.len())
            ));
            for row in &table.rows {
                let cells: Vec<String> =
                    row.iter().map(|c| if c.is_empty() { " ".into() } else { c.clone() }).collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
        }
        out
    }
}

/// Fixed-precision float cell; empty for missing values.
pub fn cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut report = Report::new("audit");
        report.meta("seed", "42");
        let mut table = Table::new("per-query", &["query", "duo"]);
        table.push(vec!["q1".into(), cell(Some(0.5))]);
        table.push(vec!["q2".into(), cell(None)]);
        report.tables.push(table);
        report
    }

    #[test]
    fn tsv_layout() {
        let text = sample().render(ReportFormat::Tsv);
        assert!(text.starts_with(&format!("# tool: indexical {TOOL_VERSION}\n")));
        assert!(text.contains("# [per-query]\nquery\tduo\nq1\t0.500000\nq2\t\n"), "{text}");
    }

    #[test]
    fn markdown_layout() {
        let text = sample().render(ReportFormat::Markdown);
        assert!(text.contains("| query | duo |"));
        assert!(text.contains("| q1 | 0.500000 |"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(sample().render(ReportFormat::Tsv), sample().render(ReportFormat::Tsv));
    }
}
