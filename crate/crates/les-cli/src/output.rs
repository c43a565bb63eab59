//! Output rendering: tables in CSV or aligned text, 12 significant digits,
//! atomic write-then-rename file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Formats with 12 significant digits so printed values round-trip.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{:.11e}", x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Text,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "structured-text" | "text" => Ok(Format::Text),
            other => Err(CliError::usage(format!(
                "unknown format '{other}' (expected csv or structured-text)"
            ))),
        }
    }
}

/// A titled table plus key-value preamble; renders to either format.
#[derive(Debug, Default)]
pub struct Report {
    sections: Vec<Section>,
}

#[derive(Debug)]
enum Section {
    KeyValues(String, Vec<(String, String)>),
    Table(String, Vec<String>, Vec<Vec<String>>),
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn key_values(
        &mut self,
        title: impl Into<String>,
        pairs: Vec<(String, String)>,
    ) -> &mut Self {
        self.sections.push(Section::KeyValues(title.into(), pairs));
        self
    }

    pub fn table(
        &mut self,
        title: impl Into<String>,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> &mut Self {
        self.sections.push(Section::Table(title.into(), header, rows));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Text => self.render_text(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            match s {
                Section::KeyValues(title, pairs) => {
                    out.push_str(&format!("section,{title}\n"));
                    for (k, v) in pairs {
                        out.push_str(&format!("{k},{v}\n"));
                    }
                }
                Section::Table(title, header, rows) => {
                    out.push_str(&format!("section,{title}\n"));
                    out.push_str(&header.join(","));
                    out.push('\n');
                    for r in rows {
                        out.push_str(&r.join(","));
                        out.push('\n');
                    }
                }
            }
        }
        out
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            match s {
                Section::KeyValues(title, pairs) => {
                    out.push_str(&format!("== {title}\n"));
                    let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                    for (k, v) in pairs {
                        out.push_str(&format!("{k:<w$}  {v}\n"));
                    }
                    out.push('\n');
                }
                Section::Table(title, header, rows) => {
                    out.push_str(&format!("== {title}\n"));
                    let ncol = header.len();
                    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
                    for r in rows {
                        for c in 0..ncol {
                            widths[c] = widths[c].max(r.get(c).map_or(0, |v| v.len()));
                        }
                    }
                    let line = |cells: &[String]| -> String {
                        cells
                            .iter()
                            .enumerate()
                            .map(|(c, v)| format!("{v:<width$}", width = widths[c]))
                            .collect::<Vec<_>>()
                            .join("  ")
                            .trim_end()
                            .to_string()
                    };
                    out.push_str(&line(header));
                    out.push('\n');
                    for r in rows {
                        out.push_str(&line(r));
                        out.push('\n');
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Writes the artifact atomically: to `<path>.tmp`, then renamed into place.
/// A failure leaves no partial file behind.
pub fn write_artifact(path: &Path, content: &str) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}tmp",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let write = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if let Err(e) = write {
        fs::remove_file(&tmp).ok();
        return Err(CliError::data(format!(
            "cannot write {}: {e}",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_at_12_digits() {
        for &x in &[0.5381234567891, -2.718281828459045e-7, 1234567.89012345, 0.0] {
            let s = fmt_num(x);
            let back: f64 = s.parse().unwrap();
            let rel = if x == 0.0 {
                back.abs()
            } else {
                ((back - x) / x).abs()
            };
            assert!(rel < 1e-11, "{x} -> {s} -> {back}");
        }
    }

    #[test]
    fn csv_and_text_render() {
        let mut rep = Report::new();
        rep.key_values("diagnostics", vec![("objective".into(), "1.5".into())]);
        rep.table(
            "coefficients",
            vec!["name".into(), "estimate".into()],
            vec![vec!["a".into(), "0.25".into()]],
        );
        let csv = rep.render(Format::Csv);
        assert!(csv.contains("section,coefficients"));
        assert!(csv.contains("name,estimate"));
        let text = rep.render(Format::Text);
        assert!(text.contains("== coefficients"));
    }
}
