//! CSV ingestion (RFC-4180 subset: comma-separated, header row, numeric
//! cells) and the variable -> group map.

use std::fs;
use std::path::Path;

use les_core::linalg::Mat;
use les_core::GroupPartition;

use crate::CliError;

fn read_lines(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(CliError::data(format!("{} is empty", path.display())));
    }
    Ok(rows)
}

/// Loads a numeric data table. Returns the design matrix (columns in header
/// order minus the response), the response vector and the retained column
/// names. Missing and non-numeric cells are rejected with their location;
/// the tool never imputes.
pub fn ingest_csv(
    path: &Path,
    response_column: &str,
) -> Result<(Mat, Vec<f64>, Vec<String>), CliError> {
    let rows = read_lines(path)?;
    let header = &rows[0];
    for (i, name) in header.iter().enumerate() {
        if header[..i].contains(name) {
            return Err(CliError::data(format!(
                "duplicate column name '{name}' in {}",
                path.display()
            )));
        }
    }
    let resp_idx = header
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| {
            CliError::data(format!(
                "response column '{response_column}' not found in {}",
                path.display()
            ))
        })?;
    let n = rows.len() - 1;
    if n < 2 {
        return Err(CliError::data(format!(
            "{} has {n} data rows; need at least 2",
            path.display()
        )));
    }
    let p = header.len() - 1;
    if p == 0 {
        return Err(CliError::data("no covariate columns"));
    }

    let mut flat = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for (r, row) in rows.iter().enumerate().skip(1) {
        if row.len() != header.len() {
            return Err(CliError::data(format!(
                "row {r} has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        for (c, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                return Err(CliError::data(format!(
                    "missing value at row {r}, column '{}'",
                    header[c]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::data(format!(
                    "non-numeric cell '{cell}' at row {r}, column '{}'",
                    header[c]
                ))
            })?;
            if c == resp_idx {
                y.push(v);
            } else {
                flat.push(v);
            }
        }
    }
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != resp_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok((Mat::from_rows(n, p, &flat), y, names))
}

/// Loads the two-column variable -> group map (header row required). Groups
/// are ordered by first appearance of their label; every design column must
/// be mapped exactly once.
pub fn ingest_group_map(
    path: &Path,
    variable_names: &[String],
) -> Result<(GroupPartition, Vec<String>), CliError> {
    let rows = read_lines(path)?;
    if rows[0].len() != 2 {
        return Err(CliError::data(format!(
            "group map {} must have exactly two columns (variable, group)",
            path.display()
        )));
    }
    let mut assigned: Vec<Option<String>> = vec![None; variable_names.len()];
    for (r, row) in rows.iter().enumerate().skip(1) {
        if row.len() != 2 {
            return Err(CliError::data(format!("group map row {r} is malformed")));
        }
        let var = &row[0];
        let label = &row[1];
        let idx = variable_names.iter().position(|v| v == var).ok_or_else(|| {
            CliError::data(format!("group map names unknown variable '{var}' (row {r})"))
        })?;
        if assigned[idx].is_some() {
            return Err(CliError::data(format!(
                "variable '{var}' is mapped more than once"
            )));
        }
        assigned[idx] = Some(label.clone());
    }
    if let Some(miss) = assigned.iter().position(|a| a.is_none()) {
        return Err(CliError::data(format!(
            "variable '{}' is not mapped to any group",
            variable_names[miss]
        )));
    }

    let mut labels: Vec<String> = Vec::new();
    for a in assigned.iter().flatten() {
        if !labels.contains(a) {
            labels.push(a.clone());
        }
    }
    let groups: Vec<Vec<usize>> = labels
        .iter()
        .map(|l| {
            (0..variable_names.len())
                .filter(|&j| assigned[j].as_deref() == Some(l.as_str()))
                .collect()
        })
        .collect();
    let part = GroupPartition::new(groups)
        .map_err(|e| CliError::data(format!("invalid group structure: {e}")))?;
    Ok((part, labels))
}

/// Loads custom per-group weights: one strictly positive number per line.
pub fn load_weights(path: &Path, k: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| CliError::data(format!("weights file line {}: '{t}' is not a number", i + 1)))?;
        if !(v > 0.0) {
            return Err(CliError::data(format!(
                "weights must be strictly positive, got {v}"
            )));
        }
        out.push(v);
    }
    if out.len() != k {
        return Err(CliError::data(format!(
            "weights file has {} entries, need one per group ({k})",
            out.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let path = dir.join(format!(
            "les-csv-test-{}-{}.csv",
            std::process::id(),
            rand_token()
        ));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn rand_token() -> u64 {
        use std::time::{SystemTime, UNIX_EPOCH};
        SystemTime::now().duration_since(UNIX_EPOCH).unwrap().subsec_nanos() as u64
    }

    #[test]
    fn ingest_small_table() {
        let p = temp_file("a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
        let (x, y, names) = ingest_csv(&p, "y").unwrap();
        fs::remove_file(&p).ok();
        assert_eq!(x.nrows(), 3);
        assert_eq!(x.ncols(), 2);
        assert_eq!(names, vec!["a", "b"]);
        assert_eq!(y, vec![3.0, 6.0, 9.0]);
        assert_eq!(x.get(1, 1), 5.0);
    }

    #[test]
    fn missing_cell_is_located() {
        let p = temp_file("a,y\n1,2\n,4\n");
        let err = ingest_csv(&p, "y").unwrap_err();
        fs::remove_file(&p).ok();
        assert!(err.message.contains("row 2"), "{}", err.message);
        assert!(err.message.contains("'a'"), "{}", err.message);
    }

    #[test]
    fn non_numeric_cell_is_located() {
        let p = temp_file("a,y\n1,2\nfoo,4\n");
        let err = ingest_csv(&p, "y").unwrap_err();
        fs::remove_file(&p).ok();
        assert!(err.message.contains("foo"));
        assert!(err.message.contains("row 2"));
    }

    #[test]
    fn duplicate_header_rejected() {
        let p = temp_file("a,a,y\n1,2,3\n4,5,6\n");
        let err = ingest_csv(&p, "y").unwrap_err();
        fs::remove_file(&p).ok();
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn group_map_first_appearance_order() {
        let names: Vec<String> = ["v1", "v2", "v3", "v4", "v5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = temp_file("variable,group\nv1,g2\nv2,g1\nv3,g2\nv4,g1\nv5,g1\n");
        let (part, labels) = ingest_group_map(&p, &names).unwrap();
        fs::remove_file(&p).ok();
        assert_eq!(labels, vec!["g2", "g1"]);
        assert_eq!(part.group(0), &[0, 2]);
        assert_eq!(part.group(1), &[1, 3, 4]);
    }

    #[test]
    fn group_map_rejects_double_and_unknown_and_missing() {
        let names: Vec<String> = ["v1", "v2"].iter().map(|s| s.to_string()).collect();
        let p = temp_file("variable,group\nv1,g\nv1,g\n");
        assert!(ingest_group_map(&p, &names).unwrap_err().message.contains("more than once"));
        fs::remove_file(&p).ok();

        let p = temp_file("variable,group\nv1,g\nvx,g\n");
        assert!(ingest_group_map(&p, &names).unwrap_err().message.contains("unknown variable"));
        fs::remove_file(&p).ok();

        let p = temp_file("variable,group\nv1,g\n");
        assert!(ingest_group_map(&p, &names).unwrap_err().message.contains("not mapped"));
        fs::remove_file(&p).ok();
    }
}
