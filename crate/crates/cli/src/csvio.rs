//! Reading and writing the metrics CSV shared by `run`, `sweep`, and `plot`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::errors::{CliError, CliResult};

pub const METRICS_HEADER: &str = "strategy,trial,round,labeled_count,test_accuracy";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub strategy: String,
    pub trial: usize,
    pub round: usize,
    pub labeled_count: usize,
    pub test_accuracy: f64,
}

/// Renders rows in their given order. Accuracy is fixed to six decimals so
/// identical runs produce byte-identical files.
pub fn render_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{:.6}",
            row.strategy, row.trial, row.round, row.labeled_count, row.test_accuracy
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> CliResult<()> {
    fs::write(path, render_metrics_csv(rows))
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

/// Strict reader: the header must match exactly and every row must parse.
/// Malformed input is a usage error since these files arrive on the
/// command line.
pub fn read_metrics_csv(path: &Path) -> CliResult<Vec<MetricsRow>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == METRICS_HEADER => {}
        Some((_, header)) => {
            return Err(CliError::usage(format!(
                "{}: expected header '{METRICS_HEADER}', got '{header}'",
                path.display()
            )))
        }
        None => {
            return Err(CliError::usage(format!("{}: file is empty", path.display())))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::usage(format!(
                "{} line {lineno}: expected 5 fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        let bad = |what: &str| {
            CliError::usage(format!("{} line {lineno}: bad {what}", path.display()))
        };
        rows.push(MetricsRow {
            strategy: fields[0].to_string(),
            trial: fields[1].parse().map_err(|_| bad("trial"))?,
            round: fields[2].parse().map_err(|_| bad("round"))?,
            labeled_count: fields[3].parse().map_err(|_| bad("labeled_count"))?,
            test_accuracy: {
                let v: f64 = fields[4].parse().map_err(|_| bad("test_accuracy"))?;
                if !v.is_finite() {
                    return Err(bad("test_accuracy"));
                }
                v
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<MetricsRow> {
        vec![
            MetricsRow {
                strategy: "random".into(),
                trial: 0,
                round: 0,
                labeled_count: 50,
                test_accuracy: 0.5,
            },
            MetricsRow {
                strategy: "random".into(),
                trial: 0,
                round: 1,
                labeled_count: 75,
                test_accuracy: 2.0 / 3.0,
            },
        ]
    }

    #[test]
    fn roundtrip_preserves_rows_to_csv_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&path, &sample_rows()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "strategy,trial,round,labeled_count,test_accuracy\n\
             random,0,0,50,0.500000\n\
             random,0,1,75,0.666667\n"
        );
        let rows = read_metrics_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].labeled_count, 75);
        assert!((rows[1].test_accuracy - 0.666667).abs() < 1e-12);
    }

    #[test]
    fn wrong_header_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(&path, "strategy,trial,round,labeled,acc\n").unwrap();
        let err = read_metrics_csv(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("expected header"));
    }

    #[test]
    fn bad_fields_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(
            &path,
            format!("{METRICS_HEADER}\nrandom,0,0,50,not_a_number\n"),
        )
        .unwrap();
        let err = read_metrics_csv(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn missing_file_is_a_usage_error() {
        let err = read_metrics_csv(Path::new("/no/such/metrics.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
