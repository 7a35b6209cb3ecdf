//! CSV emission and parsing for result rows and aggregates.
//!
//! Formatting goes through Rust's shortest-roundtrip float printing, so a
//! fixed row set always serializes to identical bytes.

use std::fs;
use std::path::Path;

use super::{AggregateRow, ExperimentError, ExperimentKind, Method, ResultRow};

pub const ROW_HEADER: &str = "experiment,method,n,run,seed,excess_risk,wallclock_ms";
pub const AGGREGATE_HEADER: &str = "experiment,method,n,mean,std";

pub fn rows_csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(ROW_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.experiment, row.method, row.n, row.run, row.seed, row.excess_risk, row.wallclock_ms
        ));
    }
    out
}

pub fn aggregates_csv_string(aggregates: &[AggregateRow]) -> String {
    let mut out = String::with_capacity(48 * (aggregates.len() + 1));
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    for agg in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            agg.experiment, agg.method, agg.n, agg.mean, agg.std
        ));
    }
    out
}

pub fn write_rows_csv(rows: &[ResultRow], path: &Path) -> Result<(), ExperimentError> {
    Ok(fs::write(path, rows_csv_string(rows))?)
}

pub fn write_aggregates_csv(
    aggregates: &[AggregateRow],
    path: &Path,
) -> Result<(), ExperimentError> {
    Ok(fs::write(path, aggregates_csv_string(aggregates))?)
}

fn parse_kind(s: &str) -> Result<ExperimentKind, ExperimentError> {
    match s {
        "pca" => Ok(ExperimentKind::Pca),
        "frechet" => Ok(ExperimentKind::Frechet),
        other => Err(ExperimentError::Parse(format!(
            "unknown experiment '{other}'"
        ))),
    }
}

fn field<'a>(parts: &'a [&str], idx: usize, line: usize) -> Result<&'a str, ExperimentError> {
    parts
        .get(idx)
        .copied()
        .ok_or_else(|| ExperimentError::Parse(format!("line {line}: missing column {}", idx + 1)))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, ExperimentError> {
    s.parse::<T>()
        .map_err(|_| ExperimentError::Parse(format!("line {line}: bad number '{s}'")))
}

pub fn parse_rows_csv(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == ROW_HEADER => {}
        _ => {
            return Err(ExperimentError::Parse(format!(
                "expected header '{ROW_HEADER}'"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        rows.push(ResultRow {
            experiment: parse_kind(field(&parts, 0, idx + 1)?)?,
            method: Method::parse(field(&parts, 1, idx + 1)?)?,
            n: parse_num(field(&parts, 2, idx + 1)?, idx + 1)?,
            run: parse_num(field(&parts, 3, idx + 1)?, idx + 1)?,
            seed: parse_num(field(&parts, 4, idx + 1)?, idx + 1)?,
            excess_risk: parse_num(field(&parts, 5, idx + 1)?, idx + 1)?,
            wallclock_ms: parse_num(field(&parts, 6, idx + 1)?, idx + 1)?,
        });
    }
    Ok(rows)
}

pub fn parse_aggregates_csv(text: &str) -> Result<Vec<AggregateRow>, ExperimentError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == AGGREGATE_HEADER => {}
        _ => {
            return Err(ExperimentError::Parse(format!(
                "expected header '{AGGREGATE_HEADER}'"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        rows.push(AggregateRow {
            experiment: parse_kind(field(&parts, 0, idx + 1)?)?,
            method: Method::parse(field(&parts, 1, idx + 1)?)?,
            n: parse_num(field(&parts, 2, idx + 1)?, idx + 1)?,
            mean: parse_num(field(&parts, 3, idx + 1)?, idx + 1)?,
            std: parse_num(field(&parts, 4, idx + 1)?, idx + 1)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                experiment: ExperimentKind::Pca,
                method: Method::DpRgd,
                n: 100,
                run: 0,
                seed: 42,
                excess_risk: 0.00125,
                wallclock_ms: 13,
            },
            ResultRow {
                experiment: ExperimentKind::Pca,
                method: Method::DpPgd,
                n: 100,
                run: 0,
                seed: 43,
                excess_risk: f64::NAN,
                wallclock_ms: 7,
            },
        ]
    }

    #[test]
    fn rows_roundtrip_through_csv() {
        let rows = sample_rows();
        let text = rows_csv_string(&rows);
        let parsed = parse_rows_csv(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], rows[0]);
        assert!(parsed[1].excess_risk.is_nan());
    }

    #[test]
    fn aggregates_roundtrip_through_csv() {
        let aggs = vec![AggregateRow {
            experiment: ExperimentKind::Frechet,
            method: Method::DpFm,
            n: 20,
            mean: 1.5,
            std: 0.25,
        }];
        let text = aggregates_csv_string(&aggs);
        let parsed = parse_aggregates_csv(&text).unwrap();
        assert_eq!(parsed, aggs);
    }

    #[test]
    fn parser_rejects_malformed_input() {
        assert!(parse_rows_csv("bogus\n").is_err());
        let text = format!("{ROW_HEADER}\npca,dp-rgd,xx,0,1,0.5,3\n");
        assert!(parse_rows_csv(&text).is_err());
    }
}
