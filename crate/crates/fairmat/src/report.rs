//! Run records and the versioned CSV they serialize to.

use std::io::Write;

use crate::HarnessError;

pub const CSV_SCHEMA: &str = "fairmat-run-v1";

/// One row per (algorithm, k, seed) cell.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    pub algorithm: String,
    pub k: usize,
    pub seed: u64,
    pub value: Option<f64>,
    pub opt: Option<f64>,
    pub err: Option<usize>,
    pub per_color: Vec<usize>,
    pub peak_memory: Option<usize>,
    pub objective_calls: Option<u64>,
    pub independence_calls: Option<u64>,
    pub wall_ms: Option<u128>,
    pub error: Option<String>,
}

fn opt_str<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: &mut W) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io(format!("cannot write csv: {e}"));
    writeln!(out, "# schema: {CSV_SCHEMA}").map_err(io)?;
    writeln!(
        out,
        "algorithm,k,seed,value,opt,err,per_color,peak_memory,objective_calls,independence_calls,wall_ms,error"
    )
    .map_err(io)?;
    for r in records {
        let per_color = r
            .per_color
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.k,
            r.seed,
            opt_str(&r.value),
            opt_str(&r.opt),
            opt_str(&r.err),
            per_color,
            opt_str(&r.peak_memory),
            opt_str(&r.objective_calls),
            opt_str(&r.independence_calls),
            opt_str(&r.wall_ms),
            r.error.as_deref().unwrap_or(""),
        )
        .map_err(io)?;
    }
    Ok(())
}

/// Parses rows back from the CSV (used by tests and the acceptance suite).
pub fn read_csv(text: &str) -> Result<Vec<RunRecord>, HarnessError> {
    let mut records = Vec::new();
    for line in text.lines().skip(2) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(HarnessError::Parse {
                line: 0,
                message: format!("csv row has {} columns, expected 12", cols.len()),
            });
        }
        let parse_opt = |s: &str| -> Option<f64> { s.parse().ok() };
        records.push(RunRecord {
            algorithm: cols[0].to_string(),
            k: cols[1].parse().unwrap_or(0),
            seed: cols[2].parse().unwrap_or(0),
            value: parse_opt(cols[3]),
            opt: parse_opt(cols[4]),
            err: cols[5].parse().ok(),
            per_color: cols[6]
                .split(';')
                .filter(|p| !p.is_empty())
                .filter_map(|p| p.parse().ok())
                .collect(),
            peak_memory: cols[7].parse().ok(),
            objective_calls: cols[8].parse().ok(),
            independence_calls: cols[9].parse().ok(),
            wall_ms: cols[10].parse().ok(),
            error: if cols[11].is_empty() {
                None
            } else {
                Some(cols[11].to_string())
            },
        });
    }
    Ok(records)
}
