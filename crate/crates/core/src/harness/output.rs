//! Summary tables and CSV files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{CurvePoint, RunResult};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub env: String,
    pub agent: String,
    pub params: String,
    pub runs: usize,
    pub cycles: usize,
    pub mean_observed: f64,
    pub std_observed: f64,
    pub mean_true: f64,
    pub std_true: f64,
    pub seed: u64,
}

impl SummaryRow {
    pub fn from_result(r: &RunResult) -> Self {
        let env = &r.config.environment;
        let env_label =
            if env.params.is_empty() { env.name.clone() } else { format!("{}{}", env.name, env.params_json()) };
        Self {
            env: env_label,
            agent: r.config.agent.name.clone(),
            params: r.config.agent.params_json(),
            runs: r.runs.len(),
            cycles: r.config.cycles,
            mean_observed: r.mean_observed,
            std_observed: r.std_observed,
            mean_true: r.mean_true,
            std_true: r.std_true,
            seed: r.config.seed,
        }
    }

    fn key(&self) -> (&str, &str, &str) {
        (&self.env, &self.agent, &self.params)
    }

    /// Combines two groups of runs: run-weighted means and the population
    /// std of the union.
    fn pool(&self, other: &Self) -> Self {
        let (n1, n2) = (self.runs as f64, other.runs as f64);
        let n = n1 + n2;
        let merge = |m1: f64, s1: f64, m2: f64, s2: f64| {
            let m = (n1 * m1 + n2 * m2) / n;
            let var = (n1 * (s1 * s1 + (m1 - m) * (m1 - m)) + n2 * (s2 * s2 + (m2 - m) * (m2 - m))) / n;
            (m, var.max(0.0).sqrt())
        };
        let (mean_observed, std_observed) =
            merge(self.mean_observed, self.std_observed, other.mean_observed, other.std_observed);
        let (mean_true, std_true) = merge(self.mean_true, self.std_true, other.mean_true, other.std_true);
        Self { runs: self.runs + other.runs, mean_observed, std_observed, mean_true, std_true, ..self.clone() }
    }
}

/// One row per `(environment, agent, agent parameters)`, in order of first
/// appearance; repeated keys are pooled.
pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for row in results.iter().map(SummaryRow::from_result) {
        match rows.iter_mut().find(|r| r.key() == row.key()) {
            Some(existing) => *existing = existing.pool(&row),
            None => rows.push(row),
        }
    }
    rows
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.into(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.into(), source }
}

fn write_rows<T: Serialize>(rows: &[T], header: &[&str], out: impl std::io::Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: &[&str] =
    &["env", "agent", "params", "runs", "cycles", "mean_observed", "std_observed", "mean_true", "std_true", "seed"];
pub const CURVE_HEADER: &[&str] = &["time", "mean_observed", "std_observed", "mean_true", "std_true"];

/// Summary CSV as a string (header plus one line per row).
pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_rows(rows, SUMMARY_HEADER, &mut buf).map_err(|source| HarnessError::Csv { path: "<memory>".into(), source })?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn emit_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_rows(rows, SUMMARY_HEADER, file).map_err(csv_err(path))
}

pub fn emit_curves(result: &RunResult, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_rows(&result.curve, CURVE_HEADER, file).map_err(csv_err(path))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

pub fn parse_summary(path: impl AsRef<Path>) -> Result<Vec<SummaryRow>, HarnessError> {
    read_rows(path.as_ref())
}

pub fn parse_curves(path: impl AsRef<Path>) -> Result<Vec<CurvePoint>, HarnessError> {
    read_rows(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(agent: &str, runs: usize, m: f64, s: f64) -> SummaryRow {
        SummaryRow {
            env: "loop4".into(),
            agent: agent.into(),
            params: "{}".into(),
            runs,
            cycles: 10,
            mean_observed: m,
            std_observed: s,
            mean_true: m,
            std_true: s,
            seed: 0,
        }
    }

    #[test]
    fn pooling_matches_direct_computation() {
        // Runs {1, 3} and {5}: pooled mean 3, population std sqrt(8/3).
        let pooled = row("a", 2, 2.0, 1.0).pool(&row("a", 1, 5.0, 0.0));
        assert_eq!(pooled.runs, 3);
        assert!((pooled.mean_true - 3.0).abs() < 1e-12);
        assert!((pooled.std_true - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let rows = vec![row("a", 1, 0.1 + 0.2, 1.0 / 3.0), row("b", 7, 1e-17, 0.9230000000000001)];
        emit_csv(&rows, &path).unwrap();
        assert_eq!(parse_summary(&path).unwrap(), rows);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    }

    #[test]
    fn empty_curve_is_header_only() {
        let rows: Vec<CurvePoint> = Vec::new();
        let mut buf = Vec::new();
        write_rows(&rows, CURVE_HEADER, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,mean_observed,std_observed,mean_true,std_true\n");
    }
}
