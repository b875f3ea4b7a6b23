use std::io::Write;

use crate::error::Result;

pub const HEADER: [&str; 7] = ["experiment", "kernel", "D", "seed", "metric", "value", "wall_time_ms"];

/// One CSV line: a metric for one (config point, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub kernel: String,
    pub features: Option<usize>,
    pub seed: Option<u64>,
    pub metric: String,
    pub value: f64,
    pub wall_time_ms: f64,
}

impl ResultRow {
    pub fn new(experiment: &str, kernel: &str, metric: impl Into<String>, value: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            kernel: kernel.to_string(),
            features: None,
            seed: None,
            metric: metric.into(),
            value,
            wall_time_ms: 0.0,
        }
    }

    pub fn at(mut self, features: Option<usize>, seed: Option<u64>) -> Self {
        self.features = features;
        self.seed = seed;
        self
    }

    pub fn timed(mut self, ms: f64) -> Self {
        self.wall_time_ms = ms;
        self
    }
}

/// Rows plus free-text notes for the terminal.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub rows: Vec<ResultRow>,
    pub notes: Vec<String>,
}

impl CommandOutput {
    pub fn find<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a ResultRow> {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// Stable ordering: by feature dimension, then seed (summary rows last),
    /// keeping emission order within a point.
    pub fn sort(&mut self) {
        self.rows.sort_by_key(|r| (r.features.is_some(), r.features, r.seed.is_none(), r.seed));
    }
}

/// Writes the header and rows. Values use shortest round-trip formatting
/// (`Debug`, which switches to exponent form for very small or large values).
pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        let d = r.features.map(|v| v.to_string()).unwrap_or_default();
        let s = r.seed.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            r.experiment.as_str(),
            r.kernel.as_str(),
            &d,
            &s,
            r.metric.as_str(),
            &format!("{:?}", r.value),
            &format!("{:.3}", r.wall_time_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Strips the wall-time column from CSV text, for determinism checks.
pub fn csv_body_without_timing(text: &str) -> String {
    text.lines()
        .map(|l| match l.rfind(',') {
            Some(i) => &l[..i],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
