//! CSV metrics: one header line, then one line per round, flushed as the
//! run progresses.

use std::fs::File;
use std::path::{Path, PathBuf};

use fedpsd::engine::{MetricsSeries, RoundRecord};

use crate::error::{Result, RunnerError};

pub const HEADER: [&str; 5] = [
    "round",
    "avg_client_top1",
    "server_top1",
    "mean_local_loss",
    "sampled",
];

fn row(record: &RoundRecord) -> [String; 5] {
    let sampled: Vec<String> = record.sampled.iter().map(|id| id.to_string()).collect();
    [
        record.round.to_string(),
        format!("{:.6}", record.avg_client_top1),
        format!("{:.6}", record.server_top1),
        format!("{:.6}", record.mean_local_loss),
        sampled.join(";"),
    ]
}

/// Streams round records to a CSV file.
pub struct MetricsWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|source| RunnerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut writer = MetricsWriter {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(file),
        };
        writer.write_fields(HEADER.map(String::from))?;
        Ok(writer)
    }

    fn write_fields(&mut self, fields: [String; 5]) -> Result<()> {
        let csv_err = |source| RunnerError::Csv {
            path: self.path.clone(),
            source,
        };
        self.writer.write_record(&fields).map_err(csv_err)?;
        self.writer.flush().map_err(|source| RunnerError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn append(&mut self, record: &RoundRecord) -> Result<()> {
        self.write_fields(row(record))
    }
}

/// Writes a complete series in one go.
pub fn emit_metrics(series: &MetricsSeries, path: &Path) -> Result<()> {
    let mut writer = MetricsWriter::create(path)?;
    for record in &series.rounds {
        writer.append(record)?;
    }
    Ok(())
}

/// Reads the round records of a metrics CSV back.
pub fn read_metrics(path: &Path) -> Result<MetricsSeries> {
    let csv_err = |source| RunnerError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(HEADER) {
        return Err(RunnerError::Metrics {
            path: path.to_path_buf(),
            row: 0,
            message: format!("unexpected header {headers:?}"),
        });
    }
    let mut series = MetricsSeries::default();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let bad = |message: String| RunnerError::Metrics {
            path: path.to_path_buf(),
            row: i + 1,
            message,
        };
        let num = |col: usize| -> Result<f64> {
            record[col]
                .parse()
                .map_err(|_| bad(format!("bad {} `{}`", HEADER[col], &record[col])))
        };
        let sampled = if record[4].is_empty() {
            Vec::new()
        } else {
            record[4]
                .split(';')
                .map(|id| id.parse().map_err(|_| bad(format!("bad client id `{id}`"))))
                .collect::<Result<Vec<usize>>>()?
        };
        series.rounds.push(RoundRecord {
            round: record[0]
                .parse()
                .map_err(|_| bad(format!("bad round `{}`", &record[0])))?,
            avg_client_top1: num(1)?,
            server_top1: num(2)?,
            mean_local_loss: num(3)?,
            sampled,
        });
    }
    Ok(series)
}

/// Which accuracy column a summary looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    Client,
    Server,
}

/// First 1-based round whose metric reaches `target`, or `None` if it never
/// does.
pub fn rounds_to_target(series: &MetricsSeries, target: f64, metric: Metric) -> Option<usize> {
    series
        .rounds
        .iter()
        .find(|r| {
            let value = match metric {
                Metric::Client => r.avg_client_top1,
                Metric::Server => r.server_top1,
            };
            value >= target
        })
        .map(|r| r.round)
}
