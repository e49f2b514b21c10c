//! Writers for `series.csv` and `summary.json`.

use std::fmt::Write as _;
use std::path::Path;

use ergavg_core::averaging::SeriesRow;

use crate::error::CliError;
use crate::runner::RunOutput;

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// `stream_id,checkpoint_N,value`, one line per stream and checkpoint, values
/// in shortest round-trip form.
pub fn series_csv(checkpoints: &[u64], rows: &[SeriesRow]) -> String {
    let mut out = String::from("stream_id,checkpoint_N,value\n");
    for row in rows {
        for (n, v) in checkpoints.iter().zip(&row.values) {
            writeln!(out, "{},{},{}", row.stream_id, n, v).expect("writing to a String");
        }
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write(&dir.join(SERIES_FILE), &series_csv(&output.checkpoints, &output.rows))?;
    let mut summary = serde_json::to_string_pretty(&output.summary).expect("summary is valid JSON");
    summary.push('\n');
    write(&dir.join(SUMMARY_FILE), &summary)
}
