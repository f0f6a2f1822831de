//! CSV, JSON and plot-series output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gdsw_core::sparse::Backend;

use crate::config::{OutputConfig, ReportFormat};
use crate::study::RunRecord;
use crate::HarnessError;

/// Stable sort by `(n_subdomains, backend)`.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by_key(|r| (r.n_subdomains, r.backend));
}

/// Writes the report files and returns their paths.
pub fn emit_report(records: &[RunRecord], out: &OutputConfig) -> Result<Vec<PathBuf>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let mut rows = records.to_vec();
    sort_records(&mut rows);
    fs::create_dir_all(&out.dir)?;
    let mut written = Vec::new();
    if matches!(out.format, ReportFormat::Csv | ReportFormat::Both) {
        let path = out.dir.join(format!("{}.csv", out.stem));
        write_csv(&rows, &path)?;
        written.push(path);
    }
    if matches!(out.format, ReportFormat::Json | ReportFormat::Both) {
        let path = out.dir.join(format!("{}.json", out.stem));
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &rows)?;
        writeln!(w)?;
        w.flush()?;
        written.push(path);
    }
    if out.plot_data {
        let mut backends: Vec<Backend> = rows.iter().map(|r| r.backend).collect();
        backends.sort();
        backends.dedup();
        for b in backends {
            let series: Vec<&RunRecord> = rows.iter().filter(|r| r.backend == b).collect();
            let time = out.dir.join(format!("{}_{}_solver_time.dat", out.stem, b));
            write_series(&time, &series, |r| r.solver_time)?;
            let its = out.dir.join(format!("{}_{}_iterations.dat", out.stem, b));
            write_series(&its, &series, |r| r.krylov_iterations)?;
            written.push(time);
            written.push(its);
        }
    }
    Ok(written)
}

fn write_csv(rows: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_series(path: &Path, rows: &[&RunRecord], y: impl Fn(&RunRecord) -> f64) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# n_subdomains value")?;
    for r in rows.iter().filter(|r| !r.failed()) {
        writeln!(w, "{} {}", r.n_subdomains, y(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, HarnessError> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}
