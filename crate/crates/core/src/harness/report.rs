use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{CellFailure, RunRecord};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<RunRecord>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Success,
    Partial,
    Failed,
}

impl SweepStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            SweepStatus::Success => 0,
            SweepStatus::Failed => 1,
            SweepStatus::Partial => 2,
        }
    }
}

impl EvalReport {
    pub fn status(&self) -> SweepStatus {
        match (self.records.is_empty(), self.failures.is_empty()) {
            (_, true) => SweepStatus::Success,
            (true, false) => SweepStatus::Failed,
            (false, false) => SweepStatus::Partial,
        }
    }

    pub fn from_json(text: &str) -> Result<EvalReport, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `table_<row>_<col>.csv` for every pair of axes: mean±std accuracy.
    CsvPivot,
    /// `curve_<axis>.csv` for every axis: one row per record.
    CsvLong,
    /// `report.json` with every record at full precision.
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    NodeFeature,
    EdgeConfig,
    NLayers,
    TrainFraction,
}

impl Axis {
    pub const ALL: [Axis; 4] = [
        Axis::NodeFeature,
        Axis::EdgeConfig,
        Axis::NLayers,
        Axis::TrainFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::NodeFeature => "node_feature",
            Axis::EdgeConfig => "edge_config",
            Axis::NLayers => "n_layers",
            Axis::TrainFraction => "train_fraction",
        }
    }

    pub fn value(self, r: &RunRecord) -> String {
        match self {
            Axis::NodeFeature => r.node_feature.clone(),
            Axis::EdgeConfig => r.edge_config.to_string(),
            Axis::NLayers => r.n_layers.to_string(),
            Axis::TrainFraction => r
                .train_fraction
                .map_or_else(|| "full".to_string(), |f| f.to_string()),
        }
    }

    /// Distinct values in order of first appearance.
    fn levels(self, records: &[RunRecord]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in records {
            let v = self.value(r);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `report` into `dir` and returns the files written.
///
/// Pivot tables put one axis on rows and another on columns; the remaining
/// two axes appear as leading key columns so no cells get averaged across
/// them. Each cell holds accuracy as `mean±std` over repeats (sample
/// standard deviation) at 4 decimals.
pub fn emit_report(
    report: &EvalReport,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let has_content =
        !report.records.is_empty() || (format == ReportFormat::Json && !report.failures.is_empty());
    if !has_content {
        return Err(HarnessError::EmptyReport);
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    match format {
        ReportFormat::Json => {
            let path = dir.join("report.json");
            let text = serde_json::to_string_pretty(report)?;
            fs::write(&path, text).map_err(io_err(&path))?;
            Ok(vec![path])
        }
        ReportFormat::CsvLong => Axis::ALL
            .iter()
            .map(|&axis| write_long(&report.records, axis, dir))
            .collect(),
        ReportFormat::CsvPivot => {
            let mut out = Vec::new();
            for (i, &row) in Axis::ALL.iter().enumerate() {
                for &col in &Axis::ALL[i + 1..] {
                    out.push(write_pivot(&report.records, row, col, dir)?);
                }
            }
            Ok(out)
        }
    }
}

fn write_long(records: &[RunRecord], axis: Axis, dir: &Path) -> Result<PathBuf, HarnessError> {
    let path = dir.join(format!("curve_{}.csv", axis.name()));
    let others: Vec<Axis> = Axis::ALL.into_iter().filter(|&a| a != axis).collect();
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec![axis.name(), "dataset"];
    header.extend(others.iter().map(|a| a.name()));
    header.extend([
        "repeat",
        "seed",
        "accuracy",
        "macro_f1",
        "weighted_f1",
        "stopping_epoch",
        "best_epoch",
        "wall_time_secs",
    ]);
    w.write_record(&header)?;

    let levels = axis.levels(records);
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| levels.iter().position(|l| *l == axis.value(r)));
    for r in sorted {
        let mut row = vec![axis.value(r), r.dataset.clone()];
        row.extend(others.iter().map(|a| a.value(r)));
        row.extend([
            r.repeat.to_string(),
            r.seed.to_string(),
            r.result.accuracy.to_string(),
            r.result.macro_f1.to_string(),
            r.result.weighted_f1.to_string(),
            r.stopping_epoch.to_string(),
            r.best_epoch.to_string(),
            r.wall_time_secs.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

fn write_pivot(
    records: &[RunRecord],
    row: Axis,
    col: Axis,
    dir: &Path,
) -> Result<PathBuf, HarnessError> {
    let path = dir.join(format!("table_{}_{}.csv", row.name(), col.name()));
    let keys: Vec<Axis> = Axis::ALL
        .into_iter()
        .filter(|&a| a != row && a != col)
        .collect();
    let key_of =
        |r: &RunRecord| -> Vec<String> { keys.iter().chain([&row]).map(|a| a.value(r)).collect() };
    let mut row_keys: Vec<Vec<String>> = Vec::new();
    for r in records {
        let k = key_of(r);
        if !row_keys.contains(&k) {
            row_keys.push(k);
        }
    }
    let cols = col.levels(records);

    let mut w = csv::Writer::from_path(&path)?;
    let mut header: Vec<String> = keys.iter().map(|a| a.name().to_string()).collect();
    header.push(format!("{}\\{}", row.name(), col.name()));
    header.extend(cols.iter().cloned());
    w.write_record(&header)?;
    for k in &row_keys {
        let mut line = k.clone();
        for c in &cols {
            let acc: Vec<f64> = records
                .iter()
                .filter(|r| key_of(r) == *k && col.value(r) == *c)
                .map(|r| r.result.accuracy)
                .collect();
            line.push(if acc.is_empty() {
                String::new()
            } else {
                let (m, s) = mean_std(&acc);
                format!("{m:.4}±{s:.4}")
            });
        }
        w.write_record(&line)?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentConfig;
    use crate::metrics::EvalResult;
    use crate::textgraph::EdgeConfig;

    fn record(edge: EdgeConfig, layers: usize, repeat: usize, accuracy: f64) -> RunRecord {
        RunRecord {
            cell: format!("onehot_{edge}_L{layers}_full"),
            repeat,
            seed: repeat as u64,
            dataset: "toy".into(),
            node_feature: "onehot".into(),
            edge_config: edge,
            n_layers: layers,
            train_fraction: None,
            result: EvalResult {
                accuracy,
                macro_f1: accuracy / 3.0,
                weighted_f1: 0.1 + accuracy / 7.0,
                confusion: vec![vec![1, 2], vec![3, 4]],
            },
            stopping_epoch: 12,
            best_epoch: 2,
            n_train: 9,
            n_val: 1,
            n_test: 4,
            wall_time_secs: 0.25,
            config: ExperimentConfig::default(),
        }
    }

    fn grid() -> EvalReport {
        EvalReport {
            records: vec![
                record(EdgeConfig::D2w, 1, 0, 0.5),
                record(EdgeConfig::D2w, 2, 0, 0.6),
                record(EdgeConfig::D2wW2w, 1, 0, 0.7),
                record(EdgeConfig::D2wW2w, 2, 0, 0.8),
            ],
            failures: Vec::new(),
        }
    }

    fn read_rows(path: &Path) -> Vec<Vec<String>> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path)
            .unwrap();
        r.records()
            .map(|x| x.unwrap().iter().map(String::from).collect())
            .collect()
    }

    #[test]
    fn two_by_two_pivot() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&grid(), ReportFormat::CsvPivot, dir.path()).unwrap();
        assert_eq!(files.len(), 6);
        let rows = read_rows(&dir.path().join("table_edge_config_n_layers.csv"));
        assert_eq!(rows.len(), 3);
        assert_eq!(
            rows[0],
            [
                "node_feature",
                "train_fraction",
                "edge_config\\n_layers",
                "1",
                "2"
            ]
        );
        assert_eq!(
            rows[1],
            ["onehot", "full", "d2w", "0.5000±0.0000", "0.6000±0.0000"]
        );
        assert_eq!(
            rows[2],
            [
                "onehot",
                "full",
                "d2w_w2w",
                "0.7000±0.0000",
                "0.8000±0.0000"
            ]
        );
        let data_cells: usize = rows[1..].iter().map(|r| r.len() - 3).sum();
        assert_eq!(data_cells, 4);
    }

    #[test]
    fn pivot_aggregates_repeats() {
        let report = EvalReport {
            records: vec![
                record(EdgeConfig::D2w, 2, 0, 0.5),
                record(EdgeConfig::D2w, 2, 1, 0.7),
            ],
            failures: Vec::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, ReportFormat::CsvPivot, dir.path()).unwrap();
        let rows = read_rows(&dir.path().join("table_edge_config_n_layers.csv"));
        let std = (0.02f64).sqrt();
        assert_eq!(rows[1][3], format!("0.6000±{std:.4}"));
    }

    #[test]
    fn long_csv_has_one_row_per_record() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&grid(), ReportFormat::CsvLong, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in files {
            let rows = read_rows(&f);
            assert_eq!(rows.len(), 1 + 4);
        }
        let rows = read_rows(&dir.path().join("curve_n_layers.csv"));
        let layers: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
        assert_eq!(layers, ["1", "1", "2", "2"]);
        assert_eq!(rows[0][7], "accuracy");
        assert_eq!(rows[1][7], "0.5");
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = grid();
        report.records[0].result.accuracy = 0.1 + 0.2;
        emit_report(&report, ReportFormat::Json, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert_eq!(EvalReport::from_json(&text).unwrap(), report);
    }

    #[test]
    fn empty_report_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for f in [
            ReportFormat::Json,
            ReportFormat::CsvLong,
            ReportFormat::CsvPivot,
        ] {
            assert!(matches!(
                emit_report(&EvalReport::default(), f, dir.path()),
                Err(HarnessError::EmptyReport)
            ));
        }
    }

    #[test]
    fn status_codes() {
        let mut r = grid();
        assert_eq!(r.status().exit_code(), 0);
        r.failures.push(CellFailure {
            cell: "x".into(),
            repeat: 0,
            error: crate::harness::StageError::new("train", "boom"),
            config: ExperimentConfig::default(),
        });
        assert_eq!(r.status().exit_code(), 2);
        r.records.clear();
        assert_eq!(r.status().exit_code(), 1);
    }
}
