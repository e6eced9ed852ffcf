//! One training run and its directory of artifacts.
//!
//! A finished run directory holds
//!
//! - `record.json`: the config, the dataset metadata and the training record,
//! - `loss.csv`: `epoch,mmd2[,mmd2_exact],wallclock_ms`, epochs counted from 1,
//! - `histogram.csv`: `bin,count` over every representative index for the
//!   final epoch's recording sample,
//! - `dataset.csv` and `dataset.json`: the training samples and their generator.
//!
//! `record.json` is written last, through a rename, so its presence marks a
//! complete run.

use std::fs;
use std::io::Write;
use std::path::Path;

use qcbm::data::Dataset;
use qcbm::trainer::{train, TrainingRecord};
use serde::{Deserialize, Serialize};

use crate::config::TrainFile;
use crate::error::{csv_err, io_err, json_err, Result};

pub const RECORD_FILE: &str = "record.json";
pub const LOSS_FILE: &str = "loss.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const DATASET_STEM: &str = "dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainFile,
    pub dataset: Dataset,
    pub record: TrainingRecord,
}

pub fn is_complete(dir: &Path) -> bool {
    dir.join(RECORD_FILE).is_file()
}

pub fn execute(config: &TrainFile, dir: &Path) -> Result<RunRecord> {
    let training = config.to_training()?;
    let record = train(&training)?;
    let run = RunRecord { config: config.clone(), dataset: training.dataset, record };
    write_run(&run, dir)?;
    Ok(run)
}

pub fn write_run(run: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    run.dataset.save(dir, DATASET_STEM).map_err(io_err(dir))?;
    write_losses(&run.record, &dir.join(LOSS_FILE))?;
    write_histogram(run, &dir.join(HISTOGRAM_FILE))?;

    let path = dir.join(RECORD_FILE);
    let tmp = dir.join(format!("{RECORD_FILE}.tmp"));
    let mut text = serde_json::to_string_pretty(run).map_err(json_err(&path))?;
    text.push('\n');
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))
}

pub fn load_run(dir: &Path) -> Result<RunRecord> {
    let path = dir.join(RECORD_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut run: RunRecord = serde_json::from_str(&text).map_err(json_err(&path))?;
    if let Ok(ds) = Dataset::load(dir, DATASET_STEM) {
        run.dataset.samples = ds.samples;
    }
    Ok(run)
}

fn write_losses(record: &TrainingRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let exact = record.exact_losses.as_ref();
    let mut header = vec!["epoch", "mmd2"];
    if exact.is_some() {
        header.push("mmd2_exact");
    }
    header.push("wallclock_ms");
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, loss) in record.losses.iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), format!("{loss:?}")];
        if let Some(e) = exact {
            row.push(format!("{:?}", e[i]));
        }
        row.push(format!("{:.3}", record.wallclock_ms[i]));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_histogram(run: &RunRecord, path: &Path) -> Result<()> {
    let mut counts = vec![0u64; 1 << run.config.qubits];
    for &j in &run.record.synthetic {
        counts[j as usize] += 1;
    }
    let mut out = fs::File::create(path).map_err(io_err(path))?;
    let mut text = String::from("bin,count\n");
    for (j, c) in counts.iter().enumerate() {
        text.push_str(&format!("{j},{c}\n"));
    }
    out.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Per-epoch losses as stored in `loss.csv`.
pub fn read_losses(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let col = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .position(|h| h == "mmd2")
        .ok_or_else(|| crate::error::invalid(&path.display().to_string(), "missing mmd2 column"))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let v: f64 = row[col]
            .parse()
            .map_err(|e| crate::error::invalid(&path.display().to_string(), format!("bad loss {:?}: {e}", &row[col])))?;
        out.push(v);
    }
    Ok(out)
}
