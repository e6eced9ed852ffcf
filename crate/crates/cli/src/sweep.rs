//! Grids of training runs over codes, qubit counts, depths and datasets.
//!
//! Every `(dataset, seed, n, L, code)` tuple is one run in its own
//! subdirectory; the dataset seed doubles as the master seed of the run, so
//! all codes at a given seed see the same training data. Finished runs are
//! skipped on a rerun. After the pool drains, `results.csv` collects one
//! [`ReportRow`] per finished run and `failures.csv` lists runs that errored.

use std::fs;
use std::path::{Path, PathBuf};

use qcbm::codes::CodeKind;
use qcbm::data::DatasetKind;
use qcbm::mmd::{Estimator, KernelConfig};
use qcbm::sim::CnotOrientation;
use qcbm::trainer::AdamConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parse_toml, read_toml, DatasetSpec, SeedOverrides, TrainFile};
use crate::error::{csv_err, invalid, io_err, CliError, Result};
use crate::run::{self, RunRecord};

pub const RESULTS_FILE: &str = "results.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const SPEC_ECHO_FILE: &str = "sweep.toml";
pub const WORKERS_ENV: &str = "QCBM_WORKERS";

/// Factor on the reference loss that counts as having reached it.
pub const REFERENCE_FACTOR: f64 = 2.0;

pub const PRESETS: [(&str, &str); 3] = [
    ("fig3-mini", include_str!("../specs/fig3-mini.toml")),
    ("fig4-mini", include_str!("../specs/fig4-mini.toml")),
    ("fig5-mini", include_str!("../specs/fig5-mini.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub codes: Vec<CodeKind>,
    pub qubits: Vec<usize>,
    pub layers: Vec<usize>,
    pub datasets: Vec<SweepDataset>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub bandwidths: KernelConfig,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub cnot: CnotOrientation,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Results directory, relative to the working directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDataset {
    pub kind: DatasetKind,
    pub nu: f64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_epochs() -> usize {
    100
}

fn default_shots() -> usize {
    256
}

fn default_samples() -> usize {
    256
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Identity of one run within a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub code: CodeKind,
    pub dataset: DatasetKind,
    pub nu: f64,
    pub qubits: usize,
    pub layers: usize,
    pub seed: u64,
}

impl RunKey {
    pub fn dir_name(&self) -> String {
        format!(
            "{}-n{}-L{}-{}-nu{}-s{}",
            self.code.short_name(),
            self.qubits,
            self.layers,
            self.dataset.short_name(),
            self.nu,
            self.seed
        )
    }
}

/// Summary of one finished run, one line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub code: CodeKind,
    pub dataset: DatasetKind,
    pub n: usize,
    pub layers: usize,
    pub nu: f64,
    pub seed: u64,
    pub q_score: f64,
    pub final_loss: f64,
    pub reference_loss: f64,
    /// First epoch with loss within twice the reference, if any.
    pub epochs_to_reference: Option<usize>,
    pub run_dir: String,
}

impl ReportRow {
    pub fn from_run(run: &RunRecord, run_dir: &str) -> Self {
        let c = &run.config;
        Self {
            code: c.code,
            dataset: c.dataset.kind,
            n: c.qubits,
            layers: c.layers,
            nu: c.dataset.nu,
            seed: c.dataset_seed(),
            q_score: run.record.q_score,
            final_loss: run.record.final_loss(),
            reference_loss: run.record.reference_loss,
            epochs_to_reference: run.record.epochs_to_reference(REFERENCE_FACTOR),
            run_dir: run_dir.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub run_dir: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<ReportRow>,
    pub failures: Vec<Failure>,
    /// Runs trained in this invocation.
    pub executed: usize,
    /// Runs found complete on disk.
    pub skipped: usize,
}

impl SweepSpec {
    pub fn load(file: &Path) -> Result<Self> {
        let spec: Self = read_toml(file)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            CliError::UnknownPreset(name.to_string(), PRESETS.map(|(n, _)| n).join(", "))
        })?;
        let spec: Self = parse_toml(text, Path::new(name))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.codes.is_empty() {
            return Err(invalid("codes", "must not be empty"));
        }
        if self.qubits.is_empty() {
            return Err(invalid("qubits", "must not be empty"));
        }
        if self.layers.is_empty() {
            return Err(invalid("layers", "must not be empty"));
        }
        if self.datasets.is_empty() {
            return Err(invalid("datasets", "must not be empty"));
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if d.seeds.is_empty() {
                return Err(invalid(&format!("datasets[{i}].seeds"), "must not be empty"));
            }
        }
        Ok(())
    }

    /// All runs, datasets outermost and codes innermost.
    pub fn runs(&self) -> Vec<RunKey> {
        let mut out = Vec::new();
        for d in &self.datasets {
            for &seed in &d.seeds {
                for &qubits in &self.qubits {
                    for &layers in &self.layers {
                        for &code in &self.codes {
                            out.push(RunKey { code, dataset: d.kind, nu: d.nu, qubits, layers, seed });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn train_file(&self, key: &RunKey) -> TrainFile {
        let samples = self
            .datasets
            .iter()
            .find(|d| d.kind == key.dataset && d.nu == key.nu && d.seeds.contains(&key.seed))
            .map_or(default_samples(), |d| d.samples);
        TrainFile {
            code: key.code,
            qubits: key.qubits,
            layers: key.layers,
            epochs: self.epochs,
            shots: self.shots,
            seed: key.seed,
            cnot: self.cnot,
            estimator: self.estimator,
            exact_loss: false,
            bandwidths: self.bandwidths.clone(),
            dataset: DatasetSpec { kind: key.dataset, nu: key.nu, samples, seed: None, test_samples: None },
            adam: self.adam,
            seeds: SeedOverrides::default(),
        }
    }
}

/// Worker count from [`WORKERS_ENV`], else the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

enum Outcome {
    Done(Box<RunRecord>, bool),
    Failed(String),
}

pub fn execute(spec: &SweepSpec, out: &Path, workers: usize) -> Result<SweepOutcome> {
    spec.validate()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let echo = out.join(SPEC_ECHO_FILE);
    let text = toml::to_string(spec).map_err(|e| invalid("sweep", e.to_string()))?;
    fs::write(&echo, text).map_err(io_err(&echo))?;

    let keys = spec.runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        keys.par_iter()
            .map(|key| {
                let dir = out.join(key.dir_name());
                if run::is_complete(&dir) {
                    return match run::load_run(&dir) {
                        Ok(r) => Outcome::Done(Box::new(r), false),
                        Err(e) => Outcome::Failed(e.to_string()),
                    };
                }
                match run::execute(&spec.train_file(key), &dir) {
                    Ok(r) => Outcome::Done(Box::new(r), true),
                    Err(e) => Outcome::Failed(e.to_string()),
                }
            })
            .collect()
    });

    let mut result = SweepOutcome { rows: Vec::new(), failures: Vec::new(), executed: 0, skipped: 0 };
    for (key, outcome) in keys.iter().zip(outcomes) {
        match outcome {
            Outcome::Done(r, fresh) => {
                if fresh {
                    result.executed += 1;
                } else {
                    result.skipped += 1;
                }
                result.rows.push(ReportRow::from_run(&r, &key.dir_name()));
            }
            Outcome::Failed(error) => result.failures.push(Failure { run_dir: key.dir_name(), error }),
        }
    }
    write_rows(&out.join(RESULTS_FILE), &result.rows)?;
    let failures = out.join(FAILURES_FILE);
    if result.failures.is_empty() {
        if failures.exists() {
            fs::remove_file(&failures).map_err(io_err(&failures))?;
        }
    } else {
        let mut w = csv::Writer::from_path(&failures).map_err(csv_err(&failures))?;
        for f in &result.failures {
            w.serialize(f).map_err(csv_err(&failures))?;
        }
        w.flush().map_err(io_err(&failures))?;
    }
    Ok(result)
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if rows.is_empty() {
        w.write_record([
            "code",
            "dataset",
            "n",
            "layers",
            "nu",
            "seed",
            "q_score",
            "final_loss",
            "reference_loss",
            "epochs_to_reference",
            "run_dir",
        ])
        .map_err(csv_err(path))?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_have_expected_sizes() {
        assert_eq!(SweepSpec::preset("fig3-mini").unwrap().runs().len(), 36);
        assert_eq!(SweepSpec::preset("fig4-mini").unwrap().runs().len(), 4 * 2 * 3 * 5);
        assert_eq!(SweepSpec::preset("fig5-mini").unwrap().runs().len(), 4 * 2 * 2 * 5);
        assert!(matches!(SweepSpec::preset("fig9"), Err(CliError::UnknownPreset(..))));
    }

    #[test]
    fn dir_names_are_unique() {
        let runs = SweepSpec::preset("fig4-mini").unwrap().runs();
        let mut names: Vec<String> = runs.iter().map(RunKey::dir_name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), runs.len());
        assert_eq!(runs[0].dir_name(), "rc-n8-L0-mix3-nu0.03-s0");
    }

    #[test]
    fn train_file_matches_key() {
        let spec = SweepSpec::preset("fig5-mini").unwrap();
        let key = &spec.runs()[7];
        let cfg = spec.train_file(key);
        assert_eq!(cfg.code, key.code);
        assert_eq!(cfg.dataset.nu, key.nu);
        assert_eq!(cfg.dataset_seed(), key.seed);
        assert_eq!(cfg.qubits, 12);
        cfg.validate().unwrap();
    }
}
