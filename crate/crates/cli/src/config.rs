//! TOML configuration for a single training run.
//!
//! Every field is optional. An empty file trains an 8-qubit, depth-0
//! reflected Gray code model on 256 draws from a centered Gaussian of width
//! 0.03 for 100 epochs at 256 shots per circuit.

use std::path::Path;

use qcbm::codes::CodeKind;
use qcbm::data::{sample_dataset, DatasetKind};
use qcbm::mmd::{Estimator, KernelConfig};
use qcbm::sim::{CircuitShape, CnotOrientation, MAX_QUBITS};
use qcbm::trainer::{AdamConfig, Seeds, TrainingConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainFile {
    pub code: CodeKind,
    pub qubits: usize,
    pub layers: usize,
    pub epochs: usize,
    pub shots: usize,
    /// Master seed for the init, shot, code and reference streams.
    pub seed: u64,
    pub cnot: CnotOrientation,
    pub estimator: Estimator,
    pub exact_loss: bool,
    pub bandwidths: KernelConfig,
    pub dataset: DatasetSpec,
    pub adam: AdamConfig,
    pub seeds: SeedOverrides,
}

impl Default for TrainFile {
    fn default() -> Self {
        Self {
            code: CodeKind::ReflectedGray,
            qubits: 8,
            layers: 0,
            epochs: 100,
            shots: 256,
            seed: 0,
            cnot: CnotOrientation::default(),
            estimator: Estimator::default(),
            exact_loss: false,
            bandwidths: KernelConfig::default(),
            dataset: DatasetSpec::default(),
            adam: AdamConfig::default(),
            seeds: SeedOverrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub nu: f64,
    pub samples: usize,
    /// Defaults to the run's master seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Held-out draws behind the reference loss; defaults to `samples`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_samples: Option<usize>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self { kind: DatasetKind::CenteredGaussian, nu: 0.03, samples: 256, seed: None, test_samples: None }
    }
}

/// Replaces individual streams derived from the master seed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<u64>,
}

/// Deserializes TOML, reporting the dotted path of the offending field.
pub fn parse_toml<T: DeserializeOwned>(text: &str, file: &Path) -> Result<T> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().message().trim().to_string();
        if path == "." {
            CliError::Parse { file: file.to_path_buf(), message }
        } else {
            CliError::Parse { file: file.to_path_buf(), message: format!("{path}: {message}") }
        }
    })
}

pub fn read_toml<T: DeserializeOwned>(file: &Path) -> Result<T> {
    let text = std::fs::read_to_string(file).map_err(io_err(file))?;
    parse_toml(&text, file)
}

impl TrainFile {
    pub fn load(file: &Path) -> Result<Self> {
        let cfg: Self = read_toml(file)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if self.shots == 0 {
            return Err(invalid("shots", "must be at least 1"));
        }
        if self.qubits == 0 || self.qubits > MAX_QUBITS {
            return Err(invalid("qubits", format!("must be in 1..={MAX_QUBITS}")));
        }
        let d = &self.dataset;
        if !(d.nu.is_finite() && d.nu > 0.0) {
            return Err(invalid("dataset.nu", "must be positive"));
        }
        if d.kind == DatasetKind::SawtoothMixture && d.nu >= 1.0 {
            return Err(invalid("dataset.nu", "sawtooth width must be below 1"));
        }
        if d.samples == 0 {
            return Err(invalid("dataset.samples", "must be at least 1"));
        }
        if d.test_samples == Some(0) {
            return Err(invalid("dataset.test_samples", "must be at least 1"));
        }
        let a = &self.adam;
        if !(a.learning_rate.is_finite() && a.learning_rate > 0.0) {
            return Err(invalid("adam.learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&a.beta1) {
            return Err(invalid("adam.beta1", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&a.beta2) {
            return Err(invalid("adam.beta2", "must be in [0, 1)"));
        }
        if !(a.epsilon > 0.0) {
            return Err(invalid("adam.epsilon", "must be positive"));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Seeds {
        let base = Seeds::from_master(self.seed);
        Seeds {
            init: self.seeds.init.unwrap_or(base.init),
            shots: self.seeds.shots.unwrap_or(base.shots),
            code: self.seeds.code.unwrap_or(base.code),
            reference: self.seeds.reference.unwrap_or(base.reference),
        }
    }

    pub fn dataset_seed(&self) -> u64 {
        self.dataset.seed.unwrap_or(self.seed)
    }

    /// Validates and draws the dataset.
    pub fn to_training(&self) -> Result<TrainingConfig> {
        self.validate()?;
        let d = &self.dataset;
        let dataset = sample_dataset(d.kind, d.samples, d.nu, self.dataset_seed())?;
        Ok(TrainingConfig {
            epochs: self.epochs,
            shots: self.shots,
            code: self.code,
            shape: CircuitShape::new(self.qubits, self.layers)?.with_cnot(self.cnot),
            kernel: self.bandwidths.clone(),
            estimator: self.estimator,
            adam: self.adam,
            seeds: self.seeds(),
            dataset,
            test_samples: d.test_samples.unwrap_or(d.samples),
            exact_loss: self.exact_loss,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<TrainFile> {
        let cfg: TrainFile = parse_toml(text, Path::new("test.toml"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, TrainFile::default());
        assert_eq!(cfg.bandwidths.bandwidths(), &[0.003, 0.01, 0.03, 0.1, 0.3]);
    }

    #[test]
    fn short_config() {
        let cfg = parse("code = \"sc\"\nlayers = 2\nseed = 4\n[dataset]\nkind = \"gaussian-mixture\"\n").unwrap();
        assert_eq!(cfg.code, CodeKind::Standard);
        assert_eq!(cfg.layers, 2);
        assert_eq!(cfg.dataset.kind, DatasetKind::GaussianMixture);
        assert_eq!(cfg.dataset_seed(), 4);
        assert_eq!(cfg.seeds(), Seeds::from_master(4));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse("epochs = 0").unwrap_err().to_string();
        assert!(e.starts_with("epochs:"), "{e}");
        let e = parse("[adam]\nlearning_rate = -1.0").unwrap_err().to_string();
        assert!(e.starts_with("adam.learning_rate:"), "{e}");
        let e = parse("[dataset]\nnu = \"wide\"").unwrap_err().to_string();
        assert!(e.contains("dataset.nu"), "{e}");
        let e = parse("[dataset]\nwidth = 0.1").unwrap_err().to_string();
        assert!(e.contains("width"), "{e}");
        let e = parse("bandwidths = [0.1, -0.2]").unwrap_err().to_string();
        assert!(e.contains("bandwidths"), "{e}");
    }

    #[test]
    fn seed_overrides() {
        let cfg = parse("seed = 1\n[seeds]\nshots = 99").unwrap();
        let s = cfg.seeds();
        assert_eq!(s.shots, 99);
        assert_eq!(s.init, Seeds::from_master(1).init);
    }
}
