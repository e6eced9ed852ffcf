//! Target densities on `[-1, 1]`, dataset generation, discretization of the
//! data space into `2^n` representatives, and the maps between outcome
//! probabilities and representative probabilities.
//!
//! Gaussian draws use the ziggurat sampler from `rand_distr` on a ChaCha8
//! stream. Sawtooth draws use the closed-form inverse CDF
//! `x = mu + nu - 2 nu sqrt(1 - u)`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codes::BinaryCode;
use crate::error::{Error, Result};

/// `2^n` equal-width cells over `[-1, 1]` with the cell centres as representatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretizedSpace {
    bits: u32,
}

impl DiscretizedSpace {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 30 {
            return Err(Error::InvalidArgument(format!("bit count must be in 1..=30, got {bits}")));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    pub fn cell_width(&self) -> f64 {
        2.0 / self.size() as f64
    }

    /// `x_j = -1 + (2j + 1) / 2^n`.
    pub fn representative(&self, j: usize) -> f64 {
        -1.0 + (2 * j + 1) as f64 / self.size() as f64
    }

    pub fn representatives(&self) -> Vec<f64> {
        (0..self.size()).map(|j| self.representative(j)).collect()
    }

    /// `[lo, hi)`; the last cell also contains `1`.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        let size = self.size() as f64;
        (-1.0 + 2.0 * j as f64 / size, -1.0 + 2.0 * (j + 1) as f64 / size)
    }

    /// Index of the nearest representative. A point equidistant from two
    /// representatives belongs to the one with the larger index.
    pub fn discretize(&self, x: f64) -> Result<usize> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        let scaled = ((x + 1.0) * (self.size() as f64 / 2.0)).floor() as usize;
        Ok(scaled.min(self.size() - 1))
    }
}

pub fn make_space(bits: u32) -> Result<DiscretizedSpace> {
    DiscretizedSpace::new(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    CenteredGaussian,
    GaussianMixture,
    SawtoothMixture,
    /// Flat density on `[-1, 1]`; not one of the experiment targets.
    Uniform,
}

impl DatasetKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            DatasetKind::CenteredGaussian => "gauss",
            DatasetKind::GaussianMixture => "mix3",
            DatasetKind::SawtoothMixture => "saw3",
            DatasetKind::Uniform => "unif",
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DatasetKind::CenteredGaussian => "centered-gaussian",
            DatasetKind::GaussianMixture => "gaussian-mixture",
            DatasetKind::SawtoothMixture => "sawtooth-mixture",
            DatasetKind::Uniform => "uniform",
        })
    }
}

/// Stored values are `scale * raw + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub scale: f64,
    pub offset: f64,
}

impl Affine {
    /// Maps `[min(-1, lo), max(1, hi)]` onto `[-1, 1]`.
    pub fn fit(lo: f64, hi: f64) -> Self {
        let lo = lo.min(-1.0);
        let hi = hi.max(1.0);
        let scale = 2.0 / (hi - lo);
        Self { scale, offset: -1.0 - scale * lo }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.scale * raw + self.offset
    }

    pub fn invert(&self, stored: f64) -> f64 {
        (stored - self.offset) / self.scale
    }
}

/// An equal-weight mixture of components of width `nu`, optionally
/// rescaled, with values outside `[-1, 1]` clipped to the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    pub kind: DatasetKind,
    pub nu: f64,
    pub means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<Affine>,
}

impl TargetDistribution {
    pub fn centered_gaussian(nu: f64) -> Result<Self> {
        check_width(nu)?;
        Ok(Self { kind: DatasetKind::CenteredGaussian, nu, means: vec![0.0], rescale: None })
    }

    pub fn gaussian_mixture(nu: f64, means: Vec<f64>) -> Result<Self> {
        check_width(nu)?;
        check_means(&means)?;
        Ok(Self { kind: DatasetKind::GaussianMixture, nu, means, rescale: None })
    }

    pub fn sawtooth_mixture(nu: f64, means: Vec<f64>) -> Result<Self> {
        check_width(nu)?;
        check_means(&means)?;
        Ok(Self { kind: DatasetKind::SawtoothMixture, nu, means, rescale: None })
    }

    pub fn uniform() -> Self {
        Self { kind: DatasetKind::Uniform, nu: 1.0, means: vec![0.0], rescale: None }
    }

    fn component_cdf(&self, mean: f64, x: f64) -> f64 {
        let nu = self.nu;
        match self.kind {
            DatasetKind::CenteredGaussian | DatasetKind::GaussianMixture => {
                0.5 * (1.0 + libm::erf((x - mean) / (nu * std::f64::consts::SQRT_2)))
            }
            DatasetKind::SawtoothMixture => {
                let t = x - (mean - nu);
                if t <= 0.0 {
                    0.0
                } else if t >= 2.0 * nu {
                    1.0
                } else {
                    let rest = 2.0 * nu - t;
                    1.0 - rest * rest / (4.0 * nu * nu)
                }
            }
            DatasetKind::Uniform => ((x + 1.0) / 2.0).clamp(0.0, 1.0),
        }
    }

    fn component_density(&self, mean: f64, x: f64) -> f64 {
        let nu = self.nu;
        match self.kind {
            DatasetKind::CenteredGaussian | DatasetKind::GaussianMixture => {
                let z = (x - mean) / nu;
                (-0.5 * z * z).exp() / (nu * (2.0 * std::f64::consts::PI).sqrt())
            }
            DatasetKind::SawtoothMixture => {
                if x >= mean - nu && x < mean + nu {
                    (nu + mean - x) / (2.0 * nu * nu)
                } else {
                    0.0
                }
            }
            DatasetKind::Uniform => {
                if (-1.0..=1.0).contains(&x) {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    fn raw_cdf(&self, x: f64) -> f64 {
        let w = 1.0 / self.means.len() as f64;
        self.means.iter().map(|&m| w * self.component_cdf(m, x)).sum()
    }

    /// CDF of the stored (rescaled, unclipped) variable.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.rescale {
            Some(a) => self.raw_cdf(a.invert(x)),
            None => self.raw_cdf(x),
        }
    }

    /// Density of the stored variable before clipping. For the sawtooth
    /// mixture this is `sum_i (nu + mu_i - x) / (6 nu^2)` on each support.
    pub fn density(&self, x: f64) -> f64 {
        let (raw, jac) = match self.rescale {
            Some(a) => (a.invert(x), 1.0 / a.scale),
            None => (x, 1.0),
        };
        let w = 1.0 / self.means.len() as f64;
        jac * self.means.iter().map(|&m| w * self.component_density(m, raw)).sum::<f64>()
    }

    fn draw_component<R: Rng + ?Sized>(&self, component: usize, rng: &mut R) -> f64 {
        let mean = self.means[component];
        match self.kind {
            DatasetKind::CenteredGaussian | DatasetKind::GaussianMixture => {
                let z: f64 = rng.sample(StandardNormal);
                mean + self.nu * z
            }
            DatasetKind::SawtoothMixture => {
                let u: f64 = rng.gen();
                mean + self.nu - 2.0 * self.nu * (1.0 - u).sqrt()
            }
            DatasetKind::Uniform => rng.gen_range(-1.0..=1.0),
        }
    }

    /// Raw draws before rescaling and clipping, tagged with their component.
    pub fn sample_raw<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<(usize, f64)> {
        let k = self.means.len();
        (0..count)
            .map(|_| {
                let c = if k == 1 { 0 } else { rng.gen_range(0..k) };
                (c, self.draw_component(c, rng))
            })
            .collect()
    }

    /// Draws as they would appear in a dataset: rescaled, then clipped.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        self.sample_raw(count, rng)
            .into_iter()
            .map(|(_, x)| self.store(x))
            .collect()
    }

    fn store(&self, raw: f64) -> f64 {
        let x = match self.rescale {
            Some(a) => a.apply(raw),
            None => raw,
        };
        x.clamp(-1.0, 1.0)
    }
}

fn check_width(nu: f64) -> Result<()> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidArgument(format!("width must be positive, got {nu}")));
    }
    Ok(())
}

fn check_means(means: &[f64]) -> Result<()> {
    if means.is_empty() || means.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidArgument("mixture needs at least one finite mean".into()));
    }
    Ok(())
}

/// Training samples with the distribution and seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub target: TargetDistribution,
    pub seed: u64,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl Dataset {
    pub fn new(target: TargetDistribution, seed: u64, samples: Vec<f64>) -> Result<Self> {
        if let Some(&x) = samples.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(Self { target, seed, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Writes `<stem>.csv` (one value per line, shortest round-trip
    /// formatting) and `<stem>.json` (generator metadata).
    pub fn save(&self, dir: &Path, stem: &str) -> std::io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        let mut w = BufWriter::new(fs::File::create(&csv)?);
        for x in &self.samples {
            writeln!(w, "{x:?}")?;
        }
        w.flush()?;
        let meta = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(&json, meta + "\n")?;
        Ok((csv, json))
    }

    pub fn load(dir: &Path, stem: &str) -> std::io::Result<Self> {
        let meta = fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let mut ds: Dataset = serde_json::from_str(&meta).map_err(std::io::Error::other)?;
        let file = fs::File::open(dir.join(format!("{stem}.csv")))?;
        for line in BufReader::new(file).lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let x: f64 = line
                .parse()
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{line:?}: {e}")))?;
            ds.samples.push(x);
        }
        Ok(ds)
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    Ok(())
}

/// `count` draws from `N(0, nu^2)`, clipped to `[-1, 1]`.
pub fn sample_centered_gaussian(count: usize, nu: f64, seed: u64) -> Result<Dataset> {
    check_count(count)?;
    let target = TargetDistribution::centered_gaussian(nu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = target.sample(count, &mut rng);
    Dataset::new(target, seed, samples)
}

/// Three equal-weight Gaussians with means uniform on `[-1, 1]`. If any
/// draw leaves `[-1, 1]` the whole sample is mapped affinely back inside.
pub fn sample_gaussian_mixture(count: usize, nu: f64, seed: u64) -> Result<Dataset> {
    check_count(count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_dist = Uniform::new_inclusive(-1.0, 1.0);
    let means: Vec<f64> = (0..3).map(|_| mean_dist.sample(&mut rng)).collect();
    let mut target = TargetDistribution::gaussian_mixture(nu, means)?;
    let raw: Vec<f64> = target.sample_raw(count, &mut rng).into_iter().map(|(_, x)| x).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < -1.0 || hi > 1.0 {
        target.rescale = Some(Affine::fit(lo, hi));
    }
    let samples = raw.into_iter().map(|x| target.store(x)).collect();
    Dataset::new(target, seed, samples)
}

/// Three equal-weight decreasing sawtooths of width `2 nu` with means
/// uniform on `[-1 + nu, 1 - nu]`.
pub fn sample_sawtooth_mixture(count: usize, nu: f64, seed: u64) -> Result<Dataset> {
    check_count(count)?;
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidArgument(format!("sawtooth width must be in (0, 1), got {nu}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_dist = Uniform::new_inclusive(-1.0 + nu, 1.0 - nu);
    let means: Vec<f64> = (0..3).map(|_| mean_dist.sample(&mut rng)).collect();
    let target = TargetDistribution::sawtooth_mixture(nu, means)?;
    let samples = target.sample(count, &mut rng);
    Dataset::new(target, seed, samples)
}

pub fn sample_dataset(kind: DatasetKind, count: usize, nu: f64, seed: u64) -> Result<Dataset> {
    match kind {
        DatasetKind::CenteredGaussian => sample_centered_gaussian(count, nu, seed),
        DatasetKind::GaussianMixture => sample_gaussian_mixture(count, nu, seed),
        DatasetKind::SawtoothMixture => sample_sawtooth_mixture(count, nu, seed),
        DatasetKind::Uniform => {
            check_count(count)?;
            let target = TargetDistribution::uniform();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = target.sample(count, &mut rng);
            Dataset::new(target, seed, samples)
        }
    }
}

/// Probability mass of each cell under the clipped target. Mass clipped
/// to `-1` or `1` lands in the first or last cell.
pub fn discretized_target(q: &TargetDistribution, space: &DiscretizedSpace) -> Vec<f64> {
    let size = space.size();
    let mut prev = 0.0;
    (0..size)
        .map(|j| {
            let next = if j + 1 == size { 1.0 } else { q.cdf(space.cell(j).1) };
            let mass = (next - prev).max(0.0);
            prev = next;
            mass
        })
        .collect()
}

/// `out[j] = p(f(j))`: outcome probabilities moved onto representatives.
pub fn pushforward(p: &[f64], code: &BinaryCode) -> Result<Vec<f64>> {
    if p.len() != code.size() {
        return Err(Error::DimensionMismatch { expected: code.size(), got: p.len() });
    }
    Ok((0..code.size()).map(|j| p[code.encode_value(j) as usize]).collect())
}

/// `out[b] = q(f^-1(b))`: representative probabilities moved onto outcomes.
pub fn pullback(q: &[f64], code: &BinaryCode) -> Result<Vec<f64>> {
    if q.len() != code.size() {
        return Err(Error::DimensionMismatch { expected: code.size(), got: q.len() });
    }
    Ok((0..code.size() as u64).map(|b| q[code.decode_value(b)]).collect())
}
