//! Squared maximum mean discrepancy with a sum of Gaussian kernels.
//!
//! `mmd2` is the generic estimator over two sample sets. [`GridKernel`] is
//! the training-time form: model samples only ever take representative
//! values on a uniform grid, so every model/model kernel value is a lookup
//! by index offset and every model/data value is a per-representative mean
//! computed once per dataset.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DiscretizedSpace;
use crate::error::{Error, Result};

/// Bandwidths used by default, in data-space units.
pub const DEFAULT_BANDWIDTHS: [f64; 5] = [0.003, 0.01, 0.03, 0.1, 0.3];

/// Floor applied to model probabilities in the KL diagnostic.
pub const KL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KernelConfig {
    bandwidths: Vec<f64>,
    inv_two_sigma_sq: Vec<f64>,
}

impl KernelConfig {
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::InvalidArgument("at least one bandwidth is required".into()));
        }
        if let Some(bad) = bandwidths.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bad}")));
        }
        let inv_two_sigma_sq = bandwidths.iter().map(|s| 1.0 / (2.0 * s * s)).collect();
        Ok(Self { bandwidths, inv_two_sigma_sq })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// `sum_i exp(-d^2 / (2 sigma_i^2))` for a squared distance `d^2`.
    #[inline]
    pub fn eval_sq(&self, dist_sq: f64) -> f64 {
        self.inv_two_sigma_sq.iter().map(|c| (-dist_sq * c).exp()).sum()
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        self.eval_sq(d * d)
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self::new(DEFAULT_BANDWIDTHS.to_vec()).expect("default bandwidths are valid")
    }
}

impl TryFrom<Vec<f64>> for KernelConfig {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<KernelConfig> for Vec<f64> {
    fn from(k: KernelConfig) -> Self {
        k.bandwidths
    }
}

/// Whether same-set expectations include the diagonal `i = j` pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// V-statistic: plain double sums, always nonnegative.
    #[default]
    Biased,
    /// U-statistic: diagonal excluded from the same-set terms.
    Unbiased,
}

pub fn kernel(x: f64, y: f64, cfg: &KernelConfig) -> f64 {
    cfg.eval(x, y)
}

const BLOCK: usize = 64;

/// Sum of `k(a_i, b_j)` over all pairs, accumulated per block of rows.
fn pair_sum(a: &[f64], b: &[f64], cfg: &KernelConfig) -> f64 {
    a.chunks(BLOCK)
        .map(|rows| {
            rows.iter()
                .map(|&x| b.iter().map(|&y| cfg.eval(x, y)).sum::<f64>())
                .sum::<f64>()
        })
        .sum()
}

fn self_sum(a: &[f64], cfg: &KernelConfig, estimator: Estimator) -> f64 {
    let n = a.len() as f64;
    let full = pair_sum(a, a, cfg);
    match estimator {
        Estimator::Biased => full / (n * n),
        Estimator::Unbiased => {
            if a.len() < 2 {
                return 0.0;
            }
            let diag = cfg.eval_sq(0.0) * n;
            (full - diag) / (n * (n - 1.0))
        }
    }
}

fn nonempty(name: &str, s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} sample set is empty")));
    }
    Ok(())
}

fn canonical_first(a: &[f64], b: &[f64]) -> bool {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    }) != std::cmp::Ordering::Greater
}

/// V-statistic `E[k(x, x')] + E[k(y, y')] - 2 E[k(x, y)]`.
pub fn mmd2(model: &[f64], data: &[f64], cfg: &KernelConfig) -> Result<f64> {
    mmd2_with(model, data, cfg, Estimator::Biased)
}

pub fn mmd2_with(model: &[f64], data: &[f64], cfg: &KernelConfig, estimator: Estimator) -> Result<f64> {
    nonempty("model", model)?;
    nonempty("data", data)?;
    // a fixed argument order makes the result exactly symmetric in the two sets
    let (x, y) = if canonical_first(model, data) { (model, data) } else { (data, model) };
    let cross = pair_sum(x, y, cfg) / (model.len() as f64 * data.len() as f64);
    Ok(self_sum(model, cfg, estimator) + self_sum(data, cfg, estimator) - 2.0 * cross)
}

/// MMD^2 with the model expectations taken exactly under `p`, a probability
/// vector over the representatives of `space`.
pub fn mmd2_exact(p: &[f64], data: &[f64], space: &DiscretizedSpace, cfg: &KernelConfig) -> Result<f64> {
    if p.len() != space.size() {
        return Err(Error::DimensionMismatch { expected: space.size(), got: p.len() });
    }
    Ok(GridKernel::new(space, cfg, data)?.mmd2_exact(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergences {
    pub kl: f64,
    pub tv: f64,
}

/// Total variation and `KL(q || p)` between two distributions on the
/// same support.
pub fn diagnostics(p: &[f64], q: &[f64]) -> Result<Divergences> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), got: p.len() });
    }
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let kl = p
        .iter()
        .zip(q)
        .filter(|(_, &qj)| qj > 0.0)
        .map(|(&pj, &qj)| qj * (qj / pj.max(KL_FLOOR)).ln())
        .sum();
    Ok(Divergences { kl, tv })
}

/// Sparse histogram over representative indices: `(index, count)`.
pub type Counts = [(u32, u32)];

/// Kernel expectations for models supported on a uniform representative grid.
#[derive(Debug, Clone)]
pub struct GridKernel {
    /// `by_offset[d] = k(x_j, x_{j+d})`.
    by_offset: Vec<f64>,
    /// `data_mean[j] = mean_y k(x_j, y)`.
    data_mean: Vec<f64>,
    data_sum_sq_diag_free: f64,
    data_self_biased: f64,
    data_len: usize,
    diag: f64,
}

impl GridKernel {
    pub fn new(space: &DiscretizedSpace, cfg: &KernelConfig, data: &[f64]) -> Result<Self> {
        nonempty("data", data)?;
        let size = space.size();
        let width = space.cell_width();
        let by_offset = (0..size)
            .map(|d| {
                let dist = d as f64 * width;
                cfg.eval_sq(dist * dist)
            })
            .collect();
        let reps = space.representatives();
        let inv = 1.0 / data.len() as f64;
        let data_mean = reps
            .par_iter()
            .map(|&x| data.iter().map(|&y| cfg.eval(x, y)).sum::<f64>() * inv)
            .collect();
        let n = data.len() as f64;
        let full = pair_sum(data, data, cfg);
        let diag = cfg.eval_sq(0.0);
        Ok(Self {
            by_offset,
            data_mean,
            data_sum_sq_diag_free: full - diag * n,
            data_self_biased: full / (n * n),
            data_len: data.len(),
            diag,
        })
    }

    pub fn size(&self) -> usize {
        self.data_mean.len()
    }

    #[inline]
    pub fn at_offset(&self, j: usize, k: usize) -> f64 {
        self.by_offset[j.abs_diff(k)]
    }

    /// `E_{y, y' ~ data}[k(y, y')]`.
    pub fn data_term(&self, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::Biased => self.data_self_biased,
            Estimator::Unbiased if self.data_len < 2 => 0.0,
            Estimator::Unbiased => {
                let n = self.data_len as f64;
                self.data_sum_sq_diag_free / (n * (n - 1.0))
            }
        }
    }

    /// `E_{x ~ a, x' ~ b}[k(x, x')]` for two independent samples.
    pub fn cross(&self, a: &Counts, b: &Counts) -> f64 {
        let na: u64 = a.iter().map(|&(_, c)| c as u64).sum();
        let nb: u64 = b.iter().map(|&(_, c)| c as u64).sum();
        let mut total = 0.0;
        for &(ia, ca) in a {
            let row: f64 = b
                .iter()
                .map(|&(ib, cb)| cb as f64 * self.by_offset[(ia as usize).abs_diff(ib as usize)])
                .sum();
            total += ca as f64 * row;
        }
        total / (na as f64 * nb as f64)
    }

    /// `E_{x ~ a, y ~ data}[k(x, y)]`.
    pub fn with_data(&self, a: &Counts) -> f64 {
        let na: u64 = a.iter().map(|&(_, c)| c as u64).sum();
        let total: f64 = a.iter().map(|&(i, c)| c as f64 * self.data_mean[i as usize]).sum();
        total / na as f64
    }

    fn self_term(&self, a: &Counts, estimator: Estimator) -> f64 {
        match estimator {
            Estimator::Biased => self.cross(a, a),
            Estimator::Unbiased => {
                let n: u64 = a.iter().map(|&(_, c)| c as u64).sum();
                if n < 2 {
                    return 0.0;
                }
                let n = n as f64;
                (self.cross(a, a) * n * n - self.diag * n) / (n * (n - 1.0))
            }
        }
    }

    /// MMD^2 of a model sample given as representative-index counts.
    pub fn mmd2_counts(&self, a: &Counts, estimator: Estimator) -> f64 {
        self.self_term(a, estimator) + self.data_term(estimator) - 2.0 * self.with_data(a)
    }

    /// `sum_{j,k} p_j q_k k(x_j, x_k)`.
    pub fn cross_exact(&self, p: &[f64], q: &[f64]) -> f64 {
        p.iter()
            .enumerate()
            .filter(|(_, &pj)| pj != 0.0)
            .map(|(j, &pj)| {
                let row: f64 = q.iter().enumerate().map(|(k, &qk)| qk * self.by_offset[j.abs_diff(k)]).sum();
                pj * row
            })
            .sum()
    }

    pub fn with_data_exact(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.data_mean).map(|(a, b)| a * b).sum()
    }

    pub fn mmd2_exact(&self, p: &[f64]) -> f64 {
        self.cross_exact(p, p) + self.data_term(Estimator::Biased) - 2.0 * self.with_data_exact(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_space;

    #[test]
    fn kernel_examples() {
        let cfg = KernelConfig::default();
        assert_eq!(kernel(0.3, 0.3, &cfg), 5.0);
        assert!(kernel(0.0, 50.0, &cfg) < 1e-300);
        // independently evaluated: exp(-0.5), exp(-0.045), exp(-0.005), exp(-0.00045), exp(-0.00005)
        let expected = 0.6065306597126334 + 0.9559974818331 + 0.9950124791926823 + 0.9995501012348142 + 0.9999500012499791;
        assert!((kernel(0.0, 0.003, &cfg) - expected).abs() < 1e-12);
        assert_eq!(kernel(0.1, 0.4, &cfg), kernel(0.4, 0.1, &cfg));
    }

    #[test]
    fn bad_configs() {
        assert!(KernelConfig::new(vec![]).is_err());
        assert!(KernelConfig::new(vec![0.1, 0.0]).is_err());
        assert!(KernelConfig::new(vec![-1.0]).is_err());
    }

    #[test]
    fn mmd2_examples() {
        let cfg = KernelConfig::default();
        let a = [0.1, -0.3, 0.7, 0.7];
        assert!(mmd2(&a, &a, &cfg).unwrap().abs() < 1e-15);
        let d = 0.02;
        let v = mmd2(&[0.0], &[d], &cfg).unwrap();
        assert!((v - 2.0 * (5.0 - kernel(0.0, d, &cfg))).abs() < 1e-14);
        assert!(mmd2(&[], &a, &cfg).is_err());
    }

    #[test]
    fn unbiased_can_go_negative() {
        let cfg = KernelConfig::default();
        let a = [0.0, 0.0];
        let v = mmd2_with(&a, &a, &cfg, Estimator::Unbiased).unwrap();
        assert!(v.abs() < 1e-12);
        let v = mmd2_with(&[0.0, 0.5], &[0.0, 0.5], &cfg, Estimator::Unbiased).unwrap();
        assert!(v < 0.0);
    }

    #[test]
    fn exact_point_mass_is_zero() {
        let space = make_space(4).unwrap();
        let cfg = KernelConfig::default();
        let mut p = vec![0.0; 16];
        p[5] = 1.0;
        let v = mmd2_exact(&p, &[space.representative(5)], &space, &cfg).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(mmd2_exact(&p[..8], &[0.0], &space, &cfg).is_err());
    }

    #[test]
    fn exact_uniform_matches_sample_form() {
        let space = make_space(3).unwrap();
        let cfg = KernelConfig::default();
        let p = vec![1.0 / 8.0; 8];
        let data = [0.123];
        let exact = mmd2_exact(&p, &data, &space, &cfg).unwrap();
        let sampled = mmd2(&space.representatives(), &data, &cfg).unwrap();
        assert!((exact - sampled).abs() < 1e-12);
    }

    #[test]
    fn grid_counts_match_generic() {
        let space = make_space(5).unwrap();
        let cfg = KernelConfig::default();
        let data = [-0.4, 0.01, 0.02, 0.33, 0.9];
        let g = GridKernel::new(&space, &cfg, &data).unwrap();
        let counts = [(3u32, 2u32), (16, 1), (17, 4), (30, 1)];
        let values: Vec<f64> = counts
            .iter()
            .flat_map(|&(i, c)| std::iter::repeat(space.representative(i as usize)).take(c as usize))
            .collect();
        for est in [Estimator::Biased, Estimator::Unbiased] {
            let a = g.mmd2_counts(&counts, est);
            let b = mmd2_with(&values, &data, &cfg, est).unwrap();
            assert!((a - b).abs() < 1e-12, "{est:?}: {a} vs {b}");
        }
    }

    #[test]
    fn diagnostics_examples() {
        let p = [0.25, 0.25, 0.5];
        let d = diagnostics(&p, &p).unwrap();
        assert_eq!((d.kl, d.tv), (0.0, 0.0));
        let d = diagnostics(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(d.tv, 1.0);
        let n = 5;
        let uniform = vec![1.0 / 32.0; 32];
        let mut point = vec![0.0; 32];
        point[9] = 1.0;
        let d = diagnostics(&uniform, &point).unwrap();
        assert!((d.kl - n as f64 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn serde_as_list() {
        let cfg: KernelConfig = serde_json::from_str("[0.1, 0.2]").unwrap();
        assert_eq!(cfg.bandwidths(), &[0.1, 0.2]);
        assert!(serde_json::from_str::<KernelConfig>("[0.1, -0.2]").is_err());
    }
}
