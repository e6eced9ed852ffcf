//! Parameter-shift gradient of the MMD^2 loss.
//!
//! For an `R_y` angle `theta_i`,
//!
//! ```text
//! dL/dtheta_i = E[k(x, x+)] - E[k(x, x-)] - E[k(y, x+)] + E[k(y, x-)]
//! ```
//!
//! where `x` is drawn from the current model, `x+`/`x-` from the model with
//! `theta_i` shifted by `+pi/2`/`-pi/2`, and `y` from the training data.
//! One gradient costs `2 n (L + 1) + 1` circuit evaluations.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::codes::BinaryCode;
use crate::data::{pushforward, DiscretizedSpace};
use crate::error::{Error, Result};
use crate::mmd::{Estimator, GridKernel, KernelConfig};
use crate::seed;
use crate::sim::{born_probabilities, build_state, sample_probabilities, CircuitParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    /// Every circuit is measured `shots` times; circuit `c` uses the seed
    /// stream `derive_indexed(seed, c)` with `c = 0` the unshifted circuit
    /// and `2i + 1`, `2i + 2` the `+`/`-` shifts of parameter `i`.
    Shots { shots: usize, seed: u64 },
    /// Expectations taken under the exact Born probabilities.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    /// Circuits evaluated for this estimate.
    pub circuits: usize,
}

/// The loss for one (dataset, code, grid, kernel) combination.
#[derive(Debug, Clone)]
pub struct Objective {
    code: BinaryCode,
    decode: Vec<u32>,
    kernel: GridKernel,
}

impl Objective {
    pub fn new(code: BinaryCode, space: &DiscretizedSpace, cfg: &KernelConfig, data: &[f64]) -> Result<Self> {
        if code.bits() != space.bits() {
            return Err(Error::DimensionMismatch { expected: space.bits() as usize, got: code.bits() as usize });
        }
        let decode = code.decode_table();
        let kernel = GridKernel::new(space, cfg, data)?;
        Ok(Self { code, decode, kernel })
    }

    pub fn code(&self) -> &BinaryCode {
        &self.code
    }

    pub fn kernel(&self) -> &GridKernel {
        &self.kernel
    }

    fn check(&self, params: &CircuitParams) -> Result<()> {
        let n = params.shape().qubits;
        if n != self.code.bits() as usize {
            return Err(Error::DimensionMismatch { expected: self.code.bits() as usize, got: n });
        }
        Ok(())
    }

    /// Model distribution over representatives, `p(f(j))`.
    pub fn model_probabilities(&self, params: &CircuitParams) -> Vec<f64> {
        let p = born_probabilities(&build_state(params));
        pushforward(&p, &self.code).expect("shape checked against code")
    }

    /// Measures the circuit and returns representative-index counts,
    /// ascending by index.
    pub fn sample_model(&self, params: &CircuitParams, shots: usize, seed: u64) -> Vec<(u32, u32)> {
        let p = born_probabilities(&build_state(params));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reps: Vec<u32> = sample_probabilities(&p, shots, &mut rng)
            .into_iter()
            .map(|b| self.decode[b as usize])
            .collect();
        reps.sort_unstable();
        let mut counts: Vec<(u32, u32)> = Vec::new();
        for r in reps {
            match counts.last_mut() {
                Some((v, c)) if *v == r => *c += 1,
                _ => counts.push((r, 1)),
            }
        }
        counts
    }

    pub fn loss_from_counts(&self, counts: &[(u32, u32)], estimator: Estimator) -> f64 {
        self.kernel.mmd2_counts(counts, estimator)
    }

    pub fn loss_exact(&self, params: &CircuitParams) -> Result<f64> {
        self.check(params)?;
        Ok(self.kernel.mmd2_exact(&self.model_probabilities(params)))
    }

    pub fn shift_gradient(&self, params: &CircuitParams, mode: GradientMode) -> Result<GradientEstimate> {
        self.check(params)?;
        let count = params.theta().len();
        let gradient = match mode {
            GradientMode::Exact => {
                let base = self.model_probabilities(params);
                (0..count)
                    .into_par_iter()
                    .map(|i| {
                        let plus = self.model_probabilities(&params.shifted(i, FRAC_PI_2));
                        let minus = self.model_probabilities(&params.shifted(i, -FRAC_PI_2));
                        self.kernel.cross_exact(&base, &plus) - self.kernel.cross_exact(&base, &minus)
                            - self.kernel.with_data_exact(&plus)
                            + self.kernel.with_data_exact(&minus)
                    })
                    .collect()
            }
            GradientMode::Shots { shots, seed: stream } => {
                if shots == 0 {
                    return Err(Error::InvalidArgument("shots must be at least 1".into()));
                }
                let base = self.sample_model(params, shots, seed::derive_indexed(stream, 0));
                (0..count)
                    .into_par_iter()
                    .map(|i| {
                        let c = 2 * i as u64;
                        let plus =
                            self.sample_model(&params.shifted(i, FRAC_PI_2), shots, seed::derive_indexed(stream, c + 1));
                        let minus =
                            self.sample_model(&params.shifted(i, -FRAC_PI_2), shots, seed::derive_indexed(stream, c + 2));
                        self.kernel.cross(&base, &plus) - self.kernel.cross(&base, &minus)
                            - self.kernel.with_data(&plus)
                            + self.kernel.with_data(&minus)
                    })
                    .collect()
            }
        };
        Ok(GradientEstimate { gradient, circuits: 2 * count + 1 })
    }
}

/// One-shot form: builds the objective and evaluates the gradient.
#[allow(clippy::too_many_arguments)]
pub fn shift_gradient(
    params: &CircuitParams,
    data: &[f64],
    code: &BinaryCode,
    space: &DiscretizedSpace,
    cfg: &KernelConfig,
    shots: usize,
    rng_seed: u64,
) -> Result<GradientEstimate> {
    Objective::new(code.clone(), space, cfg, data)?.shift_gradient(params, GradientMode::Shots { shots, seed: rng_seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_space;
    use crate::mmd::mmd2_exact;
    use crate::sim::{init_params, CircuitShape};

    #[test]
    fn single_qubit_matches_finite_differences() {
        let space = make_space(1).unwrap();
        let cfg = KernelConfig::default();
        let data = [-0.4, 0.45, 0.5];
        let code = BinaryCode::standard(1).unwrap();
        let obj = Objective::new(code.clone(), &space, &cfg, &data).unwrap();
        let shape = CircuitShape::new(1, 0).unwrap();
        let params = CircuitParams::new(shape, vec![0.3]).unwrap();
        let g = obj.shift_gradient(&params, GradientMode::Exact).unwrap();
        let h = 1e-5;
        let loss = |t: f64| {
            let p = CircuitParams::new(shape, vec![t]).unwrap();
            let probs = born_probabilities(&build_state(&p));
            mmd2_exact(&pushforward(&probs, &code).unwrap(), &data, &space, &cfg).unwrap()
        };
        let fd = (loss(0.3 + h) - loss(0.3 - h)) / (2.0 * h);
        assert!((g.gradient[0] - fd).abs() < 1e-6, "{} vs {fd}", g.gradient[0]);
    }

    #[test]
    fn circuit_count() {
        let space = make_space(3).unwrap();
        let obj = Objective::new(BinaryCode::reflected_gray(3).unwrap(), &space, &KernelConfig::default(), &[0.0]).unwrap();
        let params = init_params(CircuitShape::new(3, 2).unwrap(), 0);
        let g = obj.shift_gradient(&params, GradientMode::Shots { shots: 16, seed: 1 }).unwrap();
        assert_eq!(g.circuits, 2 * 3 * 3 + 1);
        assert_eq!(g.gradient.len(), 9);
    }

    #[test]
    fn shots_are_deterministic() {
        let space = make_space(4).unwrap();
        let obj = Objective::new(BinaryCode::standard(4).unwrap(), &space, &KernelConfig::default(), &[0.1, 0.2]).unwrap();
        let params = init_params(CircuitShape::new(4, 1).unwrap(), 5);
        let mode = GradientMode::Shots { shots: 64, seed: 77 };
        assert_eq!(obj.shift_gradient(&params, mode).unwrap(), obj.shift_gradient(&params, mode).unwrap());
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let space = make_space(3).unwrap();
        assert!(Objective::new(BinaryCode::standard(4).unwrap(), &space, &KernelConfig::default(), &[0.0]).is_err());
        let obj = Objective::new(BinaryCode::standard(3).unwrap(), &space, &KernelConfig::default(), &[0.0]).unwrap();
        let params = init_params(CircuitShape::new(2, 0).unwrap(), 0);
        assert!(obj.shift_gradient(&params, GradientMode::Exact).is_err());
    }
}
