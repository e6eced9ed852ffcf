//! Real-amplitude statevector simulation of the hardware-efficient ansatz.
//!
//! The circuit has `L + 1` layers of `R_y` rotations, one per qubit, with a
//! brickwork CNOT layer between consecutive rotation layers: first the pairs
//! `(0,1), (2,3), ...`, then `(1,2), (3,4), ...`. By default the
//! lower-index qubit of each pair is the control; [`CnotOrientation`] can
//! flip that for every gate. Only `R_y` and CNOT appear, so every amplitude
//! stays real and the state is stored as `2^n` `f64`s.
//!
//! Qubit `i` carries bit `i` of the measured bitstring, so amplitude index
//! `k` is the outcome whose standard binary value is `k`.

use std::f64::consts::FRAC_PI_2;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the uniform initialization interval for trainable angles.
pub const INIT_HALF_WIDTH: f64 = 0.025;

/// Constant added to every first-layer angle so each qubit starts near `|+>`.
pub const FIRST_LAYER_OFFSET: f64 = FRAC_PI_2;

/// Largest qubit count the simulator accepts.
pub const MAX_QUBITS: usize = 26;

/// Which qubit of each brickwork pair controls the CNOT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CnotOrientation {
    /// Control on the lower-index (less significant) qubit.
    #[default]
    LowControl,
    /// Control on the higher-index (more significant) qubit.
    HighControl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitShape {
    pub qubits: usize,
    pub layers: usize,
    #[serde(default)]
    pub cnot: CnotOrientation,
}

impl CircuitShape {
    pub fn new(qubits: usize, layers: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {qubits}"
            )));
        }
        Ok(Self { qubits, layers, cnot: CnotOrientation::LowControl })
    }

    pub fn with_cnot(self, cnot: CnotOrientation) -> Self {
        Self { cnot, ..self }
    }

    /// `n (L + 1)`.
    pub fn param_count(&self) -> usize {
        self.qubits * (self.layers + 1)
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Position of the angle for `qubit` in rotation layer `layer`.
    pub fn param_index(&self, layer: usize, qubit: usize) -> usize {
        layer * self.qubits + qubit
    }
}

/// Trainable angles plus the fixed first-layer offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    shape: CircuitShape,
    theta: Vec<f64>,
    offsets: Vec<f64>,
}

impl CircuitParams {
    /// Angles without first-layer offsets.
    pub fn new(shape: CircuitShape, theta: Vec<f64>) -> Result<Self> {
        let offsets = vec![0.0; shape.qubits];
        Self::with_offsets(shape, theta, offsets)
    }

    pub fn with_offsets(shape: CircuitShape, theta: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if theta.len() != shape.param_count() {
            return Err(Error::DimensionMismatch { expected: shape.param_count(), got: theta.len() });
        }
        if offsets.len() != shape.qubits {
            return Err(Error::DimensionMismatch { expected: shape.qubits, got: offsets.len() });
        }
        if let Some(bad) = theta.iter().chain(&offsets).find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite angle {bad}")));
        }
        Ok(Self { shape, theta, offsets })
    }

    /// Angles with the standard `pi/2` offset on every first-layer rotation.
    pub fn with_standard_offsets(shape: CircuitShape, theta: Vec<f64>) -> Result<Self> {
        let offsets = vec![FIRST_LAYER_OFFSET; shape.qubits];
        Self::with_offsets(shape, theta, offsets)
    }

    pub fn shape(&self) -> CircuitShape {
        self.shape
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// The angle actually applied by the rotation at `(layer, qubit)`.
    pub fn rotation_angle(&self, layer: usize, qubit: usize) -> f64 {
        let base = self.theta[self.shape.param_index(layer, qubit)];
        if layer == 0 {
            base + self.offsets[qubit]
        } else {
            base
        }
    }

    /// Copy with parameter `index` moved by `delta`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.theta[index] += delta;
        out
    }
}

/// Trainable angles i.i.d. uniform on `[-0.025, 0.025]`, first layer offset by `pi/2`.
pub fn init_params(shape: CircuitShape, rng_seed: u64) -> CircuitParams {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dist = Uniform::new_inclusive(-INIT_HALF_WIDTH, INIT_HALF_WIDTH);
    let theta = (0..shape.param_count()).map(|_| dist.sample(&mut rng)).collect();
    CircuitParams {
        shape,
        theta,
        offsets: vec![FIRST_LAYER_OFFSET; shape.qubits],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<f64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![0.0; 1 << qubits];
        amplitudes[0] = 1.0;
        Self { qubits, amplitudes }
    }

    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{len} amplitudes is not a power of two")));
        }
        let norm: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("state is not normalized (norm^2 = {norm})")));
        }
        Ok(Self { qubits: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// `R_y(theta) = [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]` on `qubit`.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (0.5 * theta).sin_cos();
        let stride = 1 << qubit;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = c * x0 - s * x1;
                *a1 = s * x0 + c * x1;
            }
        }
    }

    /// Swaps the target bit on every basis state whose control bit is 1.
    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        debug_assert_ne!(control, target);
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        let (hi, lo) = if control > target { (control, target) } else { (target, control) };
        let hi_stride = 1usize << hi;
        let lo_stride = 1usize << lo;
        // enumerate indices with both bits clear, then fix control = 1
        for outer in (0..self.amplitudes.len()).step_by(hi_stride << 1) {
            for mid in (outer..outer + hi_stride).step_by(lo_stride << 1) {
                for i in mid..mid + lo_stride {
                    let a = i | cmask;
                    self.amplitudes.swap(a, a | tmask);
                }
            }
        }
    }

    pub fn apply_entangling_layer(&mut self, orientation: CnotOrientation) {
        let n = self.qubits;
        let pairs = (0..n.saturating_sub(1)).step_by(2).chain((1..n.saturating_sub(1)).step_by(2));
        for q in pairs {
            match orientation {
                CnotOrientation::LowControl => self.apply_cnot(q, q + 1),
                CnotOrientation::HighControl => self.apply_cnot(q + 1, q),
            }
        }
    }
}

/// Runs the ansatz on `|0...0>`.
pub fn build_state(params: &CircuitParams) -> StateVector {
    let shape = params.shape();
    let mut state = StateVector::zero(shape.qubits);
    for layer in 0..=shape.layers {
        for q in 0..shape.qubits {
            state.apply_ry(q, params.rotation_angle(layer, q));
        }
        if layer < shape.layers {
            state.apply_entangling_layer(shape.cnot);
        }
    }
    state
}

/// `p(b) = <b|psi>^2`, indexed by the standard value of `b`.
pub fn born_probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a * a).collect()
}

/// Measurement outcomes as standard bitstring values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotSample {
    qubits: usize,
    outcomes: Vec<u32>,
}

impl ShotSample {
    pub fn new(qubits: usize, outcomes: Vec<u32>) -> Self {
        Self { qubits, outcomes }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn shots(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[u32] {
        &self.outcomes
    }

    /// Distinct outcomes with multiplicities, ascending by outcome.
    pub fn counts(&self) -> Vec<(u32, u32)> {
        let mut sorted = self.outcomes.clone();
        sorted.sort_unstable();
        let mut out: Vec<(u32, u32)> = Vec::new();
        for b in sorted {
            match out.last_mut() {
                Some((v, c)) if *v == b => *c += 1,
                _ => out.push((b, 1)),
            }
        }
        out
    }
}

/// Inverse-CDF sampler over a fixed probability vector.
#[derive(Debug, Clone)]
pub struct CdfSampler {
    cumulative: Vec<f64>,
}

impl CdfSampler {
    pub fn new(probabilities: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p.max(0.0);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().expect("empty distribution");
        let u = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) as u32
    }
}

pub fn sample_probabilities<R: Rng + ?Sized>(probabilities: &[f64], shots: usize, rng: &mut R) -> Vec<u32> {
    let sampler = CdfSampler::new(probabilities);
    (0..shots).map(|_| sampler.draw(rng)).collect()
}

/// I.i.d. measurements of `state`, deterministic in `rng_seed`.
pub fn sample_shots(state: &StateVector, shots: usize, rng_seed: u64) -> ShotSample {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let probs = born_probabilities(state);
    ShotSample::new(state.qubits, sample_probabilities(&probs, shots, &mut rng))
}
