use proptest::prelude::*;
use qcbm::sim::{
    born_probabilities, build_state, init_params, CircuitParams, CircuitShape, CnotOrientation, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense-matrix reference for the whole ansatz, built gate by gate from
/// Kronecker products.
fn reference_state(params: &CircuitParams) -> Vec<f64> {
    let shape = params.shape();
    let n = shape.qubits;
    let dim = 1usize << n;
    let mut psi = vec![0.0; dim];
    psi[0] = 1.0;
    let apply = |psi: &Vec<f64>, m: &Vec<Vec<f64>>| -> Vec<f64> {
        (0..dim).map(|r| (0..dim).map(|c| m[r][c] * psi[c]).sum()).collect()
    };
    let ry = |q: usize, t: f64| -> Vec<Vec<f64>> {
        let (s, c) = (t / 2.0).sin_cos();
        let mut m = vec![vec![0.0; dim]; dim];
        for col in 0..dim {
            let bit = (col >> q) & 1;
            let flipped = col ^ (1 << q);
            // column `col` of the 2x2 block [[c, -s], [s, c]]
            m[col][col] = c;
            m[flipped][col] = if bit == 0 { s } else { -s };
        }
        m
    };
    let cnot = |ctl: usize, tgt: usize| -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; dim]; dim];
        for col in 0..dim {
            let row = if (col >> ctl) & 1 == 1 { col ^ (1 << tgt) } else { col };
            m[row][col] = 1.0;
        }
        m
    };
    for layer in 0..=shape.layers {
        for q in 0..n {
            psi = apply(&psi, &ry(q, params.rotation_angle(layer, q)));
        }
        if layer < shape.layers {
            let mut pairs: Vec<usize> = (0..n.saturating_sub(1)).step_by(2).collect();
            pairs.extend((1..n.saturating_sub(1)).step_by(2));
            for q in pairs {
                let m = match shape.cnot {
                    CnotOrientation::LowControl => cnot(q, q + 1),
                    CnotOrientation::HighControl => cnot(q + 1, q),
                };
                psi = apply(&psi, &m);
            }
        }
    }
    psi
}

fn random_params(n: usize, l: usize, seed: u64) -> CircuitParams {
    let shape = CircuitShape::new(n, l).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = (0..shape.param_count()).map(|_| rng.gen_range(-4.0..4.0)).collect();
    CircuitParams::with_standard_offsets(shape, theta).unwrap()
}

#[test]
fn matches_dense_reference() {
    for n in 1..=5 {
        for l in 0..=3 {
            for orientation in [CnotOrientation::LowControl, CnotOrientation::HighControl] {
                let mut p = random_params(n, l, (n * 10 + l) as u64);
                p = CircuitParams::with_offsets(p.shape().with_cnot(orientation), p.theta().to_vec(), p.offsets().to_vec())
                    .unwrap();
                let fast = build_state(&p);
                let slow = reference_state(&p);
                for (a, b) in fast.amplitudes().iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-12, "n={n} l={l}");
                }
            }
        }
    }
}

#[test]
fn zero_parameters_uniform() {
    for n in 1..=12 {
        for l in [0, 1, 3, 6] {
            let shape = CircuitShape::new(n, l).unwrap();
            let p = CircuitParams::with_standard_offsets(shape, vec![0.0; shape.param_count()]).unwrap();
            let expected = 1.0 / (1u64 << n) as f64;
            for v in born_probabilities(&build_state(&p)) {
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn norm_preserved_over_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..1000 {
        let n = rng.gen_range(1..=8);
        let l = rng.gen_range(0..=4);
        let s = build_state(&random_params(n, l, i));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.amplitudes().iter().all(|a| a.is_finite()));
    }
}

#[test]
fn depth_zero_factorizes() {
    for n in 1..=6 {
        let p = random_params(n, 0, n as u64);
        let probs = born_probabilities(&build_state(&p));
        let p1: Vec<f64> = (0..n).map(|q| (p.rotation_angle(0, q) / 2.0).sin().powi(2)).collect();
        for (b, &v) in probs.iter().enumerate() {
            let product: f64 = (0..n).map(|q| if (b >> q) & 1 == 1 { p1[q] } else { 1.0 - p1[q] }).product();
            assert!((v - product).abs() < 1e-12);
        }
    }
}

#[test]
fn initial_state_near_plus() {
    let p = init_params(CircuitShape::new(6, 2).unwrap(), 4);
    let probs = born_probabilities(&build_state(&p));
    for v in probs {
        assert!((v - 1.0 / 64.0).abs() < 0.01);
    }
}

proptest! {
    #[test]
    fn single_gates_preserve_norm(n in 1usize..=6, seed in any::<u64>(), theta in -10.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        let q = rng.gen_range(0..n);
        s.apply_ry(q, theta);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        if n > 1 {
            let t = (q + 1) % n;
            s.apply_cnot(q, t);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
