use qcbm::codes::{BinaryCode, CodeKind};
use qcbm::data::{pushforward, sample_centered_gaussian, DiscretizedSpace};
use qcbm::mmd::{mmd2_exact, Estimator, KernelConfig};
use qcbm::sim::{born_probabilities, build_state, CircuitParams, CircuitShape, CnotOrientation};
use qcbm::trainer::{
    q_score, reference_loss, shift_gradient, train, AdamConfig, GradientMode, Objective, Seeds, TrainingConfig,
    TrainingRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact_loss(params: &CircuitParams, code: &BinaryCode, data: &[f64], space: &DiscretizedSpace) -> f64 {
    let p = born_probabilities(&build_state(params));
    mmd2_exact(&pushforward(&p, code).unwrap(), data, space, &KernelConfig::default()).unwrap()
}

#[test]
fn parameter_shift_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = KernelConfig::default();
    let h = 1e-5;
    for instance in 0..50 {
        let n = rng.gen_range(1..=4usize);
        let l = rng.gen_range(0..=2usize);
        let kind = CodeKind::ALL[instance % 4];
        let cnot = if instance % 3 == 0 { CnotOrientation::HighControl } else { CnotOrientation::LowControl };
        let shape = CircuitShape::new(n, l).unwrap().with_cnot(cnot);
        let theta: Vec<f64> = (0..shape.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let params = CircuitParams::with_standard_offsets(shape, theta).unwrap();
        let space = DiscretizedSpace::new(n as u32).unwrap();
        let code = BinaryCode::new(kind, n as u32, instance as u64).unwrap();
        let data: Vec<f64> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let obj = Objective::new(code.clone(), &space, &cfg, &data).unwrap();
        let grad = obj.shift_gradient(&params, GradientMode::Exact).unwrap();
        assert_eq!(grad.circuits, 2 * shape.param_count() + 1);
        for i in 0..shape.param_count() {
            let fd = (exact_loss(&params.shifted(i, h), &code, &data, &space)
                - exact_loss(&params.shifted(i, -h), &code, &data, &space))
                / (2.0 * h);
            assert!((grad.gradient[i] - fd).abs() < 1e-6, "instance {instance} param {i}: {} vs {fd}", grad.gradient[i]);
        }
    }
}

#[test]
fn gradient_vanishes_at_global_minimum() {
    // offsets with zero angles give the uniform distribution for any depth,
    // which equals the empirical distribution of one draw per representative
    let n = 3;
    let space = DiscretizedSpace::new(n).unwrap();
    let data = space.representatives();
    let shape = CircuitShape::new(n as usize, 2).unwrap();
    let params = CircuitParams::with_standard_offsets(shape, vec![0.0; shape.param_count()]).unwrap();
    for kind in CodeKind::ALL {
        let obj = Objective::new(BinaryCode::new(kind, n, 1).unwrap(), &space, &KernelConfig::default(), &data).unwrap();
        assert!(obj.loss_exact(&params).unwrap().abs() < 1e-12);
        let g = obj.shift_gradient(&params, GradientMode::Exact).unwrap();
        assert!(g.gradient.iter().all(|v| v.abs() < 1e-8), "{kind:?}: {:?}", g.gradient);
    }
}

#[test]
fn shot_gradient_converges_to_exact() {
    let n = 3;
    let space = DiscretizedSpace::new(n).unwrap();
    let data = sample_centered_gaussian(64, 0.3, 1).unwrap().samples;
    let code = BinaryCode::reflected_gray(n).unwrap();
    let obj = Objective::new(code.clone(), &space, &KernelConfig::default(), &data).unwrap();
    let shape = CircuitShape::new(n as usize, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let theta: Vec<f64> = (0..shape.param_count()).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let params = CircuitParams::with_standard_offsets(shape, theta).unwrap();
    let exact = obj.shift_gradient(&params, GradientMode::Exact).unwrap().gradient;

    let shots = 1 << 16;
    let repeats = 12;
    let runs: Vec<Vec<f64>> = (0..repeats)
        .map(|s| shift_gradient(&params, &data, &code, &space, &KernelConfig::default(), shots, s).unwrap().gradient)
        .collect();
    let dim = exact.len();
    let mut mad = 0.0;
    let mut se = 0.0;
    for i in 0..dim {
        let vals: Vec<f64> = runs.iter().map(|r| r[i]).collect();
        let mean = vals.iter().sum::<f64>() / repeats as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt();
        mad += vals.iter().map(|v| (v - exact[i]).abs()).sum::<f64>() / repeats as f64;
        se += sd;
    }
    mad /= dim as f64;
    se /= dim as f64;
    assert!(mad < 3.0 * se, "mean abs deviation {mad}, standard error {se}");

    // sixty-four times fewer shots should be roughly eight times noisier
    let coarse: f64 = (0..repeats)
        .map(|s| {
            let g = shift_gradient(&params, &data, &code, &space, &KernelConfig::default(), shots / 64, 100 + s)
                .unwrap()
                .gradient;
            g.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() / dim as f64
        })
        .sum::<f64>()
        / repeats as f64;
    let ratio = coarse / mad;
    assert!((4.0..16.0).contains(&ratio), "noise ratio {ratio}");
}

#[test]
fn q_score_scales_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let history: Vec<f64> = (0..100).map(|_| rng.gen_range(1e-4..1.0)).collect();
    let q = q_score(&history).unwrap();
    for c in [1e-3, 0.5, 7.0] {
        let scaled: Vec<f64> = history.iter().map(|v| v * c).collect();
        assert!((q_score(&scaled).unwrap() - c * q).abs() <= 1e-12 * c * q);
    }
    assert!((q_score(&[4.0, 9.0]).unwrap() - 6.0).abs() < 1e-12);
}

#[test]
fn reference_loss_statistics() {
    let space = DiscretizedSpace::new(8).unwrap();
    let cfg = KernelConfig::default();
    let ds = sample_centered_gaussian(256, 0.03, 0).unwrap();
    let stats = |size: usize, offset: u64| {
        let v: Vec<f64> = (0..10).map(|s| reference_loss(&ds, &space, &cfg, size, offset + s).unwrap()).collect();
        let mean = v.iter().sum::<f64>() / 10.0;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
        (v, mean, sd / 10f64.sqrt())
    };
    let (values, mean, se) = stats(256, 0);
    assert!(values.iter().all(|&v| v > 0.0));
    assert!(se / mean < 0.5, "relative standard error {}", se / mean);
    let (_, mean512, se512) = stats(512, 1000);
    assert!((mean512 - mean).abs() <= 3.0 * (se * se + se512 * se512).sqrt(), "{mean} vs {mean512}");
}

fn config(code: CodeKind, epochs: usize) -> TrainingConfig {
    TrainingConfig {
        epochs,
        shots: 256,
        code,
        shape: CircuitShape::new(6, 1).unwrap(),
        kernel: KernelConfig::default(),
        estimator: Estimator::Biased,
        adam: AdamConfig::default(),
        seeds: Seeds::from_master(4),
        dataset: sample_centered_gaussian(256, 0.1, 4).unwrap(),
        test_samples: 256,
        exact_loss: true,
    }
}

#[test]
fn training_reduces_loss_and_reports_budget() {
    let rec = train(&config(CodeKind::ReflectedGray, 40)).unwrap();
    assert_eq!(rec.losses.len(), 40);
    assert_eq!(rec.circuits_per_epoch, 2 * 6 * 2 + 1 + 1);
    assert_eq!(rec.wallclock_ms.len(), 40);
    assert_eq!(rec.synthetic.len(), 256);
    let exact = rec.exact_losses.as_ref().unwrap();
    assert!(exact[39] < 0.5 * exact[0], "{} -> {}", exact[0], exact[39]);
    assert!((rec.q_score - q_score(&rec.losses).unwrap()).abs() < 1e-15);
    assert_eq!(rec.clamp_count, 0);
}

#[test]
fn unbiased_estimator_clamps_instead_of_failing() {
    let mut cfg = config(CodeKind::ReflectedGray, 30);
    cfg.estimator = Estimator::Unbiased;
    cfg.dataset = sample_centered_gaussian(256, 0.6, 4).unwrap();
    let rec = train(&cfg).unwrap();
    assert!(rec.losses.iter().all(|&v| v > 0.0));
    assert_eq!(rec.clamp_count, rec.losses.iter().filter(|&&v| v == qcbm::trainer::LOSS_CLAMP).count());
}

#[test]
fn training_is_deterministic_and_seed_sensitive() {
    let a = train(&config(CodeKind::Standard, 5)).unwrap();
    let b = train(&config(CodeKind::Standard, 5)).unwrap();
    assert_eq!(a.losses, b.losses);
    assert_eq!(a.final_theta, b.final_theta);
    let mut other = config(CodeKind::Standard, 5);
    other.seeds.shots ^= 1;
    let c = train(&other).unwrap();
    assert_eq!(a.initial_theta, c.initial_theta);
    assert_ne!(a.losses, c.losses);
}

#[test]
fn record_round_trips_through_json() {
    let rec = train(&config(CodeKind::MonotoneGray, 3)).unwrap();
    let json = serde_json::to_string(&rec).unwrap();
    let back: TrainingRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rec);
}
