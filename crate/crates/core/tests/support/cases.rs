//! Random problem generators shared by the property tests.

#![allow(dead_code)]

use forecal_core::forest::{ConstraintVector, FeatureMatrix, ForestParams, Monotonicity};
use forecal_core::synthetic::{generate, DistortionSpec};
use forecal_core::CalibrationDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct ForestCase {
    pub x: FeatureMatrix,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub constraints: ConstraintVector,
    pub params: ForestParams,
}

/// A forest fitting problem with `n ∈ [1, 500]`, `d ∈ [1, 3]`, mixed
/// weights, constraint directions, target scales and tree settings.
pub fn forest_case(seed: u64) -> ForestCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if rng.random_bool(0.1) { rng.random_range(1..=5) } else { rng.random_range(1..=500) };
    let d = rng.random_range(1..=3);
    let grid = rng.random_bool(0.3);
    let data: Vec<f64> = (0..n * d)
        .map(|_| {
            if grid {
                rng.random_range(0..8) as f64 / 7.0
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect();
    let scale = [1e-3, 1.0, 50.0][rng.random_range(0..3)];
    let y: Vec<f64> = match rng.random_range(0..4) {
        0 => vec![rng.random_range(-1.0..1.0) * scale; n],
        1 => (0..n).map(|_| f64::from(rng.random_range(0u8..=1))).collect(),
        _ => (0..n)
            .map(|i| {
                let row = &data[i * d..(i + 1) * d];
                (row.iter().sum::<f64>().sin() + rng.random_range(-0.5..0.5)) * scale
            })
            .collect(),
    };
    let w: Vec<f64> = if rng.random_bool(0.5) {
        vec![1.0; n]
    } else {
        (0..n).map(|_| rng.random_range(0.05..10.0)).collect()
    };
    let constraints = ConstraintVector::new(
        (0..d)
            .map(|_| match rng.random_range(0..3) {
                0 => Monotonicity::Decreasing,
                1 => Monotonicity::Unconstrained,
                _ => Monotonicity::Increasing,
            })
            .collect(),
    );
    let params = ForestParams {
        n_trees: rng.random_range(1..=25),
        min_samples_leaf: rng.random_range(1..=6),
        max_depth: if rng.random_bool(0.5) { None } else { Some(rng.random_range(1..=10)) },
        bootstrap: rng.random_bool(0.7),
        seed: rng.random(),
    };
    ForestCase {
        x: FeatureMatrix::new(n, d, data).unwrap(),
        y,
        w,
        constraints,
        params,
    }
}

/// `count` probe points spanning well beyond the training box, plus the
/// training rows themselves.
pub fn probe_points(case: &ForestCase, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = case.x.cols();
    let mut probes: Vec<Vec<f64>> = (0..case.x.rows().min(count / 4)).map(|i| case.x.row(i).to_vec()).collect();
    while probes.len() < count {
        probes.push((0..d).map(|_| rng.random_range(-5.0..5.0)).collect());
    }
    probes
}

/// A calibration dataset drawn either from the synthetic generator or from
/// an arbitrary random score/label process.
pub fn calibration_dataset(seed: u64) -> CalibrationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.random_bool(0.5) {
        let spec = match rng.random_range(0..3) {
            0 => DistortionSpec::sigmoid(rng.random_range(1.0..4.0)),
            1 => DistortionSpec::sigmoid(rng.random_range(0.25..1.0)),
            _ => DistortionSpec::shift(rng.random_range(-0.2..0.2)),
        };
        let n = rng.random_range(50..=3000);
        generate(n, &spec, rng.random()).unwrap().0
    } else {
        let n = rng.random_range(1..=1500);
        let probs: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.2) {
                    rng.random_range(0..=10) as f64 / 10.0
                } else {
                    rng.random::<f64>().powf(rng.random_range(0.3..3.0))
                }
            })
            .collect();
        let labels = probs.iter().map(|_| u8::from(rng.random_bool(0.4))).collect();
        CalibrationDataset::new(probs, labels).unwrap()
    }
}
