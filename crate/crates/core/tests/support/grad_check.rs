//! Central finite-difference check of the classifier backward pass.
#![allow(dead_code)]

use autovid::seed::stream_rng;
use autovid::zoo::{DropoutMode, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_instance(seed: u64) -> (MlpModel, Vec<f64>, Vec<usize>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = rng.random_range(1..7);
    let hidden = rng.random_range(1..9);
    let classes = rng.random_range(2..5);
    let batch = rng.random_range(1..7);
    let mut m = MlpModel::init(inputs, hidden, classes, &mut rng);
    for b in m.b1.iter_mut().chain(m.b2.iter_mut()) {
        *b = rng.random_range(-0.5..0.5);
    }
    let x = (0..batch * inputs).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let p = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..0.6) };
    (m, x, y, p)
}

pub fn params_mut(m: &mut MlpModel) -> Vec<&mut f64> {
    m.w1.iter_mut().chain(m.b1.iter_mut()).chain(m.w2.iter_mut()).chain(m.b2.iter_mut()).collect()
}

/// Norm-wise relative error between analytic and central-difference
/// gradients for each of `instances` random (model, batch) pairs.
pub fn relative_errors(instances: u64, h: f64) -> Vec<f64> {
    let mut errors = Vec::new();
    for seed in 0..instances {
        let (model, x, y, p) = random_instance(seed);
        let mask_rng = stream_rng(seed, 99);
        let pass = model.forward_loss(&x, &y, p, DropoutMode::Train, &mut mask_rng.clone()).unwrap();
        let analytic = model.backward(&pass.cache).unwrap().flatten();
        let loss_at = |m: &MlpModel| m.forward_loss(&x, &y, p, DropoutMode::Train, &mut mask_rng.clone()).unwrap().loss;
        let mut numeric = Vec::with_capacity(analytic.len());
        for i in 0..analytic.len() {
            let mut plus = model.clone();
            *params_mut(&mut plus)[i] += h;
            let mut minus = model.clone();
            *params_mut(&mut minus)[i] -= h;
            numeric.push((loss_at(&plus) - loss_at(&minus)) / (2.0 * h));
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        errors.push(if scale == 0.0 { 0.0 } else { diff / scale });
    }
    errors
}
