#![allow(dead_code)]

use hyprl::environment::{EnvState, HistoryEntry};
use hyprl::metadata::N_METAFEATURES;
use hyprl::neuralnet::{NetworkShape, QNetworkParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random state with a sentinel plus `len` history steps of width `p_enc`.
pub fn random_state<R: Rng>(rng: &mut R, p_enc: usize, len: usize) -> EnvState {
    let mut meta = [0.0; N_METAFEATURES];
    meta.iter_mut().for_each(|m| *m = rng.random_range(-2.0..2.0));
    let mut history = vec![HistoryEntry { action: None, encoded: vec![0.0; p_enc], reward: 0.0 }];
    for t in 0..len {
        history.push(HistoryEntry {
            action: Some(t),
            encoded: (0..p_enc).map(|_| rng.random_range(0.0..1.0)).collect(),
            reward: rng.random_range(-1.0..0.0),
        });
    }
    EnvState::from_parts(0, meta, history)
}

/// Largest relative error between analytic and central-difference gradients
/// over every parameter entry. `floor` guards the denominator near zero.
pub fn max_relative_gradient_error(
    params: &QNetworkParams<f64>,
    batch: &[(&EnvState, usize, f64)],
    h: f64,
    floor: f64,
) -> f64 {
    let (grad, _) = params.q_gradients(batch).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for (a, arr) in grad.arrays().iter().enumerate() {
        for k in 0..arr.len() {
            let orig = probe.arrays()[a][k];
            probe.arrays_mut()[a][k] = orig + h;
            let plus = probe.batch_loss(batch).unwrap();
            probe.arrays_mut()[a][k] = orig - h;
            let minus = probe.batch_loss(batch).unwrap();
            probe.arrays_mut()[a][k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = arr[k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

/// One seeded random gradient-check instance: network and a single-example batch.
pub fn gradient_case(seed: u64) -> (QNetworkParams<f64>, EnvState, usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_hidden = rng.random_range(1..=8);
    let p_enc = rng.random_range(1..=4);
    let n_layer = rng.random_range(1..=8);
    let n_actions = rng.random_range(1..=10);
    let len = rng.random_range(0..=5);
    let params = QNetworkParams::random(NetworkShape::new(n_hidden, p_enc + 1, n_layer, n_actions), &mut rng).unwrap();
    let state = random_state(&mut rng, p_enc, len);
    let action = rng.random_range(0..n_actions);
    let target = rng.random_range(-2.0..1.0);
    (params, state, action, target)
}
