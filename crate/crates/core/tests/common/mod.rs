//! Seeded test densities shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use markov_transport::models::{circle_diffusion, circle_nodes};
use markov_transport::MarkovTriple;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rescales `v` to unit `μ`-mean.
pub fn normalize(triple: &MarkovTriple, v: Vec<f64>) -> Vec<f64> {
    let m = triple.mean(&v);
    v.into_iter().map(|x| x / m).collect()
}

/// Positive density with independent uniform weights in `[0.5, 1.5]`.
pub fn rough_density(triple: &MarkovTriple, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v = (0..triple.len())
        .map(|_| rng.random_range(0.5..1.5))
        .collect();
    normalize(triple, v)
}

/// `1 + Σ_{k≤3}` random low Fourier modes with amplitudes below 0.25.
pub fn smooth_density(triple: &MarkovTriple, xs: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = vec![1.0; xs.len()];
    for k in 1..=3 {
        let a: f64 = rng.random_range(-0.25..0.25);
        let b: f64 = rng.random_range(-0.25..0.25);
        for (vi, x) in v.iter_mut().zip(xs) {
            *vi += a * (TAU * k as f64 * x).cos() + b * (TAU * k as f64 * x).sin();
        }
    }
    normalize(triple, v)
}

/// Flat circle on `m` nodes of the unit circle and its node positions.
pub fn flat_circle(m: usize) -> (MarkovTriple, Vec<f64>) {
    (
        circle_diffusion(&vec![0.0; m], 1.0).unwrap(),
        circle_nodes(m, 1.0),
    )
}
