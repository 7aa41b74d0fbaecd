#![allow(dead_code)]

use nalgebra::Matrix3;
use qec3_core::CovarianceMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `A Aᵀ` with `A` uniform on `[−1, 1]`, scaled so rates are O(1).
pub fn random_covariance(rng: &mut ChaCha8Rng) -> CovarianceMatrix {
    let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
    CovarianceMatrix::new(a * a.transpose()).expect("A Aᵀ is PSD")
}

/// Central second difference.
pub fn second_difference<F: Fn(f64) -> f64>(f: &F, h: f64) -> f64 {
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

/// Central third difference.
pub fn third_difference<F: Fn(f64) -> f64>(f: &F, h: f64) -> f64 {
    (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h)
}

/// One Richardson step for an `O(h²)` estimator.
pub fn richardson<G: Fn(f64) -> f64>(g: G, h: f64) -> f64 {
    (4.0 * g(h / 2.0) - g(h)) / 3.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
