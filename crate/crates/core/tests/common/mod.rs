#![allow(dead_code)]

use breakchain::{ModelParams, PotentialSpec};

pub fn reference_spec() -> PotentialSpec<f64> {
    PotentialSpec::quadratic([1.0, -4.0, 3.0], 2.0, 3.0).unwrap()
}

pub fn reference_model(sigma: f64, epsilon: f64) -> ModelParams<f64> {
    ModelParams::new(reference_spec().extend_default().unwrap(), sigma, epsilon).unwrap()
}

/// `U(y) = (y-2)² + 0.1 (y-2)^4 - 1.1` on `[0, 3)`.
pub fn quartic_model(sigma: f64, epsilon: f64) -> ModelParams<f64> {
    let c = vec![0.1, -0.8, 3.4, -7.2, 4.5];
    let u = PotentialSpec::piecewise(vec![0.0, 3.0], vec![c], 2.0, 3.0)
        .unwrap()
        .extend_default()
        .unwrap();
    ModelParams::new(u, sigma, epsilon).unwrap()
}
