#![allow(dead_code)]

use manifold_radon::harmonics::SpherePoint;
use manifold_radon::spaces::{weyl_dimension, HarmonicCoefficients};
use manifold_radon::Manifold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_coefficients(m: Manifold, omega: f64, rng: &mut ChaCha8Rng) -> HarmonicCoefficients {
    let d = weyl_dimension(m, omega) as usize;
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    HarmonicCoefficients::from_vector(m, omega, &v).unwrap()
}

pub fn random_sphere(rng: &mut ChaCha8Rng) -> SpherePoint {
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if let Ok(p) = SpherePoint::new(v[0], v[1], v[2]) {
            return p;
        }
    }
}

pub fn keep_degrees(c: &HarmonicCoefficients, keep: impl Fn(usize) -> bool) -> HarmonicCoefficients {
    c.map_blocks(|(k, _), v| if keep(k) { v } else { 0.0 })
}

pub fn sample(c: &HarmonicCoefficients, pts: &[manifold_radon::spaces::ManifoldPoint]) -> Vec<f64> {
    pts.iter().map(|p| c.evaluate(p).unwrap()).collect()
}
