#![allow(dead_code)]

use exomega_core::ScenarioMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StudentT};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Heavy-tailed return scenarios: a common factor plus idiosyncratic
/// Student-t noise, drifts spread so the instruments differ in mean.
pub fn heavy_tailed(seed: u64, n: usize, j: usize, uniform: bool) -> ScenarioMatrix {
    let mut r = rng(seed);
    let t = StudentT::new(4.0).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let drift: Vec<f64> = (0..n)
        .map(|i| 0.0005 + 0.001 * i as f64 + r.random_range(0.0..0.0005))
        .collect();
    let vol: Vec<f64> = (0..n)
        .map(|i| 0.005 + 0.005 * i as f64 + r.random_range(0.0..0.003))
        .collect();
    let rows: Vec<Vec<f64>> = (0..j)
        .map(|_| {
            let f: f64 = normal.sample(&mut r);
            (0..n)
                .map(|i| drift[i] + vol[i] * (0.5 * f + 0.8 * t.sample(&mut r) / 2f64.sqrt()))
                .collect()
        })
        .collect();
    let probs = if uniform {
        None
    } else {
        Some((0..j).map(|_| r.random_range(0.2..1.0)).collect())
    };
    let names = (0..n).map(|i| format!("a{i}")).collect();
    ScenarioMatrix::new(rows, probs, names).unwrap()
}

/// Random finite distribution with up to `max_atoms` atoms.
pub fn random_distribution(r: &mut ChaCha8Rng, max_atoms: usize) -> (Vec<f64>, Vec<f64>) {
    let k = r.random_range(1..=max_atoms);
    let scale = 10f64.powf(r.random_range(-3.0..1.0));
    let t = StudentT::new(3.0).unwrap();
    let outcomes: Vec<f64> = (0..k).map(|_| scale * t.sample(r)).collect();
    let w: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    (outcomes, w.into_iter().map(|v| v / total).collect())
}

/// Uniformly random point of the simplex of dimension `n`.
pub fn random_simplex_point(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -r.random_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Proptest settings with a fixed seed so runs are reproducible.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    }
}
