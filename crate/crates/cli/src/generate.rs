use exomega_core::{Error, Result, ScenarioMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StudentT};

/// One common normal factor plus Student-t idiosyncratic noise. Drift and
/// volatility grow with the instrument index so the instruments differ.
pub fn heavy_tailed(seed: u64, n: usize, j: usize, dof: f64, weighted: bool) -> Result<ScenarioMatrix> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let t = StudentT::new(dof).map_err(|_| Error::Parameter {
        name: "dof",
        value: dof,
        domain: "(0, inf)",
    })?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    // Unit-variance noise when the variance exists.
    let t_scale = if dof > 2.0 { ((dof - 2.0) / dof).sqrt() } else { 1.0 };
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
                .map(|i| drift[i] + vol[i] * (0.6 * f + 0.8 * t_scale * t.sample(&mut r)))
                .collect()
        })
        .collect();
    let probs = weighted.then(|| (0..j).map(|_| r.random_range(0.2..1.0)).collect());
    let names = (0..n).map(|i| format!("a{}", i + 1)).collect();
    ScenarioMatrix::new(rows, probs, names)
}
