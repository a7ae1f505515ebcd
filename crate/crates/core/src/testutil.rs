use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::{build_design, StackedDesign, TemporalDataset};
use crate::fit::init_sigma;
use crate::solver::AdmmConfig;

/// Correlated Gaussian panels with a shared mixing matrix drifting over time.
pub fn random_dataset(seed: u64, times: usize, n: usize, p: usize) -> TemporalDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rng.random_range(-0.4..0.4) });
    let drift = DMatrix::from_fn(p, p, |_, _| rng.random_range(-0.2..0.2));
    let panels = (0..times)
        .map(|k| {
            let mix = &base + &drift * (k as f64 / times.max(1) as f64);
            let z = DMatrix::<f64>::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
            z * mix
        })
        .collect();
    TemporalDataset::new(panels).unwrap()
}

/// Design at the variance-based initial `σ`.
pub fn random_design(seed: u64, times: usize, n: usize, p: usize) -> StackedDesign<f64> {
    let ds = random_dataset(seed, times, n, p);
    build_design(&ds, &init_sigma(&ds).unwrap()).unwrap()
}

/// Tolerances well below the defaults, for oracle comparisons.
pub fn tight_admm() -> AdmmConfig<f64> {
    AdmmConfig { a: 1.0, max_iter: 200_000, eps_abs: 1e-11, eps_rel: 1e-10 }
}
