//! Seeded random test functions. Deterministic by construction: every
//! generator takes an explicit seed, so property tests are reproducible
//! bit-for-bit across runs and machines.

use crate::gridfn::GridFunction;
use crate::space::VolumeProfile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Random compactly supported grid function: log-spaced support radius in
/// [0.05, 5], 8–60 cells, values in (0, 3].
pub fn random_grid_function(profile: Arc<VolumeProfile>, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.gen_range(8..=60);
    let rmax = 0.05 * (100.0f64).powf(rng.gen::<f64>());
    let radii: Vec<f64> = (1..=cells).map(|i| rmax * i as f64 / cells as f64).collect();
    let values: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>() * 3.0 + 1e-6).collect();
    GridFunction::new(profile, radii, values, None).expect("generated grid is valid")
}

/// Random radially nonincreasing grid function (sorted positive values).
pub fn random_monotone_function(profile: Arc<VolumeProfile>, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = rng.gen_range(8..=60);
    let rmax = 0.05 * (100.0f64).powf(rng.gen::<f64>());
    let radii: Vec<f64> = (1..=cells).map(|i| rmax * i as f64 / cells as f64).collect();
    let mut values: Vec<f64> = (0..cells).map(|_| rng.gen::<f64>() * 3.0 + 1e-6).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    GridFunction::new(profile, radii, values, None).expect("generated grid is valid")
}

/// Rescale f so that ‖f‖_p = 1.
pub fn normalize_p(f: &GridFunction, p: f64) -> GridFunction {
    let n = f.norm_p(p);
    assert!(n > 0.0, "cannot normalize the zero function");
    f.scale(1.0 / n)
}
