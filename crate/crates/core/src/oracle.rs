//! Brute-force reference computations used to validate the fast paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte Carlo volume of the regularized hyperboloid body.
///
/// `xi0` is drawn with density `4 t^3 / T^4` on `[0, T]`, `T = 1/q0`, and
/// `(xi1, xi2, xi3)` uniformly in the cube `[-t, t]^3`; the weight of a hit
/// is then the constant `2 T^4`. Chunks have their own ChaCha stream, so the
/// result depends only on `seed` and `samples`.
pub fn monte_carlo_hyperboloid_volume(q0: f64, samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if !(q0 > 0.0) {
        return Err(Error::NonpositiveQ0(q0));
    }
    if samples < 2 {
        return Err(Error::TooFewSamples);
    }
    let t_max = 1.0 / q0;
    let weight = 2.0 * t_max.powi(4);
    let chunks = samples.div_ceil(CHUNK);
    let hits: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let u: f64 = rng.gen();
                let t = t_max * u.powf(0.25);
                let mut rho2 = 0.0;
                for _ in 0..3 {
                    let v = t * (2.0 * rng.gen::<f64>() - 1.0);
                    rho2 += v * v;
                }
                if rho2 <= t * t && (t * t - rho2).sqrt() + q0 * t <= 1.0 {
                    hits += 1;
                }
            }
            hits
        })
        .collect();
    let total: u64 = hits.iter().sum();
    let n = samples as f64;
    let p = total as f64 / n;
    Ok(MonteCarloEstimate {
        mean: weight * p,
        std_error: weight * (p * (1.0 - p) / (n - 1.0)).sqrt(),
        samples,
    })
}
