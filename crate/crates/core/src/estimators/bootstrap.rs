//! Nonparametric pairs bootstrap of a gridded fit.

use super::{fit, Dataset, EstimatorSpec};
use crate::error::{Error, Result};
use crate::grid::GriddedFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Independent generator for `(seed, stream)`; draws and replications each
/// get their own stream so results do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// Bootstrap standard deviation of the fit at every node.
    pub stderr: GriddedFunction<f64>,
    pub draws: Vec<GriddedFunction<f64>>,
    /// Draws that failed and were redrawn.
    pub failures: usize,
}

/// `draws` pairs-bootstrap refits, `n` out of `n` with replacement.
///
/// A failed refit is redrawn from a derived stream; more than 10% failures
/// abort.
pub fn bootstrap(data: &Dataset, spec: &EstimatorSpec, draws: usize, seed: u64) -> Result<BootstrapResult> {
    if draws < 2 {
        return Err(Error::TooFewDraws { min: 2, got: draws });
    }
    let max_failures = draws / 10;
    let n = data.len();
    let results = (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut failures = 0usize;
            loop {
                let stream = ((failures as u64) << 32) | b as u64;
                let mut rng = stream_rng(seed, stream);
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                match fit(&data.select(&idx), spec) {
                    Ok(r) => return Ok((r.estimate, failures)),
                    Err(e) if failures >= max_failures => return Err(e),
                    Err(_) => failures += 1,
                }
            }
        })
        .collect::<Vec<Result<_>>>();

    let mut out = Vec::with_capacity(draws);
    let mut failures = 0;
    for r in results {
        match r {
            Ok((est, f)) => {
                failures += f;
                out.push(est);
            }
            Err(_) => {
                return Err(Error::BootstrapFailed {
                    failures: failures + max_failures + 1,
                    draws,
                })
            }
        }
    }
    if failures > max_failures {
        return Err(Error::BootstrapFailed { failures, draws });
    }
    let stderr = pointwise_sd(&out)?;
    Ok(BootstrapResult {
        stderr,
        draws: out,
        failures,
    })
}

/// Sample standard deviation across functions, node by node.
pub fn pointwise_sd(fs: &[GriddedFunction<f64>]) -> Result<GriddedFunction<f64>> {
    let m = fs.len() as f64;
    let len = fs[0].len();
    let mut mean = vec![0.0; len];
    for f in fs {
        mean.iter_mut().zip(f.values()).for_each(|(a, &v)| *a += v);
    }
    mean.iter_mut().for_each(|a| *a /= m);
    let mut ss = vec![0.0; len];
    for f in fs {
        ss.iter_mut()
            .zip(f.values())
            .zip(&mean)
            .for_each(|((s, &v), &mu)| *s += (v - mu) * (v - mu));
    }
    fs[0].with_values(ss.into_iter().map(|s| (s / (m - 1.0)).sqrt()).collect())
}
