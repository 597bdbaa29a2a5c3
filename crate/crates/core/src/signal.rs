//! Incoming pressure signals `p_in(t_n)` and their sampled time derivative.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalSpec {
    /// i.i.d. uniform samples in `[-amplitude, amplitude]`.
    WhiteNoise { seed: u64, amplitude: f64 },
    Sine { frequency: f64, amplitude: f64 },
    /// One sample per line; blank lines and `#` comments are skipped.
    Custom { path: PathBuf },
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec::WhiteNoise {
            seed: 1,
            amplitude: 1.0,
        }
    }
}

impl SignalSpec {
    /// Samples at `t_n = n·dt`, `n = 0..n_samples`.
    pub fn sample(&self, n_samples: usize, dt: f64) -> Result<Vec<f64>> {
        match self {
            SignalSpec::WhiteNoise { seed, amplitude } => {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(*seed);
                Ok((0..n_samples)
                    .map(|_| amplitude * rng.random_range(-1.0..=1.0))
                    .collect())
            }
            SignalSpec::Sine {
                frequency,
                amplitude,
            } => Ok((0..n_samples)
                .map(|n| amplitude * (2.0 * std::f64::consts::PI * frequency * n as f64 * dt).sin())
                .collect()),
            SignalSpec::Custom { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let values: Vec<f64> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(|l| {
                        l.parse::<f64>()
                            .map_err(|e| Error::Config(format!("{}: bad sample {l:?}: {e}", path.display())))
                    })
                    .collect::<Result<_>>()?;
                if values.len() < n_samples {
                    return Err(Error::Config(format!(
                        "{} holds {} samples, {n_samples} needed",
                        path.display(),
                        values.len()
                    )));
                }
                Ok(values[..n_samples].to_vec())
            }
        }
    }

    /// Stable key for caching results that depend on this signal.
    pub fn cache_key(&self) -> String {
        match self {
            SignalSpec::WhiteNoise { seed, amplitude } => format!("noise:{seed}:{amplitude:e}"),
            SignalSpec::Sine {
                frequency,
                amplitude,
            } => format!("sine:{frequency:e}:{amplitude:e}"),
            SignalSpec::Custom { path } => format!("custom:{}", path.display()),
        }
    }
}

/// Second-order differences: central inside, one-sided at both ends.
pub fn derivative(p: &[f64], dt: f64) -> Vec<f64> {
    let n = p.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![(p[1] - p[0]) / dt; 2],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * dt)
                } else if i == n - 1 {
                    (3.0 * p[n - 1] - 4.0 * p[n - 2] + p[n - 3]) / (2.0 * dt)
                } else {
                    (p[i + 1] - p[i - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}
