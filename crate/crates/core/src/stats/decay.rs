//! Impact decay kernel by lagged least squares.
//!
//! Regresses `y_t` on `x_{t-k} = sgn(q_{t-k})|q_{t-k}|^delta` for `k = 0..=K`
//! without an intercept. Only windows whose whole lag history is present are
//! used. The normal equations are solved by Cholesky after a condition-number
//! check on the Gram matrix.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::normalize::AdjustedSample;
use super::{signed_power, StatsError};

/// Gram matrices with a larger eigenvalue ratio are treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayKernel {
    /// `beta[k]` is the impact at lag `k` of a unit transformed order size.
    pub beta: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Number of regression rows.
    pub rows: usize,
    pub condition: f64,
}

impl DecayKernel {
    pub fn max_lag(&self) -> usize {
        self.beta.len() - 1
    }

    /// Predicted `y` for the most recent element of `x_history` (oldest first).
    pub fn predict(&self, x_history: &[f64]) -> f64 {
        self.beta
            .iter()
            .zip(x_history.iter().rev())
            .map(|(b, x)| b * x)
            .sum()
    }
}

/// Running sums `sum_{j<=k} beta_j`: the price path after a single unit order.
pub fn cumulative_impact(beta: &[f64]) -> Vec<f64> {
    beta.iter()
        .scan(0.0, |acc, b| {
            *acc += b;
            Some(*acc)
        })
        .collect()
}

pub fn decay_regression(samples: &[AdjustedSample], delta: f64, max_lag: usize) -> Result<DecayKernel, StatsError> {
    let p = max_lag + 1;
    let by_index: HashMap<usize, &AdjustedSample> = samples.iter().map(|s| (s.index, s)).collect();
    let rows: Vec<(f64, Vec<f64>)> = samples
        .iter()
        .filter(|s| s.index >= max_lag)
        .filter_map(|s| {
            let x: Option<Vec<f64>> = (0..p)
                .map(|k| by_index.get(&(s.index - k)).map(|l| signed_power(l.q, delta)))
                .collect();
            x.map(|x| (s.y, x))
        })
        .collect();
    let needed = 10 * max_lag.max(1);
    if rows.len() < needed {
        return Err(StatsError::TooFewSamples {
            needed,
            got: rows.len(),
        });
    }

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for (y, x) in &rows {
        for i in 0..p {
            xty[i] += x[i] * y;
            for j in 0..=i {
                gram[(i, j)] += x[i] * x[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }

    let eig = gram.clone().symmetric_eigenvalues();
    let max_eig = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min_eig = eig.iter().cloned().fold(f64::MAX, f64::min);
    let condition = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(StatsError::RankDeficient { condition });
    }
    let chol = gram
        .cholesky()
        .ok_or(StatsError::RankDeficient { condition })?;
    let beta = chol.solve(&xty);

    let rss: f64 = rows
        .iter()
        .map(|(y, x)| {
            let fit: f64 = x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            (y - fit).powi(2)
        })
        .sum();
    let dof = rows.len().saturating_sub(p).max(1) as f64;
    let sigma2 = rss / dof;
    let inv = chol.inverse();
    let std_err = (0..p).map(|k| (sigma2 * inv[(k, k)]).max(0.0).sqrt()).collect();
    let beta: Vec<f64> = beta.iter().copied().collect();
    Ok(DecayKernel {
        cumulative: cumulative_impact(&beta),
        beta,
        std_err,
        rows: rows.len(),
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Samples with `y_t = sum_k kernel[k] * q_{t-k}` plus optional noise,
    /// using `delta = 1` so regressors equal `q`.
    fn constructed(n: usize, kernel: &[f64], noise_sd: f64, seed: u64) -> Vec<AdjustedSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (0..n)
            .map(|t| {
                let signal: f64 = kernel
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k <= t)
                    .map(|(k, b)| b * q[t - k])
                    .sum();
                AdjustedSample {
                    index: t,
                    q: q[t],
                    y: signal + noise_sd * normal.sample(&mut rng),
                    prev_sign: 0,
                }
            })
            .collect()
    }

    #[test]
    fn pure_contemporaneous() {
        let s = constructed(20_000, &[1.0], 0.0, 1);
        let k = decay_regression(&s, 1.0, 100).unwrap();
        assert_eq!(k.beta.len(), 101);
        assert!((k.beta[0] - 1.0).abs() < 0.02);
        assert!(k.beta[1..].iter().all(|b| b.abs() < 0.02));
    }

    #[test]
    fn one_lag_reversion() {
        let s = constructed(20_000, &[1.0, -0.05], 0.1, 2);
        let k = decay_regression(&s, 1.0, 100).unwrap();
        let expected = |i: usize| match i {
            0 => 1.0,
            1 => -0.05,
            _ => 0.0,
        };
        for (i, b) in k.beta.iter().enumerate() {
            assert!((b - expected(i)).abs() < 0.02, "beta[{i}] = {b}");
        }
        assert!((k.cumulative[1] - 0.95).abs() < 0.03);
        assert!((k.cumulative[0] - k.beta[0]).abs() < 1e-15);
    }

    #[test]
    fn white_noise_within_three_std_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let s: Vec<_> = constructed(20_000, &[0.0], 0.0, 3)
            .into_iter()
            .map(|x| AdjustedSample {
                y: normal.sample(&mut rng),
                ..x
            })
            .collect();
        let k = decay_regression(&s, 0.6, 100).unwrap();
        let outside = k
            .beta
            .iter()
            .zip(&k.std_err)
            .filter(|(b, se)| b.abs() > 3.0 * **se)
            .count();
        // Expect about 0.27 of 101 outside by chance.
        assert!(outside <= 2, "{outside} coefficients beyond 3 standard errors");
    }

    #[test]
    fn gaps_drop_rows() {
        let mut s = constructed(3_000, &[1.0], 0.0, 4);
        s.remove(1_500);
        let k = decay_regression(&s, 1.0, 10).unwrap();
        // Rows with a lag window touching index 1500 are unusable.
        assert_eq!(k.rows, 3_000 - 10 - 11);
    }

    #[test]
    fn degenerate_design_rejected() {
        let s: Vec<_> = (0..2_000)
            .map(|i| AdjustedSample {
                index: i,
                q: 1.0,
                y: 1.0,
                prev_sign: 1,
            })
            .collect();
        assert!(matches!(
            decay_regression(&s, 0.5, 10),
            Err(StatsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let s = constructed(500, &[1.0], 0.0, 5);
        assert!(matches!(
            decay_regression(&s, 1.0, 100),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn predict_uses_most_recent_last() {
        let k = DecayKernel {
            beta: vec![1.0, -0.5],
            cumulative: vec![1.0, 0.5],
            std_err: vec![0.0; 2],
            rows: 0,
            condition: 1.0,
        };
        assert_eq!(k.predict(&[2.0, 3.0]), 3.0 - 1.0);
    }
}
