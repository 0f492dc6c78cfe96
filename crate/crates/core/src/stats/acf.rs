//! Order-sign autocorrelation.

use super::StatsError;
use crate::book::Trade;

/// Sign of each trade's aggressor, `+1` for buys and `-1` for sells.
pub fn signs_from_trades(trades: &[Trade]) -> Vec<i8> {
    trades.iter().map(|t| t.aggressor.sign() as i8).collect()
}

/// Biased, mean-removed sample autocorrelation at lags `1..=max_lag`.
///
/// Needs at least `10 * max_lag` signs.
pub fn order_sign_acf(signs: &[i8], max_lag: usize) -> Result<Vec<f64>, StatsError> {
    if max_lag == 0 {
        return Err(StatsError::InvalidArgument("max_lag must be at least 1".into()));
    }
    let needed = 10 * max_lag;
    if signs.len() < needed {
        return Err(StatsError::TooFewSamples {
            needed,
            got: signs.len(),
        });
    }
    let n = signs.len() as f64;
    let mean = signs.iter().map(|&s| s as f64).sum::<f64>() / n;
    let centered: Vec<f64> = signs.iter().map(|&s| s as f64 - mean).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum::<f64>();
    if c0 <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((1..=max_lag)
        .map(|lag| {
            let c: f64 = centered[lag..]
                .iter()
                .zip(&centered)
                .map(|(a, b)| a * b)
                .sum();
            c / c0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fair_signs(n: usize, seed: u64) -> Vec<i8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()
    }

    #[test]
    fn matches_double_loop() {
        let s = fair_signs(1_000, 1);
        let n = s.len();
        let mean = s.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let mut c0 = 0.0;
        for i in 0..n {
            c0 += (s[i] as f64 - mean).powi(2);
        }
        let got = order_sign_acf(&s, 100).unwrap();
        for lag in 1..=100 {
            let mut c = 0.0;
            for i in 0..n - lag {
                c += (s[i] as f64 - mean) * (s[i + lag] as f64 - mean);
            }
            assert!((got[lag - 1] - c / c0).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_signs_are_null() {
        let n = 100_000;
        let acf = order_sign_acf(&fair_signs(n, 7), 100).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        let inside = acf.iter().filter(|a| a.abs() < bound).count();
        assert!(inside >= 95, "{inside} of 100 lags inside the null band");
    }

    #[test]
    fn alternating_signs() {
        let s: Vec<i8> = (0..1_000).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let acf = order_sign_acf(&s, 10).unwrap();
        assert!((acf[0] + 1.0).abs() < 2e-3);
        assert!((acf[1] - 1.0).abs() < 3e-3);
    }

    #[test]
    fn errors() {
        assert_eq!(order_sign_acf(&[1; 500], 10), Err(StatsError::ZeroVariance));
        assert!(matches!(
            order_sign_acf(&fair_signs(99, 1), 10),
            Err(StatsError::TooFewSamples { needed: 100, got: 99 })
        ));
    }
}
