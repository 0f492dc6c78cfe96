//! Trailing volatility and volume normalizers, and the adjusted
//! `(Q / V_T, dP / sigma_T)` samples built from them.
//!
//! Both normalizers look only at windows strictly before the current one, over
//! at most `horizon` windows. Windows are assumed contiguous.

use super::resample::Window;

/// Sample standard deviation of the mid change over the trailing `horizon`
/// windows (current window excluded). `None` with fewer than two windows of
/// history or zero variance.
pub fn rolling_volatility(windows: &[Window], horizon: usize) -> Vec<Option<f64>> {
    assert!(horizon >= 1);
    // Exact integer sums of half-tick changes.
    let mut sum: i128 = 0;
    let mut sum_sq: i128 = 0;
    let mut out = Vec::with_capacity(windows.len());
    for t in 0..windows.len() {
        let n = t.min(horizon);
        let sigma = if n >= 2 {
            let n_i = n as i128;
            let num = n_i * sum_sq - sum * sum;
            if num <= 0 {
                None
            } else {
                // Variance in half ticks squared, then back to ticks.
                let var2x = num as f64 / (n_i * (n_i - 1)) as f64;
                Some(var2x.sqrt() / 2.0)
            }
        } else {
            None
        };
        out.push(sigma);

        let d = windows[t].dp2x() as i128;
        sum += d;
        sum_sq += d * d;
        if t + 1 > horizon {
            let old = windows[t - horizon].dp2x() as i128;
            sum -= old;
            sum_sq -= old * old;
        }
    }
    out
}

/// Linearly weighted mean of gross volume over the trailing `horizon` windows
/// (current window excluded), most recent window weighted highest. `None` with
/// no history or an all-zero history.
pub fn weighted_volume(windows: &[Window], horizon: usize) -> Vec<Option<f64>> {
    assert!(horizon >= 1);
    let mut plain: u128 = 0;
    let mut weighted: u128 = 0;
    let mut out = Vec::with_capacity(windows.len());
    for t in 0..windows.len() {
        let n = t.min(horizon) as u128;
        let v = if n == 0 || weighted == 0 {
            None
        } else {
            Some(weighted as f64 / (n * (n + 1) / 2) as f64)
        };
        out.push(v);

        let g = windows[t].gross as u128;
        if t < horizon {
            // Window grows: the new entry takes weight n + 1.
            weighted += (n + 1) * g;
            plain += g;
        } else {
            let old = windows[t - horizon].gross as u128;
            weighted = weighted + horizon as u128 * g - plain;
            plain = plain + g - old;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedSample {
    /// Index of the source window on the resampling grid.
    pub index: usize,
    /// Net volume over trailing volume.
    pub q: f64,
    /// Mid change over trailing volatility.
    pub y: f64,
    /// Sign of the previous window's net volume.
    pub prev_sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjusted {
    pub samples: Vec<AdjustedSample>,
    /// Windows dropped for lack of a usable normalizer.
    pub skipped: usize,
}

pub fn adjust(windows: &[Window], sigma: &[Option<f64>], volume: &[Option<f64>]) -> Adjusted {
    assert_eq!(windows.len(), sigma.len());
    assert_eq!(windows.len(), volume.len());
    let mut samples = Vec::with_capacity(windows.len());
    let mut skipped = 0;
    for (t, w) in windows.iter().enumerate() {
        match (sigma[t], volume[t]) {
            (Some(s), Some(v)) if s > 0.0 && v > 0.0 => {
                let prev_sign = if t == 0 { 0 } else { windows[t - 1].net.signum() as i8 };
                samples.push(AdjustedSample {
                    index: w.index,
                    q: w.net as f64 / v,
                    y: w.dp() / s,
                    prev_sign,
                });
            }
            _ => skipped += 1,
        }
    }
    Adjusted { samples, skipped }
}

/// Number of whole windows in a horizon.
pub fn horizon_windows(horizon: crate::kernel::SimTime, window_len: crate::kernel::SimTime) -> usize {
    ((horizon.0 / window_len.0) as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SimTime;
    use proptest::prelude::*;

    fn windows_from(dp2x: &[i64], gross: &[u64]) -> Vec<Window> {
        let mut mid = 2000;
        dp2x.iter()
            .zip(gross)
            .enumerate()
            .map(|(i, (&d, &g))| {
                let w = Window {
                    index: i,
                    start: SimTime(i as u64),
                    open_mid2x: mid,
                    close_mid2x: mid + d,
                    net: g as i64 / 2 - (i as i64 % 3),
                    gross: g,
                };
                mid += d;
                w
            })
            .collect()
    }

    fn brute_std(xs: &[f64]) -> Option<f64> {
        if xs.len() < 2 {
            return None;
        }
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
        let s = (ss / (xs.len() - 1) as f64).sqrt();
        (s > 0.0).then_some(s)
    }

    fn brute_weighted(gs: &[u64]) -> Option<f64> {
        if gs.is_empty() {
            return None;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, g) in gs.iter().enumerate() {
            let w = (i + 1) as f64;
            num += w * *g as f64;
            den += w;
        }
        (num > 0.0).then_some(num / den)
    }

    #[test]
    fn constant_change_has_no_volatility() {
        let w = windows_from(&[3; 50], &[1; 50]);
        assert!(rolling_volatility(&w, 720).iter().all(Option::is_none));
    }

    #[test]
    fn alternating_change_std() {
        let dp: Vec<i64> = (0..40).map(|i| if i % 2 == 0 { 2 } else { -2 }).collect();
        let w = windows_from(&dp, &[1; 40]);
        let sig = rolling_volatility(&w, 10);
        // Full trailing window of 10 alternating +-1: std = sqrt(10/9).
        for s in &sig[10..] {
            assert!((s.unwrap() - (10.0f64 / 9.0).sqrt()).abs() < 1e-12);
        }
        assert_eq!(sig[0], None);
        assert_eq!(sig[1], None);
    }

    #[test]
    fn constant_volume() {
        let w = windows_from(&[0; 30], &[7; 30]);
        let v = weighted_volume(&w, 12);
        assert_eq!(v[0], None);
        for x in &v[1..] {
            assert!((x.unwrap() - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_recent_volume() {
        let n = 10;
        let mut gross = vec![0; n];
        gross.push(0);
        gross[n - 1] = 9;
        let w = windows_from(&vec![0; n + 1], &gross);
        let v = weighted_volume(&w, n);
        let g = 9.0;
        assert!((v[n].unwrap() - 2.0 * g / (n as f64 + 1.0)).abs() < 1e-12);
        // All-zero history is unusable.
        assert_eq!(v[3], None);
    }

    proptest! {
        #[test]
        fn rolling_matches_brute_force(
            dp in proptest::collection::vec(-12i64..12, 1..200),
            horizon in 1usize..40,
        ) {
            let gross: Vec<u64> = dp.iter().map(|d| d.unsigned_abs() * 3 + (*d as u64 % 2)).collect();
            let w = windows_from(&dp, &gross);
            let sig = rolling_volatility(&w, horizon);
            let vol = weighted_volume(&w, horizon);
            for t in 0..w.len() {
                let lo = t.saturating_sub(horizon);
                let xs: Vec<f64> = w[lo..t].iter().map(Window::dp).collect();
                match (sig[t], brute_std(&xs)) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b),
                    (a, b) => prop_assert!(a.is_none() && b.map_or(true, |b| b < 1e-9), "{:?} vs {:?}", a, b),
                }
                let gs: Vec<u64> = w[lo..t].iter().map(|x| x.gross).collect();
                match (vol[t], brute_weighted(&gs)) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12 * b.max(1.0)),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn adjust_normalizes_and_conserves() {
        let w = vec![
            Window { index: 0, start: SimTime(0), open_mid2x: 200, close_mid2x: 202, net: 4, gross: 4 },
            Window { index: 1, start: SimTime(1), open_mid2x: 202, close_mid2x: 204, net: 3, gross: 5 },
            Window { index: 2, start: SimTime(2), open_mid2x: 204, close_mid2x: 204, net: 0, gross: 2 },
        ];
        let out = adjust(&w, &[None, Some(1.0), Some(2.0)], &[None, Some(3.0), Some(5.0)]);
        assert_eq!(out.samples.len() + out.skipped, w.len());
        assert_eq!(out.skipped, 1);
        let s = out.samples[0];
        assert_eq!((s.q, s.y, s.prev_sign), (1.0, 1.0, 1));
        assert_eq!(out.samples[1].q, 0.0);
    }
}
