//! Quantile bucketing of adjusted samples by (optionally transformed) order size.

use super::normalize::AdjustedSample;
use super::{signed_power, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    /// Smallest and largest bucketing key in the bucket.
    pub lo: f64,
    pub hi: f64,
    /// Mean bucketing key: `q`, or `sgn(q)|q|^delta` when transformed.
    pub mean_x: f64,
    pub mean_q: f64,
    pub mean_y: f64,
    /// Standard error of `mean_y`; NaN with fewer than two members.
    pub se_y: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketStats {
    pub transform: Option<f64>,
    pub buckets: Vec<Bucket>,
}

impl BucketStats {
    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// R² of the least-squares line through `(mean_x, mean_y)` of the
    /// non-empty buckets.
    pub fn linear_r2(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .buckets
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| (b.mean_x, b.mean_y))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        if sxx == 0.0 || syy == 0.0 {
            return f64::NAN;
        }
        sxy * sxy / (sxx * syy)
    }

    /// Number of adjacent bucket pairs whose mean impact decreases.
    pub fn monotonicity_violations(&self) -> usize {
        self.buckets
            .windows(2)
            .filter(|w| w[1].mean_y < w[0].mean_y)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitBuckets {
    pub prev_buy: BucketStats,
    pub prev_sell: BucketStats,
}

impl SplitBuckets {
    /// Buckets where both groups are populated and the prev-buy mean impact is
    /// below the prev-sell one, out of the buckets where both are populated.
    pub fn buy_below_sell(&self) -> (usize, usize) {
        let mut below = 0;
        let mut both = 0;
        for (b, s) in self.prev_buy.buckets.iter().zip(&self.prev_sell.buckets) {
            if b.count > 0 && s.count > 0 {
                both += 1;
                if b.mean_y < s.mean_y {
                    below += 1;
                }
            }
        }
        (below, both)
    }
}

fn key(s: &AdjustedSample, transform: Option<f64>) -> f64 {
    match transform {
        Some(d) => signed_power(s.q, d),
        None => s.q,
    }
}

/// Indices sorted by key (stable, so ties keep sample order), and the
/// rank boundaries splitting them into `n` buckets whose sizes differ by at most one.
fn partition(keys: &[f64], n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    let base = keys.len() / n;
    let extra = keys.len() % n;
    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(0);
    for i in 0..n {
        let size = base + usize::from(i < extra);
        bounds.push(bounds[i] + size);
    }
    (order, bounds)
}

fn summarize<'a>(members: impl Iterator<Item = (&'a AdjustedSample, f64)>, lo: f64, hi: f64) -> Bucket {
    let mut count = 0usize;
    let (mut sx, mut sq, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for (s, k) in members {
        count += 1;
        sx += k;
        sq += s.q;
        sy += s.y;
        syy += s.y * s.y;
    }
    let n = count as f64;
    let mean_y = sy / n;
    let se_y = if count >= 2 {
        ((syy - n * mean_y * mean_y).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        f64::NAN
    };
    Bucket {
        lo,
        hi,
        mean_x: sx / n,
        mean_q: sq / n,
        mean_y,
        se_y,
        count,
    }
}

pub fn bucket_means(
    samples: &[AdjustedSample],
    n_buckets: usize,
    transform: Option<f64>,
) -> Result<BucketStats, StatsError> {
    if n_buckets == 0 {
        return Err(StatsError::InvalidArgument("need at least one bucket".into()));
    }
    if samples.len() < n_buckets {
        return Err(StatsError::TooFewSamples {
            needed: n_buckets,
            got: samples.len(),
        });
    }
    let keys: Vec<f64> = samples.iter().map(|s| key(s, transform)).collect();
    let (order, bounds) = partition(&keys, n_buckets);
    let buckets = bounds
        .windows(2)
        .map(|b| {
            let idx = &order[b[0]..b[1]];
            summarize(
                idx.iter().map(|&i| (&samples[i], keys[i])),
                keys[idx[0]],
                keys[idx[idx.len() - 1]],
            )
        })
        .collect();
    Ok(BucketStats { transform, buckets })
}

/// Buckets the samples with a nonzero previous sign on shared quantile edges,
/// then reports each bucket separately for the previous-buy and
/// previous-sell groups. Buckets can be empty in one group; their means are NaN.
pub fn split_by_previous_sign(
    samples: &[AdjustedSample],
    n_buckets: usize,
    transform: Option<f64>,
) -> Result<SplitBuckets, StatsError> {
    let pooled: Vec<AdjustedSample> = samples.iter().filter(|s| s.prev_sign != 0).copied().collect();
    if !pooled.iter().any(|s| s.prev_sign > 0) {
        return Err(StatsError::EmptyGroup("previous-buy"));
    }
    if !pooled.iter().any(|s| s.prev_sign < 0) {
        return Err(StatsError::EmptyGroup("previous-sell"));
    }
    if n_buckets == 0 {
        return Err(StatsError::InvalidArgument("need at least one bucket".into()));
    }
    if pooled.len() < n_buckets {
        return Err(StatsError::TooFewSamples {
            needed: n_buckets,
            got: pooled.len(),
        });
    }
    let keys: Vec<f64> = pooled.iter().map(|s| key(s, transform)).collect();
    let (order, bounds) = partition(&keys, n_buckets);
    let pooled = &pooled;
    let keys = &keys;
    let mut buy = Vec::with_capacity(n_buckets);
    let mut sell = Vec::with_capacity(n_buckets);
    for b in bounds.windows(2) {
        let idx = &order[b[0]..b[1]];
        let (lo, hi) = (keys[idx[0]], keys[idx[idx.len() - 1]]);
        let group = |sign: i8| {
            summarize(
                idx.iter()
                    .filter(move |&&i| pooled[i].prev_sign == sign)
                    .map(move |&i| (&pooled[i], keys[i])),
                lo,
                hi,
            )
        };
        buy.push(group(1));
        sell.push(group(-1));
    }
    Ok(SplitBuckets {
        prev_buy: BucketStats {
            transform,
            buckets: buy,
        },
        prev_sell: BucketStats {
            transform,
            buckets: sell,
        },
    })
}
