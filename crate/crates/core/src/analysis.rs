//! End-to-end analyses over a trade tape and quote log, and their CSV outputs.
//!
//! | file           | columns                                                     |
//! |----------------|-------------------------------------------------------------|
//! | windows.csv    | index,start_ns,open_mid2x,close_mid2x,dp,net,gross          |
//! | adjusted.csv   | index,q,y,prev_sign                                         |
//! | buckets.csv    | transform,bucket,lo,hi,mean_x,mean_q,mean_y,se_y,count      |
//! | split.csv      | group,bucket,lo,hi,mean_x,mean_q,mean_y,se_y,count          |
//! | delta_fit.csv  | delta,k,sse,n                                               |
//! | kernel.csv     | lag,beta,std_err,cumulative                                 |
//! | acf.csv        | lag,acf                                                     |
//! | power_law.csv  | c,alpha,r2                                                  |
//! | summary.txt    | flat key=value                                              |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::book::{L1Snapshot, Trade};
use crate::error::{Error, Result};
use crate::kernel::SimTime;
use crate::stats::normalize::horizon_windows;
use crate::stats::{
    adjust, bucket_means, decay_regression, fit_delta, fit_power_law, order_sign_acf, resample, rolling_volatility,
    signs_from_trades, split_by_previous_sign, weighted_volume, Adjusted, BucketStats, DecayKernel, DeltaFit,
    DeltaSearch, PowerLawFit, SplitBuckets, Window,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactOptions {
    pub window: SimTime,
    pub horizon: SimTime,
    pub n_buckets: usize,
    /// Fixed exponent for the transformed buckets and decay regressors;
    /// fitted when absent.
    pub delta: Option<f64>,
    pub max_lag: usize,
}

impl Default for ImpactOptions {
    fn default() -> Self {
        Self {
            window: SimTime::from_secs(5),
            horizon: SimTime::from_secs(3600),
            n_buckets: 20,
            delta: None,
            max_lag: 100,
        }
    }
}

/// Resampled windows and their normalized samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub windows: Vec<Window>,
    pub adjusted: Adjusted,
}

pub fn prepare(trades: &[Trade], quotes: &[L1Snapshot], opts: &ImpactOptions) -> Result<Prepared> {
    if opts.window.0 == 0 || opts.horizon < opts.window {
        return Err(crate::stats::StatsError::InvalidArgument(
            "window must be positive and no longer than the horizon".into(),
        )
        .into());
    }
    let windows = resample(trades, quotes, opts.window);
    let h = horizon_windows(opts.horizon, opts.window);
    let sigma = rolling_volatility(&windows, h);
    let volume = weighted_volume(&windows, h);
    let adjusted = adjust(&windows, &sigma, &volume);
    Ok(Prepared { windows, adjusted })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactReport {
    pub prepared: Prepared,
    pub fit: DeltaFit,
    pub raw: BucketStats,
    pub transformed: BucketStats,
    pub split: SplitBuckets,
}

pub fn impact(trades: &[Trade], quotes: &[L1Snapshot], opts: &ImpactOptions) -> Result<ImpactReport> {
    let prepared = prepare(trades, quotes, opts)?;
    let samples = &prepared.adjusted.samples;
    let fit = fit_delta(samples, DeltaSearch::default())?;
    let delta = opts.delta.unwrap_or(fit.delta);
    let raw = bucket_means(samples, opts.n_buckets, None)?;
    let transformed = bucket_means(samples, opts.n_buckets, Some(delta))?;
    let split = split_by_previous_sign(samples, opts.n_buckets, None)?;
    Ok(ImpactReport {
        prepared,
        fit,
        raw,
        transformed,
        split,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub prepared: Prepared,
    pub delta: f64,
    /// Present when the exponent was fitted rather than supplied.
    pub fit: Option<DeltaFit>,
    pub kernel: DecayKernel,
}

pub fn decay(trades: &[Trade], quotes: &[L1Snapshot], opts: &ImpactOptions) -> Result<DecayReport> {
    let prepared = prepare(trades, quotes, opts)?;
    let samples = &prepared.adjusted.samples;
    let (delta, fit) = match opts.delta {
        Some(d) => (d, None),
        None => {
            let f = fit_delta(samples, DeltaSearch::default())?;
            (f.delta, Some(f))
        }
    };
    let kernel = decay_regression(samples, delta, opts.max_lag)?;
    Ok(DecayReport {
        prepared,
        delta,
        fit,
        kernel,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfReport {
    pub signs: usize,
    pub acf: Vec<f64>,
    pub fit: PowerLawFit,
}

pub fn sign_acf(trades: &[Trade], max_lag: usize) -> Result<AcfReport> {
    let signs = signs_from_trades(trades);
    let acf = order_sign_acf(&signs, max_lag)?;
    let fit = fit_power_law(&acf)?;
    Ok(AcfReport {
        signs: signs.len(),
        acf,
        fit,
    })
}

fn write(dir: &Path, name: &str, text: String) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn windows_csv(windows: &[Window]) -> String {
    let mut s = String::from("index,start_ns,open_mid2x,close_mid2x,dp,net,gross\n");
    for w in windows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            w.index,
            w.start.0,
            w.open_mid2x,
            w.close_mid2x,
            w.dp(),
            w.net,
            w.gross
        );
    }
    s
}

pub fn adjusted_csv(adjusted: &Adjusted) -> String {
    let mut s = String::from("index,q,y,prev_sign\n");
    for a in &adjusted.samples {
        let _ = writeln!(s, "{},{},{},{}", a.index, a.q, a.y, a.prev_sign);
    }
    s
}

fn bucket_rows(s: &mut String, label: &str, stats: &BucketStats) {
    for (i, b) in stats.buckets.iter().enumerate() {
        let _ = writeln!(
            s,
            "{label},{i},{},{},{},{},{},{},{}",
            b.lo, b.hi, b.mean_x, b.mean_q, b.mean_y, b.se_y, b.count
        );
    }
}

pub fn buckets_csv(raw: &BucketStats, transformed: &BucketStats) -> String {
    let mut s = String::from("transform,bucket,lo,hi,mean_x,mean_q,mean_y,se_y,count\n");
    bucket_rows(&mut s, "none", raw);
    let label = transformed.transform.map_or("none".to_string(), |d| format!("delta={d}"));
    bucket_rows(&mut s, &label, transformed);
    s
}

pub fn split_csv(split: &SplitBuckets) -> String {
    let mut s = String::from("group,bucket,lo,hi,mean_x,mean_q,mean_y,se_y,count\n");
    bucket_rows(&mut s, "prev_buy", &split.prev_buy);
    bucket_rows(&mut s, "prev_sell", &split.prev_sell);
    s
}

pub fn delta_fit_csv(fit: &DeltaFit) -> String {
    format!("delta,k,sse,n\n{},{},{},{}\n", fit.delta, fit.k, fit.sse, fit.n)
}

pub fn kernel_csv(kernel: &DecayKernel) -> String {
    let mut s = String::from("lag,beta,std_err,cumulative\n");
    for (k, ((b, se), c)) in kernel.beta.iter().zip(&kernel.std_err).zip(&kernel.cumulative).enumerate() {
        let _ = writeln!(s, "{k},{b},{se},{c}");
    }
    s
}

pub fn acf_csv(acf: &[f64]) -> String {
    let mut s = String::from("lag,acf\n");
    for (i, a) in acf.iter().enumerate() {
        let _ = writeln!(s, "{},{a}", i + 1);
    }
    s
}

pub fn power_law_csv(fit: &PowerLawFit) -> String {
    format!("c,alpha,r2\n{},{},{}\n", fit.c, fit.alpha, fit.r2)
}

fn kv_text(kv: &[(&str, String)]) -> String {
    kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn prepared_kv(p: &Prepared) -> Vec<(&'static str, String)> {
    vec![
        ("windows", p.windows.len().to_string()),
        ("usable_samples", p.adjusted.samples.len().to_string()),
        ("skipped_windows", p.adjusted.skipped.to_string()),
    ]
}

pub fn write_impact(dir: &Path, r: &ImpactReport) -> Result<()> {
    write(dir, "windows.csv", windows_csv(&r.prepared.windows))?;
    write(dir, "adjusted.csv", adjusted_csv(&r.prepared.adjusted))?;
    write(dir, "buckets.csv", buckets_csv(&r.raw, &r.transformed))?;
    write(dir, "split.csv", split_csv(&r.split))?;
    write(dir, "delta_fit.csv", delta_fit_csv(&r.fit))?;
    let (below, both) = r.split.buy_below_sell();
    let mut kv = prepared_kv(&r.prepared);
    kv.extend([
        ("delta", r.fit.delta.to_string()),
        ("k", r.fit.k.to_string()),
        ("sse", r.fit.sse.to_string()),
        ("bucket_violations", r.raw.monotonicity_violations().to_string()),
        ("prev_buy_below_prev_sell", format!("{below}/{both}")),
    ]);
    write(dir, "summary.txt", kv_text(&kv))
}

pub fn write_decay(dir: &Path, r: &DecayReport) -> Result<()> {
    write(dir, "windows.csv", windows_csv(&r.prepared.windows))?;
    write(dir, "adjusted.csv", adjusted_csv(&r.prepared.adjusted))?;
    write(dir, "kernel.csv", kernel_csv(&r.kernel))?;
    if let Some(fit) = &r.fit {
        write(dir, "delta_fit.csv", delta_fit_csv(fit))?;
    }
    let early = &r.kernel.beta[1..r.kernel.beta.len().min(21)];
    let mut kv = prepared_kv(&r.prepared);
    kv.extend([
        ("delta", r.delta.to_string()),
        ("rows", r.kernel.rows.to_string()),
        ("condition", r.kernel.condition.to_string()),
        ("beta0", r.kernel.beta[0].to_string()),
        ("mean_beta_1_20", (early.iter().sum::<f64>() / early.len().max(1) as f64).to_string()),
    ]);
    write(dir, "summary.txt", kv_text(&kv))
}

pub fn write_acf(dir: &Path, r: &AcfReport) -> Result<()> {
    write(dir, "acf.csv", acf_csv(&r.acf))?;
    write(dir, "power_law.csv", power_law_csv(&r.fit))?;
    let kv = [
        ("signs", r.signs.to_string()),
        ("alpha", r.fit.alpha.to_string()),
        ("c", r.fit.c.to_string()),
        ("r2", r.fit.r2.to_string()),
    ];
    write(dir, "summary.txt", kv_text(&kv))
}
