//! Exogenous "true price" series that agents can query, with optional
//! per-query uniform observation noise.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::TickPrice;
use crate::kernel::SimTime;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("price series is empty")]
    Empty,
    #[error("price series must start at t=0, starts at {0}")]
    BadStart(SimTime),
    #[error("series times must be strictly increasing (row {row})")]
    NotIncreasing { row: usize },
    #[error("non-positive price {price} at row {row}")]
    NonPositive { row: usize, price: i64 },
    #[error("malformed series file: {0}")]
    Malformed(String),
    #[error("invalid random-walk parameters: {0}")]
    BadParams(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Right-continuous step function of price over simulation time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceSeries {
    points: Vec<(SimTime, TickPrice)>,
}

impl PriceSeries {
    pub fn new(points: Vec<(SimTime, i64)>) -> Result<Self, OracleError> {
        let first = points.first().ok_or(OracleError::Empty)?;
        if first.0 != SimTime::ZERO {
            return Err(OracleError::BadStart(first.0));
        }
        let mut out = Vec::with_capacity(points.len());
        for (row, &(t, p)) in points.iter().enumerate() {
            if row > 0 && t <= points[row - 1].0 {
                return Err(OracleError::NotIncreasing { row });
            }
            let price = TickPrice::new(p).map_err(|_| OracleError::NonPositive { row, price: p })?;
            out.push((t, price));
        }
        Ok(Self { points: out })
    }

    pub fn constant(price: i64) -> Result<Self, OracleError> {
        Self::new(vec![(SimTime::ZERO, price)])
    }

    pub fn points(&self) -> &[(SimTime, TickPrice)] {
        &self.points
    }

    pub fn true_price_at(&self, t: SimTime) -> TickPrice {
        let idx = self.points.partition_point(|(pt, _)| *pt <= t);
        // idx >= 1 because the first point sits at t = 0.
        self.points[idx - 1].1
    }

    /// True price plus an integer uniform draw on `[-noise, noise]`, clamped to one tick.
    pub fn observe<R: Rng + ?Sized>(&self, t: SimTime, noise: ObservationNoise, rng: &mut R) -> TickPrice {
        let p = self.true_price_at(t).ticks();
        let u = if noise.half_width == 0 {
            0
        } else {
            let e = noise.half_width as i64;
            rng.random_range(-e..=e)
        };
        TickPrice::new((p + u).max(1)).expect("clamped to grid")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), OracleError> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "time_ns,price_ticks")?;
        for (t, p) in &self.points {
            writeln!(w, "{},{}", t.0, p.ticks())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, OracleError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "time_ns" || &headers[1] != "price_ticks" {
            return Err(OracleError::Malformed(format!(
                "expected header `time_ns,price_ticks`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<i64, OracleError> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<i64>().ok())
                    .ok_or_else(|| OracleError::Malformed(format!("row {}: bad field {i}", row + 1)))
            };
            let t = parse(0)?;
            if t < 0 {
                return Err(OracleError::Malformed(format!("row {}: negative time", row + 1)));
            }
            points.push((SimTime(t as u64), parse(1)?));
        }
        Self::new(points)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationNoise {
    pub half_width: u32,
}

/// How to build the oracle series for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeriesSpec {
    Constant {
        price: i64,
    },
    RandomWalk {
        start: i64,
        /// Standard deviation of one step, in ticks.
        sigma: f64,
        step_seconds: f64,
        horizon_seconds: f64,
        seed: u64,
    },
    FromFile {
        path: String,
    },
}

pub fn make_series(spec: &SeriesSpec) -> Result<PriceSeries, OracleError> {
    match spec {
        SeriesSpec::Constant { price } => PriceSeries::constant(*price),
        SeriesSpec::RandomWalk {
            start,
            sigma,
            step_seconds,
            horizon_seconds,
            seed,
        } => random_walk(*start, *sigma, *step_seconds, *horizon_seconds, *seed),
        SeriesSpec::FromFile { path } => PriceSeries::read_csv(Path::new(path)),
    }
}

/// Gaussian random walk sampled every `step_seconds`, rounded to ticks and
/// floored at one tick. Uses its own generator seeded by `seed`.
pub fn random_walk(
    start: i64,
    sigma: f64,
    step_seconds: f64,
    horizon_seconds: f64,
    seed: u64,
) -> Result<PriceSeries, OracleError> {
    if start < 1 {
        return Err(OracleError::BadParams("start must be >= 1"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(OracleError::BadParams("sigma must be finite and >= 0"));
    }
    if !(step_seconds > 0.0 && horizon_seconds >= 0.0) {
        return Err(OracleError::BadParams("step must be positive"));
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| OracleError::BadParams("sigma"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (horizon_seconds / step_seconds).floor() as u64;
    let mut level = start as f64;
    let mut points = Vec::with_capacity(steps as usize + 1);
    points.push((SimTime::ZERO, start));
    for k in 1..=steps {
        level += normal.sample(&mut rng);
        let price = (level.round() as i64).max(1);
        points.push((SimTime::from_secs_f64(k as f64 * step_seconds), price));
    }
    PriceSeries::new(points)
}
