//! Fitting the concave impact exponent: `y ~ k * sgn(q) |q|^delta`.
//!
//! For fixed `delta` the best `k` is the no-intercept least-squares slope, so
//! the residual sum of squares is a one-dimensional function of `delta`. It is
//! scanned on a coarse grid to bracket the minimum, then refined by
//! golden-section search.

use super::normalize::AdjustedSample;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaFit {
    pub delta: f64,
    pub k: f64,
    pub sse: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSearch {
    pub lo: f64,
    pub hi: f64,
    /// Stop once the bracket is narrower than this.
    pub tol: f64,
    pub grid: usize,
}

impl Default for DeltaSearch {
    fn default() -> Self {
        Self {
            lo: 0.1,
            hi: 1.5,
            tol: 1e-4,
            grid: 57,
        }
    }
}

pub const MIN_DELTA_SAMPLES: usize = 100;

struct Objective {
    /// `(ln|q|, sgn(q) * y)` for `q != 0`.
    terms: Vec<(f64, f64)>,
    sum_y2: f64,
}

impl Objective {
    /// `(k, sse)` at this exponent.
    fn eval(&self, delta: f64) -> (f64, f64) {
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for &(lnq, sy) in &self.terms {
            let x = (delta * lnq).exp();
            sxy += x * sy;
            sxx += x * x;
        }
        let k = sxy / sxx;
        (k, (self.sum_y2 - sxy * k).max(0.0))
    }
}

pub fn fit_delta(samples: &[AdjustedSample], search: DeltaSearch) -> Result<DeltaFit, StatsError> {
    if samples.len() < MIN_DELTA_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: MIN_DELTA_SAMPLES,
            got: samples.len(),
        });
    }
    if !(search.lo < search.hi && search.tol > 0.0 && search.grid >= 3) {
        return Err(StatsError::InvalidArgument(format!("bad delta search {search:?}")));
    }
    let obj = Objective {
        terms: samples
            .iter()
            .filter(|s| s.q != 0.0)
            .map(|s| (s.q.abs().ln(), s.q.signum() * s.y))
            .collect(),
        sum_y2: samples.iter().map(|s| s.y * s.y).sum(),
    };
    if obj.terms.is_empty() {
        return Err(StatsError::DegenerateSamples);
    }

    let step = (search.hi - search.lo) / (search.grid - 1) as f64;
    let grid: Vec<f64> = (0..search.grid).map(|i| search.lo + step * i as f64).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, d)| (i, obj.eval(*d).1))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = obj.eval(c).1;
    let mut fd = obj.eval(d).1;
    while b - a > search.tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj.eval(c).1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj.eval(d).1;
        }
    }
    let delta = (a + b) / 2.0;
    let (k, sse) = obj.eval(delta);
    Ok(DeltaFit {
        delta,
        k,
        sse,
        n: samples.len(),
    })
}
