//! Monte-Carlo calibration of the DAR(p) sign process to a target power-law
//! autocorrelation decay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::acf::order_sign_acf;
use super::power_law::{fit_power_law, PowerLawFit};
use super::StatsError;
use crate::agents::{DarpParams, DarpState};

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub p_range: (f64, f64),
    pub gamma_range: (f64, f64),
    /// History length of every candidate.
    pub n: usize,
    /// Signs simulated per candidate.
    pub stream_len: usize,
    pub max_lag: usize,
    pub budget: usize,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            p_range: (0.5, 0.99),
            gamma_range: (0.1, 2.9),
            n: 50,
            stream_len: 100_000,
            max_lag: 50,
            budget: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub p: f64,
    pub gamma: f64,
    pub fit: PowerLawFit,
    pub score: f64,
    /// Candidates that produced a fittable autocorrelation.
    pub fitted: usize,
}

/// `len` signs (`+1` buy, `-1` sell) from a fresh DAR(p) process.
pub fn darp_sign_stream<R: Rng + ?Sized>(params: DarpParams, len: usize, rng: &mut R) -> Vec<i8> {
    let mut state = DarpState::new(params, rng);
    (0..len)
        .map(|_| if state.next_sign(rng) { 1 } else { -1 })
        .collect()
}

/// Power-law fit of the sign autocorrelation of one simulated stream.
pub fn darp_acf_fit(params: DarpParams, len: usize, max_lag: usize, seed: u64, stream: u64) -> Result<PowerLawFit, StatsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let signs = darp_sign_stream(params, len, &mut rng);
    fit_power_law(&order_sign_acf(&signs, max_lag)?)
}

fn score(fit: &PowerLawFit, target: &PowerLawFit) -> f64 {
    (fit.alpha - target.alpha).powi(2) + (fit.c.ln() - target.c.ln()).powi(2)
}

/// Draws `budget` candidates uniformly from the configured boxes, simulates
/// each on its own seeded stream, and returns the one whose fitted decay is
/// closest to `target`. Ties go to the earlier candidate, so the result does
/// not depend on thread scheduling.
pub fn tune_darp(target: &PowerLawFit, cfg: &TuneConfig) -> Result<TuneResult, StatsError> {
    if !(target.alpha > 0.0 && target.c > 0.0) {
        return Err(StatsError::InvalidArgument(format!(
            "target needs alpha > 0 and C > 0, got alpha={} C={}",
            target.alpha, target.c
        )));
    }
    if cfg.budget == 0 {
        return Err(StatsError::InvalidArgument("budget must be at least 1".into()));
    }
    let (p_lo, p_hi) = cfg.p_range;
    let (g_lo, g_hi) = cfg.gamma_range;
    if !(0.0 <= p_lo && p_lo <= p_hi && p_hi <= 1.0 && g_lo <= g_hi && cfg.n >= 1) {
        return Err(StatsError::InvalidArgument(format!("bad search box {cfg:?}")));
    }

    let mut draw = ChaCha8Rng::seed_from_u64(cfg.seed);
    let candidates: Vec<(f64, f64)> = (0..cfg.budget)
        .map(|_| {
            let p = if p_lo < p_hi { draw.random_range(p_lo..p_hi) } else { p_lo };
            let g = if g_lo < g_hi { draw.random_range(g_lo..g_hi) } else { g_lo };
            (p, g)
        })
        .collect();

    let results: Vec<Option<(f64, f64, PowerLawFit, f64)>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, &(p, gamma))| {
            let params = DarpParams {
                p,
                gamma,
                n: cfg.n,
                literal_pseudocode: false,
            };
            let fit = darp_acf_fit(params, cfg.stream_len, cfg.max_lag, cfg.seed, i as u64 + 1).ok()?;
            let s = score(&fit, target);
            s.is_finite().then_some((p, gamma, fit, s))
        })
        .collect();

    let fitted = results.iter().flatten().count();
    let best = results
        .into_iter()
        .flatten()
        .reduce(|best, c| if c.3 < best.3 { c } else { best })
        .ok_or(StatsError::NoFittableCandidate)?;
    Ok(TuneResult {
        p: best.0,
        gamma: best.1,
        fit: best.2,
        score: best.3,
        fitted,
    })
}
