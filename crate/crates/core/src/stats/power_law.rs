//! Log-log least-squares fit of `value(lag) = C * lag^-alpha`.

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub c: f64,
    pub alpha: f64,
    pub r2: f64,
}

impl PowerLawFit {
    pub fn eval(&self, lag: f64) -> f64 {
        self.c * lag.powf(-self.alpha)
    }
}

/// `values[i]` is the ordinate at lag `i + 1`. Only strictly positive entries
/// are used; at least five are required.
pub fn fit_power_law(values: &[f64]) -> Result<PowerLawFit, StatsError> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(i, v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(StatsError::NotPowerLaw(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(PowerLawFit {
        c: intercept.exp(),
        alpha: -slope,
        r2,
    })
}
