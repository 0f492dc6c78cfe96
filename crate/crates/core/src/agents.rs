//! Agent policies.
//!
//! Each policy is a pure decision function over what the agent can see (a
//! level-1 quote, the oracle, its own random stream and state) returning an
//! [`Action`]. The event loop in [`crate::market`] applies the action to the
//! book and reschedules the agent.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::book::{L1Snapshot, OrderId, Side, TickPrice};
use crate::kernel::SimTime;
use crate::oracle::{ObservationNoise, PriceSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Skip,
    Cancel(OrderId),
    Limit { side: Side, price: TickPrice, qty: u64 },
    Market { side: Side, qty: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationMode {
    /// Private valuation drawn from a fixed price band.
    SantaFe,
    /// Private valuation drawn around the current mid.
    Prime,
}

fn default_band_low() -> i64 {
    1
}
fn default_band_high() -> i64 {
    100
}
fn default_half_width() -> i64 {
    50
}
fn default_size() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZiLimitParams {
    /// Wakeups per second.
    pub rate: f64,
    pub p_cancel: f64,
    pub mode: ValuationMode,
    #[serde(default = "default_band_low")]
    pub band_low: i64,
    #[serde(default = "default_band_high")]
    pub band_high: i64,
    #[serde(default = "default_half_width")]
    pub half_width: i64,
    #[serde(default = "default_size")]
    pub size: u64,
}

impl ZiLimitParams {
    pub fn validate(&self) -> Result<(), String> {
        check_rate(self.rate)?;
        if !(0.0..=1.0).contains(&self.p_cancel) {
            return Err(format!("p_cancel {} outside [0, 1]", self.p_cancel));
        }
        if self.band_low < 1 || self.band_low >= self.band_high {
            return Err(format!(
                "price band [{}, {}] must satisfy 1 <= low < high",
                self.band_low, self.band_high
            ));
        }
        if self.half_width < 1 {
            return Err("half_width must be >= 1".into());
        }
        check_size(self.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketMode {
    /// Fair coin per order.
    SantaFe,
    /// Sign from a DAR(p) process; requires `darp` parameters.
    Darp,
    /// Buy when the observed true price is above the mid, sell when below.
    Prime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarpParams {
    /// Probability of copying the parent sign.
    pub p: f64,
    /// Exponent of the parent-lag distribution, `P(lag) ~ lag^((gamma - 3) / 2)`.
    pub gamma: f64,
    /// History length.
    pub n: usize,
    /// Copy when `p <= r` instead of `r < p`.
    #[serde(default)]
    pub literal_pseudocode: bool,
}

impl DarpParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(format!("darp p {} outside [0, 1]", self.p));
        }
        if !self.gamma.is_finite() {
            return Err("darp gamma must be finite".into());
        }
        if self.n == 0 {
            return Err("darp history length must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZiMarketParams {
    pub rate: f64,
    #[serde(default = "default_size")]
    pub size: u64,
    pub mode: MarketMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub darp: Option<DarpParams>,
}

impl ZiMarketParams {
    pub fn validate(&self) -> Result<(), String> {
        check_rate(self.rate)?;
        check_size(self.size)?;
        match (self.mode, &self.darp) {
            (MarketMode::Darp, Some(d)) => d.validate(),
            (MarketMode::Darp, None) => Err("darp mode needs a [darp] parameter table".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechnicalKind {
    TrendFollow,
    MeanRevert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnicalParams {
    #[serde(rename = "strategy")]
    pub kind: TechnicalKind,
    pub lookback_seconds: f64,
    /// Dead zone on the mid change over the lookback, in ticks.
    pub threshold: f64,
    pub rate: f64,
    #[serde(default = "default_size")]
    pub size: u64,
}

impl TechnicalParams {
    pub fn validate(&self) -> Result<(), String> {
        check_rate(self.rate)?;
        check_size(self.size)?;
        if !(self.lookback_seconds > 0.0 && self.lookback_seconds.is_finite()) {
            return Err("lookback must be positive".into());
        }
        if !(self.threshold >= 0.0) {
            return Err("threshold must be >= 0".into());
        }
        Ok(())
    }

    pub fn lookback(&self) -> SimTime {
        SimTime::from_secs_f64(self.lookback_seconds)
    }
}

/// Head counts for a PRIME population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeCensus {
    pub zi_limit: usize,
    pub zi_market: usize,
    pub trend: usize,
    pub mean_revert: usize,
}

impl Default for PrimeCensus {
    fn default() -> Self {
        Self {
            zi_limit: 1000,
            zi_market: 30,
            trend: 10,
            mean_revert: 10,
        }
    }
}

fn check_rate(rate: f64) -> Result<(), String> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(format!("rate {rate} must be positive"))
    }
}

fn check_size(size: u64) -> Result<(), String> {
    if size >= 1 {
        Ok(())
    } else {
        Err("order size must be >= 1".into())
    }
}

/// Twice the reference mid a Santa-Fe limit agent compares its valuation
/// against. A missing side is replaced by the price just outside the band.
pub fn santa_fe_reference_mid2x(quote: &L1Snapshot, band_low: i64, band_high: i64) -> i64 {
    let bid = quote.best_bid.map_or(band_low - 1, TickPrice::ticks);
    let ask = quote.best_ask.map_or(band_high + 1, TickPrice::ticks);
    bid + ask
}

/// Limit-order agent: cancel its oldest order with probability `p_cancel`,
/// otherwise quote one order at a private valuation, buying below the mid and
/// selling above it. A valuation exactly at the mid picks its side by a fair coin.
pub fn zi_limit_wakeup<R: Rng + ?Sized>(
    params: &ZiLimitParams,
    quote: &L1Snapshot,
    rng: &mut R,
    oldest_own: Option<OrderId>,
) -> Action {
    let prime_mid = match params.mode {
        ValuationMode::Prime => match quote.mid2x() {
            Some(m) => Some(m),
            None => return Action::Skip,
        },
        ValuationMode::SantaFe => None,
    };

    let n: f64 = rng.random();
    if n < params.p_cancel {
        return oldest_own.map_or(Action::Skip, Action::Cancel);
    }

    let (valuation, mid2x) = match prime_mid {
        None => (
            rng.random_range(params.band_low..=params.band_high),
            santa_fe_reference_mid2x(quote, params.band_low, params.band_high),
        ),
        Some(mid2x) => (prime_valuation(mid2x, params.half_width, rng), mid2x),
    };
    let Ok(price) = TickPrice::new(valuation) else {
        return Action::Skip;
    };
    let side = match (2 * valuation).cmp(&mid2x) {
        std::cmp::Ordering::Less => Side::Bid,
        std::cmp::Ordering::Greater => Side::Ask,
        std::cmp::Ordering::Equal => {
            if rng.random_bool(0.5) {
                Side::Bid
            } else {
                Side::Ask
            }
        }
    };
    Action::Limit {
        side,
        price,
        qty: params.size,
    }
}

/// Mid plus a nonzero integer offset in `[-w, w]`. A half-tick mid is rounded
/// toward the offset's side so buy and sell distances stay symmetric.
fn prime_valuation<R: Rng + ?Sized>(mid2x: i64, w: i64, rng: &mut R) -> i64 {
    let k = rng.random_range(0..2 * w);
    let offset = if k < w { k - w } else { k - w + 1 };
    let base = if mid2x % 2 == 0 {
        mid2x / 2
    } else if offset < 0 {
        (mid2x + 1) / 2
    } else {
        (mid2x - 1) / 2
    };
    base + offset
}

/// Santa-Fe market agent: buy when a uniform draw is at most one half.
pub fn zi_market_wakeup<R: Rng + ?Sized>(params: &ZiMarketParams, rng: &mut R) -> Action {
    let m: f64 = rng.random();
    let side = if m <= 0.5 { Side::Bid } else { Side::Ask };
    Action::Market {
        side,
        qty: params.size,
    }
}

/// Order-sign generator for the DAR(p) market agent.
#[derive(Debug, Clone)]
pub struct DarpState {
    /// Most recent sign first; `true` is a buy.
    history: VecDeque<bool>,
    /// Cumulative parent-lag distribution over lags `1..=n`.
    lag_cdf: Vec<f64>,
    params: DarpParams,
}

impl DarpState {
    pub fn new<R: Rng + ?Sized>(params: DarpParams, rng: &mut R) -> Self {
        let history = (0..params.n).map(|_| rng.random_bool(0.5)).collect();
        Self::with_history(params, history)
    }

    pub fn with_history(params: DarpParams, history: VecDeque<bool>) -> Self {
        assert_eq!(history.len(), params.n, "history length must equal n");
        let expo = (params.gamma - 3.0) / 2.0;
        let weights: Vec<f64> = (1..=params.n).map(|l| (l as f64).powf(expo)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut lag_cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        if let Some(last) = lag_cdf.last_mut() {
            *last = 1.0;
        }
        Self {
            history,
            lag_cdf,
            params,
        }
    }

    pub fn history(&self) -> &VecDeque<bool> {
        &self.history
    }

    /// Draws the parent lag in `1..=n`.
    pub fn sample_lag<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.lag_cdf.partition_point(|c| *c < u);
        idx.min(self.params.n - 1) + 1
    }

    /// Next sign (`true` = buy); the new sign is pushed to the front of the
    /// history and the oldest one dropped.
    pub fn next_sign<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let lag = self.sample_lag(rng);
        let parent = self.history[lag - 1];
        let r: f64 = rng.random();
        let copy = if self.params.literal_pseudocode {
            self.params.p <= r
        } else {
            r < self.params.p
        };
        let sign = if copy { parent } else { !parent };
        self.history.pop_back();
        self.history.push_front(sign);
        sign
    }
}

pub fn darp_market_wakeup<R: Rng + ?Sized>(params: &ZiMarketParams, state: &mut DarpState, rng: &mut R) -> Action {
    let side = if state.next_sign(rng) { Side::Bid } else { Side::Ask };
    Action::Market {
        side,
        qty: params.size,
    }
}

/// Fundamental market agent: compares a noisy oracle observation with the mid.
pub fn prime_market_wakeup<R: Rng + ?Sized>(
    params: &ZiMarketParams,
    quote: &L1Snapshot,
    oracle: &PriceSeries,
    noise: ObservationNoise,
    now: SimTime,
    rng: &mut R,
) -> Action {
    let fundamental = oracle.observe(now, noise, rng).ticks();
    let side = match quote.mid2x() {
        Some(mid2x) if 2 * fundamental > mid2x => Side::Bid,
        Some(mid2x) if 2 * fundamental < mid2x => Side::Ask,
        _ => {
            if rng.random_bool(0.5) {
                Side::Bid
            } else {
                Side::Ask
            }
        }
    };
    Action::Market {
        side,
        qty: params.size,
    }
}

/// Technical agent decision from the mid now and one lookback ago (both as
/// `mid2x`). Skips when either is unknown or the move is inside the dead zone.
pub fn technical_wakeup(params: &TechnicalParams, mid2x_now: Option<i64>, mid2x_then: Option<i64>) -> Action {
    let (Some(now), Some(then)) = (mid2x_now, mid2x_then) else {
        return Action::Skip;
    };
    let delta = (now - then) as f64 / 2.0;
    let up = if delta > params.threshold {
        true
    } else if delta < -params.threshold {
        false
    } else {
        return Action::Skip;
    };
    let buy = match params.kind {
        TechnicalKind::TrendFollow => up,
        TechnicalKind::MeanRevert => !up,
    };
    Action::Market {
        side: if buy { Side::Bid } else { Side::Ask },
        qty: params.size,
    }
}
