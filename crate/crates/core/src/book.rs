//! Price-time-priority continuous double auction.
//!
//! The book keeps one FIFO queue per integer price level on each side. Incoming
//! orders walk the opposite side best-price-first and, within a level, oldest
//! first. An incoming order never trades against resting orders owned by the
//! same agent; those are skipped in place and keep their queue position.
//!
//! Any part of an incoming limit order that could only rest by crossing the
//! agent's own resting orders is discarded, so the book is never crossed.
//! Unfilled market-order remainders are discarded as well.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::Bound;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::SimTime;

/// Price on the integer tick grid. Always at least one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct TickPrice(i64);

impl TickPrice {
    pub fn new(ticks: i64) -> Result<Self, BookError> {
        if ticks >= 1 {
            Ok(Self(ticks))
        } else {
            Err(BookError::InvalidPrice(ticks))
        }
    }

    #[inline]
    pub fn ticks(self) -> i64 {
        self.0
    }
}

impl TryFrom<i64> for TickPrice {
    type Error = BookError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<TickPrice> for i64 {
    fn from(p: TickPrice) -> i64 {
        p.0
    }
}

impl fmt::Display for TickPrice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    /// +1 for buys, -1 for sells.
    pub fn sign(self) -> i64 {
        match self {
            Side::Bid => 1,
            Side::Ask => -1,
        }
    }

    /// Tape code: `B` for an aggressive buy, `S` for a sell.
    pub fn code(self) -> char {
        match self {
            Side::Bid => 'B',
            Side::Ask => 'S',
        }
    }

    pub fn from_code(code: &str) -> Option<Side> {
        match code {
            "B" | "b" | "buy" | "BUY" => Some(Side::Bid),
            "S" | "s" | "sell" | "SELL" => Some(Side::Ask),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl AgentId {
    /// Owner of the orders placed by [`OrderBook::seed_linear_book`].
    pub const SEEDER: AgentId = AgentId(u32::MAX);
}

/// Sequential order-id allocator for one session.
#[derive(Debug, Clone, Default)]
pub struct OrderIds {
    next: u64,
}

impl OrderIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> OrderId {
        let id = OrderId(self.next);
        self.next += 1;
        id
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitOrder {
    pub id: OrderId,
    pub agent: AgentId,
    pub side: Side,
    pub price: TickPrice,
    pub qty: u64,
    pub ts: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trade {
    pub ts: SimTime,
    pub price: TickPrice,
    pub qty: u64,
    pub aggressor: Side,
    pub maker_order: OrderId,
    pub taker_agent: AgentId,
}

/// Level-1 view of the book. `mid2x` is twice the mid so it stays integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct L1Snapshot {
    pub ts: SimTime,
    pub best_bid: Option<TickPrice>,
    pub best_ask: Option<TickPrice>,
}

impl L1Snapshot {
    pub fn mid2x(&self) -> Option<i64> {
        Some(self.best_bid?.ticks() + self.best_ask?.ticks())
    }

    pub fn spread(&self) -> Option<i64> {
        Some(self.best_ask?.ticks() - self.best_bid?.ticks())
    }

    pub fn mid(&self) -> Option<f64> {
        self.mid2x().map(|m| m as f64 / 2.0)
    }

    /// Same quotes, ignoring the timestamp.
    pub fn same_quotes(&self, other: &L1Snapshot) -> bool {
        self.best_bid == other.best_bid && self.best_ask == other.best_ask
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LimitOutcome {
    pub trades: Vec<Trade>,
    /// Quantity left resting in the book.
    pub rested: u64,
    /// Quantity dropped because resting it would cross the agent's own orders.
    pub discarded: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MarketOutcome {
    pub trades: Vec<Trade>,
    /// Unfilled remainder, dropped.
    pub discarded: u64,
    /// The opposite side was empty when the order arrived.
    pub no_liquidity: bool,
}

impl MarketOutcome {
    pub fn filled(&self) -> u64 {
        self.trades.iter().map(|t| t.qty).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("price {0} is off the tick grid (must be >= 1)")]
    InvalidPrice(i64),
    #[error("order quantity must be positive")]
    ZeroQuantity,
    #[error("order id {0:?} is already resting")]
    DuplicateId(OrderId),
    #[error("book must be empty before seeding")]
    NotEmpty,
    #[error("seeding {half_width} levels below {start} would leave the tick grid")]
    SeedOffGrid { start: i64, half_width: i64 },
}

/// Parameters for [`OrderBook::seed_linear_book`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSeed {
    pub start_price: i64,
    pub half_width: i64,
    pub slope: u64,
}

type Levels = BTreeMap<TickPrice, VecDeque<LimitOrder>>;

#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    bids: Levels,
    asks: Levels,
    index: HashMap<OrderId, (Side, TickPrice)>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn resting_count(&self) -> usize {
        self.index.len()
    }

    pub fn best_bid(&self) -> Option<TickPrice> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<TickPrice> {
        self.asks.keys().next().copied()
    }

    pub fn l1(&self, ts: SimTime) -> L1Snapshot {
        L1Snapshot {
            ts,
            best_bid: self.best_bid(),
            best_ask: self.best_ask(),
        }
    }

    /// Total resting quantity on one side.
    pub fn depth(&self, side: Side) -> u64 {
        self.levels(side)
            .values()
            .flat_map(|q| q.iter())
            .map(|o| o.qty)
            .sum()
    }

    pub fn level_qty(&self, side: Side, price: TickPrice) -> u64 {
        self.levels(side)
            .get(&price)
            .map(|q| q.iter().map(|o| o.qty).sum())
            .unwrap_or(0)
    }

    pub fn order(&self, id: OrderId) -> Option<&LimitOrder> {
        let (side, price) = self.index.get(&id)?;
        self.levels(*side).get(price)?.iter().find(|o| o.id == id)
    }

    /// Resting orders of one side in priority order (best level first, FIFO within).
    pub fn side_orders(&self, side: Side) -> Vec<&LimitOrder> {
        let levels = self.levels(side);
        match side {
            Side::Bid => levels.values().rev().flat_map(|q| q.iter()).collect(),
            Side::Ask => levels.values().flat_map(|q| q.iter()).collect(),
        }
    }

    pub fn submit_limit(&mut self, order: LimitOrder) -> Result<LimitOutcome, BookError> {
        if order.qty == 0 {
            return Err(BookError::ZeroQuantity);
        }
        if self.index.contains_key(&order.id) {
            return Err(BookError::DuplicateId(order.id));
        }

        let mut trades = Vec::new();
        let remaining = self.sweep(
            order.side,
            Some(order.price),
            order.agent,
            order.qty,
            order.ts,
            &mut trades,
        );

        let mut outcome = LimitOutcome {
            trades,
            ..Default::default()
        };
        if remaining == 0 {
            return Ok(outcome);
        }

        // Whatever still crosses belongs to the same agent.
        let crosses = match order.side {
            Side::Bid => self.best_ask().is_some_and(|a| order.price >= a),
            Side::Ask => self.best_bid().is_some_and(|b| order.price <= b),
        };
        if crosses {
            outcome.discarded = remaining;
        } else {
            outcome.rested = remaining;
            self.rest(LimitOrder {
                qty: remaining,
                ..order
            });
        }
        Ok(outcome)
    }

    pub fn submit_market(
        &mut self,
        agent: AgentId,
        side: Side,
        qty: u64,
        ts: SimTime,
    ) -> Result<MarketOutcome, BookError> {
        if qty == 0 {
            return Err(BookError::ZeroQuantity);
        }
        let no_liquidity = self.levels(side.opposite()).is_empty();
        let mut trades = Vec::new();
        let discarded = self.sweep(side, None, agent, qty, ts, &mut trades);
        Ok(MarketOutcome {
            trades,
            discarded,
            no_liquidity,
        })
    }

    /// Removes a resting order. Unknown or already-filled ids return `None`.
    pub fn cancel_order(&mut self, id: OrderId) -> Option<LimitOrder> {
        let (side, price) = self.index.remove(&id)?;
        let levels = self.levels_mut(side);
        let queue = levels.get_mut(&price)?;
        let pos = queue.iter().position(|o| o.id == id)?;
        let order = queue.remove(pos);
        if queue.is_empty() {
            levels.remove(&price);
        }
        order
    }

    /// Rests `slope * d` units at `start - d` and `start + d` for `d = 1..=half_width`,
    /// owned by [`AgentId::SEEDER`].
    pub fn seed_linear_book(
        &mut self,
        seed: &LinearSeed,
        ids: &mut OrderIds,
        ts: SimTime,
    ) -> Result<(), BookError> {
        if !self.is_empty() {
            return Err(BookError::NotEmpty);
        }
        if seed.slope == 0 {
            return Err(BookError::ZeroQuantity);
        }
        if seed.start_price - seed.half_width < 1 {
            return Err(BookError::SeedOffGrid {
                start: seed.start_price,
                half_width: seed.half_width,
            });
        }
        for d in 1..=seed.half_width {
            let qty = seed.slope * d as u64;
            for (side, price) in [
                (Side::Bid, seed.start_price - d),
                (Side::Ask, seed.start_price + d),
            ] {
                self.rest(LimitOrder {
                    id: ids.next_id(),
                    agent: AgentId::SEEDER,
                    side,
                    price: TickPrice::new(price)?,
                    qty,
                    ts,
                });
            }
        }
        Ok(())
    }

    fn levels(&self, side: Side) -> &Levels {
        match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        }
    }

    fn levels_mut(&mut self, side: Side) -> &mut Levels {
        match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        }
    }

    fn rest(&mut self, order: LimitOrder) {
        self.index.insert(order.id, (order.side, order.price));
        self.levels_mut(order.side)
            .entry(order.price)
            .or_default()
            .push_back(order);
    }

    /// Next opposite-side level strictly worse than `after` (or the best one).
    fn next_level(&self, taker: Side, after: Option<TickPrice>) -> Option<TickPrice> {
        match (taker, after) {
            (Side::Bid, None) => self.asks.keys().next().copied(),
            (Side::Bid, Some(p)) => self
                .asks
                .range((Bound::Excluded(p), Bound::Unbounded))
                .next()
                .map(|(k, _)| *k),
            (Side::Ask, None) => self.bids.keys().next_back().copied(),
            (Side::Ask, Some(p)) => self.bids.range(..p).next_back().map(|(k, _)| *k),
        }
    }

    /// Matches `qty` from `taker` against the opposite side, skipping the taker's
    /// own orders. Returns the unfilled quantity.
    fn sweep(
        &mut self,
        side: Side,
        limit: Option<TickPrice>,
        taker: AgentId,
        mut qty: u64,
        ts: SimTime,
        trades: &mut Vec<Trade>,
    ) -> u64 {
        let mut cursor = None;
        while qty > 0 {
            let Some(price) = self.next_level(side, cursor) else {
                break;
            };
            let crosses = match (side, limit) {
                (_, None) => true,
                (Side::Bid, Some(l)) => price <= l,
                (Side::Ask, Some(l)) => price >= l,
            };
            if !crosses {
                break;
            }
            cursor = Some(price);

            let levels = match side.opposite() {
                Side::Bid => &mut self.bids,
                Side::Ask => &mut self.asks,
            };
            let queue = levels.get_mut(&price).expect("level listed by next_level");
            let mut i = 0;
            while i < queue.len() && qty > 0 {
                let maker = &mut queue[i];
                if maker.agent == taker {
                    i += 1;
                    continue;
                }
                let fill = qty.min(maker.qty);
                maker.qty -= fill;
                qty -= fill;
                trades.push(Trade {
                    ts,
                    price,
                    qty: fill,
                    aggressor: side,
                    maker_order: maker.id,
                    taker_agent: taker,
                });
                if maker.qty == 0 {
                    let done = queue.remove(i).expect("index in bounds");
                    self.index.remove(&done.id);
                } else {
                    i += 1;
                }
            }
            if queue.is_empty() {
                levels.remove(&price);
            }
        }
        qty
    }
}
