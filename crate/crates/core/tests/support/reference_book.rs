//! Deliberately naive matcher used as an oracle for the real order book.
//!
//! Resting orders live in one flat vector in arrival order; every match scans
//! it linearly for the best eligible counterparty.

use impactsim::book::{AgentId, LimitOrder, OrderId, Side, TickPrice, Trade};
use impactsim::kernel::SimTime;

#[derive(Debug, Default)]
pub struct ReferenceBook {
    resting: Vec<LimitOrder>,
}

fn crosses(taker: Side, limit: Option<TickPrice>, maker_price: TickPrice) -> bool {
    match (taker, limit) {
        (_, None) => true,
        (Side::Bid, Some(l)) => maker_price <= l,
        (Side::Ask, Some(l)) => maker_price >= l,
    }
}

fn better(taker: Side, a: TickPrice, b: TickPrice) -> bool {
    match taker {
        Side::Bid => a < b,
        Side::Ask => a > b,
    }
}

impl ReferenceBook {
    /// Fills against other agents' orders and returns the unfilled quantity.
    fn take(
        &mut self,
        side: Side,
        limit: Option<TickPrice>,
        agent: AgentId,
        mut qty: u64,
        ts: SimTime,
        trades: &mut Vec<Trade>,
    ) -> u64 {
        while qty > 0 {
            // First index wins ties, which is arrival order.
            let mut best: Option<usize> = None;
            for (i, o) in self.resting.iter().enumerate() {
                if o.side == side || o.agent == agent || !crosses(side, limit, o.price) {
                    continue;
                }
                if best.is_none_or(|b| better(side, o.price, self.resting[b].price)) {
                    best = Some(i);
                }
            }
            let Some(i) = best else { break };
            let fill = qty.min(self.resting[i].qty);
            trades.push(Trade {
                ts,
                price: self.resting[i].price,
                qty: fill,
                aggressor: side,
                maker_order: self.resting[i].id,
                taker_agent: agent,
            });
            qty -= fill;
            self.resting[i].qty -= fill;
            if self.resting[i].qty == 0 {
                self.resting.remove(i);
            }
        }
        qty
    }

    pub fn limit(&mut self, order: LimitOrder) -> Vec<Trade> {
        let mut trades = Vec::new();
        let left = self.take(order.side, Some(order.price), order.agent, order.qty, order.ts, &mut trades);
        let blocked = self
            .resting
            .iter()
            .any(|o| o.side != order.side && crosses(order.side, Some(order.price), o.price));
        if left > 0 && !blocked {
            self.resting.push(LimitOrder { qty: left, ..order });
        }
        trades
    }

    pub fn market(&mut self, agent: AgentId, side: Side, qty: u64, ts: SimTime) -> Vec<Trade> {
        let mut trades = Vec::new();
        self.take(side, None, agent, qty, ts, &mut trades);
        trades
    }

    pub fn cancel(&mut self, id: OrderId) -> Option<LimitOrder> {
        let i = self.resting.iter().position(|o| o.id == id)?;
        Some(self.resting.remove(i))
    }

    /// Resting orders of one side, best price first and oldest first within a price.
    pub fn side_orders(&self, side: Side) -> Vec<LimitOrder> {
        let mut v: Vec<LimitOrder> = self.resting.iter().filter(|o| o.side == side).cloned().collect();
        // Stable sort keeps arrival order within a price.
        match side {
            Side::Bid => v.sort_by_key(|o| std::cmp::Reverse(o.price)),
            Side::Ask => v.sort_by_key(|o| o.price),
        }
        v
    }
}
