//! Fixed-length window resampling of a trade tape and quote log.

use crate::book::{L1Snapshot, Trade};
use crate::kernel::SimTime;

/// One resampling interval `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    /// Position on the grid anchored at the resampling origin.
    pub index: usize,
    pub start: SimTime,
    /// Twice the mid in force just before the window opens.
    pub open_mid2x: i64,
    /// Twice the mid in force when the window closes.
    pub close_mid2x: i64,
    /// Buy volume minus sell volume, by aggressor side.
    pub net: i64,
    pub gross: u64,
}

impl Window {
    /// Mid change in ticks.
    pub fn dp(&self) -> f64 {
        (self.close_mid2x - self.open_mid2x) as f64 / 2.0
    }

    /// Mid change in half ticks; exact.
    pub fn dp2x(&self) -> i64 {
        self.close_mid2x - self.open_mid2x
    }
}

/// Cuts the session into windows of `window_len` anchored at a multiple of
/// `window_len` at or below the first record, and ending with the window that
/// holds the last record.
///
/// A window's open mid is the last defined mid quoted strictly before it
/// starts; quotes with one side missing carry the previous mid forward.
/// Leading windows with no defined mid before them are dropped, so the output
/// is contiguous. Inputs must be sorted by time.
pub fn resample(trades: &[Trade], quotes: &[L1Snapshot], window_len: SimTime) -> Vec<Window> {
    assert!(window_len.0 > 0, "window length must be positive");
    debug_assert!(trades.windows(2).all(|w| w[0].ts <= w[1].ts));
    debug_assert!(quotes.windows(2).all(|w| w[0].ts <= w[1].ts));

    let first = match (trades.first(), quotes.first()) {
        (Some(t), Some(q)) => t.ts.min(q.ts),
        (Some(t), None) => t.ts,
        (None, Some(q)) => q.ts,
        (None, None) => return Vec::new(),
    };
    let last = trades
        .last()
        .map(|t| t.ts)
        .into_iter()
        .chain(quotes.last().map(|q| q.ts))
        .max()
        .expect("non-empty");
    let len = window_len.0;
    let origin = first.0 / len * len;
    let count = ((last.0 - origin) / len + 1) as usize;

    let mut out = Vec::with_capacity(count);
    let mut qi = 0;
    let mut ti = 0;
    let mut mid: Option<i64> = None;
    for index in 0..count {
        let start = origin + index as u64 * len;
        let end = start + len;

        // Everything quoted before the window opens.
        while qi < quotes.len() && quotes[qi].ts.0 < start {
            if let Some(m) = quotes[qi].mid2x() {
                mid = Some(m);
            }
            qi += 1;
        }
        let open = mid;
        while qi < quotes.len() && quotes[qi].ts.0 < end {
            if let Some(m) = quotes[qi].mid2x() {
                mid = Some(m);
            }
            qi += 1;
        }

        let mut net = 0i64;
        let mut gross = 0u64;
        while ti < trades.len() && trades[ti].ts.0 < end {
            let t = &trades[ti];
            net += t.aggressor.sign() * t.qty as i64;
            gross += t.qty;
            ti += 1;
        }

        if let (Some(open_mid2x), Some(close_mid2x)) = (open, mid) {
            out.push(Window {
                index,
                start: SimTime(start),
                open_mid2x,
                close_mid2x,
                net,
                gross,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{AgentId, OrderId, Side, TickPrice};

    fn px(v: i64) -> TickPrice {
        TickPrice::new(v).unwrap()
    }

    fn trade(ts: u64, qty: u64, side: Side) -> Trade {
        Trade {
            ts: SimTime(ts),
            price: px(100),
            qty,
            aggressor: side,
            maker_order: OrderId(0),
            taker_agent: AgentId(0),
        }
    }

    fn quote(ts: u64, bid: i64, ask: i64) -> L1Snapshot {
        L1Snapshot {
            ts: SimTime(ts),
            best_bid: Some(px(bid)),
            best_ask: Some(px(ask)),
        }
    }

    #[test]
    fn net_volume_is_signed() {
        let trades = vec![trade(12, 200, Side::Bid), trade(13, 500, Side::Ask)];
        let quotes = vec![quote(0, 99, 101), quote(14, 98, 100)];
        let w = resample(&trades, &quotes, SimTime(10));
        // The window [0, 10) has no quote before it and is dropped.
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].index, 1);
        assert_eq!(w[0].net, -300);
        assert_eq!(w[0].gross, 700);
        assert_eq!(w[0].dp(), -1.0);
    }

    #[test]
    fn quiet_window_carries_mid() {
        let trades = vec![trade(35, 1, Side::Bid)];
        let quotes = vec![quote(0, 99, 101), quote(5, 100, 101), quote(35, 100, 102)];
        let w = resample(&trades, &quotes, SimTime(10));
        assert_eq!(w.len(), 3);
        assert_eq!((w[0].net, w[0].gross, w[0].dp()), (0, 0, 0.0));
        assert_eq!(w[1].open_mid2x, 201);
        assert_eq!(w[1].dp(), 0.0);
        assert_eq!(w[2].dp(), 0.5);
        assert!(w.windows(2).all(|p| p[1].open_mid2x == p[0].close_mid2x));
    }

    #[test]
    fn one_sided_quotes_carry_previous_mid() {
        let quotes = vec![
            quote(0, 99, 101),
            L1Snapshot {
                ts: SimTime(15),
                best_bid: None,
                best_ask: Some(px(101)),
            },
            quote(25, 100, 102),
        ];
        let w = resample(&[], &quotes, SimTime(10));
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].dp(), 0.0);
        assert_eq!(w[1].dp(), 1.0);
    }

    #[test]
    fn empty_inputs() {
        assert!(resample(&[], &[], SimTime(10)).is_empty());
    }
}
