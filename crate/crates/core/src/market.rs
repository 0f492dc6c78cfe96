//! One simulated exchange session: the book, the event queue, the registered
//! agents and the logs they produce.
//!
//! A session is single-threaded and fully determined by its master seed and
//! the order in which agents are registered.

use std::collections::VecDeque;

use crate::agents::{
    darp_market_wakeup, prime_market_wakeup, technical_wakeup, zi_limit_wakeup, zi_market_wakeup, Action,
    DarpState, MarketMode, TechnicalParams, ZiLimitParams, ZiMarketParams,
};
use crate::book::{AgentId, L1Snapshot, LimitOrder, LinearSeed, OrderBook, OrderId, OrderIds, Trade};
use crate::kernel::{agent_rng, next_poisson_wakeup, AgentRng, EventKind, EventQueue, SimError, SimTime};
use crate::oracle::{ObservationNoise, PriceSeries};

/// Agent kinds a session can host.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    ZiLimit(ZiLimitParams),
    ZiMarket(ZiMarketParams),
    Technical(TechnicalParams),
}

impl AgentSpec {
    pub fn rate(&self) -> f64 {
        match self {
            AgentSpec::ZiLimit(p) => p.rate,
            AgentSpec::ZiMarket(p) => p.rate,
            AgentSpec::Technical(p) => p.rate,
        }
    }
}

/// When an agent wakes up next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// Exponential gaps at this many wakeups per second.
    Poisson(f64),
    /// Fixed gap; the first wakeup is one gap after registration.
    Fixed(SimTime),
}

#[derive(Debug)]
enum Policy {
    ZiLimit(ZiLimitParams),
    ZiMarket(ZiMarketParams),
    Darp(ZiMarketParams, DarpState),
    Technical(TechnicalParams),
}

#[derive(Debug)]
struct AgentSlot {
    policy: Policy,
    clock: Clock,
    rng: AgentRng,
    /// Order ids this agent placed, oldest first. May contain filled orders,
    /// pruned lazily from the front.
    own: VecDeque<OrderId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events_dispatched: u64,
    pub wakeups: u64,
    pub limit_orders: u64,
    pub market_orders: u64,
    pub cancels: u64,
    pub skips: u64,
    pub trades: u64,
    pub traded_volume: u64,
    pub discarded_volume: u64,
    pub no_liquidity: u64,
    /// Number of post-event checks that found `best_bid >= best_ask`.
    pub crossed_observations: u64,
    pub session_start: SimTime,
    pub session_end: SimTime,
}

impl RunStats {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("events_dispatched".into(), self.events_dispatched.to_string()),
            ("wakeups".into(), self.wakeups.to_string()),
            ("limit_orders".into(), self.limit_orders.to_string()),
            ("market_orders".into(), self.market_orders.to_string()),
            ("cancels".into(), self.cancels.to_string()),
            ("skips".into(), self.skips.to_string()),
            ("trades".into(), self.trades.to_string()),
            ("traded_volume".into(), self.traded_volume.to_string()),
            ("discarded_volume".into(), self.discarded_volume.to_string()),
            ("no_liquidity".into(), self.no_liquidity.to_string()),
            ("crossed_observations".into(), self.crossed_observations.to_string()),
            ("session_start_ns".into(), self.session_start.0.to_string()),
            ("session_end_ns".into(), self.session_end.0.to_string()),
        ]
    }
}

#[derive(Debug)]
pub struct MarketSim {
    master_seed: u64,
    book: OrderBook,
    queue: EventQueue,
    agents: Vec<AgentSlot>,
    oracle: Option<PriceSeries>,
    noise: ObservationNoise,
    ids: OrderIds,
    tape: Vec<Trade>,
    l1_log: Vec<L1Snapshot>,
    stats: RunStats,
    ended: bool,
}

impl MarketSim {
    pub fn new(master_seed: u64, oracle: Option<PriceSeries>, noise: ObservationNoise) -> Self {
        let book = OrderBook::new();
        let l1_log = vec![book.l1(SimTime::ZERO)];
        Self {
            master_seed,
            book,
            queue: EventQueue::new(),
            agents: Vec::new(),
            oracle,
            noise,
            ids: OrderIds::new(),
            tape: Vec::new(),
            l1_log,
            stats: RunStats::default(),
            ended: false,
        }
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn tape(&self) -> &[Trade] {
        &self.tape
    }

    /// Quote changes, starting with the state at t = 0.
    pub fn l1_log(&self) -> &[L1Snapshot] {
        &self.l1_log
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn seed_book(&mut self, seed: &LinearSeed) -> Result<(), crate::book::BookError> {
        let now = self.now();
        self.book.seed_linear_book(seed, &mut self.ids, now)?;
        self.log_quote(now);
        Ok(())
    }

    pub fn add_agent(&mut self, spec: AgentSpec) -> Result<AgentId, SimError> {
        let clock = Clock::Poisson(spec.rate());
        self.add_agent_with_clock(spec, clock)
    }

    pub fn add_agent_with_clock(&mut self, spec: AgentSpec, clock: Clock) -> Result<AgentId, SimError> {
        let id = AgentId(self.agents.len() as u32);
        let mut rng = agent_rng(self.master_seed, id);
        let policy = match spec {
            AgentSpec::ZiLimit(p) => Policy::ZiLimit(p),
            AgentSpec::ZiMarket(p) => match (p.mode, p.darp) {
                (MarketMode::Darp, Some(d)) => {
                    let state = DarpState::new(d, &mut rng);
                    Policy::Darp(p, state)
                }
                (MarketMode::Darp, None) => return Err(SimError::MissingDarpParams),
                (MarketMode::Prime, _) if self.oracle.is_none() => return Err(SimError::MissingOracle),
                _ => Policy::ZiMarket(p),
            },
            AgentSpec::Technical(p) => Policy::Technical(p),
        };
        let first = self.now() + next_gap(clock, &mut rng)?;
        self.queue.schedule(first, id, EventKind::Wakeup)?;
        self.agents.push(AgentSlot {
            policy,
            clock,
            rng,
            own: VecDeque::new(),
        });
        Ok(id)
    }

    /// Stops dispatch when `t` is reached, even if `run_until` asks for more.
    pub fn schedule_session_end(&mut self, t: SimTime) -> Result<(), SimError> {
        self.queue.schedule(t, AgentId::SEEDER, EventKind::SessionEnd).map(|_| ())
    }

    /// Dispatches every event with time `<= end` in `(time, seq)` order.
    pub fn run_until(&mut self, end: SimTime) -> RunStats {
        while !self.ended {
            match self.queue.peek() {
                Some(ev) if ev.time <= end => {}
                _ => break,
            }
            let ev = self.queue.pop().expect("peeked");
            self.stats.events_dispatched += 1;
            match ev.kind {
                EventKind::SessionEnd => self.ended = true,
                EventKind::Wakeup => self.wake(ev.agent.0 as usize, ev.time),
            }
        }
        if !self.ended {
            self.queue.advance_to(end);
        }
        self.stats.session_end = self.now();
        self.stats.clone()
    }

    fn wake(&mut self, idx: usize, now: SimTime) {
        self.stats.wakeups += 1;
        let quote = self.book.l1(now);
        let slot = &mut self.agents[idx];
        let action = match &mut slot.policy {
            Policy::ZiLimit(p) => {
                while let Some(&front) = slot.own.front() {
                    if self.book.contains(front) {
                        break;
                    }
                    slot.own.pop_front();
                }
                zi_limit_wakeup(p, &quote, &mut slot.rng, slot.own.front().copied())
            }
            Policy::ZiMarket(p) => match p.mode {
                MarketMode::Prime => {
                    let oracle = self.oracle.as_ref().expect("checked at registration");
                    prime_market_wakeup(p, &quote, oracle, self.noise, now, &mut slot.rng)
                }
                _ => zi_market_wakeup(p, &mut slot.rng),
            },
            Policy::Darp(p, state) => darp_market_wakeup(p, state, &mut slot.rng),
            Policy::Technical(p) => {
                let then = now.0.checked_sub(p.lookback().0).map(SimTime);
                let then_mid = then.and_then(|t| mid2x_at(&self.l1_log, t));
                technical_wakeup(p, quote.mid2x(), then_mid)
            }
        };

        let agent = AgentId(idx as u32);
        match action {
            Action::Skip => self.stats.skips += 1,
            Action::Cancel(id) => {
                if self.book.cancel_order(id).is_some() {
                    self.stats.cancels += 1;
                }
                let own = &mut self.agents[idx].own;
                if let Some(pos) = own.iter().position(|o| *o == id) {
                    own.remove(pos);
                }
            }
            Action::Limit { side, price, qty } => {
                self.stats.limit_orders += 1;
                let id = self.ids.next_id();
                let out = self
                    .book
                    .submit_limit(LimitOrder {
                        id,
                        agent,
                        side,
                        price,
                        qty,
                        ts: now,
                    })
                    .expect("fresh id and positive size");
                self.stats.discarded_volume += out.discarded;
                if out.rested > 0 {
                    self.agents[idx].own.push_back(id);
                }
                self.record(out.trades);
            }
            Action::Market { side, qty } => {
                self.stats.market_orders += 1;
                let out = self
                    .book
                    .submit_market(agent, side, qty, now)
                    .expect("positive size");
                self.stats.discarded_volume += out.discarded;
                if out.no_liquidity {
                    self.stats.no_liquidity += 1;
                }
                self.record(out.trades);
            }
        }

        self.log_quote(now);

        let slot = &mut self.agents[idx];
        let gap = next_gap(slot.clock, &mut slot.rng).expect("clock validated at registration");
        self.queue
            .schedule(now + gap, agent, EventKind::Wakeup)
            .expect("future event");
    }

    fn record(&mut self, trades: Vec<Trade>) {
        self.stats.trades += trades.len() as u64;
        self.stats.traded_volume += trades.iter().map(|t| t.qty).sum::<u64>();
        self.tape.extend(trades);
    }

    fn log_quote(&mut self, now: SimTime) {
        let snap = self.book.l1(now);
        if let (Some(b), Some(a)) = (snap.best_bid, snap.best_ask) {
            if b >= a {
                self.stats.crossed_observations += 1;
            }
        }
        let last = self.l1_log.last().expect("log starts non-empty");
        if !last.same_quotes(&snap) {
            self.l1_log.push(snap);
        }
    }
}

fn next_gap(clock: Clock, rng: &mut AgentRng) -> Result<SimTime, SimError> {
    match clock {
        Clock::Poisson(rate) => next_poisson_wakeup(rate, rng),
        Clock::Fixed(gap) if gap > SimTime::ZERO => Ok(gap),
        Clock::Fixed(_) => Err(SimError::InvalidRate(0.0)),
    }
}

/// `mid2x` in force at `t` according to a quote log sorted by time.
pub fn mid2x_at(log: &[L1Snapshot], t: SimTime) -> Option<i64> {
    let idx = log.partition_point(|s| s.ts <= t);
    if idx == 0 {
        return None;
    }
    log[idx - 1].mid2x()
}
