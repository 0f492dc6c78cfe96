//! Agent-based limit order book simulator and market-impact analysis toolkit.
//!
//! The simulator runs zero-intelligence and oracle-anchored agents against a
//! price-time priority matching engine on a deterministic discrete-event clock.
//! The `stats` module measures initial impact, impact decay and order-sign
//! autocorrelation, identically on simulator logs and recorded trade dumps.

pub mod agents;
pub mod analysis;
pub mod book;
pub mod config;
pub mod error;
pub mod io;
pub mod kernel;
pub mod market;
pub mod oracle;
pub mod run;
pub mod stats;

pub use error::{Error, Result};
