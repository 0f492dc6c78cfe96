//! CSV formats for trade tapes and quote logs.
//!
//! Trade tape: `ts,price,qty,aggressor,taker_agent` (nanoseconds, ticks,
//! units, `B`/`S`, integer id). `taker_agent` is optional on input, so
//! exchange dumps with only `ts,price,qty,aggressor` load the same way.
//!
//! Quote log: `ts,best_bid,best_ask`, with an empty field for a missing side.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::book::{AgentId, L1Snapshot, OrderId, Side, TickPrice, Trade};
use crate::kernel::SimTime;

pub const TRADE_HEADER: &str = "ts,price,qty,aggressor,taker_agent";
pub const L1_HEADER: &str = "ts,best_bid,best_ask";

/// Fraction of malformed rows above which a file is rejected.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: bad header `{found}`, expected columns {expected}")]
    Header {
        path: PathBuf,
        found: String,
        expected: &'static str,
    },
    #[error("{path}: {malformed} of {rows} rows are malformed (first at row {first_row}: {reason})")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        rows: usize,
        first_row: usize,
        reason: String,
    },
}

/// Trades loaded from a file, sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeDump {
    pub path: PathBuf,
    pub trades: Vec<Trade>,
    /// Rows skipped as malformed.
    pub malformed: usize,
}

pub fn write_trades(path: &Path, trades: &[Trade]) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{TRADE_HEADER}")?;
        for t in trades {
            writeln!(
                w,
                "{},{},{},{},{}",
                t.ts.0,
                t.price.ticks(),
                t.qty,
                t.aggressor.code(),
                t.taker_agent.0
            )?;
        }
        w.flush()
    };
    write().map_err(io_err)
}

pub fn write_l1(path: &Path, quotes: &[L1Snapshot]) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let opt = |p: Option<TickPrice>| p.map(|p| p.ticks().to_string()).unwrap_or_default();
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{L1_HEADER}")?;
        for q in quotes {
            writeln!(w, "{},{},{}", q.ts.0, opt(q.best_bid), opt(q.best_ask))?;
        }
        w.flush()
    };
    write().map_err(io_err)
}

struct Columns {
    idx: Vec<Option<usize>>,
}

fn columns(path: &Path, rdr: &mut csv::Reader<File>, required: &[&str], optional: &[&str], expected: &'static str) -> Result<Columns, DataError> {
    let headers = rdr.headers().map_err(|source| DataError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut idx = Vec::new();
    for name in required {
        match find(name) {
            Some(i) => idx.push(Some(i)),
            None => {
                return Err(DataError::Header {
                    path: path.to_path_buf(),
                    found: headers.iter().collect::<Vec<_>>().join(","),
                    expected,
                })
            }
        }
    }
    idx.extend(optional.iter().map(|n| find(n)));
    Ok(Columns { idx })
}

/// Parses every record with `parse`, counting failures, and rejects the file
/// when more than [`MAX_MALFORMED_FRACTION`] of rows fail.
fn read_rows<T>(
    path: &Path,
    rdr: &mut csv::Reader<File>,
    mut parse: impl FnMut(&csv::StringRecord) -> Result<T, String>,
) -> Result<(Vec<T>, usize), DataError> {
    let mut out = Vec::new();
    let mut malformed = 0usize;
    let mut first: Option<(usize, String)> = None;
    let mut rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        rows += 1;
        let res = rec.map_err(|e| e.to_string()).and_then(|r| parse(&r));
        match res {
            Ok(v) => out.push(v),
            Err(reason) => {
                malformed += 1;
                first.get_or_insert((i + 1, reason));
            }
        }
    }
    if malformed as f64 > MAX_MALFORMED_FRACTION * rows as f64 {
        let (first_row, reason) = first.expect("at least one malformed row");
        return Err(DataError::TooManyMalformed {
            path: path.to_path_buf(),
            malformed,
            rows,
            first_row,
            reason,
        });
    }
    Ok((out, malformed))
}

fn open(path: &Path) -> Result<csv::Reader<File>, DataError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|source| DataError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

fn field<'a>(rec: &'a csv::StringRecord, idx: Option<usize>, name: &str) -> Result<&'a str, String> {
    idx.and_then(|i| rec.get(i))
        .map(str::trim)
        .ok_or_else(|| format!("missing {name}"))
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {name} `{s}`"))
}

/// Loads a trade file. Rows with unparseable fields or non-positive price or
/// quantity are skipped and counted; records are stably sorted by time.
pub fn load_trades(path: &Path) -> Result<TradeDump, DataError> {
    let mut rdr = open(path)?;
    let cols = columns(
        path,
        &mut rdr,
        &["ts", "price", "qty", "aggressor"],
        &["taker_agent"],
        "ts,price,qty,aggressor[,taker_agent]",
    )?;
    let c = &cols.idx;
    let (mut trades, malformed) = read_rows(path, &mut rdr, |rec| {
        let ts: u64 = parse_num(field(rec, c[0], "ts")?, "ts")?;
        let price: i64 = parse_num(field(rec, c[1], "price")?, "price")?;
        let price = TickPrice::new(price).map_err(|_| format!("non-positive price {price}"))?;
        let qty: u64 = parse_num(field(rec, c[2], "qty")?, "qty")?;
        if qty == 0 {
            return Err("zero quantity".into());
        }
        let side = field(rec, c[3], "aggressor")?;
        let aggressor = Side::from_code(side).ok_or_else(|| format!("bad aggressor `{side}`"))?;
        let taker = match c[4].and_then(|i| rec.get(i)).map(str::trim) {
            None | Some("") => AgentId::SEEDER,
            Some(s) => AgentId(parse_num(s, "taker_agent")?),
        };
        Ok(Trade {
            ts: SimTime(ts),
            price,
            qty,
            aggressor,
            maker_order: OrderId(0),
            taker_agent: taker,
        })
    })?;
    trades.sort_by_key(|t| t.ts);
    Ok(TradeDump {
        path: path.to_path_buf(),
        trades,
        malformed,
    })
}

/// Loads a quote log, stably sorted by time.
pub fn load_l1(path: &Path) -> Result<Vec<L1Snapshot>, DataError> {
    let mut rdr = open(path)?;
    let cols = columns(path, &mut rdr, &["ts", "best_bid", "best_ask"], &[], L1_HEADER)?;
    let c = &cols.idx;
    let price = |s: &str, name: &str| -> Result<Option<TickPrice>, String> {
        if s.is_empty() {
            return Ok(None);
        }
        let p: i64 = parse_num(s, name)?;
        TickPrice::new(p).map(Some).map_err(|_| format!("non-positive {name} {p}"))
    };
    let (mut quotes, _) = read_rows(path, &mut rdr, |rec| {
        let best_bid = price(field(rec, c[1], "best_bid")?, "best_bid")?;
        let best_ask = price(field(rec, c[2], "best_ask")?, "best_ask")?;
        Ok(L1Snapshot {
            ts: SimTime(parse_num(field(rec, c[0], "ts")?, "ts")?),
            best_bid,
            best_ask,
        })
    })?;
    quotes.sort_by_key(|q| q.ts);
    Ok(quotes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trade(ts: u64, price: i64, qty: u64, side: Side, agent: u32) -> Trade {
        Trade {
            ts: SimTime(ts),
            price: TickPrice::new(price).unwrap(),
            qty,
            aggressor: side,
            maker_order: OrderId(0),
            taker_agent: AgentId(agent),
        }
    }

    #[test]
    fn loads_and_sorts_stably() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "ts,price,qty,aggressor\n30,101,2,B\n10,100,1,S\n10,99,4,B\n").unwrap();
        let dump = load_trades(&path).unwrap();
        let got: Vec<_> = dump.trades.iter().map(|t| (t.ts.0, t.price.ticks())).collect();
        assert_eq!(got, vec![(10, 100), (10, 99), (30, 101)]);
        assert_eq!(dump.malformed, 0);
        assert_eq!(dump.trades[1].aggressor, Side::Bid);
    }

    #[test]
    fn tape_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let trades = vec![
            trade(5, 100, 1, Side::Bid, 3),
            trade(5, 101, 2, Side::Ask, 0),
            trade(9, 99, 7, Side::Bid, 12),
        ];
        write_trades(&path, &trades).unwrap();
        assert_eq!(load_trades(&path).unwrap().trades, trades);
        assert!(std::fs::read_to_string(&path).unwrap().starts_with(TRADE_HEADER));
    }

    #[test]
    fn l1_round_trip_with_missing_sides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l1.csv");
        let p = |x| Some(TickPrice::new(x).unwrap());
        let quotes = vec![
            L1Snapshot {
                ts: SimTime(0),
                best_bid: None,
                best_ask: None,
            },
            L1Snapshot {
                ts: SimTime(4),
                best_bid: p(99),
                best_ask: None,
            },
            L1Snapshot {
                ts: SimTime(8),
                best_bid: p(99),
                best_ask: p(101),
            },
        ];
        write_l1(&path, &quotes).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\n0,,\n4,99,\n"));
        assert_eq!(load_l1(&path).unwrap(), quotes);
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "time,px,size,side\n1,2,3,B\n").unwrap();
        assert!(matches!(load_trades(&path), Err(DataError::Header { .. })));
    }

    #[test]
    fn malformed_rows_counted_then_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut text = String::from("ts,price,qty,aggressor\n");
        for i in 0..200 {
            text.push_str(&format!("{i},100,1,B\n"));
        }
        text.push_str("201,abc,1,B\n");
        std::fs::write(&path, &text).unwrap();
        let dump = load_trades(&path).unwrap();
        assert_eq!((dump.trades.len(), dump.malformed), (200, 1));

        text.push_str("202,100,0,B\n203,100,1,X\n");
        std::fs::write(&path, &text).unwrap();
        match load_trades(&path) {
            Err(DataError::TooManyMalformed { malformed, rows, first_row, .. }) => {
                assert_eq!((malformed, rows, first_row), (3, 203, 201));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(load_trades(Path::new("/nonexistent/trades.csv")).is_err());
    }
}
