//! Simulation runs: build a market from a config, run it, and write the
//! run directory atomically.
//!
//! A run directory holds `trades.csv`, `l1.csv`, `summary.txt` (flat
//! `key=value`) and the `config.toml` that produced it, which is enough to
//! replay the run.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{write_l1, write_trades};
use crate::market::MarketSim;

pub const TRADES_FILE: &str = "trades.csv";
pub const L1_FILE: &str = "l1.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CONFIG_FILE: &str = "config.toml";

/// Builds the market described by `cfg` and runs it to the end of the session.
pub fn simulate(cfg: &RunConfig) -> Result<MarketSim> {
    cfg.validate()?;
    let oracle = cfg.build_oracle()?;
    let mut sim = MarketSim::new(cfg.seed, oracle, cfg.noise);
    if let Some(seed) = &cfg.book {
        sim.seed_book(seed)?;
    }
    for spec in cfg.expanded_agents() {
        sim.add_agent(spec.clone())?;
    }
    let end = cfg.session_end();
    sim.schedule_session_end(end)?;
    sim.run_until(end);
    Ok(sim)
}

pub fn summary_lines(cfg: &RunConfig, sim: &MarketSim) -> Vec<(String, String)> {
    let quote = sim.l1_log().last().copied().expect("log starts at t=0");
    let opt = |p: Option<crate::book::TickPrice>| p.map(|p| p.ticks().to_string()).unwrap_or_default();
    let mut kv = vec![
        ("seed".to_string(), cfg.seed.to_string()),
        ("session_seconds".into(), cfg.session_seconds.to_string()),
        ("agents".into(), cfg.agent_total().to_string()),
    ];
    kv.extend(sim.stats().to_kv());
    kv.push(("quote_updates".into(), sim.l1_log().len().to_string()));
    kv.push(("resting_orders".into(), sim.book().resting_count().to_string()));
    kv.push(("final_best_bid".into(), opt(quote.best_bid)));
    kv.push(("final_best_ask".into(), opt(quote.best_ask)));
    kv
}

pub fn write_kv(path: &Path, kv: &[(String, String)]) -> Result<()> {
    let text: String = kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

/// Writes files into a fresh sibling temp directory and renames it to `out`
/// once everything succeeded, so a failed run leaves nothing behind. Refuses
/// to replace an existing `out`.
pub fn write_atomically(out: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<PathBuf> {
    if out.exists() {
        return Err(Error::Output(format!("output directory {} already exists", out.display())));
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    let tmp = tempfile::Builder::new()
        .prefix(".partial-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(format!("creating temp dir in {}", parent.display()), e))?;
    fill(tmp.path())?;
    let kept = tmp.keep();
    fs::rename(&kept, out).map_err(|e| {
        let _ = fs::remove_dir_all(&kept);
        Error::io(format!("moving run into {}", out.display()), e)
    })?;
    Ok(out.to_path_buf())
}

/// Runs `cfg` and writes its run directory to `out`.
pub fn run_simulation(cfg: &RunConfig, out: &Path) -> Result<Vec<(String, String)>> {
    // Fail on a bad config before touching the filesystem.
    cfg.validate()?;
    if out.exists() {
        return Err(Error::Output(format!("output directory {} already exists", out.display())));
    }
    let sim = simulate(cfg)?;
    let kv = summary_lines(cfg, &sim);
    write_atomically(out, |dir| {
        write_trades(&dir.join(TRADES_FILE), sim.tape())?;
        write_l1(&dir.join(L1_FILE), sim.l1_log())?;
        write_kv(&dir.join(SUMMARY_FILE), &kv)?;
        let cfg_path = dir.join(CONFIG_FILE);
        fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(format!("writing {}", cfg_path.display()), e))
    })?;
    Ok(kv)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub trades_identical: bool,
    pub l1_identical: bool,
    pub trades: usize,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.trades_identical && self.l1_identical
    }
}

/// Re-runs the config stored in `run_dir` and compares the regenerated tape
/// and quote log with the stored ones byte for byte.
pub fn replay(run_dir: &Path) -> Result<ReplayReport> {
    let cfg = RunConfig::load(&run_dir.join(CONFIG_FILE))?;
    let sim = simulate(&cfg)?;
    let scratch = tempfile::tempdir().map_err(|e| Error::io("creating scratch dir", e))?;
    let same = |name: &str| -> Result<bool> {
        let read = |p: &Path| fs::read(p).map_err(|e| Error::io(format!("reading {}", p.display()), e));
        Ok(read(&run_dir.join(name))? == read(&scratch.path().join(name))?)
    };
    write_trades(&scratch.path().join(TRADES_FILE), sim.tape())?;
    write_l1(&scratch.path().join(L1_FILE), sim.l1_log())?;
    Ok(ReplayReport {
        trades_identical: same(TRADES_FILE)?,
        l1_identical: same(L1_FILE)?,
        trades: sim.tape().len(),
    })
}
