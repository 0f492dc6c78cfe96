//! `impactsim` command-line interface.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use impactsim::analysis::{self, ImpactOptions};
use impactsim::config::RunConfig;
use impactsim::io::{load_l1, load_trades};
use impactsim::kernel::SimTime;
use impactsim::run::{self, L1_FILE, TRADES_FILE};
use impactsim::stats::{tune_darp, PowerLawFit, TuneConfig};
use impactsim::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "impactsim", version, about = "Limit order book simulator and market-impact analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation and write its run directory.
    Simulate {
        /// TOML run config. Required unless --preset is given.
        config: Option<PathBuf>,
        /// Built-in config: santa-fe or prime.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Output directory; must not exist yet.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the session length, e.g. 3600, 90m, 2h.
        #[arg(long, value_parser = parse_duration)]
        session: Option<SimTime>,
    },
    /// Measure impact, impact decay or order-sign autocorrelation.
    Analyze {
        #[arg(value_enum)]
        kind: AnalysisKind,
        /// Trade CSV, or a run directory holding trades.csv and l1.csv.
        input: PathBuf,
        /// Quote CSV; required for impact and decay unless `input` is a run directory.
        l1: Option<PathBuf>,
        /// Fix the impact exponent instead of fitting it.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value = "5s", value_parser = parse_duration)]
        window: SimTime,
        #[arg(long, default_value = "1h", value_parser = parse_duration)]
        horizon: SimTime,
        #[arg(long, default_value_t = 20)]
        buckets: usize,
        /// Largest lag for the decay kernel and the autocorrelation.
        #[arg(long, default_value_t = 100)]
        max_lag: usize,
        /// Output directory; defaults to analysis-<kind> next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search DAR(p) parameters whose sign autocorrelation matches a power law.
    TuneDar {
        #[arg(long)]
        target_alpha: f64,
        #[arg(long)]
        target_c: f64,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Signs simulated per candidate.
        #[arg(long, default_value_t = 100_000)]
        stream_len: usize,
        #[arg(long, default_value_t = 50)]
        max_lag: usize,
        /// Optional directory for tune.csv and summary.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a run directory's config and compare outputs byte for byte.
    Replay { run_dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnalysisKind {
    Impact,
    Decay,
    Acf,
}

impl AnalysisKind {
    fn name(self) -> &'static str {
        match self {
            AnalysisKind::Impact => "impact",
            AnalysisKind::Decay => "decay",
            AnalysisKind::Acf => "acf",
        }
    }
}

/// Accepts a plain number of seconds or a number with a `ms`, `s`, `m` or `h` suffix.
fn parse_duration(s: &str) -> std::result::Result<SimTime, String> {
    let s = s.trim();
    let (num, scale) = if let Some(n) = s.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = s.strip_suffix('s') {
        (n, 1.0)
    } else if let Some(n) = s.strip_suffix('m') {
        (n, 60.0)
    } else if let Some(n) = s.strip_suffix('h') {
        (n, 3600.0)
    } else {
        (s, 1.0)
    };
    let v: f64 = num.trim().parse().map_err(|_| format!("bad duration `{s}`"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("duration must be positive, got `{s}`"));
    }
    Ok(SimTime::from_secs_f64(v * scale))
}

fn print_kv<K: AsRef<str>>(kv: &[(K, String)]) {
    for (k, v) in kv {
        println!("{}={v}", k.as_ref());
    }
}

fn simulate(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    session: Option<SimTime>,
) -> Result<()> {
    let (mut cfg, label) = match (config, preset) {
        (Some(path), None) => {
            let label = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
            (RunConfig::load(&path)?, label)
        }
        (None, Some(name)) => (RunConfig::preset(&name)?, name),
        _ => unreachable!("checked by the caller"),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = session {
        cfg.session_seconds = t.as_secs_f64();
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{label}-seed{}", cfg.seed)));
    let kv = run::run_simulation(&cfg, &out)?;
    println!("run_dir={}", out.display());
    print_kv(&kv);
    Ok(())
}

struct AnalyzeArgs {
    kind: AnalysisKind,
    input: PathBuf,
    l1: Option<PathBuf>,
    opts: ImpactOptions,
    out: Option<PathBuf>,
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let (trades_path, l1_path) = if a.input.is_dir() {
        (a.input.join(TRADES_FILE), Some(a.l1.unwrap_or_else(|| a.input.join(L1_FILE))))
    } else {
        (a.input.clone(), a.l1)
    };
    let dump = load_trades(&trades_path)?;
    let out = a.out.unwrap_or_else(|| {
        let base = if a.input.is_dir() {
            a.input.clone()
        } else {
            a.input.parent().map(Path::to_path_buf).unwrap_or_default()
        };
        base.join(format!("analysis-{}", a.kind.name()))
    });
    let quotes = |path: Option<PathBuf>| -> Result<Vec<impactsim::book::L1Snapshot>> {
        let path = path.ok_or_else(|| Error::Output("impact and decay analyses need a quote (l1) file".into()))?;
        Ok(load_l1(&path)?)
    };
    match a.kind {
        AnalysisKind::Impact => {
            let report = analysis::impact(&dump.trades, &quotes(l1_path)?, &a.opts)?;
            run::write_atomically(&out, |dir| analysis::write_impact(dir, &report))?;
            println!("delta={}", report.fit.delta);
            println!("k={}", report.fit.k);
        }
        AnalysisKind::Decay => {
            let report = analysis::decay(&dump.trades, &quotes(l1_path)?, &a.opts)?;
            run::write_atomically(&out, |dir| analysis::write_decay(dir, &report))?;
            println!("delta={}", report.delta);
            println!("beta0={}", report.kernel.beta[0]);
        }
        AnalysisKind::Acf => {
            let report = analysis::sign_acf(&dump.trades, a.opts.max_lag)?;
            run::write_atomically(&out, |dir| analysis::write_acf(dir, &report))?;
            println!("alpha={}", report.fit.alpha);
            println!("c={}", report.fit.c);
        }
    }
    println!("trades={}", dump.trades.len());
    println!("malformed_rows={}", dump.malformed);
    println!("out_dir={}", out.display());
    Ok(())
}

fn tune(target: PowerLawFit, cfg: TuneConfig, out: Option<PathBuf>) -> Result<()> {
    let r = tune_darp(&target, &cfg)?;
    let kv = vec![
        ("p", r.p.to_string()),
        ("gamma", r.gamma.to_string()),
        ("alpha", r.fit.alpha.to_string()),
        ("c", r.fit.c.to_string()),
        ("r2", r.fit.r2.to_string()),
        ("score", r.score.to_string()),
        ("fitted_candidates", r.fitted.to_string()),
        ("budget", cfg.budget.to_string()),
        ("seed", cfg.seed.to_string()),
    ];
    if let Some(out) = out {
        run::write_atomically(&out, |dir| {
            let csv = format!(
                "p,gamma,alpha,c,r2,score\n{},{},{},{},{},{}\n",
                r.p, r.gamma, r.fit.alpha, r.fit.c, r.fit.r2, r.score
            );
            std::fs::write(dir.join("tune.csv"), csv).map_err(|e| Error::io("writing tune.csv", e))?;
            let owned: Vec<(String, String)> = kv.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            run::write_kv(&dir.join("summary.txt"), &owned)
        })?;
    }
    print_kv(&kv);
    Ok(())
}

fn replay(run_dir: &Path) -> Result<bool> {
    let report = run::replay(run_dir)?;
    println!("trades={}", report.trades);
    println!("trades_identical={}", report.trades_identical);
    println!("l1_identical={}", report.l1_identical);
    Ok(report.identical())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            preset,
            out,
            seed,
            session,
        } => {
            if config.is_none() && preset.is_none() {
                eprintln!("error: simulate needs a config file or --preset");
                return ExitCode::from(1);
            }
            simulate(config, preset, out, seed, session)
        }
        Command::Analyze {
            kind,
            input,
            l1,
            delta,
            window,
            horizon,
            buckets,
            max_lag,
            out,
        } => analyze(AnalyzeArgs {
            kind,
            input,
            l1,
            opts: ImpactOptions {
                window,
                horizon,
                n_buckets: buckets,
                delta,
                max_lag,
            },
            out,
        }),
        Command::TuneDar {
            target_alpha,
            target_c,
            budget,
            seed,
            stream_len,
            max_lag,
            out,
        } => tune(
            PowerLawFit {
                c: target_c,
                alpha: target_alpha,
                r2: 1.0,
            },
            TuneConfig {
                budget,
                seed,
                stream_len,
                max_lag,
                ..TuneConfig::default()
            },
            out,
        ),
        Command::Replay { run_dir } => match replay(&run_dir) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: replay differs from the recorded run");
                return ExitCode::from(3);
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
