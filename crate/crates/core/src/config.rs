//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 1
//! session_seconds = 3600.0
//!
//! [book]              # optional linear seeding around start_price
//! start_price = 1000
//! half_width = 50
//! slope = 1
//!
//! [oracle]            # optional; required by prime-mode market agents
//! kind = "constant"
//! price = 1000
//!
//! [noise]             # optional observation noise, default 0
//! half_width = 5
//!
//! [[agents]]
//! kind = "zi_limit"   # or zi_market, technical
//! count = 1000
//! rate = 0.5
//! p_cancel = 0.6
//! mode = "prime"
//! ```
//!
//! Each `[[agents]]` entry takes the parameters of its kind alongside `kind`
//! and `count`. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::agents::{MarketMode, TechnicalParams, ZiLimitParams, ZiMarketParams};
use crate::book::LinearSeed;
use crate::market::AgentSpec;
use crate::oracle::{make_series, ObservationNoise, OracleError, PriceSeries, SeriesSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset `{0}` (available: santa-fe, prime)")]
    UnknownPreset(String),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub session_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub book: Option<LinearSeed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<SeriesSpec>,
    #[serde(default)]
    pub noise: ObservationNoise,
    pub agents: Vec<AgentGroup>,
}

/// `count` identical agents.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentGroup {
    pub count: usize,
    pub spec: AgentSpec,
}

const SANTA_FE: &str = include_str!("../presets/santa-fe.toml");
const PRIME: &str = include_str!("../presets/prime.toml");

pub const PRESETS: [&str; 2] = ["santa-fe", "prime"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. A relative oracle file path is
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(SeriesSpec::FromFile { path: series }) = &mut cfg.oracle {
            let p = Path::new(series.as_str());
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    let joined = dir.join(p);
                    let resolved = std::fs::canonicalize(&joined).unwrap_or(joined);
                    *series = resolved.to_string_lossy().into_owned();
                }
            }
        }
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "santa-fe" => Self::from_toml(SANTA_FE),
            "prime" => Self::from_toml(PRIME),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.session_seconds > 0.0 && self.session_seconds.is_finite()) {
            return bad(format!("session_seconds must be positive, got {}", self.session_seconds));
        }
        if let Some(seed) = &self.book {
            if seed.slope == 0 || seed.half_width < 1 || seed.start_price - seed.half_width < 1 {
                return bad(format!("book seed {seed:?} must have slope >= 1 and stay above one tick"));
            }
        }
        if self.agents.is_empty() {
            return bad("at least one [[agents]] group is required".into());
        }
        for (i, g) in self.agents.iter().enumerate() {
            if g.count == 0 {
                return bad(format!("agents[{i}]: count must be >= 1"));
            }
            let check = match &g.spec {
                AgentSpec::ZiLimit(p) => p.validate(),
                AgentSpec::ZiMarket(p) => p.validate(),
                AgentSpec::Technical(p) => p.validate(),
            };
            if let Err(e) = check {
                return bad(format!("agents[{i}]: {e}"));
            }
            if let AgentSpec::ZiMarket(p) = &g.spec {
                if p.mode == MarketMode::Prime && self.oracle.is_none() {
                    return bad(format!("agents[{i}]: prime market agents need an [oracle]"));
                }
            }
        }
        Ok(())
    }

    pub fn session_end(&self) -> crate::kernel::SimTime {
        crate::kernel::SimTime::from_secs_f64(self.session_seconds)
    }

    pub fn build_oracle(&self) -> Result<Option<PriceSeries>, ConfigError> {
        Ok(self.oracle.as_ref().map(make_series).transpose()?)
    }

    /// Agent specs in registration order, groups expanded.
    pub fn expanded_agents(&self) -> impl Iterator<Item = &AgentSpec> {
        self.agents
            .iter()
            .flat_map(|g| std::iter::repeat_n(&g.spec, g.count))
    }

    pub fn agent_total(&self) -> usize {
        self.agents.iter().map(|g| g.count).sum()
    }
}

impl Serialize for AgentGroup {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (kind, params) = match &self.spec {
            AgentSpec::ZiLimit(p) => ("zi_limit", toml::Table::try_from(p)),
            AgentSpec::ZiMarket(p) => ("zi_market", toml::Table::try_from(p)),
            AgentSpec::Technical(p) => ("technical", toml::Table::try_from(p)),
        };
        let params = params.map_err(S::Error::custom)?;
        let mut table = toml::Table::new();
        table.insert("kind".into(), kind.into());
        table.insert("count".into(), (self.count as i64).into());
        table.extend(params);
        table.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AgentGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut table = toml::Table::deserialize(d)?;
        let kind = match table.remove("kind") {
            Some(toml::Value::String(k)) => k,
            Some(_) => return Err(D::Error::custom("agent `kind` must be a string")),
            None => return Err(D::Error::missing_field("kind")),
        };
        let count = match table.remove("count") {
            Some(toml::Value::Integer(c)) if c >= 0 => c as usize,
            Some(_) => return Err(D::Error::custom("agent `count` must be a non-negative integer")),
            None => return Err(D::Error::missing_field("count")),
        };
        let rest = toml::Value::Table(table);
        let spec = match kind.as_str() {
            "zi_limit" => AgentSpec::ZiLimit(rest.try_into::<ZiLimitParams>().map_err(D::Error::custom)?),
            "zi_market" => AgentSpec::ZiMarket(rest.try_into::<ZiMarketParams>().map_err(D::Error::custom)?),
            "technical" => AgentSpec::Technical(rest.try_into::<TechnicalParams>().map_err(D::Error::custom)?),
            other => {
                return Err(D::Error::unknown_variant(other, &["zi_limit", "zi_market", "technical"]));
            }
        };
        Ok(AgentGroup { count, spec })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{TechnicalKind, ValuationMode};

    const MINIMAL: &str = r#"
seed = 7
session_seconds = 60.0

[book]
start_price = 1000
half_width = 50
slope = 1

[oracle]
kind = "constant"
price = 1000

[noise]
half_width = 5

[[agents]]
kind = "zi_limit"
count = 10
rate = 1.0
p_cancel = 0.6
mode = "prime"

[[agents]]
kind = "zi_market"
count = 2
rate = 0.5
mode = "darp"

[agents.darp]
p = 0.9
gamma = 1.5
n = 50

[[agents]]
kind = "technical"
count = 1
strategy = "trend_follow"
lookback_seconds = 30.0
threshold = 1.0
rate = 0.2
"#;

    #[test]
    fn parses_groups() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.agent_total(), 13);
        assert_eq!(cfg.noise.half_width, 5);
        match &cfg.agents[1].spec {
            AgentSpec::ZiMarket(p) => assert_eq!(p.darp.unwrap().gamma, 1.5),
            other => panic!("{other:?}"),
        }
        match &cfg.agents[2].spec {
            AgentSpec::Technical(p) => assert_eq!(p.kind, TechnicalKind::TrendFollow),
            other => panic!("{other:?}"),
        }
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        for (from, to) in [
            ("rate = 0.2", "rate = 0.2\nspeed = 3"),
            ("p_cancel = 0.6", "p_cancel = 0.6\ncancel = 1"),
            ("n = 50", "n = 50\nm = 1"),
            ("seed = 7", "seed = 7\nextra = 1"),
            ("kind = \"technical\"", "kind = \"robot\""),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(RunConfig::from_toml(&text).is_err(), "{to}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("session_seconds = 60.0", "session_seconds = 0.0"),
            ("count = 10", "count = 0"),
            ("p_cancel = 0.6", "p_cancel = 1.6"),
            ("half_width = 50", "half_width = 1000"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(
                matches!(RunConfig::from_toml(&text), Err(ConfigError::Invalid(_))),
                "{to}"
            );
        }
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, back, "{name}");
        }
        assert!(matches!(RunConfig::preset("nope"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn prime_market_needs_oracle() {
        let mut cfg = RunConfig::preset("prime").unwrap();
        cfg.oracle = None;
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn expands_in_order() {
        let cfg = RunConfig {
            seed: 1,
            session_seconds: 1.0,
            output_dir: None,
            book: None,
            oracle: None,
            noise: ObservationNoise::default(),
            agents: vec![
                AgentGroup {
                    count: 2,
                    spec: AgentSpec::ZiLimit(ZiLimitParams {
                        rate: 1.0,
                        p_cancel: 0.5,
                        mode: ValuationMode::SantaFe,
                        band_low: 1,
                        band_high: 100,
                        half_width: 50,
                        size: 1,
                    }),
                },
                AgentGroup {
                    count: 1,
                    spec: AgentSpec::Technical(TechnicalParams {
                        kind: TechnicalKind::MeanRevert,
                        lookback_seconds: 10.0,
                        threshold: 0.0,
                        rate: 1.0,
                        size: 1,
                    }),
                },
            ],
        };
        cfg.validate().unwrap();
        let kinds: Vec<_> = cfg
            .expanded_agents()
            .map(|s| matches!(s, AgentSpec::Technical(_)))
            .collect();
        assert_eq!(kinds, vec![false, false, true]);
        assert_eq!(cfg.agent_total(), 3);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
