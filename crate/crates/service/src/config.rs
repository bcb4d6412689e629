//! Service configuration: a TOML file, then `CHAINSTAMP_*` environment
//! overrides, then validation.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use chainstamp::address::{MAINNET_VERSION, TESTNET_VERSION};
use chainstamp::aggregator::{parse_decimal, BigRational, CostModel, DEFAULT_WINDOW_SECONDS};
use chainstamp::chain::{ChainParams, DEFAULT_DIFFICULTY_BITS, MAX_DIFFICULTY_BITS};
use chainstamp::ledger::DEFAULT_FINALITY_DEPTH;
use chainstamp::pipeline::{PipelineConfig, StoragePaths};
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_BIND: &str = "127.0.0.1:8841";
pub const ENV_PREFIX: &str = "CHAINSTAMP_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_owned(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Mainnet,
    Testnet,
}

impl Network {
    pub fn version_byte(self) -> u8 {
        match self {
            Self::Mainnet => MAINNET_VERSION,
            Self::Testnet => TESTNET_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Where the ledger, chain file and announcement log live.
    pub data_dir: PathBuf,
    /// Keep all state in memory; `data_dir` is ignored.
    pub in_memory: bool,
    pub window_seconds: u64,
    pub difficulty_bits: u8,
    pub finality_depth: u64,
    pub dust_satoshi: u64,
    pub fee_satoshi: u64,
    /// Decimal string, kept exact.
    pub btc_price_usd: String,
    pub network: Network,
    /// Mine after each commitment until it is final.
    pub auto_confirm: bool,
    /// Scheduler wake-up interval.
    pub tick_millis: u64,
    pub webhook_url: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.into(),
            data_dir: PathBuf::from("chainstamp-data"),
            in_memory: false,
            window_seconds: DEFAULT_WINDOW_SECONDS,
            difficulty_bits: DEFAULT_DIFFICULTY_BITS,
            finality_depth: DEFAULT_FINALITY_DEPTH,
            dust_satoshi: 1,
            fee_satoshi: 10_000,
            btc_price_usd: "250".into(),
            network: Network::Mainnet,
            auto_confirm: true,
            tick_millis: 500,
            webhook_url: None,
        }
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| invalid(key, format!("{value:?}: {e}")))
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` if given, applies environment overrides and validates.
    pub fn load(
        path: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `CHAINSTAMP_<FIELD>` variables; other variables are ignored.
    pub fn apply_env(
        &mut self,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<(), ConfigError> {
        for (name, value) in env {
            let Some(field) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = field.to_ascii_lowercase();
            let k = key.as_str();
            match k {
                "bind" => self.bind = value,
                "data_dir" => self.data_dir = value.into(),
                "in_memory" => self.in_memory = parse_env(k, &value)?,
                "window_seconds" => self.window_seconds = parse_env(k, &value)?,
                "difficulty_bits" => self.difficulty_bits = parse_env(k, &value)?,
                "finality_depth" => self.finality_depth = parse_env(k, &value)?,
                "dust_satoshi" => self.dust_satoshi = parse_env(k, &value)?,
                "fee_satoshi" => self.fee_satoshi = parse_env(k, &value)?,
                "btc_price_usd" => self.btc_price_usd = value,
                "network" => {
                    self.network = match value.trim() {
                        "mainnet" => Network::Mainnet,
                        "testnet" => Network::Testnet,
                        other => return Err(invalid(k, format!("unknown network {other:?}"))),
                    }
                }
                "auto_confirm" => self.auto_confirm = parse_env(k, &value)?,
                "tick_millis" => self.tick_millis = parse_env(k, &value)?,
                "webhook_url" => self.webhook_url = Some(value).filter(|v| !v.is_empty()),
                _ => return Err(invalid(&name, "unknown setting")),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.bind_addr()?;
        if self.window_seconds == 0 {
            return Err(invalid("window_seconds", "must be positive"));
        }
        if self.difficulty_bits > MAX_DIFFICULTY_BITS {
            return Err(invalid(
                "difficulty_bits",
                format!("at most {MAX_DIFFICULTY_BITS}"),
            ));
        }
        if self.finality_depth == 0 {
            return Err(invalid("finality_depth", "must be positive"));
        }
        if self.dust_satoshi == 0 {
            return Err(invalid("dust_satoshi", "must be at least 1"));
        }
        if self.tick_millis == 0 {
            return Err(invalid("tick_millis", "must be positive"));
        }
        self.price()?;
        if let Some(url) = &self.webhook_url {
            if !(url.starts_with("http://") || url.starts_with("https://")) {
                return Err(invalid("webhook_url", "must be an http(s) URL"));
            }
        }
        Ok(())
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.bind
            .parse()
            .map_err(|e| invalid("bind", format!("{:?}: {e}", self.bind)))
    }

    fn price(&self) -> Result<BigRational, ConfigError> {
        parse_decimal(&self.btc_price_usd)
            .filter(|_| !self.btc_price_usd.trim_start().starts_with('-'))
            .ok_or_else(|| {
                invalid(
                    "btc_price_usd",
                    format!("{:?} is not a decimal", self.btc_price_usd),
                )
            })
    }

    pub fn pipeline(&self) -> Result<PipelineConfig, ConfigError> {
        Ok(PipelineConfig {
            window_seconds: self.window_seconds,
            chain: ChainParams {
                difficulty_bits: self.difficulty_bits,
            },
            finality_depth: self.finality_depth,
            cost: CostModel {
                dust_satoshi: self.dust_satoshi,
                fee_satoshi: self.fee_satoshi,
                btc_price_usd: self.price()?,
            },
            address_version: self.network.version_byte(),
            auto_confirm: self.auto_confirm,
        })
    }

    pub fn storage(&self) -> Option<StoragePaths> {
        (!self.in_memory).then(|| StoragePaths {
            ledger: self.data_dir.join("ledger.jsonl"),
            chain: self.data_dir.join("chain.bin"),
        })
    }

    pub fn announcement_log(&self) -> Option<PathBuf> {
        (!self.in_memory).then(|| self.data_dir.join("announcements.log"))
    }
}
