use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// UTC time with one-second resolution, stored as seconds since the Unix epoch.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid RFC 3339 UTC time {0:?}")]
pub struct TimeParseError(pub String);

impl Timestamp {
    pub const fn from_unix(secs: u64) -> Self {
        Self(secs)
    }

    pub const fn unix(self) -> u64 {
        self.0
    }

    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self(secs)
    }

    /// `YYYY-MM-DDTHH:MM:SSZ`.
    pub fn to_rfc3339(self) -> String {
        let secs = i64::try_from(self.0).unwrap_or(i64::MAX);
        match DateTime::<Utc>::from_timestamp(secs, 0) {
            Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
            // Beyond chrono's range; only reachable with corrupted inputs.
            None => format!("@{}", self.0),
        }
    }

    pub fn parse_rfc3339(s: &str) -> Result<Self, TimeParseError> {
        let dt = DateTime::parse_from_rfc3339(s).map_err(|_| TimeParseError(s.to_owned()))?;
        if dt.offset().local_minus_utc() != 0 || dt.timestamp_subsec_nanos() != 0 {
            return Err(TimeParseError(s.to_owned()));
        }
        u64::try_from(dt.timestamp())
            .map(Self)
            .map_err(|_| TimeParseError(s.to_owned()))
    }

    pub fn saturating_add(self, secs: u64) -> Self {
        Self(self.0.saturating_add(secs))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Timestamp({})", self.to_rfc3339())
    }
}

impl FromStr for Timestamp {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_rfc3339(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_rfc3339())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
        Self::parse_rfc3339(&s).map_err(serde::de::Error::custom)
    }
}
