//! Pay-to-public-key-hash style addresses derived from aggregated hashes.
//!
//! The aggregated hash takes the place of a public key, so the payload is
//! `hash160(aggregated)`. Nobody holds a private key for the result, which is
//! what we want: the dust sent there is a commitment, never spent.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::base58::{self, Base58Error};
use crate::digest::{hash160, Digest20, Digest32};

pub const MAINNET_VERSION: u8 = 0x00;
pub const TESTNET_VERSION: u8 = 0x6f;

/// The Base58Check string form of an address.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AddressString(String);

impl AddressString {
    /// Wraps a string without validating it. Use [`AddressString::parse`] for
    /// untrusted input.
    pub fn new_unchecked(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn parse(s: &str) -> Result<Self, Base58Error> {
        base58::check_decode(s)?;
        Ok(Self(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn decode(&self) -> Result<(u8, Vec<u8>), Base58Error> {
        base58::check_decode(&self.0)
    }
}

impl fmt::Display for AddressString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AddressString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AddressString({})", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitcoinAddress {
    pub version: u8,
    pub payload: Digest20,
    pub encoded: AddressString,
}

impl BitcoinAddress {
    pub fn from_payload(version: u8, payload: Digest20) -> Self {
        let encoded = base58::check_encode(version, payload.as_bytes())
            .expect("20-byte payload is within bounds");
        Self {
            version,
            payload,
            encoded: AddressString(encoded),
        }
    }

    pub fn parse(s: &str) -> Result<Self, AddressError> {
        let (version, payload) = base58::check_decode(s)?;
        let payload =
            Digest20::from_slice(&payload).ok_or(AddressError::PayloadLength(payload.len()))?;
        Ok(Self {
            version,
            payload,
            encoded: AddressString(s.to_owned()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AddressError {
    #[error(transparent)]
    Base58(#[from] Base58Error),
    #[error("address payload must be 20 bytes, got {0}")]
    PayloadLength(usize),
}

/// Converts an aggregated hash into the address that receives its commitment.
pub fn derive_address(aggregated: &Digest32, version: u8) -> BitcoinAddress {
    BitcoinAddress::from_payload(version, hash160(aggregated.as_bytes()))
}
