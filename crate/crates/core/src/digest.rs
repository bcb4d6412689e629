//! Fixed-width digests and the hash functions that produce them.
//!
//! Everything that identifies a document, a batch, a transaction or a block is
//! one of the two digest types defined here. Hex output is always lowercase;
//! hex input is accepted in either case.

use std::fmt;
use std::str::FromStr;

use ripemd::Ripemd160;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Errors produced when parsing a digest from its hex form.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("invalid hex character {ch:?} at position {index}")]
    InvalidCharacter { ch: char, index: usize },
    #[error("expected {expected} hex characters, got {actual}")]
    WrongLength { expected: usize, actual: usize },
}

macro_rules! digest_type {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name([u8; $len]);

        impl $name {
            pub const LEN: usize = $len;
            pub const ZERO: Self = Self([0u8; $len]);

            pub const fn from_bytes(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                <[u8; $len]>::try_from(bytes).ok().map(Self)
            }

            pub const fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            /// Parses exactly `2 * LEN` hex characters, either case.
            ///
            /// Character validity is checked before length so that callers can
            /// tell "not hex at all" apart from "hex of the wrong size".
            pub fn from_hex(s: &str) -> Result<Self, HexError> {
                if let Some((index, ch)) = s.char_indices().find(|(_, c)| !c.is_ascii_hexdigit()) {
                    return Err(HexError::InvalidCharacter { ch, index });
                }
                if s.len() != 2 * $len {
                    return Err(HexError::WrongLength { expected: 2 * $len, actual: s.len() });
                }
                let mut out = [0u8; $len];
                hex::decode_to_slice(s, &mut out).expect("validated hex of the right length");
                Ok(Self(out))
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }

        impl From<[u8; $len]> for $name {
            fn from(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), self.to_hex())
            }
        }

        impl FromStr for $name {
            type Err = HexError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_hex(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = <std::borrow::Cow<'de, str>>::deserialize(deserializer)?;
                Self::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

digest_type!(
    /// A 32-byte digest: document hashes, aggregated hashes, txids, block hashes.
    Digest32,
    32
);

digest_type!(
    /// A 20-byte digest, the payload of an address.
    Digest20,
    20
);

pub fn sha256(data: &[u8]) -> Digest32 {
    Digest32(Sha256::digest(data).into())
}

/// SHA-256 applied twice.
pub fn double_sha256(data: &[u8]) -> Digest32 {
    sha256(sha256(data).as_bytes())
}

pub fn ripemd160(data: &[u8]) -> Digest20 {
    Digest20(Ripemd160::digest(data).into())
}

/// `ripemd160(sha256(data))`.
pub fn hash160(data: &[u8]) -> Digest20 {
    ripemd160(sha256(data).as_bytes())
}

/// Incremental SHA-256 over chunks, for inputs that should not be held in memory.
#[derive(Clone, Default)]
pub struct Sha256Stream(Sha256);

impl Sha256Stream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, chunk: &[u8]) {
        self.0.update(chunk);
    }

    pub fn finish(self) -> Digest32 {
        Digest32(self.0.finalize().into())
    }
}

/// Hashes everything readable from `reader`.
pub fn sha256_reader<R: std::io::Read>(mut reader: R) -> std::io::Result<Digest32> {
    let mut stream = Sha256Stream::new();
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => stream.update(&buf[..n]),
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(stream.finish())
}
