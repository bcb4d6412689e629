//! A centralized timestamping authority, kept for comparison with the
//! chain-based path.
//!
//! The authority joins the document hash with a plain-text time, hashes the
//! joined string and signs that hash. Anyone holding the authority's key can
//! sign any `(hash, time)` pair; that is the weakness the chain-based path
//! removes.

use base64::engine::general_purpose::STANDARD as BASE64;
use ring::signature::{self, Ed25519KeyPair, KeyPair as _, UnparsedPublicKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{sha256, Digest32};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TsaError {
    #[error("signing failed: {0}")]
    Signing(String),
    #[error("invalid key material: {0}")]
    Key(String),
}

/// Something that can sign on behalf of an authority.
pub trait TimestampSigner {
    fn key_id(&self) -> &str;
    fn sign(&self, message: &[u8]) -> Result<Vec<u8>, TsaError>;
}

/// The public half: checks signatures made by one authority.
pub trait SignatureVerifier {
    fn key_id(&self) -> &str;
    fn verify(&self, message: &[u8], signature: &[u8]) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TsaToken {
    pub document_hash: Digest32,
    pub plaintext_time: String,
    #[serde(with = "b64")]
    #[serde(rename = "signature_b64")]
    pub signature: Vec<u8>,
    pub key_id: String,
}

mod b64 {
    use super::BASE64;
    use base64::Engine as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&BASE64.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        BASE64.decode(s).map_err(serde::de::Error::custom)
    }
}

/// `lowercase_hex(hash) ‖ "|" ‖ time`.
pub fn canonical_string(document_hash: &Digest32, plaintext_time: &str) -> String {
    format!("{}|{}", document_hash.to_hex(), plaintext_time)
}

/// The value that actually gets signed.
pub fn canonical_digest(document_hash: &Digest32, plaintext_time: &str) -> Digest32 {
    sha256(canonical_string(document_hash, plaintext_time).as_bytes())
}

pub fn issue_timestamp(
    document_hash: &Digest32,
    now: Timestamp,
    signer: &impl TimestampSigner,
) -> Result<TsaToken, TsaError> {
    let plaintext_time = now.to_rfc3339();
    let digest = canonical_digest(document_hash, &plaintext_time);
    Ok(TsaToken {
        document_hash: *document_hash,
        plaintext_time,
        signature: signer.sign(digest.as_bytes())?,
        key_id: signer.key_id().to_owned(),
    })
}

pub fn verify_tsa_token(token: &TsaToken, verifier: &impl SignatureVerifier) -> bool {
    if token.key_id != verifier.key_id() || Timestamp::parse_rfc3339(&token.plaintext_time).is_err()
    {
        return false;
    }
    let digest = canonical_digest(&token.document_hash, &token.plaintext_time);
    verifier.verify(digest.as_bytes(), &token.signature)
}

/// Ed25519 signing backend.
pub struct Ed25519Signer {
    key_id: String,
    pair: Ed25519KeyPair,
    seed: [u8; 32],
}

impl Ed25519Signer {
    pub fn from_seed(key_id: impl Into<String>, seed: [u8; 32]) -> Result<Self, TsaError> {
        let pair =
            Ed25519KeyPair::from_seed_unchecked(&seed).map_err(|e| TsaError::Key(e.to_string()))?;
        Ok(Self {
            key_id: key_id.into(),
            pair,
            seed,
        })
    }

    pub fn generate(key_id: impl Into<String>) -> Result<Self, TsaError> {
        let mut seed = [0u8; 32];
        ring::rand::SecureRandom::fill(&ring::rand::SystemRandom::new(), &mut seed)
            .map_err(|e| TsaError::Key(e.to_string()))?;
        Self::from_seed(key_id, seed)
    }

    pub fn public_key(&self) -> Ed25519PublicKey {
        Ed25519PublicKey {
            key_id: self.key_id.clone(),
            bytes: self.pair.public_key().as_ref().to_vec(),
        }
    }

    /// The private seed. Whoever learns it can sign as this authority.
    pub fn expose_secret(&self) -> [u8; 32] {
        self.seed
    }
}

impl TimestampSigner for Ed25519Signer {
    fn key_id(&self) -> &str {
        &self.key_id
    }

    fn sign(&self, message: &[u8]) -> Result<Vec<u8>, TsaError> {
        Ok(self.pair.sign(message).as_ref().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ed25519PublicKey {
    pub key_id: String,
    pub bytes: Vec<u8>,
}

impl SignatureVerifier for Ed25519PublicKey {
    fn key_id(&self) -> &str {
        &self.key_id
    }

    fn verify(&self, message: &[u8], sig: &[u8]) -> bool {
        UnparsedPublicKey::new(&signature::ED25519, &self.bytes)
            .verify(message, sig)
            .is_ok()
    }
}
