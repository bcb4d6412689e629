//! Checking a timestamp proof against a chain.
//!
//! [`verify_with_bundle`] takes no ledger parameter: a bundle and a chain are
//! all it needs. The attested time is always the containing block's
//! timestamp, never the time the service received the hash.

use std::fmt;

use serde::Serialize;

use crate::address::{derive_address, BitcoinAddress};
use crate::aggregator::aggregate;
use crate::chain::{block_merkle_root, meets_difficulty, ChainView, TxLocation};
use crate::digest::{sha256, Digest32};
use crate::ledger::{LedgerError, LedgerStore, ProofBundle, DEFAULT_FINALITY_DEPTH};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Pending,
    Mismatch,
    Unknown,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Verified => "verified",
            Self::Pending => "pending",
            Self::Mismatch => "mismatch",
            Self::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The checks run by [`verify_with_bundle`], in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// 1: the document digest is one of the batch hashes.
    Membership,
    /// 2: the batch hashes aggregate to the bundle's aggregated hash.
    Aggregation,
    /// 3: the aggregated hash derives the bundle's address.
    Address,
    /// 4: the chain holds the transaction, paying dust to that address.
    Transaction,
    /// 5: the containing block matches the bundle's hash, height and time.
    Block,
}

impl Check {
    pub fn number(self) -> u8 {
        match self {
            Self::Membership => 1,
            Self::Aggregation => 2,
            Self::Address => 3,
            Self::Transaction => 4,
            Self::Block => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub attested_time: Option<Timestamp>,
    pub confirmations: u64,
    pub failed_check: Option<Check>,
    pub failure_detail: Option<String>,
}

impl VerificationReport {
    fn mismatch(check: Check, detail: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Mismatch,
            attested_time: None,
            confirmations: 0,
            failed_check: Some(check),
            failure_detail: Some(format!(
                "check {} ({check:?}): {}",
                check.number(),
                detail.into()
            )),
        }
    }

    fn unknown(detail: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Unknown,
            attested_time: None,
            confirmations: 0,
            failed_check: None,
            failure_detail: Some(detail.into()),
        }
    }

    /// `VERDICT=<verdict>`.
    pub fn verdict_line(&self) -> String {
        format!("VERDICT={}", self.verdict)
    }

    /// Multi-line human-readable summary ending with the verdict line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match self.verdict {
            Verdict::Verified => {
                out.push_str("The document existed no later than the attested time.\n")
            }
            Verdict::Pending => out.push_str("The commitment is on chain but not yet final.\n"),
            Verdict::Mismatch => {
                out.push_str("The proof does not match the document or the chain.\n")
            }
            Verdict::Unknown => out.push_str("No timestamp is known for this document.\n"),
        }
        if let Some(t) = self.attested_time {
            out.push_str(&format!("attested_time: {t}\n"));
        }
        out.push_str(&format!("confirmations: {}\n", self.confirmations));
        if let Some(d) = &self.failure_detail {
            out.push_str(&format!("detail: {d}\n"));
        }
        out.push_str(&self.verdict_line());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyParams {
    pub finality_depth: u64,
    pub dust_satoshi: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            finality_depth: DEFAULT_FINALITY_DEPTH,
            dust_satoshi: 1,
        }
    }
}

pub fn verify_with_bundle(
    content_digest: &Digest32,
    bundle: &ProofBundle,
    chain: &impl ChainView,
    params: &VerifyParams,
) -> VerificationReport {
    if !bundle.batch_hashes.contains(content_digest) {
        return VerificationReport::mismatch(
            Check::Membership,
            format!("{content_digest} is not in the batch"),
        );
    }

    match aggregate(&bundle.batch_hashes) {
        Ok(agg) if agg == bundle.aggregated_hash => {}
        Ok(agg) => {
            return VerificationReport::mismatch(
                Check::Aggregation,
                format!(
                    "batch aggregates to {agg}, bundle says {}",
                    bundle.aggregated_hash
                ),
            )
        }
        Err(e) => return VerificationReport::mismatch(Check::Aggregation, e.to_string()),
    }

    let version = match BitcoinAddress::parse(bundle.address.as_str()) {
        Ok(a) => a.version,
        Err(e) => return VerificationReport::mismatch(Check::Address, e.to_string()),
    };
    let derived = derive_address(&bundle.aggregated_hash, version).encoded;
    if derived != bundle.address {
        return VerificationReport::mismatch(
            Check::Address,
            format!(
                "aggregated hash derives {derived}, bundle says {}",
                bundle.address
            ),
        );
    }

    let height = match chain.locate(&bundle.txid) {
        TxLocation::Block(h) => h,
        TxLocation::Mempool => {
            return VerificationReport {
                verdict: Verdict::Pending,
                attested_time: None,
                confirmations: 0,
                failed_check: None,
                failure_detail: Some("transaction is not yet mined".into()),
            }
        }
        TxLocation::Unknown => {
            return VerificationReport::mismatch(
                Check::Transaction,
                format!("transaction {} not found on chain", bundle.txid),
            )
        }
    };
    let Some(block) = chain.block(height) else {
        return VerificationReport::mismatch(Check::Transaction, format!("block {height} missing"));
    };
    let Some(tx) = block.transactions.iter().find(|t| t.txid() == bundle.txid) else {
        return VerificationReport::mismatch(
            Check::Transaction,
            format!("transaction {} not in block {height}", bundle.txid),
        );
    };
    if !tx.pays(&bundle.address, params.dust_satoshi) {
        return VerificationReport::mismatch(
            Check::Transaction,
            format!(
                "transaction does not pay {} sat to {}",
                params.dust_satoshi, bundle.address
            ),
        );
    }

    let block_hash = block.hash();
    if block_hash != bundle.block_hash {
        return VerificationReport::mismatch(
            Check::Block,
            format!(
                "block {height} hashes to {block_hash}, bundle says {}",
                bundle.block_hash
            ),
        );
    }
    if height != bundle.block_height {
        return VerificationReport::mismatch(
            Check::Block,
            format!(
                "transaction is in block {height}, bundle says {}",
                bundle.block_height
            ),
        );
    }
    if block.header.timestamp != bundle.block_time {
        return VerificationReport::mismatch(
            Check::Block,
            format!(
                "block time is {}, bundle says {}",
                block.header.timestamp, bundle.block_time
            ),
        );
    }
    if !meets_difficulty(&block_hash, block.header.difficulty_bits)
        || block_merkle_root(&block.transactions) != block.header.merkle_root
    {
        return VerificationReport::mismatch(
            Check::Block,
            "block fails proof of work or merkle check",
        );
    }
    if let Some(next) = chain.block(height + 1) {
        if next.header.prev_hash != block_hash {
            return VerificationReport::mismatch(
                Check::Block,
                "next block does not link to this block",
            );
        }
    }

    let confirmations = chain.confirmations(&bundle.txid);
    if confirmations >= params.finality_depth {
        VerificationReport {
            verdict: Verdict::Verified,
            attested_time: Some(block.header.timestamp),
            confirmations,
            failed_check: None,
            failure_detail: None,
        }
    } else {
        VerificationReport {
            verdict: Verdict::Pending,
            attested_time: None,
            confirmations,
            failed_check: None,
            failure_detail: Some(format!(
                "{confirmations} of {} confirmations",
                params.finality_depth
            )),
        }
    }
}

/// Hashes `content` and verifies the digest.
pub fn verify_document_bytes(
    content: &[u8],
    bundle: &ProofBundle,
    chain: &impl ChainView,
    params: &VerifyParams,
) -> VerificationReport {
    verify_with_bundle(&sha256(content), bundle, chain, params)
}

/// Verifies through the service's ledger: looks up the record, exports its
/// bundle and runs the same checks as the independent path.
pub fn verify_via_service(
    content_digest: &Digest32,
    store: &LedgerStore,
    chain: &impl ChainView,
    params: &VerifyParams,
) -> VerificationReport {
    let record = match store.lookup(content_digest, chain) {
        Ok(r) => r,
        Err(LedgerError::NotFound(_)) => {
            return VerificationReport::unknown(format!("{content_digest} was never stamped"))
        }
        Err(e) => return VerificationReport::unknown(e.to_string()),
    };
    let pending = |detail: &str| VerificationReport {
        verdict: Verdict::Pending,
        attested_time: None,
        confirmations: 0,
        failed_check: None,
        failure_detail: Some(detail.into()),
    };
    let Some(txid) = record.txid() else {
        return pending("hash is waiting for its window to close");
    };
    match chain.locate(&txid) {
        TxLocation::Mempool => return pending("commitment not yet mined"),
        TxLocation::Unknown => {
            return VerificationReport::mismatch(
                Check::Transaction,
                format!("recorded transaction {txid} not found on chain"),
            )
        }
        TxLocation::Block(_) => {}
    }
    match store.export_proof(content_digest, chain) {
        Ok(bundle) => verify_with_bundle(content_digest, &bundle, chain, params),
        Err(e) => VerificationReport::unknown(e.to_string()),
    }
}
