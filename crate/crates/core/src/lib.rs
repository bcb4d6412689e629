//! Trusted timestamping on a proof-of-work chain.
//!
//! Document digests are collected into commitment windows, each window is
//! folded into one aggregated hash, the aggregated hash is turned into an
//! address, and one dust transaction to that address commits the window.
//! A [`ProofBundle`] then lets anyone check the timestamp against the chain
//! without asking the service.

pub mod address;
pub mod aggregator;
pub mod base58;
pub mod chain;
pub mod digest;
pub mod ledger;
pub mod pipeline;
pub mod time;
pub mod tsa;
pub mod verifier;

pub use address::{derive_address, AddressString, BitcoinAddress};
pub use aggregator::{
    aggregate, annual_cost, Aggregator, CommitmentBatch, CostModel, SubmissionReceipt,
};
pub use chain::{Block, Chain, ChainClient, ChainParams, ChainView, Transaction};
pub use digest::{double_sha256, hash160, ripemd160, sha256, Digest20, Digest32, HexError};
pub use ledger::{LedgerStore, ProofBundle, StampRecord, StampStatus};
pub use pipeline::{Pipeline, PipelineConfig};
pub use time::Timestamp;
pub use verifier::{
    verify_document_bytes, verify_via_service, verify_with_bundle, Verdict, VerificationReport,
    VerifyParams,
};
