//! Durable record of which document hashes went into which batch and
//! transaction, and export of self-contained proof bundles.
//!
//! Storage is a single append-only JSON-lines log. The in-memory index is
//! rebuilt from it on open. An interrupted final line is discarded.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::{derive_address, AddressString, BitcoinAddress};
use crate::aggregator::{BatchKind, CommitmentBatch, SubmissionReceipt};
use crate::chain::{ChainView, Transaction, TxLocation};
use crate::digest::Digest32;
use crate::time::Timestamp;

pub const DEFAULT_FINALITY_DEPTH: u64 = 5;
pub const PROOF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("no record for {0}")]
    NotFound(Digest32),
    #[error("{0} is not yet mined")]
    NotYetMined(Digest32),
    #[error("address {actual} does not match aggregated hash (expected {expected})")]
    InconsistentAddress {
        expected: AddressString,
        actual: AddressString,
    },
    #[error("batch for window {0} violates its sorting or aggregation invariant")]
    InconsistentBatch(u64),
    #[error("transaction {0} is neither pending nor mined")]
    UnknownTransaction(Digest32),
    #[error("ledger log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StampStatus {
    Pending,
    Committed,
    Final,
}

impl StampStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pending => "pending",
            Self::Committed => "committed",
            Self::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commitment {
    pub batch: Arc<CommitmentBatch>,
    pub address: AddressString,
    pub txid: Digest32,
}

/// One document hash in one window, with its commitment once there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StampRecord {
    pub document_hash: Digest32,
    pub window_id: u64,
    pub received_at: Option<Timestamp>,
    pub status: StampStatus,
    pub confirmations: u64,
    pub block_height: Option<u64>,
    pub commitment: Option<Commitment>,
}

impl StampRecord {
    pub fn batch_hashes(&self) -> &[Digest32] {
        self.commitment.as_ref().map_or(&[], |c| &c.batch.hashes)
    }

    pub fn txid(&self) -> Option<Digest32> {
        self.commitment.as_ref().map(|c| c.txid)
    }
}

/// Everything needed to check one document's timestamp against a chain,
/// without the service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofBundle {
    pub format_version: u32,
    pub document_hash: Digest32,
    pub batch_hashes: Vec<Digest32>,
    pub aggregated_hash: Digest32,
    pub address: AddressString,
    pub txid: Digest32,
    pub block_hash: Digest32,
    pub block_height: u64,
    pub block_time: Timestamp,
    pub confirmations_at_export: u64,
}

#[derive(Debug, Error)]
pub enum BundleParseError {
    #[error("malformed proof bundle: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported proof bundle format_version {0}")]
    Version(u32),
}

impl ProofBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, BundleParseError> {
        let bundle: Self = serde_json::from_str(s)?;
        if bundle.format_version != PROOF_FORMAT_VERSION {
            return Err(BundleParseError::Version(bundle.format_version));
        }
        Ok(bundle)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LogEntry {
    Submitted(SubmissionReceipt),
    Closed {
        batch: CommitmentBatch,
    },
    Committed {
        window_id: u64,
        batch_kind: BatchKind,
        aggregated_hash: Digest32,
        txid: Digest32,
        address: AddressString,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        funding: Option<Funding>,
    },
}

/// Amounts of a commitment transaction, kept so that it can be rebuilt
/// byte-for-byte if it is lost before being mined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funding {
    pub dust_satoshi: u64,
    pub fee_satoshi: u64,
}

/// A batch with its recorded commitment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommittedBatch {
    pub batch: Arc<CommitmentBatch>,
    pub txid: Digest32,
    pub address: AddressString,
    pub funding: Option<Funding>,
}

type BatchKey = (u64, BatchKind, Digest32);

fn key_of(batch: &CommitmentBatch) -> BatchKey {
    (batch.window_id, batch.kind, batch.aggregated_hash)
}

#[derive(Debug)]
struct StoredBatch {
    batch: Arc<CommitmentBatch>,
    committed: Option<(Digest32, AddressString, Option<Funding>)>,
}

#[derive(Debug)]
pub struct LedgerStore {
    path: Option<PathBuf>,
    file: Option<File>,
    finality_depth: u64,
    receipts: HashMap<Digest32, BTreeMap<u64, SubmissionReceipt>>,
    batches: Vec<StoredBatch>,
    batch_keys: HashMap<BatchKey, usize>,
    by_hash: HashMap<Digest32, Vec<usize>>,
}

impl LedgerStore {
    pub fn in_memory(finality_depth: u64) -> Self {
        Self {
            path: None,
            file: None,
            finality_depth,
            receipts: HashMap::new(),
            batches: Vec::new(),
            batch_keys: HashMap::new(),
            by_hash: HashMap::new(),
        }
    }

    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(path: impl AsRef<Path>, finality_depth: u64) -> Result<Self, LedgerError> {
        let path = path.as_ref().to_path_buf();
        let mut store = Self::in_memory(finality_depth);
        if path.exists() {
            let mut good_len = 0u64;
            let reader = BufReader::new(File::open(&path)?);
            let mut lines = reader.split(b'\n').enumerate().peekable();
            while let Some((n, line)) = lines.next() {
                let line = line?;
                let is_last = lines.peek().is_none();
                match serde_json::from_slice::<LogEntry>(&line) {
                    Ok(entry) => {
                        store.apply(entry);
                        good_len += line.len() as u64 + 1;
                    }
                    Err(_) if line.iter().all(u8::is_ascii_whitespace) => {
                        good_len += line.len() as u64 + 1;
                    }
                    Err(_) if is_last => break,
                    Err(e) => {
                        return Err(LedgerError::Corrupt {
                            line: n + 1,
                            message: e.to_string(),
                        })
                    }
                }
            }
            let actual = std::fs::metadata(&path)?.len();
            if good_len < actual {
                OpenOptions::new()
                    .write(true)
                    .open(&path)?
                    .set_len(good_len)?;
            } else if good_len > actual {
                // Last entry is complete but lacks its newline.
                OpenOptions::new()
                    .append(true)
                    .open(&path)?
                    .write_all(b"\n")?;
            }
        }
        store.file = Some(OpenOptions::new().create(true).append(true).open(&path)?);
        store.path = Some(path);
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn finality_depth(&self) -> u64 {
        self.finality_depth
    }

    fn append(&mut self, entry: &LogEntry) -> Result<(), LedgerError> {
        if let Some(f) = self.file.as_mut() {
            let mut line = serde_json::to_vec(entry).expect("log entry serializes");
            line.push(b'\n');
            f.write_all(&line)?;
            f.sync_data()?;
        }
        Ok(())
    }

    fn apply(&mut self, entry: LogEntry) {
        match entry {
            LogEntry::Submitted(r) => {
                self.receipts
                    .entry(r.document_hash)
                    .or_default()
                    .entry(r.window_id)
                    .or_insert(r);
            }
            LogEntry::Closed { batch } => {
                self.insert_batch(batch);
            }
            LogEntry::Committed {
                window_id,
                batch_kind,
                aggregated_hash,
                txid,
                address,
                funding,
            } => {
                if let Some(&i) = self
                    .batch_keys
                    .get(&(window_id, batch_kind, aggregated_hash))
                {
                    self.batches[i]
                        .committed
                        .get_or_insert((txid, address, funding));
                }
            }
        }
    }

    fn insert_batch(&mut self, batch: CommitmentBatch) -> usize {
        let key = key_of(&batch);
        if let Some(&i) = self.batch_keys.get(&key) {
            return i;
        }
        let i = self.batches.len();
        for h in &batch.hashes {
            self.by_hash.entry(*h).or_default().push(i);
        }
        self.batches.push(StoredBatch {
            batch: Arc::new(batch),
            committed: None,
        });
        self.batch_keys.insert(key, i);
        i
    }

    /// Logs a submission as pending. Returns false if it was already known.
    pub fn record_submission(&mut self, receipt: &SubmissionReceipt) -> Result<bool, LedgerError> {
        let known = self
            .receipts
            .get(&receipt.document_hash)
            .is_some_and(|w| w.contains_key(&receipt.window_id));
        if known {
            return Ok(false);
        }
        let entry = LogEntry::Submitted(receipt.clone());
        self.append(&entry)?;
        self.apply(entry);
        Ok(true)
    }

    /// Logs a closed batch before its transaction is built, so a crash in
    /// between can be recovered by recommitting it.
    pub fn record_closed(&mut self, batch: &CommitmentBatch) -> Result<(), LedgerError> {
        if !batch.is_consistent() {
            return Err(LedgerError::InconsistentBatch(batch.window_id));
        }
        if self.batch_keys.contains_key(&key_of(batch)) {
            return Ok(());
        }
        let entry = LogEntry::Closed {
            batch: batch.clone(),
        };
        self.append(&entry)?;
        self.apply(entry);
        Ok(())
    }

    /// Records that `batch` was committed by `txid` paying `address`.
    /// Returns the number of new stamp records; replaying returns 0.
    pub fn record_batch(
        &mut self,
        batch: &CommitmentBatch,
        txid: Digest32,
        address: &AddressString,
        chain: &impl ChainView,
    ) -> Result<usize, LedgerError> {
        self.record_commitment(batch, txid, address, None, chain)
    }

    /// [`LedgerStore::record_batch`] for a single-output transaction, also
    /// keeping its amounts.
    pub fn record_batch_tx(
        &mut self,
        batch: &CommitmentBatch,
        tx: &Transaction,
        chain: &impl ChainView,
    ) -> Result<usize, LedgerError> {
        let [output] = tx.outputs.as_slice() else {
            return Err(LedgerError::InconsistentAddress {
                expected: derive_address(&batch.aggregated_hash, 0).encoded,
                actual: AddressString::new_unchecked(""),
            });
        };
        let funding = Funding {
            dust_satoshi: output.amount,
            fee_satoshi: tx.fee,
        };
        self.record_commitment(batch, tx.txid(), &output.address, Some(funding), chain)
    }

    fn record_commitment(
        &mut self,
        batch: &CommitmentBatch,
        txid: Digest32,
        address: &AddressString,
        funding: Option<Funding>,
        chain: &impl ChainView,
    ) -> Result<usize, LedgerError> {
        if !batch.is_consistent() {
            return Err(LedgerError::InconsistentBatch(batch.window_id));
        }
        let version = BitcoinAddress::parse(address.as_str())
            .map(|a| a.version)
            .map_err(|_| LedgerError::InconsistentAddress {
                expected: derive_address(&batch.aggregated_hash, 0).encoded,
                actual: address.clone(),
            })?;
        let expected = derive_address(&batch.aggregated_hash, version).encoded;
        if &expected != address {
            return Err(LedgerError::InconsistentAddress {
                expected,
                actual: address.clone(),
            });
        }
        if chain.locate(&txid) == TxLocation::Unknown {
            return Err(LedgerError::UnknownTransaction(txid));
        }
        if let Some(&i) = self.batch_keys.get(&key_of(batch)) {
            if self.batches[i].committed.is_some() {
                return Ok(0);
            }
        }
        self.record_closed(batch)?;
        let entry = LogEntry::Committed {
            window_id: batch.window_id,
            batch_kind: batch.kind,
            aggregated_hash: batch.aggregated_hash,
            txid,
            address: address.clone(),
            funding,
        };
        self.append(&entry)?;
        self.apply(entry);
        Ok(batch.hashes.len())
    }

    /// Closed batches that have no recorded commitment yet.
    pub fn uncommitted_batches(&self) -> Vec<CommitmentBatch> {
        self.batches
            .iter()
            .filter(|b| b.committed.is_none())
            .map(|b| (*b.batch).clone())
            .collect()
    }

    /// Committed batches with their txid and address, in log order.
    pub fn committed_batches(&self) -> Vec<CommittedBatch> {
        self.batches
            .iter()
            .filter_map(|b| {
                b.committed
                    .as_ref()
                    .map(|(txid, address, funding)| CommittedBatch {
                        batch: b.batch.clone(),
                        txid: *txid,
                        address: address.clone(),
                        funding: *funding,
                    })
            })
            .collect()
    }

    /// Windows that produced a regular batch.
    pub fn closed_windows(&self) -> HashSet<u64> {
        self.batches
            .iter()
            .filter(|b| b.batch.kind == BatchKind::Window)
            .map(|b| b.batch.window_id)
            .collect()
    }

    /// Submissions not yet part of any closed batch, plus priority
    /// submissions whose singleton batch already exists (flagged `true`) so
    /// they keep occupying their window.
    pub fn open_receipts(&self) -> Vec<(SubmissionReceipt, bool)> {
        let mut out = Vec::new();
        for (hash, windows) in &self.receipts {
            for r in windows.values() {
                let in_batch = self.by_hash.get(hash).is_some_and(|idx| {
                    idx.iter().any(|&i| {
                        let b = &self.batches[i].batch;
                        b.window_id == r.window_id && (b.kind == BatchKind::Priority) == r.priority
                    })
                });
                if r.priority {
                    out.push((r.clone(), in_batch));
                } else if !in_batch {
                    out.push((r.clone(), false));
                }
            }
        }
        out.sort_by_key(|(r, _)| (r.window_id, r.received_at, r.document_hash));
        out
    }

    fn status_for(
        &self,
        txid: &Digest32,
        chain: &impl ChainView,
    ) -> (StampStatus, u64, Option<u64>) {
        let confirmations = chain.confirmations(txid);
        let height = match chain.locate(txid) {
            TxLocation::Block(h) => Some(h),
            _ => None,
        };
        let status = if confirmations >= self.finality_depth && confirmations > 0 {
            StampStatus::Final
        } else {
            StampStatus::Committed
        };
        (status, confirmations, height)
    }

    /// Every record for `hash`, ordered by window.
    pub fn records(&self, hash: &Digest32, chain: &impl ChainView) -> Vec<StampRecord> {
        let mut by_window: BTreeMap<u64, StampRecord> = BTreeMap::new();
        if let Some(windows) = self.receipts.get(hash) {
            for r in windows.values() {
                by_window.insert(
                    r.window_id,
                    StampRecord {
                        document_hash: *hash,
                        window_id: r.window_id,
                        received_at: Some(r.received_at),
                        status: StampStatus::Pending,
                        confirmations: 0,
                        block_height: None,
                        commitment: None,
                    },
                );
            }
        }
        for &i in self.by_hash.get(hash).into_iter().flatten() {
            let stored = &self.batches[i];
            let window_id = stored.batch.window_id;
            let record = by_window.entry(window_id).or_insert_with(|| StampRecord {
                document_hash: *hash,
                window_id,
                received_at: None,
                status: StampStatus::Pending,
                confirmations: 0,
                block_height: None,
                commitment: None,
            });
            if let Some((txid, address, _)) = &stored.committed {
                let (status, confirmations, block_height) = self.status_for(txid, chain);
                record.status = status;
                record.confirmations = confirmations;
                record.block_height = block_height;
                record.commitment = Some(Commitment {
                    batch: stored.batch.clone(),
                    address: address.clone(),
                    txid: *txid,
                });
            }
        }
        by_window.into_values().collect()
    }

    /// The earliest final record if there is one, otherwise the most recent.
    pub fn lookup(
        &self,
        hash: &Digest32,
        chain: &impl ChainView,
    ) -> Result<StampRecord, LedgerError> {
        let records = self.records(hash, chain);
        let earliest_final = records
            .iter()
            .filter(|r| r.status == StampStatus::Final)
            .min_by_key(|r| (r.block_height, r.window_id))
            .cloned();
        earliest_final
            .or_else(|| records.into_iter().last())
            .ok_or(LedgerError::NotFound(*hash))
    }

    /// Builds the proof bundle for `hash` from its best mined record.
    pub fn export_proof(
        &self,
        hash: &Digest32,
        chain: &impl ChainView,
    ) -> Result<ProofBundle, LedgerError> {
        let records = self.records(hash, chain);
        if records.is_empty() {
            return Err(LedgerError::NotFound(*hash));
        }
        let mined = |r: &&StampRecord| r.block_height.is_some();
        let chosen = records
            .iter()
            .filter(mined)
            .filter(|r| r.status == StampStatus::Final)
            .min_by_key(|r| r.block_height)
            .or_else(|| records.iter().filter(mined).max_by_key(|r| r.window_id))
            .ok_or(LedgerError::NotYetMined(*hash))?;
        let commitment = chosen
            .commitment
            .as_ref()
            .expect("mined records are committed");
        let height = chosen.block_height.expect("filtered on mined");
        let block = chain.block(height).ok_or(LedgerError::NotYetMined(*hash))?;
        Ok(ProofBundle {
            format_version: PROOF_FORMAT_VERSION,
            document_hash: *hash,
            batch_hashes: commitment.batch.hashes.clone(),
            aggregated_hash: commitment.batch.aggregated_hash,
            address: commitment.address.clone(),
            txid: commitment.txid,
            block_hash: block.hash(),
            block_height: height,
            block_time: block.header.timestamp,
            confirmations_at_export: chosen.confirmations,
        })
    }
}
