//! The commitment cycle, driven by explicit clock ticks.
//!
//! For each closed window (or priority submission): log the batch, derive
//! its address, send dust there, record the transaction, and optionally
//! mine until the commitment is final. A batch that fails at any step stays
//! queued and is retried on the next tick; nothing is dropped.

use std::collections::VecDeque;
use std::path::PathBuf;

use thiserror::Error;

use crate::address::{derive_address, MAINNET_VERSION};
use crate::aggregator::{Aggregator, AggregatorError, CommitmentBatch, CostModel, Submitted};
use crate::chain::{
    Chain, ChainClient, ChainError, ChainFile, ChainParams, ChainView, CodecError, Transaction,
    TxOutput,
};
use crate::digest::Digest32;
use crate::ledger::{LedgerError, LedgerStore, ProofBundle, StampRecord, DEFAULT_FINALITY_DEPTH};
use crate::time::Timestamp;
use crate::verifier::VerifyParams;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Aggregator(#[from] AggregatorError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("chain file: {0}")]
    ChainFile(#[from] CodecError),
    #[error("stored chain uses difficulty {stored}, configuration says {configured}")]
    DifficultyMismatch { stored: u8, configured: u8 },
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub window_seconds: u64,
    pub chain: ChainParams,
    pub finality_depth: u64,
    pub cost: CostModel,
    pub address_version: u8,
    /// Mine after each commitment until it is final.
    pub auto_confirm: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_seconds: crate::aggregator::DEFAULT_WINDOW_SECONDS,
            chain: ChainParams::default(),
            finality_depth: DEFAULT_FINALITY_DEPTH,
            cost: CostModel::default(),
            address_version: MAINNET_VERSION,
            auto_confirm: true,
        }
    }
}

impl PipelineConfig {
    pub fn verify_params(&self) -> VerifyParams {
        VerifyParams {
            finality_depth: self.finality_depth,
            dust_satoshi: self.cost.dust_satoshi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StoragePaths {
    pub ledger: PathBuf,
    pub chain: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommittedTx {
    pub window_id: u64,
    pub hashes: usize,
    pub txid: Digest32,
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct TickReport {
    pub committed: Vec<CommittedTx>,
    pub blocks_mined: u64,
    /// Batches that failed this tick and will be retried.
    pub failures: Vec<String>,
}

#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    aggregator: Aggregator,
    chain: Chain,
    ledger: LedgerStore,
    chain_file: Option<ChainFile>,
    /// Closed batches waiting for (or retrying) their commitment.
    outbox: VecDeque<CommitmentBatch>,
    /// Committed transactions not yet final, for auto-confirmation.
    unconfirmed: Vec<Digest32>,
}

impl Pipeline {
    pub fn in_memory(
        config: PipelineConfig,
        genesis_time: Timestamp,
    ) -> Result<Self, PipelineError> {
        Ok(Self {
            aggregator: Aggregator::new(config.window_seconds)?,
            chain: Chain::new(config.chain, genesis_time)?,
            ledger: LedgerStore::in_memory(config.finality_depth),
            chain_file: None,
            outbox: VecDeque::new(),
            unconfirmed: Vec::new(),
            config,
        })
    }

    /// Opens durable state, creating it if absent, and recovers anything a
    /// previous process left half done.
    pub fn open(
        config: PipelineConfig,
        paths: &StoragePaths,
        now: Timestamp,
    ) -> Result<Self, PipelineError> {
        let chain_file = ChainFile::new(&paths.chain);
        let chain = if chain_file.exists() {
            let blocks = chain_file.recover()?;
            if blocks.is_empty() {
                let chain = Chain::new(config.chain, now)?;
                chain_file.write_all(chain.blocks())?;
                chain
            } else {
                let stored = blocks[0].header.difficulty_bits;
                if stored != config.chain.difficulty_bits {
                    return Err(PipelineError::DifficultyMismatch {
                        stored,
                        configured: config.chain.difficulty_bits,
                    });
                }
                Chain::from_blocks(config.chain, blocks)?
            }
        } else {
            let chain = Chain::new(config.chain, now)?;
            chain_file.write_all(chain.blocks())?;
            chain
        };
        let ledger = LedgerStore::open(&paths.ledger, config.finality_depth)?;

        let mut aggregator = Aggregator::new(config.window_seconds)?;
        for window_id in ledger.closed_windows() {
            aggregator.mark_closed(window_id);
        }
        for (receipt, priority_done) in ledger.open_receipts() {
            aggregator.restore(receipt, priority_done);
        }

        let mut pipeline = Self {
            config,
            aggregator,
            chain,
            ledger,
            chain_file: Some(chain_file),
            outbox: VecDeque::new(),
            unconfirmed: Vec::new(),
        };
        pipeline
            .outbox
            .extend(pipeline.ledger.uncommitted_batches());
        pipeline.resubmit_lost_transactions()?;
        Ok(pipeline)
    }

    /// Committed transactions that never made it into a block (the mempool
    /// is not persisted) are rebuilt from their recorded amounts.
    fn resubmit_lost_transactions(&mut self) -> Result<(), PipelineError> {
        for c in self.ledger.committed_batches() {
            if self.chain.locate(&c.txid) != crate::chain::TxLocation::Unknown {
                if self.chain.confirmations(&c.txid) < self.config.finality_depth {
                    self.unconfirmed.push(c.txid);
                }
                continue;
            }
            let (dust, fee) = c.funding.map_or(
                (self.config.cost.dust_satoshi, self.config.cost.fee_satoshi),
                |f| (f.dust_satoshi, f.fee_satoshi),
            );
            let tx = Transaction {
                outputs: vec![TxOutput {
                    address: c.address.clone(),
                    amount: dust,
                }],
                fee,
            };
            if tx.txid() == c.txid {
                self.chain.submit_transaction(tx)?;
                self.unconfirmed.push(c.txid);
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn ledger(&self) -> &LedgerStore {
        &self.ledger
    }

    pub fn aggregator(&self) -> &Aggregator {
        &self.aggregator
    }

    pub fn verify_params(&self) -> VerifyParams {
        self.config.verify_params()
    }

    pub fn submit(
        &mut self,
        h: Digest32,
        priority: bool,
        now: Timestamp,
    ) -> Result<Submitted, PipelineError> {
        let submitted = self.aggregator.submit_hash(h, priority, now);
        if submitted.fresh {
            self.ledger.record_submission(&submitted.receipt)?;
        }
        Ok(submitted)
    }

    /// Queues every hash at the same instant, so all land in one window.
    pub fn submit_bulk(
        &mut self,
        hashes: &[Digest32],
        now: Timestamp,
    ) -> Result<Vec<Submitted>, PipelineError> {
        hashes.iter().map(|&h| self.submit(h, false, now)).collect()
    }

    pub fn has_pending_priority(&self) -> bool {
        self.aggregator.has_pending_priority()
    }

    /// Moves priority submissions and elapsed windows into the outbox,
    /// logging each batch before any transaction is built.
    pub fn close_due(&mut self, now: Timestamp) -> Result<Vec<CommitmentBatch>, PipelineError> {
        let mut closed = self.aggregator.take_priority_batches(now);
        for window_id in self.aggregator.due_windows(now) {
            if let Some(batch) = self.aggregator.close_window(window_id, now)? {
                closed.push(batch);
            }
        }
        let mut first_err = None;
        for batch in &closed {
            if let Err(e) = self.ledger.record_closed(batch) {
                first_err.get_or_insert(e);
            }
        }
        self.outbox.extend(closed.iter().cloned());
        match first_err {
            Some(e) => Err(e.into()),
            None => Ok(closed),
        }
    }

    fn commit_batch(&mut self, batch: &CommitmentBatch) -> Result<CommittedTx, PipelineError> {
        self.ledger.record_closed(batch)?;
        let address = derive_address(&batch.aggregated_hash, self.config.address_version).encoded;
        let tx = self.chain.build_transaction(
            &address,
            self.config.cost.dust_satoshi,
            self.config.cost.fee_satoshi,
        )?;
        self.ledger.record_batch_tx(batch, &tx, &self.chain)?;
        Ok(CommittedTx {
            window_id: batch.window_id,
            hashes: batch.hashes.len(),
            txid: tx.txid(),
        })
    }

    /// Commits everything in the outbox. Failed batches go back to the
    /// outbox for the next tick.
    pub fn commit_outbox(&mut self, report: &mut TickReport) {
        let pending: Vec<CommitmentBatch> = self.outbox.drain(..).collect();
        for batch in pending {
            match self.commit_batch(&batch) {
                Ok(c) => {
                    self.unconfirmed.push(c.txid);
                    report.committed.push(c);
                }
                Err(e) => {
                    report.failures.push(format!(
                        "window {} ({:?}): {e}",
                        batch.window_id, batch.kind
                    ));
                    self.outbox.push_back(batch);
                }
            }
        }
    }

    /// One scheduler step at time `now`.
    pub fn tick(&mut self, now: Timestamp) -> Result<TickReport, PipelineError> {
        let mut report = TickReport::default();
        if let Err(e) = self.close_due(now) {
            report.failures.push(e.to_string());
        }
        self.commit_outbox(&mut report);
        if self.config.auto_confirm {
            report.blocks_mined = self.confirm_pending(now)?;
        }
        Ok(report)
    }

    /// Mines until every outstanding commitment is final.
    pub fn confirm_pending(&mut self, now: Timestamp) -> Result<u64, PipelineError> {
        let depth = self.config.finality_depth.max(1);
        let mut mined = 0;
        loop {
            let chain = &self.chain;
            self.unconfirmed
                .retain(|txid| chain.confirmations(txid) < depth);
            if self.unconfirmed.is_empty() {
                return Ok(mined);
            }
            self.mine_one(now)?;
            mined += 1;
        }
    }

    fn mine_one(&mut self, now: Timestamp) -> Result<Digest32, PipelineError> {
        let block = self.chain.mine_block(now);
        let hash = block.hash();
        if let Some(file) = &self.chain_file {
            file.append(block)?;
        }
        Ok(hash)
    }

    /// Appends `n` blocks; returns their hashes.
    pub fn mine(&mut self, n: u64, now: Timestamp) -> Result<Vec<Digest32>, PipelineError> {
        (0..n).map(|_| self.mine_one(now)).collect()
    }

    pub fn status(&self, h: &Digest32) -> Result<StampRecord, LedgerError> {
        self.ledger.lookup(h, &self.chain)
    }

    pub fn proof(&self, h: &Digest32) -> Result<ProofBundle, LedgerError> {
        self.ledger.export_proof(h, &self.chain)
    }

    pub fn outbox_len(&self) -> usize {
        self.outbox.len()
    }
}
