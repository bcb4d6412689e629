//! A simulated proof-of-work block chain.
//!
//! Difficulty is expressed as a number of leading zero bits in the block
//! hash. There is no UTXO set: commitment transactions are funded implicitly
//! and only their outputs matter.

pub mod attack;
pub mod codec;

use std::collections::HashMap;

use thiserror::Error;

use crate::address::{AddressString, BitcoinAddress};
use crate::digest::{double_sha256, Digest32};
use crate::time::Timestamp;

pub use attack::{simulate_rewrite_attack, success_rate, AttackOutcome};
pub use codec::{ChainFile, CodecError};

pub const MAX_DIFFICULTY_BITS: u8 = 28;
pub const DEFAULT_DIFFICULTY_BITS: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxOutput {
    pub address: AddressString,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub outputs: Vec<TxOutput>,
    pub fee: u64,
}

impl Transaction {
    pub fn serialize(&self) -> Vec<u8> {
        codec::serialize_transaction(self)
    }

    /// Double SHA-256 of the canonical serialization. Always recomputed.
    pub fn txid(&self) -> Digest32 {
        double_sha256(&self.serialize())
    }

    pub fn pays(&self, address: &AddressString, amount: u64) -> bool {
        self.outputs
            .iter()
            .any(|o| &o.address == address && o.amount == amount)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockHeader {
    pub height: u64,
    pub prev_hash: Digest32,
    pub merkle_root: Digest32,
    pub timestamp: Timestamp,
    pub difficulty_bits: u8,
    pub nonce: u64,
}

impl BlockHeader {
    pub fn hash(&self) -> Digest32 {
        double_sha256(&codec::serialize_header(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> Digest32 {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn txids(&self) -> Vec<Digest32> {
        self.transactions.iter().map(Transaction::txid).collect()
    }
}

pub fn leading_zero_bits(d: &Digest32) -> u32 {
    let mut bits = 0;
    for &b in d.as_bytes() {
        if b == 0 {
            bits += 8;
        } else {
            bits += b.leading_zeros();
            break;
        }
    }
    bits
}

pub fn meets_difficulty(d: &Digest32, difficulty_bits: u8) -> bool {
    leading_zero_bits(d) >= u32::from(difficulty_bits)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("merkle root of an empty list is undefined")]
pub struct EmptyMerkleTree;

/// Bitcoin-style merkle root: parents are `dsha256(left ‖ right)`, and the
/// last node of an odd-length level is paired with itself.
pub fn merkle_root(txids: &[Digest32]) -> Result<Digest32, EmptyMerkleTree> {
    if txids.is_empty() {
        return Err(EmptyMerkleTree);
    }
    let mut level = txids.to_vec();
    let mut buf = [0u8; 64];
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                buf[..32].copy_from_slice(pair[0].as_bytes());
                buf[32..].copy_from_slice(right.as_bytes());
                double_sha256(&buf)
            })
            .collect();
    }
    Ok(level[0])
}

/// Merkle root stored in a block header; a block without transactions
/// carries the zero digest.
pub fn block_merkle_root(transactions: &[Transaction]) -> Digest32 {
    let txids: Vec<Digest32> = transactions.iter().map(Transaction::txid).collect();
    merkle_root(&txids).unwrap_or(Digest32::ZERO)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyChain,
    Height,
    PrevHash,
    MerkleRoot,
    ProofOfWork,
    Difficulty,
    Timestamp,
    Transaction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("block {height}: {kind:?} violation")]
pub struct ChainViolation {
    pub height: u64,
    pub kind: ViolationKind,
}

fn violation(height: u64, kind: ViolationKind) -> ChainViolation {
    ChainViolation { height, kind }
}

/// Validates linkage, proof of work, merkle roots, timestamps and heights.
/// Every block must declare exactly `difficulty_bits`. Returns the first
/// violation in chain order.
pub fn validate_chain(blocks: &[Block], difficulty_bits: u8) -> Result<(), ChainViolation> {
    if blocks.is_empty() {
        return Err(violation(0, ViolationKind::EmptyChain));
    }
    let mut prev: Option<(&Block, Digest32)> = None;
    for (i, block) in blocks.iter().enumerate() {
        let h = &block.header;
        let at = i as u64;
        if h.height != at {
            return Err(violation(at, ViolationKind::Height));
        }
        let expected_prev = prev.map_or(Digest32::ZERO, |(_, hash)| hash);
        if h.prev_hash != expected_prev {
            return Err(violation(at, ViolationKind::PrevHash));
        }
        if let Some((parent, _)) = prev {
            if h.timestamp < parent.header.timestamp {
                return Err(violation(at, ViolationKind::Timestamp));
            }
        }
        if h.difficulty_bits != difficulty_bits {
            return Err(violation(at, ViolationKind::Difficulty));
        }
        let hash = block.hash();
        if !meets_difficulty(&hash, h.difficulty_bits) {
            return Err(violation(at, ViolationKind::ProofOfWork));
        }
        for tx in &block.transactions {
            let well_formed = !tx.outputs.is_empty()
                && tx
                    .outputs
                    .iter()
                    .all(|o| o.amount >= 1 && BitcoinAddress::parse(o.address.as_str()).is_ok());
            if !well_formed {
                return Err(violation(at, ViolationKind::Transaction));
            }
        }
        if block_merkle_root(&block.transactions) != h.merkle_root {
            return Err(violation(at, ViolationKind::MerkleRoot));
        }
        prev = Some((block, hash));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("invalid address: {0}")]
    InvalidAddress(String),
    #[error("output amount must be at least 1 satoshi")]
    ZeroAmount,
    #[error("difficulty {0} exceeds the maximum of {MAX_DIFFICULTY_BITS} bits")]
    DifficultyTooHigh(u8),
    #[error(transparent)]
    Invalid(#[from] ChainViolation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainParams {
    pub difficulty_bits: u8,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            difficulty_bits: DEFAULT_DIFFICULTY_BITS,
        }
    }
}

/// Where a transaction currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxLocation {
    Mempool,
    Block(u64),
    Unknown,
}

/// Read access to a chain, enough to verify a proof against it.
pub trait ChainView {
    fn tip_height(&self) -> u64;

    fn block(&self, height: u64) -> Option<&Block>;

    fn locate(&self, txid: &Digest32) -> TxLocation;

    /// Tip-inclusive: a transaction in the tip block has one confirmation;
    /// pending or unknown transactions have none.
    fn confirmations(&self, txid: &Digest32) -> u64 {
        match self.locate(txid) {
            TxLocation::Block(h) => 1 + self.tip_height().saturating_sub(h),
            TxLocation::Mempool | TxLocation::Unknown => 0,
        }
    }
}

/// The operations a commitment service needs from a chain backend. The
/// simulator implements it; a real node client could too.
pub trait ChainClient {
    fn submit_transaction(&mut self, tx: Transaction) -> Result<Digest32, ChainError>;
    fn get_transaction(&self, txid: &Digest32) -> Option<(Transaction, TxLocation)>;
    fn get_confirmations(&self, txid: &Digest32) -> u64;
    fn get_block_header(&self, height: u64) -> Option<BlockHeader>;
}

#[derive(Debug, Clone)]
pub struct Chain {
    params: ChainParams,
    blocks: Vec<Block>,
    mempool: Vec<Transaction>,
    /// Height of the first block containing each txid.
    index: HashMap<Digest32, u64>,
}

impl Chain {
    /// Starts a chain with an empty genesis block mined at `genesis_time`.
    pub fn new(params: ChainParams, genesis_time: Timestamp) -> Result<Self, ChainError> {
        check_difficulty(params.difficulty_bits)?;
        let mut header = BlockHeader {
            height: 0,
            prev_hash: Digest32::ZERO,
            merkle_root: Digest32::ZERO,
            timestamp: genesis_time,
            difficulty_bits: params.difficulty_bits,
            nonce: 0,
        };
        header.nonce = search_nonce(&header);
        Ok(Self {
            params,
            blocks: vec![Block {
                header,
                transactions: Vec::new(),
            }],
            mempool: Vec::new(),
            index: HashMap::new(),
        })
    }

    /// Rebuilds a chain from stored blocks, validating them against `params`.
    pub fn from_blocks(params: ChainParams, blocks: Vec<Block>) -> Result<Self, ChainError> {
        check_difficulty(params.difficulty_bits)?;
        validate_chain(&blocks, params.difficulty_bits)?;
        let mut chain = Self {
            params,
            blocks: Vec::with_capacity(blocks.len()),
            mempool: Vec::new(),
            index: HashMap::new(),
        };
        for b in blocks {
            chain.push_block(b);
        }
        Ok(chain)
    }

    /// Like [`Chain::from_blocks`] but takes the difficulty from the genesis
    /// block, for verifiers that only have the file.
    pub fn from_untrusted_blocks(blocks: Vec<Block>) -> Result<Self, ChainError> {
        let difficulty_bits =
            blocks
                .first()
                .map(|b| b.header.difficulty_bits)
                .ok_or(ChainViolation {
                    height: 0,
                    kind: ViolationKind::EmptyChain,
                })?;
        Self::from_blocks(ChainParams { difficulty_bits }, blocks)
    }

    pub fn params(&self) -> ChainParams {
        self.params
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks
            .last()
            .expect("chain always has a genesis block")
    }

    pub fn mempool(&self) -> &[Transaction] {
        &self.mempool
    }

    /// Re-validates the whole chain.
    pub fn validate(&self) -> Result<(), ChainViolation> {
        validate_chain(&self.blocks, self.params.difficulty_bits)
    }

    /// Builds a single-output transaction and places it in the mempool. An
    /// identical transaction already pending is not added twice.
    pub fn build_transaction(
        &mut self,
        address: &AddressString,
        dust: u64,
        fee: u64,
    ) -> Result<Transaction, ChainError> {
        BitcoinAddress::parse(address.as_str())
            .map_err(|e| ChainError::InvalidAddress(e.to_string()))?;
        if dust == 0 {
            return Err(ChainError::ZeroAmount);
        }
        let tx = Transaction {
            outputs: vec![TxOutput {
                address: address.clone(),
                amount: dust,
            }],
            fee,
        };
        self.enqueue(tx.clone());
        Ok(tx)
    }

    fn enqueue(&mut self, tx: Transaction) -> Digest32 {
        let txid = tx.txid();
        if !self.mempool.iter().any(|t| t.txid() == txid) {
            self.mempool.push(tx);
        }
        txid
    }

    /// Mines the mempool into a new block on the tip. The timestamp is
    /// `now`, raised to the parent's if the clock is behind.
    pub fn mine_block(&mut self, now: Timestamp) -> &Block {
        let transactions = std::mem::take(&mut self.mempool);
        let parent = self.tip();
        let mut header = BlockHeader {
            height: parent.header.height + 1,
            prev_hash: parent.hash(),
            merkle_root: block_merkle_root(&transactions),
            timestamp: now.max(parent.header.timestamp),
            difficulty_bits: self.params.difficulty_bits,
            nonce: 0,
        };
        header.nonce = search_nonce(&header);
        self.push_block(Block {
            header,
            transactions,
        });
        self.tip()
    }

    fn push_block(&mut self, block: Block) {
        let height = block.header.height;
        for txid in block.txids() {
            self.index.entry(txid).or_insert(height);
        }
        let index = &self.index;
        self.mempool.retain(|t| !index.contains_key(&t.txid()));
        self.blocks.push(block);
    }

    pub fn containing_block(&self, txid: &Digest32) -> Option<&Block> {
        self.index.get(txid).map(|&h| &self.blocks[h as usize])
    }
}

fn check_difficulty(bits: u8) -> Result<(), ChainError> {
    if bits > MAX_DIFFICULTY_BITS {
        Err(ChainError::DifficultyTooHigh(bits))
    } else {
        Ok(())
    }
}

/// First nonce, counting up from 0, whose header hash meets the difficulty.
fn search_nonce(header: &BlockHeader) -> u64 {
    let mut bytes = codec::serialize_header(header);
    for nonce in 0u64.. {
        bytes[codec::NONCE_OFFSET..].copy_from_slice(&nonce.to_be_bytes());
        if meets_difficulty(&double_sha256(&bytes), header.difficulty_bits) {
            return nonce;
        }
    }
    unreachable!("nonce space exhausted")
}

impl ChainView for Chain {
    fn tip_height(&self) -> u64 {
        self.tip().header.height
    }

    fn block(&self, height: u64) -> Option<&Block> {
        usize::try_from(height)
            .ok()
            .and_then(|h| self.blocks.get(h))
    }

    fn locate(&self, txid: &Digest32) -> TxLocation {
        if let Some(&h) = self.index.get(txid) {
            TxLocation::Block(h)
        } else if self.mempool.iter().any(|t| &t.txid() == txid) {
            TxLocation::Mempool
        } else {
            TxLocation::Unknown
        }
    }
}

/// An unvalidated list of blocks, e.g. read from a file that failed
/// validation, viewed as a chain. Verification against it still recomputes
/// every hash it relies on.
#[derive(Debug, Clone)]
pub struct RawBlocks {
    blocks: Vec<Block>,
    index: HashMap<Digest32, u64>,
}

impl RawBlocks {
    pub fn new(blocks: Vec<Block>) -> Self {
        let mut index = HashMap::new();
        for (i, b) in blocks.iter().enumerate() {
            for txid in b.txids() {
                index.entry(txid).or_insert(i as u64);
            }
        }
        Self { blocks, index }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }
}

impl ChainView for RawBlocks {
    fn tip_height(&self) -> u64 {
        self.blocks.len().saturating_sub(1) as u64
    }

    fn block(&self, height: u64) -> Option<&Block> {
        usize::try_from(height)
            .ok()
            .and_then(|h| self.blocks.get(h))
    }

    fn locate(&self, txid: &Digest32) -> TxLocation {
        self.index
            .get(txid)
            .map_or(TxLocation::Unknown, |&h| TxLocation::Block(h))
    }
}

impl ChainClient for Chain {
    fn submit_transaction(&mut self, tx: Transaction) -> Result<Digest32, ChainError> {
        if tx.outputs.is_empty() {
            return Err(ChainError::ZeroAmount);
        }
        for o in &tx.outputs {
            BitcoinAddress::parse(o.address.as_str())
                .map_err(|e| ChainError::InvalidAddress(e.to_string()))?;
            if o.amount == 0 {
                return Err(ChainError::ZeroAmount);
            }
        }
        let txid = tx.txid();
        if self.index.contains_key(&txid) {
            return Ok(txid);
        }
        Ok(self.enqueue(tx))
    }

    fn get_transaction(&self, txid: &Digest32) -> Option<(Transaction, TxLocation)> {
        if let Some(block) = self.containing_block(txid) {
            let tx = block.transactions.iter().find(|t| &t.txid() == txid)?;
            return Some((tx.clone(), TxLocation::Block(block.header.height)));
        }
        self.mempool
            .iter()
            .find(|t| &t.txid() == txid)
            .map(|t| (t.clone(), TxLocation::Mempool))
    }

    fn get_confirmations(&self, txid: &Digest32) -> u64 {
        self.confirmations(txid)
    }

    fn get_block_header(&self, height: u64) -> Option<BlockHeader> {
        self.block(height).map(|b| b.header.clone())
    }
}
