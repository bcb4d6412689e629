//! Byte formats for transactions, blocks and the chain file.
//!
//! Transaction: `varint(field_count)` then `varint(len) ‖ bytes` per field, in
//! the order `[address_utf8, amount_be8]` per output followed by `fee_be8`.
//! Varints are Bitcoin CompactSize.
//!
//! Chain file record: `"TSSH" ‖ 0x01 ‖ len_be4 ‖ header ‖ varint(tx_count) ‖
//! (varint(tx_len) ‖ tx)*`.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{Block, BlockHeader, Transaction, TxOutput};
use crate::address::AddressString;
use crate::digest::Digest32;
use crate::time::Timestamp;

pub const RECORD_MAGIC: [u8; 4] = *b"TSSH";
pub const RECORD_VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 8 + 32 + 32 + 8 + 1 + 8;

/// Offset of the nonce within the serialized header.
pub(crate) const NONCE_OFFSET: usize = HEADER_LEN - 8;

const MAX_RECORD_LEN: u32 = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("unexpected end of data")]
    Truncated,
    #[error("trailing bytes after record")]
    TrailingBytes,
    #[error("bad record magic at offset {0}")]
    BadMagic(u64),
    #[error("unsupported record version {0}")]
    BadVersion(u8),
    #[error("record length {0} exceeds limit")]
    RecordTooLarge(u32),
    #[error("non-canonical varint")]
    NonCanonicalVarint,
    #[error("malformed transaction: {0}")]
    Transaction(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_varint(out: &mut Vec<u8>, n: u64) {
    match n {
        0..=0xfc => out.push(n as u8),
        0xfd..=0xffff => {
            out.push(0xfd);
            out.extend_from_slice(&(n as u16).to_le_bytes());
        }
        0x1_0000..=0xffff_ffff => {
            out.push(0xfe);
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        _ => {
            out.push(0xff);
            out.extend_from_slice(&n.to_le_bytes());
        }
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.buf.len() < n {
            return Err(CodecError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u64_be(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub(crate) fn varint(&mut self) -> Result<u64, CodecError> {
        let tag = self.array::<1>()?[0];
        let (n, min) = match tag {
            0xfd => (u64::from(u16::from_le_bytes(self.array()?)), 0xfd),
            0xfe => (u64::from(u32::from_le_bytes(self.array()?)), 0x1_0000),
            0xff => (u64::from_le_bytes(self.array()?), 0x1_0000_0000),
            n => return Ok(u64::from(n)),
        };
        if n < min {
            return Err(CodecError::NonCanonicalVarint);
        }
        Ok(n)
    }

    fn finish(self) -> Result<(), CodecError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes)
        }
    }
}

fn write_field(out: &mut Vec<u8>, bytes: &[u8]) {
    write_varint(out, bytes.len() as u64);
    out.extend_from_slice(bytes);
}

pub fn serialize_transaction(tx: &Transaction) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    write_varint(&mut out, 2 * tx.outputs.len() as u64 + 1);
    for o in &tx.outputs {
        write_field(&mut out, o.address.as_str().as_bytes());
        write_field(&mut out, &o.amount.to_be_bytes());
    }
    write_field(&mut out, &tx.fee.to_be_bytes());
    out
}

pub fn parse_transaction(bytes: &[u8]) -> Result<Transaction, CodecError> {
    let mut r = Reader::new(bytes);
    let tx = read_transaction(&mut r)?;
    r.finish()?;
    Ok(tx)
}

fn read_amount(r: &mut Reader<'_>) -> Result<u64, CodecError> {
    let len = r.varint()?;
    if len != 8 {
        return Err(CodecError::Transaction("amount field must be 8 bytes"));
    }
    r.u64_be()
}

fn read_transaction(r: &mut Reader<'_>) -> Result<Transaction, CodecError> {
    let fields = r.varint()?;
    if fields < 3 || fields % 2 == 0 {
        return Err(CodecError::Transaction(
            "field count must be 2n+1 with n >= 1",
        ));
    }
    let n_outputs = (fields - 1) / 2;
    let mut outputs = Vec::new();
    for _ in 0..n_outputs {
        let len = r.varint()?;
        let raw = r.take(usize::try_from(len).map_err(|_| CodecError::Truncated)?)?;
        let address = std::str::from_utf8(raw)
            .map_err(|_| CodecError::Transaction("address is not UTF-8"))?;
        let amount = read_amount(r)?;
        outputs.push(TxOutput {
            address: AddressString::new_unchecked(address),
            amount,
        });
    }
    let fee = read_amount(r)?;
    Ok(Transaction { outputs, fee })
}

pub fn serialize_header(h: &BlockHeader) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[0..8].copy_from_slice(&h.height.to_be_bytes());
    out[8..40].copy_from_slice(h.prev_hash.as_bytes());
    out[40..72].copy_from_slice(h.merkle_root.as_bytes());
    out[72..80].copy_from_slice(&h.timestamp.unix().to_be_bytes());
    out[80] = h.difficulty_bits;
    out[NONCE_OFFSET..].copy_from_slice(&h.nonce.to_be_bytes());
    out
}

fn read_header(r: &mut Reader<'_>) -> Result<BlockHeader, CodecError> {
    Ok(BlockHeader {
        height: r.u64_be()?,
        prev_hash: Digest32::from_bytes(r.array()?),
        merkle_root: Digest32::from_bytes(r.array()?),
        timestamp: Timestamp::from_unix(r.u64_be()?),
        difficulty_bits: r.array::<1>()?[0],
        nonce: r.u64_be()?,
    })
}

/// Header plus transactions, without record framing.
pub fn serialize_block(block: &Block) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 64 * block.transactions.len() + 1);
    out.extend_from_slice(&serialize_header(&block.header));
    write_varint(&mut out, block.transactions.len() as u64);
    for tx in &block.transactions {
        write_field(&mut out, &serialize_transaction(tx));
    }
    out
}

pub fn parse_block(bytes: &[u8]) -> Result<Block, CodecError> {
    let mut r = Reader::new(bytes);
    let header = read_header(&mut r)?;
    let count = r.varint()?;
    let mut transactions = Vec::new();
    for _ in 0..count {
        let len = r.varint()?;
        let raw = r.take(usize::try_from(len).map_err(|_| CodecError::Truncated)?)?;
        transactions.push(parse_transaction(raw)?);
    }
    r.finish()?;
    Ok(Block {
        header,
        transactions,
    })
}

/// One framed chain-file record.
pub fn encode_record(block: &Block) -> Vec<u8> {
    let body = serialize_block(block);
    let mut out = Vec::with_capacity(9 + body.len());
    out.extend_from_slice(&RECORD_MAGIC);
    out.push(RECORD_VERSION);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

/// Decodes a whole chain file.
///
/// With `tolerate_torn_tail`, an incomplete final record (an interrupted
/// append) is dropped and its offset returned; any other damage is an error.
pub fn decode_records(
    bytes: &[u8],
    tolerate_torn_tail: bool,
) -> Result<(Vec<Block>, Option<u64>), CodecError> {
    let mut blocks = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        let frame = (|| {
            let mut r = Reader::new(rest);
            let magic = r.array::<4>()?;
            if magic != RECORD_MAGIC {
                return Err(CodecError::BadMagic(offset as u64));
            }
            let version = r.array::<1>()?[0];
            if version != RECORD_VERSION {
                return Err(CodecError::BadVersion(version));
            }
            let len = u32::from_be_bytes(r.array()?);
            if len > MAX_RECORD_LEN {
                return Err(CodecError::RecordTooLarge(len));
            }
            let body = r.take(len as usize)?;
            Ok((parse_block(body)?, 9 + len as usize))
        })();
        match frame {
            Ok((block, used)) => {
                blocks.push(block);
                offset += used;
            }
            Err(CodecError::Truncated) if tolerate_torn_tail && is_torn_tail(rest) => {
                return Ok((blocks, Some(offset as u64)));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((blocks, None))
}

/// A tail is torn when it is a valid prefix of a frame whose declared length
/// runs past the end of the file.
fn is_torn_tail(rest: &[u8]) -> bool {
    if rest.len() < 9 {
        return RECORD_MAGIC.starts_with(&rest[..rest.len().min(4)]);
    }
    let len = u32::from_be_bytes(rest[5..9].try_into().expect("4 bytes"));
    rest[..4] == RECORD_MAGIC && rest.len() < 9 + len as usize
}

/// Append-only block file.
#[derive(Debug, Clone)]
pub struct ChainFile {
    path: PathBuf,
}

impl ChainFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.exists()
    }

    /// Strict load: any damage, including a torn final record, is an error.
    pub fn load(&self) -> Result<Vec<Block>, CodecError> {
        let mut bytes = Vec::new();
        File::open(&self.path)?.read_to_end(&mut bytes)?;
        decode_records(&bytes, false).map(|(blocks, _)| blocks)
    }

    /// Load that truncates an interrupted final append.
    pub fn recover(&self) -> Result<Vec<Block>, CodecError> {
        let mut bytes = Vec::new();
        File::open(&self.path)?.read_to_end(&mut bytes)?;
        let (blocks, torn) = decode_records(&bytes, true)?;
        if let Some(offset) = torn {
            OpenOptions::new()
                .write(true)
                .open(&self.path)?
                .set_len(offset)?;
        }
        Ok(blocks)
    }

    pub fn append(&self, block: &Block) -> Result<(), CodecError> {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        f.write_all(&encode_record(block))?;
        f.sync_data()?;
        Ok(())
    }

    /// Replaces the file with `blocks`.
    pub fn write_all(&self, blocks: &[Block]) -> Result<(), CodecError> {
        let tmp = self.path.with_extension("tmp");
        {
            let mut f = File::create(&tmp)?;
            for b in blocks {
                f.write_all(&encode_record(b))?;
            }
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}
