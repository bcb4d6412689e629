//! Single-field mutations of a chain, each checked against `validate_chain`.

use chainstamp::chain::codec::parse_transaction;
use chainstamp::chain::{validate_chain, Block};

#[derive(Debug, Default)]
pub struct MutationSummary {
    pub total: usize,
    /// Rejected by `validate_chain`.
    pub rejected: usize,
    /// Transaction bytes that no longer decode, so no block can carry them.
    pub undecodable: usize,
    pub escapes: Vec<String>,
}

impl MutationSummary {
    fn check(&mut self, blocks: &[Block], difficulty_bits: u8, what: impl FnOnce() -> String) {
        self.total += 1;
        if validate_chain(blocks, difficulty_bits).is_err() {
            self.rejected += 1;
        } else {
            self.escapes.push(what());
        }
    }
}

fn mutate_header(
    summary: &mut MutationSummary,
    blocks: &[Block],
    bits: u8,
    h: usize,
    field: &str,
    f: impl Fn(&mut Block),
) {
    let mut copy = blocks.to_vec();
    f(&mut copy[h]);
    if copy[h] == blocks[h] {
        return;
    }
    summary.check(&copy, bits, || format!("block {h}: {field}"));
}

/// Every byte of every transaction (two masks), every byte of the merkle root
/// and prev hash, every bit of the nonce and timestamp, plus height and
/// difficulty.
pub fn run(blocks: &[Block], difficulty_bits: u8) -> MutationSummary {
    let mut s = MutationSummary::default();
    for h in 0..blocks.len() {
        for (t, tx) in blocks[h].transactions.iter().enumerate() {
            let raw = tx.serialize();
            for i in 0..raw.len() {
                for mask in [0x01u8, 0x80] {
                    let mut bytes = raw.clone();
                    bytes[i] ^= mask;
                    match parse_transaction(&bytes) {
                        Ok(mutated) => {
                            let mut copy = blocks.to_vec();
                            copy[h].transactions[t] = mutated;
                            s.check(&copy, difficulty_bits, || {
                                format!("block {h} tx {t} byte {i} ^ {mask:#04x}")
                            });
                        }
                        Err(_) => {
                            s.total += 1;
                            s.undecodable += 1;
                        }
                    }
                }
            }
        }
        for i in 0..32 {
            mutate_header(
                &mut s,
                blocks,
                difficulty_bits,
                h,
                &format!("merkle_root[{i}]"),
                |b| {
                    let mut m = *b.header.merkle_root.as_bytes();
                    m[i] ^= 1;
                    b.header.merkle_root = m.into();
                },
            );
            mutate_header(
                &mut s,
                blocks,
                difficulty_bits,
                h,
                &format!("prev_hash[{i}]"),
                |b| {
                    let mut m = *b.header.prev_hash.as_bytes();
                    m[i] ^= 1;
                    b.header.prev_hash = m.into();
                },
            );
        }
        for bit in 0..64 {
            mutate_header(
                &mut s,
                blocks,
                difficulty_bits,
                h,
                &format!("nonce bit {bit}"),
                |b| {
                    b.header.nonce ^= 1 << bit;
                },
            );
            mutate_header(
                &mut s,
                blocks,
                difficulty_bits,
                h,
                &format!("timestamp bit {bit}"),
                |b| {
                    b.header.timestamp =
                        chainstamp::Timestamp::from_unix(b.header.timestamp.unix() ^ (1 << bit));
                },
            );
        }
        mutate_header(&mut s, blocks, difficulty_bits, h, "height", |b| {
            b.header.height += 1
        });
        mutate_header(&mut s, blocks, difficulty_bits, h, "difficulty", |b| {
            b.header.difficulty_bits = b.header.difficulty_bits.wrapping_add(1)
        });
    }
    s
}
