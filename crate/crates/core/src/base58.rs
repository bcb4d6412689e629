//! Base58 and Base58Check with the Bitcoin alphabet.

use thiserror::Error;

use crate::digest::double_sha256;

pub const ALPHABET: &[u8; 58] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

/// Accepted payload sizes for [`check_encode`].
pub const PAYLOAD_LEN: std::ops::RangeInclusive<usize> = 1..=64;

const CHECKSUM_LEN: usize = 4;

const INVALID: u8 = 0xff;

const DECODE_TABLE: [u8; 128] = {
    let mut table = [INVALID; 128];
    let mut i = 0;
    while i < ALPHABET.len() {
        table[ALPHABET[i] as usize] = i as u8;
        i += 1;
    }
    table
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Base58Error {
    #[error("payload length {0} outside 1..=64")]
    InvalidPayload(usize),
    #[error("invalid base58 character {ch:?} at position {index}")]
    InvalidCharacter { ch: char, index: usize },
    #[error("checksum mismatch")]
    ChecksumMismatch,
    #[error("decoded data too short for version and checksum")]
    TooShort,
}

/// Plain Base58. Each leading zero byte becomes a leading `'1'`.
pub fn encode(data: &[u8]) -> String {
    let zeros = data.iter().take_while(|&&b| b == 0).count();
    // Little-endian base-58 digits of the big-endian number in `data`.
    let mut digits: Vec<u8> = Vec::with_capacity(data.len() * 138 / 100 + 1);
    for &byte in &data[zeros..] {
        let mut carry = byte as u32;
        for d in digits.iter_mut() {
            carry += (*d as u32) << 8;
            *d = (carry % 58) as u8;
            carry /= 58;
        }
        while carry > 0 {
            digits.push((carry % 58) as u8);
            carry /= 58;
        }
    }
    let mut out = String::with_capacity(zeros + digits.len());
    out.extend(std::iter::repeat_n('1', zeros));
    out.extend(digits.iter().rev().map(|&d| ALPHABET[d as usize] as char));
    out
}

pub fn decode(s: &str) -> Result<Vec<u8>, Base58Error> {
    let mut bytes: Vec<u8> = Vec::with_capacity(s.len());
    let mut zeros = 0usize;
    let mut leading = true;
    for (index, ch) in s.char_indices() {
        let value = if ch.is_ascii() {
            DECODE_TABLE[ch as usize]
        } else {
            INVALID
        };
        if value == INVALID {
            return Err(Base58Error::InvalidCharacter { ch, index });
        }
        if leading && value == 0 {
            zeros += 1;
            continue;
        }
        leading = false;
        let mut carry = value as u32;
        for b in bytes.iter_mut() {
            carry += (*b as u32) * 58;
            *b = (carry & 0xff) as u8;
            carry >>= 8;
        }
        while carry > 0 {
            bytes.push((carry & 0xff) as u8);
            carry >>= 8;
        }
    }
    let mut out = vec![0u8; zeros];
    out.extend(bytes.iter().rev());
    Ok(out)
}

fn checksum(body: &[u8]) -> [u8; CHECKSUM_LEN] {
    let digest = double_sha256(body);
    let mut out = [0u8; CHECKSUM_LEN];
    out.copy_from_slice(&digest.as_bytes()[..CHECKSUM_LEN]);
    out
}

/// `Base58(version ‖ payload ‖ dsha256(version ‖ payload)[..4])`.
pub fn check_encode(version: u8, payload: &[u8]) -> Result<String, Base58Error> {
    if !PAYLOAD_LEN.contains(&payload.len()) {
        return Err(Base58Error::InvalidPayload(payload.len()));
    }
    let mut buf = Vec::with_capacity(1 + payload.len() + CHECKSUM_LEN);
    buf.push(version);
    buf.extend_from_slice(payload);
    let sum = checksum(&buf);
    buf.extend_from_slice(&sum);
    Ok(encode(&buf))
}

/// Inverse of [`check_encode`]; returns `(version, payload)`.
pub fn check_decode(s: &str) -> Result<(u8, Vec<u8>), Base58Error> {
    let raw = decode(s)?;
    if raw.len() < 1 + CHECKSUM_LEN {
        return Err(Base58Error::TooShort);
    }
    let (body, sum) = raw.split_at(raw.len() - CHECKSUM_LEN);
    if checksum(body) != sum {
        return Err(Base58Error::ChecksumMismatch);
    }
    let payload = body[1..].to_vec();
    if !PAYLOAD_LEN.contains(&payload.len()) {
        return Err(Base58Error::InvalidPayload(payload.len()));
    }
    Ok((body[0], payload))
}
