//! Commitment windows: collecting submitted hashes and folding each window
//! into one aggregated hash.
//!
//! Windows are half-open UTC intervals `[id * len, (id + 1) * len)` aligned to
//! the Unix epoch. A hash submitted twice in the same window is queued once.
//! Priority submissions skip the wait and leave as singleton batches.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
pub use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{sha256, Digest32};
use crate::time::Timestamp;

pub const SATOSHI_PER_BTC: u64 = 100_000_000;
pub const DEFAULT_WINDOW_SECONDS: u64 = 24 * 60 * 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregatorError {
    #[error("cannot aggregate an empty hash set")]
    EmptySet,
    #[error("window {window_id} is still open until {closes_at}")]
    WindowStillOpen {
        window_id: u64,
        closes_at: Timestamp,
    },
    #[error("window {0} is already closed")]
    WindowAlreadyClosed(u64),
    #[error("window length must be at least one second")]
    ZeroWindow,
}

/// Sorts and deduplicates `hashes`, concatenates the raw bytes and hashes the
/// result. A single hash is still hashed once more.
pub fn aggregate<'a, I>(hashes: I) -> Result<Digest32, AggregatorError>
where
    I: IntoIterator<Item = &'a Digest32>,
{
    let unique: BTreeSet<&Digest32> = hashes.into_iter().collect();
    if unique.is_empty() {
        return Err(AggregatorError::EmptySet);
    }
    let mut buf = Vec::with_capacity(unique.len() * Digest32::LEN);
    for h in unique {
        buf.extend_from_slice(h.as_bytes());
    }
    Ok(sha256(&buf))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionReceipt {
    pub document_hash: Digest32,
    pub received_at: Timestamp,
    pub window_id: u64,
    pub priority: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    /// Everything queued in a window, committed after the window closes.
    Window,
    /// One priority hash, committed right away.
    Priority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentBatch {
    pub window_id: u64,
    pub kind: BatchKind,
    /// Sorted ascending by raw bytes, no duplicates, never empty.
    pub hashes: Vec<Digest32>,
    pub aggregated_hash: Digest32,
    pub created_at: Timestamp,
}

impl CommitmentBatch {
    pub fn new<I>(
        window_id: u64,
        kind: BatchKind,
        hashes: I,
        created_at: Timestamp,
    ) -> Result<Self, AggregatorError>
    where
        I: IntoIterator<Item = Digest32>,
    {
        let hashes: Vec<Digest32> = hashes
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let aggregated_hash = aggregate(&hashes)?;
        Ok(Self {
            window_id,
            kind,
            hashes,
            aggregated_hash,
            created_at,
        })
    }

    /// Checks the sortedness and aggregation invariants, e.g. after loading
    /// a batch from disk.
    pub fn is_consistent(&self) -> bool {
        !self.hashes.is_empty()
            && self.hashes.windows(2).all(|w| w[0] < w[1])
            && aggregate(&self.hashes).ok() == Some(self.aggregated_hash)
    }

    pub fn contains(&self, h: &Digest32) -> bool {
        self.hashes.binary_search(h).is_ok()
    }
}

/// Fee schedule for commitment transactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    pub dust_satoshi: u64,
    pub fee_satoshi: u64,
    /// USD per BTC.
    pub btc_price_usd: BigRational,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            dust_satoshi: 1,
            fee_satoshi: 10_000,
            btc_price_usd: BigRational::from_integer(BigInt::from(250)),
        }
    }
}

impl CostModel {
    pub fn satoshi_per_window(&self) -> u64 {
        self.dust_satoshi + self.fee_satoshi
    }

    pub fn annual_satoshi(&self, windows_per_year: u64) -> u128 {
        u128::from(windows_per_year) * u128::from(self.satoshi_per_window())
    }

    /// Yearly spend in BTC, exact.
    pub fn annual_btc(&self, windows_per_year: u64) -> BigRational {
        BigRational::new(
            BigInt::from(self.annual_satoshi(windows_per_year)),
            BigInt::from(SATOSHI_PER_BTC),
        )
    }
}

/// Yearly spend in USD when one transaction is sent per window, exact.
pub fn annual_cost(model: &CostModel, windows_per_year: u64) -> BigRational {
    model.annual_btc(windows_per_year) * &model.btc_price_usd
}

/// Parses a plain decimal such as `"250"` or `"612.37"` into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let mantissa: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    let value = BigRational::new(mantissa, scale);
    Some(if neg { -value } else { value })
}

#[derive(Debug, Default)]
struct WindowQueue {
    receipts: HashMap<Digest32, SubmissionReceipt>,
}

/// Result of [`Aggregator::submit_hash`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submitted {
    pub receipt: SubmissionReceipt,
    /// False when the hash was already queued in this window.
    pub fresh: bool,
}

/// Queue of submissions grouped by window.
///
/// Not internally synchronized: callers that share one across threads wrap it
/// in a lock, which makes submissions and closes linearizable.
#[derive(Debug)]
pub struct Aggregator {
    window_seconds: u64,
    open: BTreeMap<u64, WindowQueue>,
    closed: BTreeSet<u64>,
    priority: VecDeque<SubmissionReceipt>,
}

impl Aggregator {
    pub fn new(window_seconds: u64) -> Result<Self, AggregatorError> {
        if window_seconds == 0 {
            return Err(AggregatorError::ZeroWindow);
        }
        Ok(Self {
            window_seconds,
            open: BTreeMap::new(),
            closed: BTreeSet::new(),
            priority: VecDeque::new(),
        })
    }

    pub fn window_seconds(&self) -> u64 {
        self.window_seconds
    }

    pub fn window_of(&self, t: Timestamp) -> u64 {
        t.unix() / self.window_seconds
    }

    pub fn window_start(&self, window_id: u64) -> Timestamp {
        Timestamp::from_unix(window_id.saturating_mul(self.window_seconds))
    }

    pub fn window_end(&self, window_id: u64) -> Timestamp {
        Timestamp::from_unix(
            window_id
                .saturating_add(1)
                .saturating_mul(self.window_seconds),
        )
    }

    pub fn is_closed(&self, window_id: u64) -> bool {
        self.closed.contains(&window_id)
    }

    /// Queues `h` in the window containing `now`.
    ///
    /// If that window was already closed (a late caller), the hash goes to
    /// the next open window and `received_at` is clamped to its start.
    pub fn submit_hash(&mut self, h: Digest32, priority: bool, now: Timestamp) -> Submitted {
        let mut window_id = self.window_of(now);
        while self.closed.contains(&window_id) {
            window_id += 1;
        }
        let received_at = now.max(self.window_start(window_id));

        let queue = self.open.entry(window_id).or_default();
        if let Some(existing) = queue.receipts.get(&h) {
            return Submitted {
                receipt: existing.clone(),
                fresh: false,
            };
        }
        let receipt = SubmissionReceipt {
            document_hash: h,
            received_at,
            window_id,
            priority,
        };
        queue.receipts.insert(h, receipt.clone());
        if priority {
            self.priority.push_back(receipt.clone());
        }
        Submitted {
            receipt,
            fresh: true,
        }
    }

    /// Re-inserts a receipt recovered from durable storage.
    pub fn restore(&mut self, receipt: SubmissionReceipt, priority_done: bool) {
        let queue = self.open.entry(receipt.window_id).or_default();
        if queue.receipts.contains_key(&receipt.document_hash) {
            return;
        }
        if receipt.priority && !priority_done {
            self.priority.push_back(receipt.clone());
        }
        queue.receipts.insert(receipt.document_hash, receipt);
    }

    /// Marks a window closed without producing a batch (recovery path).
    pub fn mark_closed(&mut self, window_id: u64) {
        self.open.remove(&window_id);
        self.closed.insert(window_id);
    }

    pub fn queued_in(&self, window_id: u64) -> usize {
        self.open.get(&window_id).map_or(0, |q| q.receipts.len())
    }

    pub fn has_pending_priority(&self) -> bool {
        !self.priority.is_empty()
    }

    /// Windows with queued entries whose interval has fully elapsed by `now`.
    pub fn due_windows(&self, now: Timestamp) -> Vec<u64> {
        self.open
            .keys()
            .copied()
            .filter(|&id| self.window_end(id) <= now)
            .collect()
    }

    /// Drains priority submissions into singleton batches.
    pub fn take_priority_batches(&mut self, now: Timestamp) -> Vec<CommitmentBatch> {
        self.priority
            .drain(..)
            .map(|r| {
                CommitmentBatch::new(r.window_id, BatchKind::Priority, [r.document_hash], now)
                    .expect("singleton is non-empty")
            })
            .collect()
    }

    /// Closes a fully elapsed window. Returns `None` when nothing but priority
    /// hashes (or nothing at all) was queued in it.
    pub fn close_window(
        &mut self,
        window_id: u64,
        now: Timestamp,
    ) -> Result<Option<CommitmentBatch>, AggregatorError> {
        if self.closed.contains(&window_id) {
            return Err(AggregatorError::WindowAlreadyClosed(window_id));
        }
        let closes_at = self.window_end(window_id);
        if now < closes_at {
            return Err(AggregatorError::WindowStillOpen {
                window_id,
                closes_at,
            });
        }
        self.closed.insert(window_id);
        let Some(queue) = self.open.remove(&window_id) else {
            return Ok(None);
        };
        let hashes: Vec<Digest32> = queue
            .receipts
            .into_values()
            .filter(|r| !r.priority)
            .map(|r| r.document_hash)
            .collect();
        if hashes.is_empty() {
            return Ok(None);
        }
        CommitmentBatch::new(window_id, BatchKind::Window, hashes, now).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: u64) -> Timestamp {
        Timestamp::from_unix(s)
    }

    #[test]
    fn aggregate_single_hashes_again() {
        let h = sha256(b"doc");
        assert_eq!(aggregate([&h]).unwrap(), sha256(h.as_bytes()));
    }

    #[test]
    fn aggregate_known_answer() {
        let a = sha256(b"");
        let b = sha256(b"abc");
        let expected: Digest32 = "6f1290896ee81a0349174d19f4473d267a10289c40480861d5c42affffbd79f9"
            .parse()
            .unwrap();
        assert_eq!(aggregate([&a, &b]).unwrap(), expected);
        assert_eq!(aggregate([&b, &a, &b]).unwrap(), expected);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert_eq!(
            aggregate(std::iter::empty()),
            Err(AggregatorError::EmptySet)
        );
    }

    #[test]
    fn resubmission_is_idempotent() {
        let mut agg = Aggregator::new(10).unwrap();
        let h = sha256(b"x");
        let first = agg.submit_hash(h, false, t(101));
        let second = agg.submit_hash(h, false, t(105));
        assert!(first.fresh);
        assert!(!second.fresh);
        assert_eq!(first.receipt, second.receipt);
        assert_eq!(agg.queued_in(10), 1);
    }

    #[test]
    fn boundary_instant_belongs_to_later_window() {
        let mut agg = Aggregator::new(10).unwrap();
        assert_eq!(
            agg.submit_hash(sha256(b"a"), false, t(19))
                .receipt
                .window_id,
            1
        );
        assert_eq!(
            agg.submit_hash(sha256(b"b"), false, t(20))
                .receipt
                .window_id,
            2
        );
    }

    #[test]
    fn close_lifecycle() {
        let mut agg = Aggregator::new(10).unwrap();
        for doc in [b"c".as_slice(), b"a", b"b", b"a"] {
            agg.submit_hash(sha256(doc), false, t(12));
        }
        assert_eq!(
            agg.close_window(1, t(19)),
            Err(AggregatorError::WindowStillOpen {
                window_id: 1,
                closes_at: t(20)
            })
        );
        let batch = agg.close_window(1, t(20)).unwrap().unwrap();
        assert_eq!(batch.hashes.len(), 3);
        assert!(batch.hashes.windows(2).all(|w| w[0] < w[1]));
        assert!(batch.is_consistent());
        assert_eq!(
            agg.close_window(1, t(30)),
            Err(AggregatorError::WindowAlreadyClosed(1))
        );
    }

    #[test]
    fn empty_window_commits_nothing() {
        let mut agg = Aggregator::new(10).unwrap();
        assert_eq!(agg.close_window(3, t(100)), Ok(None));
        assert!(agg.is_closed(3));
    }

    #[test]
    fn late_submission_rolls_forward() {
        let mut agg = Aggregator::new(10).unwrap();
        agg.close_window(1, t(20)).unwrap();
        let r = agg.submit_hash(sha256(b"late"), false, t(15)).receipt;
        assert_eq!(r.window_id, 2);
        assert_eq!(r.received_at, t(20));
    }

    #[test]
    fn priority_is_kept_out_of_the_window_batch() {
        let mut agg = Aggregator::new(10).unwrap();
        let p = sha256(b"urgent");
        let n = sha256(b"normal");
        assert!(agg.submit_hash(p, true, t(11)).receipt.priority);
        agg.submit_hash(n, false, t(11));
        // Resubmitting without the flag keeps the original receipt.
        assert!(agg.submit_hash(p, false, t(12)).receipt.priority);

        let singles = agg.take_priority_batches(t(11));
        assert_eq!(singles.len(), 1);
        assert_eq!(singles[0].hashes, vec![p]);
        assert_eq!(singles[0].kind, BatchKind::Priority);
        assert!(agg.take_priority_batches(t(12)).is_empty());

        let batch = agg.close_window(1, t(20)).unwrap().unwrap();
        assert_eq!(batch.hashes, vec![n]);
    }

    #[test]
    fn window_with_only_priority_closes_empty() {
        let mut agg = Aggregator::new(10).unwrap();
        agg.submit_hash(sha256(b"p"), true, t(11));
        agg.take_priority_batches(t(11));
        assert_eq!(agg.due_windows(t(20)), vec![1]);
        assert_eq!(agg.close_window(1, t(20)), Ok(None));
    }

    #[test]
    fn annual_cost_example() {
        let model = CostModel::default();
        let btc = model.annual_btc(365);
        assert_eq!(btc, parse_decimal("0.03650365").unwrap());
        let usd = annual_cost(&model, 365);
        assert_eq!(usd, parse_decimal("9.1259125").unwrap());
        assert_eq!(annual_cost(&model, 0), BigRational::from_integer(0.into()));
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(
            parse_decimal("250"),
            Some(BigRational::from_integer(250.into()))
        );
        assert_eq!(
            parse_decimal("0.5"),
            Some(BigRational::new(1.into(), 2.into()))
        );
        assert_eq!(
            parse_decimal(".25"),
            Some(BigRational::new(1.into(), 4.into()))
        );
        assert_eq!(parse_decimal("1e3"), None);
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("."), None);
    }
}
