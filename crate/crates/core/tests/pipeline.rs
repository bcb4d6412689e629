use std::fs::OpenOptions;
use std::io::Write;

use chainstamp::chain::{Chain, ChainFile, ChainParams, ChainView};
use chainstamp::ledger::StampStatus;
use chainstamp::pipeline::{PipelineError, StoragePaths};
use chainstamp::verifier::Check;
use chainstamp::{
    sha256, verify_via_service, verify_with_bundle, Pipeline, PipelineConfig, ProofBundle,
    Timestamp, Verdict,
};
use tempfile::TempDir;

const W: u64 = 10;

fn config(auto_confirm: bool) -> PipelineConfig {
    PipelineConfig {
        window_seconds: W,
        chain: ChainParams { difficulty_bits: 8 },
        auto_confirm,
        ..PipelineConfig::default()
    }
}

fn t(s: u64) -> Timestamp {
    Timestamp::from_unix(1_000_000 + s)
}

fn paths(dir: &TempDir) -> StoragePaths {
    StoragePaths {
        ledger: dir.path().join("ledger.jsonl"),
        chain: dir.path().join("chain.bin"),
    }
}

fn commitment_txs(chain: &Chain) -> usize {
    chain
        .blocks()
        .iter()
        .map(|b| b.transactions.len())
        .sum::<usize>()
        + chain.mempool().len()
}

#[test]
fn window_commits_once_and_becomes_final() {
    let mut p = Pipeline::in_memory(config(true), t(0)).unwrap();
    let docs: Vec<_> = (0..20)
        .map(|i| sha256(format!("doc {i}").as_bytes()))
        .collect();
    p.submit_bulk(&docs, t(1)).unwrap();
    assert!(p.tick(t(5)).unwrap().committed.is_empty());

    let report = p.tick(t(W + 1)).unwrap();
    assert_eq!(report.committed.len(), 1);
    assert_eq!(report.committed[0].hashes, 20);
    assert_eq!(report.blocks_mined, 5);
    assert_eq!(commitment_txs(p.chain()), 1);

    for d in &docs {
        let r = p.status(d).unwrap();
        assert_eq!(r.status, StampStatus::Final);
        assert_eq!(r.confirmations, 5);
        let bundle = p.proof(d).unwrap();
        let report = verify_with_bundle(d, &bundle, p.chain(), &p.verify_params());
        assert_eq!(report.verdict, Verdict::Verified);
        assert_eq!(Some(bundle.block_time), report.attested_time);
    }
}

#[test]
fn priority_submission_commits_alone_on_next_tick() {
    let mut p = Pipeline::in_memory(config(false), t(0)).unwrap();
    p.submit(sha256(b"bulk"), false, t(1)).unwrap();
    let urgent = sha256(b"urgent");
    p.submit(urgent, true, t(2)).unwrap();
    assert!(p.has_pending_priority());

    let report = p.tick(t(3)).unwrap();
    assert_eq!(report.committed.len(), 1);
    assert_eq!(report.committed[0].hashes, 1);
    assert_eq!(p.status(&urgent).unwrap().batch_hashes(), [urgent]);
    assert_eq!(
        p.status(&sha256(b"bulk")).unwrap().status,
        StampStatus::Pending
    );
}

#[test]
fn status_moves_from_pending_to_committed_to_final() {
    let mut p = Pipeline::in_memory(config(false), t(0)).unwrap();
    let d = sha256(b"x");
    p.submit(d, false, t(1)).unwrap();
    assert_eq!(p.status(&d).unwrap().status, StampStatus::Pending);
    p.tick(t(W)).unwrap();
    let r = p.status(&d).unwrap();
    assert_eq!((r.status, r.confirmations), (StampStatus::Committed, 0));
    assert!(r.txid().is_some());
    assert!(p.proof(&d).is_err());
    p.mine(4, t(W)).unwrap();
    assert_eq!(p.status(&d).unwrap().status, StampStatus::Committed);
    p.mine(1, t(W)).unwrap();
    assert_eq!(p.status(&d).unwrap().status, StampStatus::Final);
}

#[test]
fn service_path_matches_independent_path() {
    let mut p = Pipeline::in_memory(config(true), t(0)).unwrap();
    let d = sha256(b"report.pdf");
    p.submit(d, false, t(0)).unwrap();
    p.tick(t(W)).unwrap();
    let params = p.verify_params();
    let via = verify_via_service(&d, p.ledger(), p.chain(), &params);
    let direct = verify_with_bundle(&d, &p.proof(&d).unwrap(), p.chain(), &params);
    assert_eq!(via, direct);
    assert_eq!(via.verdict, Verdict::Verified);

    let stranger = sha256(b"never stamped");
    assert_eq!(
        verify_via_service(&stranger, p.ledger(), p.chain(), &params).verdict,
        Verdict::Unknown
    );
}

#[test]
fn bundle_survives_json_and_rejects_tampering() {
    let mut p = Pipeline::in_memory(config(true), t(0)).unwrap();
    let docs: Vec<_> = (0..3).map(|i| sha256(&[i])).collect();
    p.submit_bulk(&docs, t(0)).unwrap();
    p.tick(t(W)).unwrap();
    let params = p.verify_params();
    let bundle = ProofBundle::from_json(&p.proof(&docs[0]).unwrap().to_json()).unwrap();
    assert_eq!(
        verify_with_bundle(&docs[0], &bundle, p.chain(), &params).verdict,
        Verdict::Verified
    );

    let check = |b: &ProofBundle| verify_with_bundle(&docs[0], b, p.chain(), &params).failed_check;
    let mut b = bundle.clone();
    b.batch_hashes.retain(|h| h != &docs[0]);
    assert_eq!(check(&b), Some(Check::Membership));
    let mut b = bundle.clone();
    b.batch_hashes.push(sha256(b"extra"));
    assert_eq!(check(&b), Some(Check::Aggregation));
    let mut b = bundle.clone();
    b.aggregated_hash = sha256(b"other");
    assert_eq!(check(&b), Some(Check::Aggregation));
    let mut b = bundle.clone();
    b.txid = sha256(b"txid");
    assert_eq!(check(&b), Some(Check::Transaction));
    let mut b = bundle.clone();
    b.block_height += 1;
    assert_eq!(check(&b), Some(Check::Block));
    let mut b = bundle.clone();
    b.block_time = b.block_time.saturating_add(1);
    assert_eq!(check(&b), Some(Check::Block));
    let mut b = bundle;
    b.block_hash = sha256(b"block");
    assert_eq!(check(&b), Some(Check::Block));
}

#[test]
fn restart_after_close_recommits_exactly_once() {
    let dir = TempDir::new().unwrap();
    let d = sha256(b"crash me");
    {
        let mut p = Pipeline::open(config(false), &paths(&dir), t(0)).unwrap();
        p.submit(d, false, t(1)).unwrap();
        assert_eq!(p.close_due(t(W)).unwrap().len(), 1);
        // Dropped before the transaction is built.
    }
    let mut p = Pipeline::open(config(false), &paths(&dir), t(W)).unwrap();
    assert_eq!(p.outbox_len(), 1);
    let report = p.tick(t(W + 1)).unwrap();
    assert_eq!(report.committed.len(), 1);
    assert!(p.tick(t(2 * W + 1)).unwrap().committed.is_empty());
    p.confirm_pending(t(2 * W + 1)).unwrap();
    drop(p);

    let p = Pipeline::open(config(false), &paths(&dir), t(3 * W)).unwrap();
    assert_eq!(commitment_txs(p.chain()), 1);
    assert_eq!(p.outbox_len(), 0);
    assert_eq!(p.status(&d).unwrap().status, StampStatus::Final);
}

#[test]
fn unmined_transaction_is_rebuilt_after_restart() {
    let dir = TempDir::new().unwrap();
    let d = sha256(b"lost in mempool");
    let txid = {
        let mut p = Pipeline::open(config(false), &paths(&dir), t(0)).unwrap();
        p.submit(d, false, t(1)).unwrap();
        p.tick(t(W)).unwrap().committed[0].txid
    };
    let mut p = Pipeline::open(config(false), &paths(&dir), t(W)).unwrap();
    assert_eq!(p.chain().mempool().len(), 1);
    assert_eq!(p.chain().mempool()[0].txid(), txid);
    assert_eq!(p.confirm_pending(t(W)).unwrap(), 5);
    assert_eq!(p.status(&d).unwrap().txid(), Some(txid));
}

#[test]
fn open_submissions_survive_restart() {
    let dir = TempDir::new().unwrap();
    {
        let mut p = Pipeline::open(config(true), &paths(&dir), t(0)).unwrap();
        p.submit(sha256(b"a"), false, t(1)).unwrap();
        p.submit(sha256(b"b"), false, t(2)).unwrap();
    }
    let mut p = Pipeline::open(config(true), &paths(&dir), t(3)).unwrap();
    assert_eq!(p.aggregator().queued_in(t(0).unix() / W), 2);
    let report = p.tick(t(W)).unwrap();
    assert_eq!(report.committed[0].hashes, 2);
}

#[test]
fn torn_tails_are_truncated_on_open() {
    let dir = TempDir::new().unwrap();
    let paths = paths(&dir);
    let d = sha256(b"durable");
    {
        let mut p = Pipeline::open(config(true), &paths, t(0)).unwrap();
        p.submit(d, false, t(1)).unwrap();
        p.tick(t(W)).unwrap();
    }
    let chain_len = std::fs::metadata(&paths.chain).unwrap().len();
    OpenOptions::new()
        .append(true)
        .open(&paths.ledger)
        .unwrap()
        .write_all(br#"{"kind":"submit"#)
        .unwrap();
    OpenOptions::new()
        .append(true)
        .open(&paths.chain)
        .unwrap()
        .write_all(b"TSSH\x01\x00\x00\x01\x00abc")
        .unwrap();

    let p = Pipeline::open(config(true), &paths, t(W)).unwrap();
    assert_eq!(std::fs::metadata(&paths.chain).unwrap().len(), chain_len);
    assert_eq!(p.status(&d).unwrap().status, StampStatus::Final);
    let stored = ChainFile::new(&paths.chain).load().unwrap();
    assert_eq!(stored.len() as u64, p.chain().tip_height() + 1);
}

#[test]
fn chain_file_verifies_without_the_service() {
    let dir = TempDir::new().unwrap();
    let paths = paths(&dir);
    let d = sha256(b"offline");
    let bundle = {
        let mut p = Pipeline::open(config(true), &paths, t(0)).unwrap();
        p.submit(d, false, t(1)).unwrap();
        p.tick(t(W)).unwrap();
        p.proof(&d).unwrap()
    };
    let chain = Chain::from_untrusted_blocks(ChainFile::new(&paths.chain).load().unwrap()).unwrap();
    let report = verify_with_bundle(&d, &bundle, &chain, &Default::default());
    assert_eq!(report.verdict, Verdict::Verified);
    assert_eq!(report.attested_time, Some(bundle.block_time));
}

#[test]
fn reopening_with_other_difficulty_fails() {
    let dir = TempDir::new().unwrap();
    Pipeline::open(config(true), &paths(&dir), t(0)).unwrap();
    let mut other = config(true);
    other.chain.difficulty_bits = 9;
    assert!(matches!(
        Pipeline::open(other, &paths(&dir), t(0)),
        Err(PipelineError::DifficultyMismatch {
            stored: 8,
            configured: 9
        })
    ));
}

#[test]
fn late_submission_rolls_into_next_window() {
    let mut p = Pipeline::in_memory(config(false), t(0)).unwrap();
    p.submit(sha256(b"early"), false, t(1)).unwrap();
    p.tick(t(W)).unwrap();
    // A clock that lags behind the close.
    let late = p.submit(sha256(b"late"), false, t(W - 1)).unwrap();
    let first = t(0).unix() / W;
    assert_eq!(late.receipt.window_id, first + 1);
    assert_eq!(late.receipt.received_at.unix(), (first + 1) * W);
}
