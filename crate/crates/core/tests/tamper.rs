mod common;

use chainstamp::chain::codec::{decode_records, encode_record};
use chainstamp::chain::{validate_chain, ViolationKind};
use common::fixtures::committed_chain;

const BITS: u8 = 12;

#[test]
fn untouched_chain_validates() {
    let chain = committed_chain(10, BITS);
    assert_eq!(chain.blocks().len(), 10);
    validate_chain(chain.blocks(), BITS).unwrap();
}

#[test]
fn every_single_field_mutation_is_rejected() {
    let chain = committed_chain(10, BITS);
    let s = common::mutation::run(chain.blocks(), BITS);
    assert!(s.total > 2_000, "only {} mutations", s.total);
    assert!(s.escapes.is_empty(), "escaped: {:?}", s.escapes);
    assert_eq!(s.rejected + s.undecodable, s.total);
}

#[test]
fn every_file_byte_flip_is_rejected() {
    let chain = committed_chain(10, BITS);
    let file: Vec<u8> = chain.blocks().iter().flat_map(encode_record).collect();
    for i in 0..file.len() {
        let mut bytes = file.clone();
        bytes[i] ^= 0x01;
        if let Ok((blocks, _)) = decode_records(&bytes, false) {
            assert!(
                validate_chain(&blocks, BITS).is_err(),
                "byte {i} flip accepted"
            );
        }
    }
}

#[test]
fn reports_first_violation_kind() {
    let chain = committed_chain(4, BITS);
    let mut blocks = chain.blocks().to_vec();
    blocks[2].transactions[0].outputs[0].amount = 2;
    let v = validate_chain(&blocks, BITS).unwrap_err();
    assert_eq!((v.height, v.kind), (2, ViolationKind::MerkleRoot));

    let mut blocks = chain.blocks().to_vec();
    blocks.swap(1, 2);
    assert_eq!(
        validate_chain(&blocks, BITS).unwrap_err().kind,
        ViolationKind::Height
    );

    let mut blocks = chain.blocks().to_vec();
    blocks.remove(1);
    assert_eq!(validate_chain(&blocks, BITS).unwrap_err().height, 1);
}

#[test]
fn declared_difficulty_must_match() {
    let chain = committed_chain(3, BITS);
    let v = validate_chain(chain.blocks(), BITS - 1).unwrap_err();
    assert_eq!((v.height, v.kind), (0, ViolationKind::Difficulty));
}
