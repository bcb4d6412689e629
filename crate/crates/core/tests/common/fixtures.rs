use chainstamp::address::{derive_address, MAINNET_VERSION};
use chainstamp::chain::{Chain, ChainParams};
use chainstamp::{sha256, Timestamp};

pub const T0: Timestamp = Timestamp::from_unix(1_700_000_000);

/// A chain of `len` blocks (genesis included). Block `h > 0` carries `h % 3 + 1`
/// dust commitments to distinct derived addresses.
pub fn committed_chain(len: u64, difficulty_bits: u8) -> Chain {
    let mut chain = Chain::new(ChainParams { difficulty_bits }, T0).unwrap();
    for h in 1..len {
        for i in 0..(h % 3 + 1) {
            let agg = sha256(format!("window {h}/{i}").as_bytes());
            let addr = derive_address(&agg, MAINNET_VERSION).encoded;
            chain.build_transaction(&addr, 1, 10_000).unwrap();
        }
        chain.mine_block(T0.saturating_add(h * 600));
    }
    chain
}
