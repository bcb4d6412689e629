//! Known-answer vectors produced by `tests/oracle/gen_vectors.py`, an
//! independent Python implementation (hashlib SHA-256, pure-Python
//! RIPEMD-160 and Base58Check). Regenerate with `python3 gen_vectors.py`.

/// Inputs shared by the hash tables, in order.
pub fn inputs() -> Vec<(&'static str, Vec<u8>)> {
    vec![
        ("empty", b"".to_vec()),
        ("a", b"a".to_vec()),
        ("abc", b"abc".to_vec()),
        ("message digest", b"message digest".to_vec()),
        ("alphabet", b"abcdefghijklmnopqrstuvwxyz".to_vec()),
        (
            "nist448",
            b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq".to_vec(),
        ),
        (
            "alnum",
            b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789".to_vec(),
        ),
        ("digits80", b"1234567890".repeat(8)),
        (
            "fox",
            b"The quick brown fox jumps over the lazy dog".to_vec(),
        ),
        ("zeros32", vec![0u8; 32]),
        ("a55", vec![b'a'; 55]),
        ("a56", vec![b'a'; 56]),
        ("a64", vec![b'a'; 64]),
        ("bytes256", (0..=255u8).collect()),
        ("million_a", vec![b'a'; 1_000_000]),
    ]
}

pub const SHA256: [&str; 15] = [
    "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
    "ca978112ca1bbdcafac231b39a23dc4da786eff8147c4e72b9807785afee48bb",
    "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
    "f7846f55cf23e14eebeab5b4e1550cad5b509e3348fbc4efa3a1413d393cb650",
    "71c480df93d6ae2f1efad1447c66c9525e316218cf51fc8d9ed832f2daf18b73",
    "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1",
    "db4bfcbd4da0cd85a60c3c37d3fbd8805c77f15fc6b1fdfe614ee0a7c8fdb4c0",
    "f371bc4a311f2b009eef952dd83ca80e2b60026c8e935592d0f9c308453c813e",
    "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592",
    "66687aadf862bd776c8fc18b8e9f8e20089714856ee233b3902a591d0d5f2925",
    "9f4390f8d30c2dd92ec9f095b65e2b9ae9b0a925a5258e241c9f1e910f734318",
    "b35439a4ac6f0948b6d6f9e3c6af0f5f590ce20f1bde7090ef7970686ec6738a",
    "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb",
    "40aff2e9d2d8922e47afd4648e6967497158785fbd1da870e7110266bf944880",
    "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0",
];

pub const RIPEMD160: [&str; 15] = [
    "9c1185a5c5e9fc54612808977ee8f548b2258d31",
    "0bdc9d2d256b3ee9daae347be6f4dc835a467ffe",
    "8eb208f7e05d987a9b044a8e98c6b087f15a0bfc",
    "5d0689ef49d2fae572b881b123a85ffa21595f36",
    "f71c27109c692c1b56bbdceb5b9d2865b3708dbc",
    "12a053384a9c0c88e405a06c27dcf49ada62eb2b",
    "b0e20b6e3116640286ed3a87a5713079b21f5189",
    "9b752e45573d4b39f4dbd3323cab82bf63326bfb",
    "37f332f68db77bd9d7edd4969571ad671cf9dd3b",
    "d1a70126ff7a149ca6f9b638db084480440ff842",
    "0d8a8c9063a48576a7c97e9f95253a6e53ff6765",
    "e72334b46c83cc70bef979e15453706c95b888be",
    "9dfb7d374ad924f3f88de96291c33e9abed53e32",
    "9c4fa072db2c871a5635e37f791e93ab45049676",
    "52783243c1697bdbe16d37f97f68f08325dc1528",
];

pub const HASH160: [&str; 15] = [
    "b472a266d0bd89c13706a4132ccfb16f7c3b9fcb",
    "994355199e516ff76c4fa4aab39337b9d84cf12b",
    "bb1be98c142444d7a56aa3981c3942a978e4dc33",
    "c0f5356420849b03a32ddfa5f9204f41392bad94",
    "c286a1af0947f58d1ad787385b1c2c4a976f9e71",
    "69dda8a60e0cfc2353aa776864092c0e5ccb4834",
    "7aeed7ddde700075e4620e5ece9c50f1929b24c8",
    "175a89feae4e48f03fbb2dd0878fb4944c55ef41",
    "0e3397b4abc7a382b3ea2365883c3c7ca5f07600",
    "b8bcb07f6344b42ab04250c86a6e8b75d3fdbbc6",
    "e23716d6140e7f616ed0784636820792fc66e0ba",
    "e1dcb0b473950f27c45e65c0cdbe2ce6e80f7794",
    "57591c6b8f00df7d36a642cc94021dda9ccd43fc",
    "07a536d93e0b9a779874e1287a226b8230cda46e",
    "f9be0e104ef2ed83a7ddb4765780951405e56ba4",
];

/// `(version, payload, encoded)`.
pub fn base58check_vectors() -> Vec<(u8, Vec<u8>, &'static str)> {
    let h = |s: &str| hex::decode(s).unwrap();
    vec![
        (0x00, vec![0; 20], "1111111111111111111114oLvT2"),
        (0x00, h("b472a266d0bd89c13706a4132ccfb16f7c3b9fcb"), "1HT7xU2Ngenf7D4yocz2SAcnNLW7rK8d4E"),
        (0x00, h("bb1be98c142444d7a56aa3981c3942a978e4dc33"), "1J4LoFeFctabK8tMJcPiAjg8sEbvEKfcpE"),
        (0x6f, h("bb1be98c142444d7a56aa3981c3942a978e4dc33"), "mxaJ6JjERv1r6FMy2BN5zetTjECdBCJuAg"),
        (0x05, h("1170b23ad00acbfcf2f4ff5623b101d74bd76e63"), "33HER5HurmDTuEvHYaZuUEVDZMzZwL6TU4"),
        (0x00, h("000001ffffffffffffffffffffffffffffffffff"), "111YV46BDzMPv7CkULt26tNfveiuE2qT"),
        (0x00, vec![0x01], "18AV53K"),
        (
            0x80,
            h("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
            "5KEQgeL4EwjuEAyPQBoaJYVrbt5kSUsrwXPkjzAQTPiNoUxxeS8",
        ),
        (
            0x00,
            (0..64u8).collect(),
            "112jVjGbD3wrDT6L19fyB486MyMfMdNjc148QTEgR2qypJqKtTHnBDUjubAxFytva52tzNzog1PChUSJ1vFMgt162HYTn",
        ),
        (0xff, vec![0xff; 20], "2n1XR4oJkmBdJMxhBGQGb96gQ88xUyGML1i"),
        (0x6f, vec![0; 20], "mfWxJ45yp2SFn7UciZyNpvDKrzbhyfKrY8"),
        (0x01, vec![0x00], "VvpVbFE"),
    ]
}
