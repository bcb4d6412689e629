#!/usr/bin/env python3
"""Independent oracle for the frozen known-answer vectors in tests/known_answers.rs.

SHA-256 comes from hashlib; RIPEMD-160 and Base58Check are implemented here in
pure Python so they share no code with the Rust implementation.
"""
import hashlib
import struct

# --- RIPEMD-160 (pure python) ------------------------------------------------

_R1 = [0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15, 7,4,13,1,10,6,15,3,12,0,9,5,2,14,11,8,
       3,10,14,4,9,15,8,1,2,7,0,6,13,11,5,12, 1,9,11,10,0,8,12,4,13,3,7,15,14,5,6,2,
       4,0,5,9,7,12,2,10,14,1,3,8,11,6,15,13]
_R2 = [5,14,7,0,9,2,11,4,13,6,15,8,1,10,3,12, 6,11,3,7,0,13,5,10,14,15,8,12,4,9,1,2,
       15,5,1,3,7,14,6,9,11,8,12,2,10,0,4,13, 8,6,4,1,3,11,15,0,5,12,2,13,9,7,10,14,
       12,15,10,4,1,5,8,7,6,2,13,14,0,3,9,11]
_S1 = [11,14,15,12,5,8,7,9,11,13,14,15,6,7,9,8, 7,6,8,13,11,9,7,15,7,12,15,9,11,7,13,12,
       11,13,6,7,14,9,13,15,14,8,13,6,5,12,7,5, 11,12,14,15,14,15,9,8,9,14,5,6,8,6,5,12,
       9,15,5,11,6,8,13,12,5,12,13,14,11,8,5,6]
_S2 = [8,9,9,11,13,15,15,5,7,7,8,11,14,14,12,6, 9,13,15,7,12,8,9,11,7,7,12,7,6,15,13,11,
       9,7,15,11,8,6,6,14,12,13,5,14,13,13,7,5, 15,5,8,11,14,14,6,14,6,9,12,9,12,5,15,8,
       8,5,12,9,12,5,14,6,8,13,6,5,15,13,11,11]
_K1 = [0x00000000, 0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xA953FD4E]
_K2 = [0x50A28BE6, 0x5C4DD124, 0x6D703EF3, 0x7A6D76E9, 0x00000000]
M = 0xFFFFFFFF

def _rol(x, n):
    return ((x << n) | (x >> (32 - n))) & M

def _f(j, x, y, z):
    if j < 16: return x ^ y ^ z
    if j < 32: return (x & y) | (~x & z)
    if j < 48: return (x | ~y) ^ z
    if j < 64: return (x & z) | (y & ~z)
    return x ^ (y | ~z)

def ripemd160(msg: bytes) -> bytes:
    h = [0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0]
    ml = len(msg) * 8
    msg = msg + b"\x80" + b"\x00" * ((55 - len(msg)) % 64) + struct.pack("<Q", ml)
    for off in range(0, len(msg), 64):
        X = struct.unpack("<16I", msg[off:off + 64])
        al, bl, cl, dl, el = h
        ar, br, cr, dr, er = h
        for j in range(80):
            t = _rol((al + (_f(j, bl, cl, dl) & M) + X[_R1[j]] + _K1[j // 16]) & M, _S1[j])
            t = (t + el) & M
            al, el, dl, cl, bl = el, dl, _rol(cl, 10), bl, t
            t = _rol((ar + (_f(79 - j, br, cr, dr) & M) + X[_R2[j]] + _K2[j // 16]) & M, _S2[j])
            t = (t + er) & M
            ar, er, dr, cr, br = er, dr, _rol(cr, 10), br, t
        t = (h[1] + cl + dr) & M
        h[1] = (h[2] + dl + er) & M
        h[2] = (h[3] + el + ar) & M
        h[3] = (h[4] + al + br) & M
        h[4] = (h[0] + bl + cr) & M
        h[0] = t
    return struct.pack("<5I", *h)

# --- Base58Check (pure python) -----------------------------------------------

ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"

def sha256(b): return hashlib.sha256(b).digest()
def dsha256(b): return sha256(sha256(b))
def hash160(b): return ripemd160(sha256(b))

def b58encode(raw: bytes) -> str:
    n = int.from_bytes(raw, "big")
    out = ""
    while n > 0:
        n, r = divmod(n, 58)
        out = ALPHABET[r] + out
    pad = len(raw) - len(raw.lstrip(b"\x00"))
    return "1" * pad + out

def b58check(version: int, payload: bytes) -> str:
    body = bytes([version]) + payload
    return b58encode(body + dsha256(body)[:4])

def compact_size(n):
    if n < 0xfd: return bytes([n])
    if n <= 0xffff: return b"\xfd" + struct.pack("<H", n)
    if n <= 0xffffffff: return b"\xfe" + struct.pack("<I", n)
    return b"\xff" + struct.pack("<Q", n)

def tx_serialize(address: str, amount: int, fee: int) -> bytes:
    fields = [address.encode(), struct.pack(">Q", amount), struct.pack(">Q", fee)]
    out = compact_size(len(fields))
    for f in fields:
        out += compact_size(len(f)) + f
    return out

if __name__ == "__main__":
    assert ripemd160(b"").hex() == "9c1185a5c5e9fc54612808977ee8f548b2258d31"
    assert ripemd160(b"abc").hex() == "8eb208f7e05d987a9b044a8e98c6b087f15a0bfc"

    inputs = [
        ("empty", b""),
        ("a", b"a"),
        ("abc", b"abc"),
        ("message digest", b"message digest"),
        ("alphabet", b"abcdefghijklmnopqrstuvwxyz"),
        ("nist448", b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
        ("alnum", b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"),
        ("digits80", b"1234567890" * 8),
        ("fox", b"The quick brown fox jumps over the lazy dog"),
        ("zeros32", b"\x00" * 32),
        ("a55", b"a" * 55),
        ("a56", b"a" * 56),
        ("a64", b"a" * 64),
        ("bytes256", bytes(range(256))),
        ("million_a", b"a" * 1_000_000),
    ]
    print("// sha256")
    for name, data in inputs:
        print(f'("{name}", "{sha256(data).hex()}"),')
    print("// ripemd160")
    for name, data in inputs:
        print(f'("{name}", "{ripemd160(data).hex()}"),')
    print("// hash160")
    for name, data in inputs:
        print(f'("{name}", "{hash160(data).hex()}"),')

    print("// base58check")
    cases = [
        (0x00, b"\x00" * 20),
        (0x00, hash160(b"")),
        (0x00, hash160(b"abc")),
        (0x6f, hash160(b"abc")),
        (0x05, hash160(b"fox")),
        (0x00, b"\x00\x00\x01" + b"\xff" * 17),
        (0x00, b"\x01"),
        (0x80, sha256(b"abc")),
        (0x00, bytes(range(64))),
        (0xff, b"\xff" * 20),
        (0x6f, b"\x00" * 20),
        (0x01, b"\x00"),
    ]
    for v, p in cases:
        print(f'(0x{v:02x}, "{p.hex()}", "{b58check(v, p)}"),')

    print("// derive_address")
    zero = b"\x00" * 32
    print("zero v0", b58check(0x00, hash160(zero)))
    print("zero v6f", b58check(0x6f, hash160(zero)))

    print("// aggregate")
    hs = sorted([sha256(b""), sha256(b"abc")])
    print("agg empty+abc", sha256(b"".join(hs)).hex())
    print("agg single empty", sha256(sha256(b"")).hex())

    print("// merkle")
    a, b, c = sha256(b"a"), sha256(b"b"), sha256(b"c")
    print("ab", dsha256(a + b).hex())
    print("abc", dsha256(dsha256(a + b) + dsha256(c + c)).hex())

    print("// tx")
    addr = b58check(0x00, hash160(zero))
    ser = tx_serialize(addr, 1, 10000)
    print("addr", addr)
    print("ser", ser.hex())
    print("txid", dsha256(ser).hex())

    print("// tsa canonical")
    print("canon digest", sha256(sha256(b"abc").hex().encode() + b"|2015-03-24T00:00:00Z").hex())
