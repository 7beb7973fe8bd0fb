"""AES-128 reference, built from the field algebra.

The S-box is derived from inversion in GF(2^8) followed by the affine map,
not from a copied table, so it independently checks any other S-box
formulation used elsewhere in the package.
"""

from __future__ import annotations

_POLY = 0x11B  # x^8 + x^4 + x^3 + x + 1


def gf_mul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= _POLY
        b >>= 1
    return r


def _gf_inv(a: int) -> int:
    if a == 0:
        return 0
    # a^(2^8 - 2) by square and multiply
    r, e = 1, 254
    base = a
    while e:
        if e & 1:
            r = gf_mul(r, base)
        base = gf_mul(base, base)
        e >>= 1
    return r


def _affine(x: int) -> int:
    def rotl(v, n):
        return ((v << n) | (v >> (8 - n))) & 0xFF

    return x ^ rotl(x, 1) ^ rotl(x, 2) ^ rotl(x, 3) ^ rotl(x, 4) ^ 0x63


SBOX = tuple(_affine(_gf_inv(x)) for x in range(256))


def expand_key(key: bytes) -> list[bytes]:
    """128-bit key schedule: 11 round keys of 16 bytes."""
    if len(key) != 16:
        raise ValueError("AES-128 key must be 16 bytes")
    words = [key[4 * i: 4 * (i + 1)] for i in range(4)]
    rcon = 1
    for i in range(4, 44):
        t = words[i - 1]
        if i % 4 == 0:
            t = bytes(SBOX[b] for b in t[1:] + t[:1])
            t = bytes([t[0] ^ rcon, t[1], t[2], t[3]])
            rcon = gf_mul(rcon, 2)
        words.append(bytes(a ^ b for a, b in zip(words[i - 4], t)))
    return [b"".join(words[4 * r: 4 * (r + 1)]) for r in range(11)]


def _sub_bytes(s: list[int]) -> list[int]:
    return [SBOX[b] for b in s]


def _shift_rows(s: list[int]) -> list[int]:
    # state index = row + 4*col (FIPS layout over a flat 16-byte block)
    out = [0] * 16
    for r in range(4):
        for c in range(4):
            out[r + 4 * c] = s[r + 4 * ((c + r) % 4)]
    return out


def _mix_columns(s: list[int]) -> list[int]:
    out = [0] * 16
    for c in range(4):
        col = s[4 * c: 4 * c + 4]
        out[4 * c + 0] = gf_mul(col[0], 2) ^ gf_mul(col[1], 3) ^ col[2] ^ col[3]
        out[4 * c + 1] = col[0] ^ gf_mul(col[1], 2) ^ gf_mul(col[2], 3) ^ col[3]
        out[4 * c + 2] = col[0] ^ col[1] ^ gf_mul(col[2], 2) ^ gf_mul(col[3], 3)
        out[4 * c + 3] = gf_mul(col[0], 3) ^ col[1] ^ col[2] ^ gf_mul(col[3], 2)
    return out


def aes128_encrypt_block(key: bytes, block: bytes) -> bytes:
    if len(block) != 16:
        raise ValueError("block must be 16 bytes")
    rks = expand_key(key)
    s = [b ^ k for b, k in zip(block, rks[0])]
    for rnd in range(1, 10):
        s = _mix_columns(_shift_rows(_sub_bytes(s)))
        s = [b ^ k for b, k in zip(s, rks[rnd])]
    s = _shift_rows(_sub_bytes(s))
    return bytes(b ^ k for b, k in zip(s, rks[10]))
