"""GHASH reference over GF(2^128) with the GCM bit convention.

GCM numbers bits most-significant-first inside each byte: bit 0 of a block
is the MSB of byte 0 and the field polynomial is
x^128 + x^7 + x^2 + x + 1, which under that convention is the right-shift
reduction with constant E1000...0.
"""

from __future__ import annotations

_R = 0xE1 << 120


def gf128_mul(x: int, y: int) -> int:
    """Product in GF(2^128), operands as MSB-first 128-bit integers."""
    z = 0
    v = y
    for i in range(127, -1, -1):
        if (x >> i) & 1:
            z ^= v
        if v & 1:
            v = (v >> 1) ^ _R
        else:
            v >>= 1
    return z


def ghash(h: bytes, data: bytes) -> bytes:
    """GHASH_H over data, which must be a whole number of 16-byte blocks."""
    if len(h) != 16:
        raise ValueError("H must be 16 bytes")
    if len(data) % 16:
        raise ValueError("data must be full blocks")
    hv = int.from_bytes(h, "big")
    y = 0
    for off in range(0, len(data), 16):
        y = gf128_mul(y ^ int.from_bytes(data[off: off + 16], "big"), hv)
    return y.to_bytes(16, "big")
