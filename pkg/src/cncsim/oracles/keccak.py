"""Keccak-f[1600] reference permutation.

Round constants come from the degree-8 LFSR and the rotation offsets from
the (t+1)(t+2)/2 coordinate walk, i.e. both are generated, not transcribed.
State is 25 lanes of 64 bits, lane (x, y) at index x + 5*y.
"""

from __future__ import annotations

_M64 = (1 << 64) - 1


def _rc_bit(t: int) -> int:
    # x^8 + x^6 + x^5 + x^4 + 1 over GF(2), seeded with 1
    r = 1
    for _ in range(t % 255):
        r <<= 1
        if r & 0x100:
            r ^= 0x171
    return r & 1


def _round_constants() -> list[int]:
    rcs = []
    for ir in range(24):
        rc = 0
        for j in range(7):
            rc |= _rc_bit(j + 7 * ir) << ((1 << j) - 1)
        rcs.append(rc)
    return rcs


def _rotation_offsets() -> list[int]:
    offs = [0] * 25
    x, y = 1, 0
    for t in range(24):
        offs[x + 5 * y] = ((t + 1) * (t + 2) // 2) % 64
        x, y = y, (2 * x + 3 * y) % 5
    return offs


ROUND_CONSTANTS = _round_constants()
ROTATION_OFFSETS = _rotation_offsets()


def _rotl64(v: int, n: int) -> int:
    n %= 64
    if n == 0:
        return v
    return ((v << n) | (v >> (64 - n))) & _M64


def keccak_f1600(lanes: list[int], rounds: int = 24) -> list[int]:
    if len(lanes) != 25:
        raise ValueError("state must be 25 lanes")
    a = [v & _M64 for v in lanes]
    for ir in range(rounds):
        # theta
        c = [a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20] for x in range(5)]
        d = [c[(x - 1) % 5] ^ _rotl64(c[(x + 1) % 5], 1) for x in range(5)]
        a = [a[i] ^ d[i % 5] for i in range(25)]
        # rho + pi
        b = [0] * 25
        for x in range(5):
            for y in range(5):
                b[y + 5 * ((2 * x + 3 * y) % 5)] = _rotl64(
                    a[x + 5 * y], ROTATION_OFFSETS[x + 5 * y]
                )
        # chi
        a = [
            b[x + 5 * y] ^ (~b[(x + 1) % 5 + 5 * y] & b[(x + 2) % 5 + 5 * y] & _M64)
            for y in range(5)
            for x in range(5)
        ]
        # iota
        a[0] ^= ROUND_CONSTANTS[ir]
    return a


def state_from_bytes(data: bytes) -> list[int]:
    if len(data) != 200:
        raise ValueError("state image must be 200 bytes")
    return [int.from_bytes(data[8 * i: 8 * i + 8], "little") for i in range(25)]


def state_to_bytes(lanes: list[int]) -> bytes:
    return b"".join(v.to_bytes(8, "little") for v in lanes)


def sha3_256(msg: bytes) -> bytes:
    """Minimal SHA3-256 sponge over keccak_f1600, for cross-checking."""
    rate = 136
    padded = bytearray(msg)
    padded.append(0x06)
    while len(padded) % rate:
        padded.append(0)
    padded[-1] |= 0x80
    lanes = [0] * 25
    for off in range(0, len(padded), rate):
        block = padded[off: off + rate]
        for i in range(rate // 8):
            lanes[i] ^= int.from_bytes(block[8 * i: 8 * i + 8], "little")
        lanes = keccak_f1600(lanes)
    return state_to_bytes(lanes)[:32]
