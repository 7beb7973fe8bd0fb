"""Montgomery multiplication reference."""

from __future__ import annotations


def mont_factor(q: int, width: int) -> int:
    """R mod q for R = 2^width."""
    return (1 << width) % q


def mont_mul(a: int, b: int, q: int, width: int) -> int:
    """a * b * R^-1 mod q, R = 2^width, by definition (bigint inverse)."""
    if q % 2 == 0:
        raise ValueError("modulus must be odd")
    r = 1 << width
    if not (0 <= a < q and 0 <= b < q):
        raise ValueError("operands must be reduced")
    rinv = pow(r, -1, q)
    return a * b * rinv % q


def mont_mul_bitserial(a: int, b: int, q: int, width: int) -> int:
    """The radix-2 interleaved algorithm itself, one bit of b per step.

    Matches the dataflow the in-array kernel implements, so it both checks
    mont_mul and documents the loop invariant the kernel relies on
    (accumulator < 2q throughout, and the final conditional subtract).
    """
    acc = 0
    for i in range(width):
        acc += a * ((b >> i) & 1)
        if acc & 1:
            acc += q
        acc >>= 1
        assert acc < 2 * q
    if acc >= q:
        acc -= q
    return acc
