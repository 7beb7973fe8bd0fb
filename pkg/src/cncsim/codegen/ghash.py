"""GHASH over GF(2^128) with deferred reduction.

Polynomials live LSB-first: the coefficient of x^k sits in column k.  A
multiply by x is then a plain left shift, and the bit-serial product is
allowed to grow to 255 columns before it is folded back under x^128 (the
field polynomial is x^128 + x^7 + x^2 + x + 1, so one fold is three shifted
XORs; the high part can reach degree 134, hence two folds).

The standard encoding orders bits MSB-first within each byte, so staged
blocks are "reflected" (per-byte bit reversal) on the way in: eight masked
shifts of +-1/3/5/7 columns, OR-accumulated.  The output tag is un-reflected
for free through the result map.

Per program run: one hash key H and eight data blocks, i.e. one GHASH pass
over 128 bytes.  The per-block work is stored once and driven by a two-deep
loop nest (blocks x 128 multiplier bits)."""

from __future__ import annotations

from .builder import AND, LEFT, OR, RIGHT, XOR, Builder, replicate
from .configs import ALG_IDS

ZERO_ROW = 250
ONES_ROW = 251

_R = {
    "HR": 10, "V": 11, "Z": 12, "Y": 13, "YD": 14, "T": 15, "P": 16,
    "TMP": 17, "F": 18, "ZL": 19,
    "MB": 240,  # 240..247: byte-lane masks, column = i (mod 8)
    "M128": 248,
}

N_BLOCKS = 8
H_ROW = 0
BLOCK_ROW = 1  # blocks occupy rows 1..8


def _emit_reflect(b: Builder, src: int, dest: int, stride: bool = False) -> None:
    """dest = src with the bits of every byte reversed (53 commands)."""
    with b.annotate("rotate", param=8):
        for i in range(8):
            delta = 7 - 2 * i
            count, direction = (delta, LEFT) if delta > 0 else (-delta, RIGHT)
            target = dest if i == 0 else _R["TMP"]
            b.op_sh(AND, src, _R["MB"] + i, count, direction, target, sa=stride)
            if i:
                b.op(OR, dest, _R["TMP"], dest)


def _emit_fold(b: Builder, src: int, dest: int) -> None:
    """dest = src mod (x^128 + x^7 + x^2 + x + 1), one folding pass."""
    b.copy_sh(src, 128, RIGHT, _R["F"])
    b.op(AND, src, _R["M128"], dest)
    b.op(XOR, dest, _R["F"], dest)
    for count in (1, 2, 7):
        b.copy_sh(_R["F"], count, LEFT, _R["TMP"])
        b.op(XOR, dest, _R["TMP"], dest)


def _emit_reduce(b: Builder) -> None:
    """ZL = Z fully reduced (degree <= 254 needs exactly two folds)."""
    _emit_fold(b, _R["Z"], _R["ZL"])
    _emit_fold(b, _R["ZL"], _R["ZL"])


def gen_ghash():
    """GHASH kernel: tag of 8 blocks under hash key H.

    Staging: row 0 = H, rows 1..8 = blocks, each as the first 16 bytes of
    its 64-byte staging transfer (rest zero).  Result: the 16-byte tag.
    """
    from ..program import KernelProgram

    b = Builder(zero_row=ZERO_ROW, ones_row=ONES_ROW)

    with b.phase("Setup"):
        b.wd(ONES_ROW, (1 << 512) - 1)
        for i in range(8):
            b.wd(_R["MB"] + i, replicate(1 << i, 8))
        b.wd(_R["M128"], (1 << 128) - 1)

    with b.phase("ByteArrange"):
        _emit_reflect(b, H_ROW, _R["HR"])
        b.zero(_R["Z"])
        b.zero(_R["V"])

    with b.loop(iterations=N_BLOCKS, row_stride=1):
        with b.phase("ByteAligning"):
            # Carry the previous block's product into this one reduced, fold
            # in the fresh block, and restart the multiplier at H.
            _emit_reduce(b)
            _emit_reflect(b, BLOCK_ROW, _R["Y"], stride=True)
            b.op(XOR, _R["ZL"], _R["Y"], _R["Y"])
            b.copy_sh(_R["Y"], 128, LEFT, _R["TMP"])
            b.op(OR, _R["Y"], _R["TMP"], _R["YD"])
            b.copy(_R["HR"], _R["V"])
            b.zero(_R["Z"])
        with b.phase("GaloisMult"):
            with b.loop(iterations=128, arg_stride=1):
                b.broadcast(_R["YD"], 0, 128, _R["T"], arg_stride=True)
                b.op(AND, _R["V"], _R["T"], _R["P"])
                b.op(XOR, _R["Z"], _R["P"], _R["Z"])
                b.copy_sh(_R["V"], 1, LEFT, _R["V"])

    with b.phase("Finalize"):
        _emit_reduce(b)

    # Tag bit 8k+i is the coefficient of x^(8k+7-i): un-reflect for free.
    result_map = [
        (_R["ZL"], 8 * k + 7 - i) for k in range(16) for i in range(8)
    ]
    return KernelProgram(
        name="ghash",
        alg_id=ALG_IDS["ghash"],
        config="GHASH",
        program=b.build(),
        result_map=result_map,
        staging_rows=1 + N_BLOCKS,
        meta={"blocks": N_BLOCKS, "block_bytes": 16},
    )


def pack_ghash_inputs(h: bytes, blocks: list[bytes]) -> bytes:
    """Staging image: H then the 8 blocks, one per 64-byte row."""
    if len(h) != 16:
        raise ValueError("hash key must be 16 bytes")
    if len(blocks) != N_BLOCKS or any(len(blk) != 16 for blk in blocks):
        raise ValueError(f"need {N_BLOCKS} blocks of 16 bytes")
    out = bytearray()
    for chunk in (h, *blocks):
        out += chunk + b"\x00" * 48
    return bytes(out)
