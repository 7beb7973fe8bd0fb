"""Bit-serial Montgomery multiplication over lane-partitioned rows.

Every lane (tile) of width w holds an independent operand, so one program
computes 512/w modular products at once.  The radix-2 Montgomery scan keeps
the accumulator in carry-save form (S, C) and folds one multiplier bit per
iteration:

    u    = (S + C + a*b_i) mod 2          (three-way bit-0 parity)
    acc' = (acc + a*b_i + u*q) / 2        (two carry-save adders, halve)

The halving shift and the carry shift cancel in the second CSA, so the
per-iteration body is 49 commands flat.  After w iterations acc < 2q; a
lane-masked Kogge-Stone prefix adder resolves S + C and a conditional
subtract (add 2^(w-1) - q, select on the sign bit) brings the result under
q.  q must stay below 2^(w-2) so every intermediate fits its lane.

The prefix adder, modular add and modular subtract emitters live here; the
NTT generator reuses them (with the inner scan wrapped in a loop-table entry
instead of unrolled) for its butterflies.
"""

from __future__ import annotations

from ..program import ProgramError
from .builder import AND, LEFT, OR, RIGHT, XOR, Builder, replicate
from .configs import ALG_IDS

ZERO_ROW = 250
ONES_ROW = 251

# Scratch and constant rows shared by the arithmetic emitters.  Kernels that
# embed them (the NTT) keep their data clear of this range.
MM_ROWS = {
    "S": 2, "C": 3, "TB": 4, "P": 5, "SP": 6, "TU": 7, "P2": 8,
    "C1": 9, "S1": 10, "C2": 11, "CAR": 12, "CP": 13,
    "TP": 14, "C1P": 15, "C2P": 16,
    "G": 17, "P0": 18, "PP": 19, "GS": 20, "PS": 21, "T1": 22,
    "X": 23, "Y": 24, "T": 25, "TN": 26, "YM": 27, "R": 28, "NT": 29,
    "Q": 240, "KC": 241, "MW1": 242, "BIT0": 243,
    "MI1": 244, "MI2": 245, "MI4": 246, "MI8": 247, "MI16": 248,
}


def default_modulus(width: int) -> int:
    return {16: 3329, 32: 8380417}[width]


def check_modulus(q: int, width: int) -> None:
    if q % 2 == 0 or q < 3:
        raise ProgramError(f"modulus {q} must be odd and > 2")
    if q >= 1 << (width - 2):
        raise ProgramError(
            f"modulus {q} needs two headroom bits in a {width}-bit lane"
        )


def emit_consts(b: Builder, rr: dict, w: int, q: int,
                bit0: bool = False) -> None:
    """WRITE_DATA the lane-replicated constants the emitters rely on."""
    b.wd(ONES_ROW, (1 << 512) - 1)
    b.wd(rr["Q"], replicate(q, w))
    b.wd(rr["KC"], replicate((1 << (w - 1)) - q, w))
    b.wd(rr["MW1"], replicate((1 << (w - 1)) - 1, w))
    if bit0:
        b.wd(rr["BIT0"], replicate(1, w))
    d = 1
    while d < w:
        b.wd(rr[f"MI{d}"], replicate((1 << (w - d)) - 1, w))
        d *= 2


def emit_prefix_add(b: Builder, rr: dict, w: int, x: int, y: int, out: int,
                    cin: bool = False) -> None:
    """out = x + y per lane (plus one if cin), Kogge-Stone, carry-annotated.

    Interior masks keep the generate/propagate doubling shifts from leaking
    across lane boundaries.  9 + 17*log2(w) + 7 commands (+9 with cin).
    rr["ripple"] switches to a bit-serial carry chain: w-1 distance-1 steps
    with the propagate row held fixed, for the adder-less cost comparison.
    """
    G, P0, PP, GS, PS, T1 = (rr[k] for k in ("G", "P0", "PP", "GS", "PS", "T1"))
    ripple = bool(rr.get("ripple"))
    with b.annotate("carry", param=w):
        b.op(AND, x, y, G)
        b.op(XOR, x, y, P0)
        if cin:
            b.op(AND, P0, rr["BIT0"], T1)
            b.op(OR, G, T1, G)
        b.copy(P0, PP)
        for d in ([1] * (w - 1) if ripple else _doublings(w)):
            b.op_sh(AND, G, rr[f"MI{d}"], d, LEFT, GS)
            b.op(AND, PP, GS, T1)
            b.op(OR, G, T1, G)
            if not ripple:
                b.op_sh(AND, PP, rr[f"MI{d}"], d, LEFT, PS)
                b.op(AND, PP, PS, PP)
        b.op_sh(AND, G, rr["MI1"], 1, LEFT, GS)
        if cin:
            b.op(XOR, P0, GS, T1)
            b.op(XOR, T1, rr["BIT0"], out)
        else:
            b.op(XOR, P0, GS, out)


def _doublings(w: int) -> list[int]:
    out, d = [], 1
    while d < w:
        out.append(d)
        d *= 2
    return out


def emit_csub(b: Builder, rr: dict, w: int, x: int, out: int) -> None:
    """out = x mod q for x < 2^(w-1): add 2^(w-1) - q, select on the sign."""
    emit_prefix_add(b, rr, w, x, rr["KC"], rr["Y"])
    b.broadcast(rr["Y"], w - 1, w, rr["T"])
    b.op(AND, rr["Y"], rr["MW1"], rr["YM"])
    b.op(AND, rr["YM"], rr["T"], rr["YM"])
    b.not_(rr["T"], rr["TN"])
    b.op(AND, x, rr["TN"], rr["T1"])
    b.op(OR, rr["YM"], rr["T1"], out)


def emit_modadd(b: Builder, rr: dict, w: int, x: int, y: int, out: int) -> None:
    """out = x + y mod q per lane (both inputs reduced)."""
    emit_prefix_add(b, rr, w, x, y, rr["X"])
    emit_csub(b, rr, w, rr["X"], out)


def emit_modsub(b: Builder, rr: dict, w: int, x: int, y: int, out: int) -> None:
    """out = x - y mod q per lane: s = x + ~y + 1 in w-1 bits, fix up by q."""
    b.op(XOR, y, rr["MW1"], rr["NT"])
    emit_prefix_add(b, rr, w, x, rr["NT"], rr["X"], cin=True)
    emit_prefix_add(b, rr, w, rr["X"], rr["Q"], rr["Y"])
    b.broadcast(rr["X"], w - 1, w, rr["T"])
    b.op(AND, rr["X"], rr["MW1"], rr["YM"])
    b.op(AND, rr["YM"], rr["T"], rr["YM"])
    b.not_(rr["T"], rr["TN"])
    b.op(AND, rr["Y"], rr["MW1"], rr["T1"])
    b.op(AND, rr["T1"], rr["TN"], rr["T1"])
    b.op(OR, rr["YM"], rr["T1"], out)


def emit_mont_step(b: Builder, rr: dict, w: int, a: int, bvec: int,
                   bit: int | None) -> None:
    """One Montgomery iteration: fold multiplier bit `bit` into (S, C).

    bit=None emits the loop-table form: the multiplier-bit extract reads
    column 0 plus the enclosing entry's argument offset.
    """
    S, C = rr["S"], rr["C"]
    if bit is None:
        b.broadcast(bvec, 0, w, rr["TB"], arg_stride=True)
    else:
        b.broadcast(bvec, bit, w, rr["TB"])
    b.op(AND, a, rr["TB"], rr["P"])
    b.op(XOR, S, rr["P"], rr["SP"])
    b.act(rr["SP"])
    b.logic(XOR, C)
    b.ext(0, w)
    b.ro(rr["TU"])
    b.op(AND, rr["Q"], rr["TU"], rr["P2"])
    # CSA 1: (S, C) + a*b_i.  S*P and (S^P)*C never share a set bit, so the
    # carry rows OR together; the carry shift stays in lane because S < 2q.
    b.op(AND, S, rr["P"], rr["C1"])
    b.op(XOR, rr["SP"], C, rr["S1"])
    b.op(AND, rr["SP"], C, rr["C2"])
    b.op(OR, rr["C1"], rr["C2"], rr["CAR"])
    b.copy_sh(rr["CAR"], 1, LEFT, rr["CP"])
    # CSA 2 plus the halving: the sum bit 0 is provably zero, so shifting
    # the sum right once and skipping the carry's left shift both land.
    b.op(XOR, rr["S1"], rr["P2"], rr["TP"])
    b.op(AND, rr["S1"], rr["P2"], rr["C1P"])
    b.op(AND, rr["TP"], rr["CP"], rr["C2P"])
    b.op(OR, rr["C1P"], rr["C2P"], C)
    b.op_sh(XOR, rr["TP"], rr["CP"], 1, RIGHT, S)


def emit_mont(b: Builder, rr: dict, w: int, a: int, bvec: int, out: int,
              unroll: bool) -> None:
    """out = a * bvec * 2^-w mod q per lane (Montgomery product, reduced)."""
    b.zero(rr["S"])
    b.zero(rr["C"])
    if unroll:
        for i in range(w):
            emit_mont_step(b, rr, w, a, bvec, i)
    else:
        with b.loop(iterations=w, arg_stride=1):
            emit_mont_step(b, rr, w, a, bvec, None)
    emit_prefix_add(b, rr, w, rr["S"], rr["C"], rr["X"])
    emit_csub(b, rr, w, rr["X"], out)


def gen_mmult(width: int, q: int | None = None, bit_parallel: bool = True):
    """Standalone lane-parallel Montgomery multiply kernel.

    Staging row 0 holds the multiplicands, row 1 the multipliers, one
    operand per lane.  The result row is read back whole: 512/width reduced
    products of a*b*2^-width mod q.  bit_parallel=False swaps the prefix
    adders for ripple chains.
    """
    from ..program import KernelProgram

    if q is None:
        q = default_modulus(width)
    check_modulus(q, width)
    rr = dict(MM_ROWS)
    if not bit_parallel:
        rr["ripple"] = True
    a_row, b_row = 0, 1

    b = Builder(zero_row=ZERO_ROW, ones_row=ONES_ROW)
    with b.phase("Setup"):
        emit_consts(b, rr, width, q)
        b.zero(rr["S"])
        b.zero(rr["C"])
    with b.phase("ProductScan"):
        for i in range(width):
            emit_mont_step(b, rr, width, a_row, b_row, i)
    with b.phase("FinalAdd"):
        emit_prefix_add(b, rr, width, rr["S"], rr["C"], rr["X"])
    with b.phase("Reduce"):
        emit_csub(b, rr, width, rr["X"], rr["R"])

    name = f"mmult{width}"
    return KernelProgram(
        name=name,
        alg_id=ALG_IDS[name],
        config="NTT128" if width == 16 else "Dilithium2-poly",
        program=b.build(),
        result_map=[(rr["R"], c) for c in range(512)],
        staging_rows=2,
        meta={"width": width, "q": q, "lanes": 512 // width,
              "bit_parallel": bit_parallel},
    )


def pack_mmult_inputs(a_vals, b_vals, width: int) -> bytes:
    """Two staging rows (128 bytes): multiplicands then multipliers."""
    lanes = 512 // width
    if len(a_vals) != lanes or len(b_vals) != lanes:
        raise ValueError(f"need exactly {lanes} operands per row")
    rows = []
    for vals in (a_vals, b_vals):
        acc = 0
        for lane, v in enumerate(vals):
            if v >> width:
                raise ValueError(f"operand {v} does not fit lane")
            acc |= v << (lane * width)
        rows.append(acc.to_bytes(64, "little"))
    return b"".join(rows)


def mmult_results(data: bytes, width: int) -> list[int]:
    """Split the 64-byte result row back into per-lane values."""
    acc = int.from_bytes(data, "little")
    mask = (1 << width) - 1
    return [(acc >> (lane * width)) & mask for lane in range(512 // width)]
