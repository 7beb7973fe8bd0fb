"""Keccak-f[1600] with lanes as rows.

Each of the 25 state lanes occupies columns 0..63 of its own row, so theta
and chi are pure row logic, rho is a pair of masked latch shifts per lane
(left r, right 64-r, OR), and pi costs nothing at all: the rotated lane is
committed straight to the row its destination index names.  That row
renaming is the layout's implicit shifting; disabling it appends an explicit
copy pass per round that moves every lane from its source-indexed row to the
permuted one.

The host stages one lane per staging row (the low 8 bytes of the 64-byte
row transfer), which is also where results are read back, so the program is
24 permutation rounds and nothing else: 8 unrolled round bodies re-run by a
3-iteration loop entry whose row stride walks the round-constant rows.
"""

from __future__ import annotations

from ..oracles.keccak import ROTATION_OFFSETS, ROUND_CONSTANTS
from .builder import AND, LEFT, OR, RIGHT, XOR, Builder
from .configs import ALG_IDS

ZERO_ROW = 250
ONES_ROW = 251

A_BASE = 0     # 25 staged lane rows, index x + 5y
B_BASE = 30    # 25 permuted-lane rows
BS_BASE = 110  # source-indexed rho output (explicit-movement mode only)
C_BASE = 60
D_BASE = 65
T1, T2 = 70, 71
M64 = 105
RC_BASE = 80   # 24 round-constant rows
N_ROUNDS = 24
UNROLL = 8


def _emit_round(b: Builder, u: int, implicit: bool) -> None:
    A, B, C, D = A_BASE, B_BASE, C_BASE, D_BASE

    for x in range(5):
        b.op(XOR, A + x, A + x + 5, C + x)
        for y in (2, 3, 4):
            b.op(XOR, C + x, A + x + 5 * y, C + x)

    for x in range(5):
        src = C + (x + 1) % 5
        with b.annotate("rotate", param=64):
            b.copy_sh(src, 1, LEFT, T1)
            b.copy_sh(src, 63, RIGHT, T2)
        b.op(AND, T1, M64, T1)
        b.op(OR, T1, T2, T1)
        b.op(XOR, C + (x + 4) % 5, T1, D + x)

    rho_out = B if implicit else BS_BASE
    for x in range(5):
        for y in range(5):
            r = ROTATION_OFFSETS[x + 5 * y]
            dest = (y + 5 * ((2 * x + 3 * y) % 5)) if implicit else (x + 5 * y)
            if r == 0:
                b.op(XOR, A + x + 5 * y, D + x, rho_out + dest)
                continue
            with b.annotate("rotate", param=64):
                b.op_sh(XOR, A + x + 5 * y, D + x, r, LEFT, T1)
                b.op_sh(XOR, A + x + 5 * y, D + x, 64 - r, RIGHT, T2)
            b.op(AND, T1, M64, T1)
            b.op(OR, T1, T2, rho_out + dest)

    if not implicit:
        # Row renaming disabled: move every lane to its permuted row.
        for x in range(5):
            for y in range(5):
                dest = y + 5 * ((2 * x + 3 * y) % 5)
                b.copy(BS_BASE + x + 5 * y, B + dest)

    for y in range(5):
        for x in range(5):
            b.not_(B + (x + 1) % 5 + 5 * y, T1)
            b.op(AND, T1, B + (x + 2) % 5 + 5 * y, T1)
            b.op(XOR, B + x + 5 * y, T1, A + x + 5 * y)
    b.act(A)
    b.logic(XOR, RC_BASE + u, stride=True)
    b.ro(A)


def gen_keccak(implicit_shifting: bool = True):
    """Keccak-f[1600] permutation kernel (24 rounds, in place).

    Staging: 25 rows, lane x+5y in the low 8 bytes of row x+5y.  The same
    rows hold the permuted state afterwards.
    """
    from ..program import KernelProgram

    b = Builder(zero_row=ZERO_ROW, ones_row=ONES_ROW)

    with b.phase("Setup"):
        b.wd(ONES_ROW, (1 << 512) - 1)
        b.wd(M64, (1 << 64) - 1)
        for i, rc in enumerate(ROUND_CONSTANTS):
            b.wd(RC_BASE + i, rc)

    with b.loop(iterations=N_ROUNDS // UNROLL, row_stride=UNROLL):
        for u in range(UNROLL):
            with b.phase("StatePermute"):
                _emit_round(b, u, implicit_shifting)

    result_map = [
        (A_BASE + (m >> 3), 8 * (m & 7) + i) for m in range(200) for i in range(8)
    ]
    return KernelProgram(
        name="keccak",
        alg_id=ALG_IDS["keccak"],
        config="Keccak1600",
        program=b.build(),
        result_map=result_map,
        staging_rows=25,
        meta={"rounds": N_ROUNDS, "implicit_shifting": implicit_shifting},
    )


def pack_keccak_inputs(state: bytes) -> bytes:
    """Staging image: one 8-byte lane per 64-byte staging row."""
    if len(state) != 200:
        raise ValueError("state must be 200 bytes")
    return b"".join(
        state[8 * L: 8 * L + 8] + b"\x00" * 56 for L in range(25)
    )
