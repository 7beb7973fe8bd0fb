"""AES-128 encryption, bit-sliced across 16 blocks.

Layout: bit p of state byte i of block b lives at column 32*b + 2*i of
plane row p.  Sixteen blocks tile the 512 columns at pitch 32; bytes sit on
even columns so every ShiftRows/MixColumns byte move is an even-column
masked shift, and the odd columns (which the S-box's XNOR gates pollute
with ones) are dropped by the very next masked extract.

The host stages the blocks packed four-ways (staging row r holds the bytes
i = r mod 4, byte i of block b at slot 4b + i//4), which makes slicing
uniform: plane p accumulates, from each staging row r, the bits under the
every-8th-column mask at a constant shift of 2r - p.  Unslicing inverts the
same move.  Round keys arrive pre-expanded and pre-sliced as 88 staged
plane rows, so AddRoundKey is eight XORs whose key-row operand walks with
the round loop.

SubBytes is the Boyar-Peralta 115-gate S-box circuit evaluated once on
plane rows, substituting all 256 state bytes per gate.  Rounds 1..8 are
four stored bodies re-run by a two-iteration loop entry striding the key
rows; rounds 9 and 10 are stored separately (10 has no MixColumns).
"""

from __future__ import annotations

from ..oracles.aes import expand_key
from .builder import AND, LEFT, OR, RIGHT, XOR, Builder, replicate
from .configs import ALG_IDS

ZERO_ROW = 250
ONES_ROW = 251

S_BASE = 0      # 4 packed staging rows (plaintext in, ciphertext out)
KEY_BASE = 4    # 88 staged key-plane rows: round k plane p at 4 + 8k + p
A_BASE = 92     # state planes between rounds
B_BASE = 100    # SubBytes output planes
C_BASE = 108    # ShiftRows output planes
MB_BASE = 116   # m_p: every-8th-column masks, offset p
SR_BASE = 124   # 7 ShiftRows masks: stay + 6 move groups
MC_123, MC_23, MC_01 = 131, 132, 133
SCRATCH = 135   # S-box gate values / MixColumns temporaries
N_BLOCKS = 16

# (mask column offsets within a 32-column block, shift, direction) per
# ShiftRows move group; state row r sits at offsets 2r + 8c, c = 0..3.
_SR_GROUPS = [
    ((10, 18, 26), 8, RIGHT), ((2,), 24, LEFT),
    ((20, 28), 16, RIGHT), ((4, 12), 16, LEFT),
    ((30,), 24, RIGHT), ((6, 14, 22), 8, LEFT),
]
_SR_STAY = (0, 8, 16, 24)

# Boyar-Peralta S-box: 115 gates, '#' marks XNOR (emitted as XOR then
# complement).  Inputs x0..x7 MSB-first, outputs s0..s7 MSB-first.
_SBOX_GATES = (
    "y14=x3^x5 y13=x0^x6 y9=x0^x3 y8=x0^x5 t0=x1^x2 y1=t0^x7 y4=y1^x3 "
    "y12=y13^y14 y2=y1^x0 y5=y1^x6 y3=y5^y8 t1=x4^y12 y15=t1^x5 y20=t1^x1 "
    "y6=y15^x7 y10=y15^t0 y11=y20^y9 y7=x7^y11 y17=y10^y11 y19=y10^y8 "
    "y16=t0^y11 y21=y13^y16 y18=x0^y16 "
    "t2=y12&y15 t3=y3&y6 t4=t3^t2 t5=y4&x7 t6=t5^t2 t7=y13&y16 t8=y5&y1 "
    "t9=t8^t7 t10=y2&y7 t11=t10^t7 t12=y9&y11 t13=y14&y17 t14=t13^t12 "
    "t15=y8&y10 t16=t15^t12 t17=t4^t14 t18=t6^t16 t19=t9^t14 t20=t11^t16 "
    "t21=t17^y20 t22=t18^y19 t23=t19^y21 t24=t20^y18 t25=t21^t22 "
    "t26=t21&t23 t27=t24^t26 t28=t25&t27 t29=t28^t22 t30=t23^t24 "
    "t31=t22^t26 t32=t31&t30 t33=t32^t24 t34=t23^t33 t35=t27^t33 "
    "t36=t24&t35 t37=t36^t34 t38=t27^t36 t39=t29&t38 t40=t25^t39 "
    "t41=t40^t37 t42=t29^t33 t43=t29^t40 t44=t33^t37 t45=t42^t41 "
    "z0=t44&y15 z1=t37&y6 z2=t33&x7 z3=t43&y16 z4=t40&y1 z5=t29&y7 "
    "z6=t42&y11 z7=t45&y17 z8=t41&y10 z9=t44&y12 z10=t37&y3 z11=t33&y4 "
    "z12=t43&y13 z13=t40&y5 z14=t29&y2 z15=t42&y9 z16=t45&y14 z17=t41&y8 "
    "t46=z15^z16 t47=z10^z11 t48=z5^z13 t49=z9^z10 t50=z2^z12 t51=z2^z5 "
    "t52=z7^z8 t53=z0^z3 t54=z6^z7 t55=z16^z17 t56=z12^t48 t57=t50^t53 "
    "t58=z4^t46 t59=z3^t54 t60=t46^t57 t61=z14^t57 t62=t52^t58 t63=t49^t58 "
    "t64=z4^t59 t65=t61^t62 t66=z1^t63 "
    "s0=t59^t63 s6=t56#t62 s7=t48#t60 t67=t64^t65 s3=t53^t66 s4=t51^t66 "
    "s5=t47^t65 s1=t64#s3 s2=t55#t67"
).split()


def _gate_rows() -> dict:
    rows = {}
    for d in range(8):
        rows[f"x{d}"] = A_BASE + (7 - d)
        rows[f"s{d}"] = B_BASE + (7 - d)
    nxt = SCRATCH
    for gate in _SBOX_GATES:
        out = gate.split("=")[0]
        if out not in rows:
            rows[out] = nxt
            nxt += 1
    assert nxt <= 245
    return rows


_GATE_ROWS = _gate_rows()


def _emit_subbytes(b: Builder) -> None:
    rows = _GATE_ROWS
    for gate in _SBOX_GATES:
        out, expr = gate.split("=")
        if "^" in expr:
            a, _, c = expr.partition("^")
            b.op(XOR, rows[a], rows[c], rows[out])
        elif "&" in expr:
            a, _, c = expr.partition("&")
            b.op(AND, rows[a], rows[c], rows[out])
        else:
            a, _, c = expr.partition("#")
            b.op(XOR, rows[a], rows[c], rows[out])
            b.not_(rows[out], rows[out])


def _emit_shiftrows(b: Builder) -> None:
    t = SCRATCH
    for p in range(8):
        b.zero(C_BASE + p)
        b.op(AND, B_BASE + p, SR_BASE, t)
        b.op(OR, C_BASE + p, t, C_BASE + p)
        with b.annotate("rotate", param=32):
            for g, (_, count, direction) in enumerate(_SR_GROUPS):
                b.op_sh(AND, B_BASE + p, SR_BASE + 1 + g, count, direction, t)
                b.op(OR, C_BASE + p, t, C_BASE + p)


def _emit_mixcolumns(b: Builder) -> None:
    R1, T, R2, SIG, D = (SCRATCH + 8 * k for k in range(5))
    X1, X3, X4 = SCRATCH + 40, SCRATCH + 41, SCRATCH + 42

    def rot(src, dest, hi_mask, lo_mask, count):
        """dest[pos r] = src[pos r + count/2], byte positions mod 4."""
        with b.annotate("rotate", param=8):
            b.op_sh(AND, src, hi_mask, count, RIGHT, dest)
            b.op_sh(AND, src, lo_mask, 8 - count, LEFT, SCRATCH + 48)
        b.op(OR, dest, SCRATCH + 48, dest)

    for p in range(8):
        rot(C_BASE + p, R1 + p, MC_123, MB_BASE, 2)
        b.op(XOR, C_BASE + p, R1 + p, T + p)
    for p in range(8):
        rot(T + p, R2 + p, MC_23, MC_01, 4)
        b.op(XOR, T + p, R2 + p, SIG + p)
    # xtime on planes: double is a plane rename except where 0x1B taps in.
    b.op(XOR, T + 0, T + 7, X1)
    b.op(XOR, T + 2, T + 7, X3)
    b.op(XOR, T + 3, T + 7, X4)
    xt = [T + 7, X1, T + 1, X3, X4, T + 4, T + 5, T + 6]
    for p in range(8):
        b.op(XOR, xt[p], SIG + p, D + p)
    for p in range(8):
        b.op(XOR, D + p, C_BASE + p, A_BASE + p)


def _emit_ark(b: Builder, k: int, target: int, stride: bool = False) -> None:
    for p in range(8):
        b.act(target + p)
        b.logic(XOR, KEY_BASE + 8 * k + p, stride=stride)
        b.ro(target + p)


def _emit_slice_in(b: Builder) -> None:
    for p in range(8):
        b.zero(A_BASE + p)
    with b.annotate("rotate", param=8):
        for r in range(4):
            for p in range(8):
                delta = 2 * r - p
                if delta:
                    count, d = (delta, LEFT) if delta > 0 else (-delta, RIGHT)
                    b.op_sh(AND, S_BASE + r, MB_BASE + p, count, d, SCRATCH)
                else:
                    b.op(AND, S_BASE + r, MB_BASE + p, SCRATCH)
                b.op(OR, A_BASE + p, SCRATCH, A_BASE + p)


def _emit_slice_out(b: Builder) -> None:
    for r in range(4):
        b.zero(S_BASE + r)
    with b.annotate("rotate", param=8):
        for r in range(4):
            for p in range(8):
                delta = p - 2 * r
                if delta:
                    count, d = (delta, LEFT) if delta > 0 else (-delta, RIGHT)
                    b.op_sh(AND, C_BASE + p, MB_BASE + 2 * r, count, d, SCRATCH)
                else:
                    b.op(AND, C_BASE + p, MB_BASE + 2 * r, SCRATCH)
                b.op(OR, S_BASE + r, SCRATCH, S_BASE + r)


def gen_aes128():
    """AES-128 ECB encryption of 16 blocks under one pre-staged key."""
    from ..program import KernelProgram

    b = Builder(zero_row=ZERO_ROW, ones_row=ONES_ROW)

    def full_round(k: int, stride: bool) -> None:
        with b.phase("SubBytes"):
            _emit_subbytes(b)
        with b.phase("ShiftRows"):
            _emit_shiftrows(b)
        with b.phase("MixColumns"):
            _emit_mixcolumns(b)
        with b.phase("AddRoundKey"):
            _emit_ark(b, k, A_BASE, stride)

    with b.phase("Setup"):
        b.wd(ONES_ROW, (1 << 512) - 1)
        for p in range(8):
            b.wd(MB_BASE + p, replicate(1 << p, 8))
        b.wd(SR_BASE, replicate(sum(1 << c for c in _SR_STAY), 32))
        for g, (cols, _, _) in enumerate(_SR_GROUPS):
            b.wd(SR_BASE + 1 + g, replicate(sum(1 << c for c in cols), 32))
        b.wd(MC_123, replicate(0x54, 8))
        b.wd(MC_23, replicate(0x50, 8))
        b.wd(MC_01, replicate(0x05, 8))

    with b.phase("BitSlicing"):
        _emit_slice_in(b)
    with b.phase("AddRoundKey"):
        _emit_ark(b, 0, A_BASE)

    with b.loop(iterations=2, row_stride=32):
        for u in range(4):
            full_round(1 + u, stride=True)
    full_round(9, stride=False)

    with b.phase("SubBytes"):
        _emit_subbytes(b)
    with b.phase("ShiftRows"):
        _emit_shiftrows(b)
    with b.phase("AddRoundKey"):
        _emit_ark(b, 10, C_BASE)
    with b.phase("BitSlicing"):
        _emit_slice_out(b)

    result_map = []
    for m in range(16 * N_BLOCKS):
        blk, i = divmod(m, 16)
        r, j = i % 4, i // 4
        col = 32 * blk + 8 * j
        result_map.extend((S_BASE + r, col + beta) for beta in range(8))
    return KernelProgram(
        name="aes128",
        alg_id=ALG_IDS["aes128"],
        config="AES128",
        program=b.build(),
        result_map=result_map,
        staging_rows=92,
        meta={"blocks": N_BLOCKS, "rounds": 10, "key_rows": 88},
    )


def _pack_blocks(blocks: list[bytes]) -> bytes:
    """The four-way staging interleave: row r gets bytes i = r (mod 4)."""
    rows = bytearray(256)
    for blk, data in enumerate(blocks):
        for i, byte in enumerate(data):
            r, j = i % 4, i // 4
            rows[64 * r + 4 * blk + j] = byte
    return bytes(rows)


def slice_key_rows(key: bytes) -> bytes:
    """Pre-expanded, pre-sliced round keys: 88 rows of 64 bytes."""
    out = bytearray()
    for rk in expand_key(key):
        for p in range(8):
            v = sum(((rk[i] >> p) & 1) << (2 * i) for i in range(16))
            out += replicate(v, 32).to_bytes(64, "little")
    return bytes(out)


def pack_aes_inputs(blocks: list[bytes], key: bytes) -> bytes:
    """Staging image: 4 packed block rows then 88 key-plane rows."""
    if len(blocks) != N_BLOCKS or any(len(blk) != 16 for blk in blocks):
        raise ValueError(f"need {N_BLOCKS} blocks of 16 bytes")
    if len(key) != 16:
        raise ValueError("key must be 16 bytes")
    return _pack_blocks(blocks) + slice_key_rows(key)


def aes_result(data: bytes) -> list[bytes]:
    """Split the 256-byte result back into the 16 ciphertext blocks."""
    return [data[16 * blk: 16 * blk + 16] for blk in range(N_BLOCKS)]
