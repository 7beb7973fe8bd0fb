"""Number-theoretic transform command generators.

Polynomials live one coefficient per lane, n/lanes staging rows, natural
order on the way in.  Stages walk len = n/2 down to the smallest block:
while a block half spans whole rows the butterfly is three lane-parallel
modular ops under a two-deep loop nest; once block halves drop below a row
the partner coefficients sit in neighbouring lanes and each stage masks the
odd half out, shifts it onto the even half, and recombines after the
butterfly.  Twiddles are Montgomery-form per-lane constants: row stages
read them from striding rows preloaded in Setup, lane stages rewrite one
bank of rows between stages.

The forward transform leaves coefficient j at slot bitrev(j) and the result
map undoes that on readback.  The inverse kernel expects its input in that
same physical layout (pack_ntt_inputs(physical=True)), runs the
Gentleman-Sande ladder with the same twiddle table walked backwards, and
ends with a lane-parallel multiply by 1/n to emerge in natural order.
"""

from ..program import KernelProgram, ProgramError
from ..oracles.ntt import find_root
from .builder import Builder, replicate, AND, OR, LEFT, RIGHT
from .configs import ALG_IDS
from .mmult import (MM_ROWS, ZERO_ROW, ONES_ROW, check_modulus, emit_consts,
                    emit_mont, emit_modadd, emit_modsub)
from .builder import REL

# Staging lands at row 0, so the polynomial owns rows 0..n/lanes-1 and the
# shared modular-arithmetic scratch moves up out of its way.
DATA_BASE = 0
NTT_RR = {k: (v + 28 if v < 100 else v) for k, v in MM_ROWS.items()}

T_ROW = 60      # Montgomery product
H_ROW = 61      # partner half, shifted into lane position
S_ROW = 62      # butterfly sum
D_ROW = 63      # butterfly difference
ML_ROW = 64     # even-half lane mask, rewritten per lane stage
MH_ROW = 65     # odd-half lane mask
F_ROW = 66      # 1/n scale constant (inverse only)
W_ROW_BASE = 120   # row-stage twiddles, one region per stage
W_LANE_BASE = 200  # lane-stage twiddles, rewritten per stage

KYBER_Q, KYBER_ZETA = 3329, 17
DILITHIUM_Q, DILITHIUM_PSI = 8380417, 1753


def _bitrev(k: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (k & 1)
        k >>= 1
    return out


def _twiddle_table(n: int, q: int, root: int, incomplete: bool) -> list[int]:
    """T[k] = root^bitrev(k); the CT ladder consumes k = 1.. ascending and
    the GS ladder the same table descending."""
    size = n // 2 if incomplete else n
    bits = size.bit_length() - 1
    return [pow(root, _bitrev(k, bits), q) for k in range(size)]


def _zeta_index(n: int, length: int, block: int, inverse: bool) -> int:
    if inverse:
        return n // length - 1 - block
    return n // (2 * length) + block


def ntt_slot_map(n: int, incomplete: bool = False) -> list[int]:
    """Physical slot holding logical coefficient j after the forward pass."""
    if incomplete:
        bits = (n // 2).bit_length() - 1
        return [2 * _bitrev(j >> 1, bits) + (j & 1) for j in range(n)]
    bits = n.bit_length() - 1
    return [_bitrev(j, bits) for j in range(n)]


def _gen(n: int, q: int, width: int, root: int, incomplete: bool,
         inverse: bool, bit_parallel: bool, name: str, config: str):
    check_modulus(q, width)
    lanes = 512 // width
    if n & (n - 1) or n < 8:
        raise ProgramError(f"transform size {n} must be a power of two >= 8")
    n_rows = max(1, n // lanes)
    if n_rows > 16:
        raise ProgramError(f"{n} x {width}-bit coefficients exceed 16 rows")

    rr = dict(NTT_RR)
    if not bit_parallel:
        rr["ripple"] = True
    rbase = 1 << width
    table = _twiddle_table(n, q, root, incomplete)

    def wmont(k: int) -> int:
        return table[k] * rbase % q

    min_len = 2 if incomplete else 1
    lens = []
    length = n // 2
    while length >= min_len:
        lens.append(length)
        length //= 2
    if inverse:
        lens.reverse()

    a_lo = REL | DATA_BASE

    b = Builder(zero_row=ZERO_ROW, ones_row=ONES_ROW)
    with b.phase("Setup"):
        emit_consts(b, rr, width, q, bit0=True)
        w_region = W_ROW_BASE
        row_w = {}
        for length in lens:
            if length < lanes:
                continue
            d, nb = length // lanes, n // (2 * length)
            row_w[length] = w_region
            for bl in range(nb):
                z = wmont(_zeta_index(n, length, bl, inverse))
                for t in range(d):
                    b.wd(w_region + 2 * d * bl + t, replicate(z, width))
            w_region += n_rows
            assert w_region <= W_LANE_BASE
        if inverse:
            scale = pow(n // 2 if incomplete else n, -1, q)
            b.wd(F_ROW, replicate(scale * rbase % q, width))

    for length in lens:
        with b.phase(f"Stage{length}"):
            if length >= lanes:
                _emit_row_stage(b, rr, width, n, length, row_w[length],
                                inverse)
            else:
                _emit_lane_stage(b, rr, width, q, n, length, n_rows,
                                 wmont, inverse)
    if inverse:
        with b.phase("Scale"):
            with b.loop(iterations=n_rows, row_stride=1):
                emit_mont(b, rr, width, F_ROW, a_lo, a_lo, unroll=False)

    slots = (list(range(n)) if inverse else ntt_slot_map(n, incomplete))
    result_map = [(s // lanes, (s % lanes) * width + beta)
                  for s in slots for beta in range(width)]
    return KernelProgram(
        name=name,
        alg_id=ALG_IDS.get(name, ALG_IDS["ntt256"]),
        config=config,
        program=b.build(),
        result_map=result_map,
        staging_rows=n_rows,
        meta={"n": n, "q": q, "width": width, "psi": root, "lanes": lanes,
              "incomplete": incomplete, "inverse": inverse,
              "bit_parallel": bit_parallel},
    )


def _emit_row_stage(b: Builder, rr: dict, w: int, n: int, length: int,
                    w_base: int, inverse: bool) -> None:
    """Butterflies whose halves span whole rows: pair (row, row + d).

    One stored loop body walks the d pairs of a block; the remaining blocks
    replay it as sibling loop entries rebased to their first row.
    """
    lanes = 512 // w
    d, nb = length // lanes, n // (2 * length)
    a1, a2, wt = REL | DATA_BASE, REL | (DATA_BASE + d), REL | w_base
    with b.loop(iterations=d, row_stride=1) as pairs:
        if inverse:
            emit_modadd(b, rr, w, a1, a2, S_ROW)
            emit_modsub(b, rr, w, a2, a1, D_ROW)
            emit_mont(b, rr, w, wt, D_ROW, a2, unroll=False)
            b.copy(S_ROW, a1)
        else:
            emit_mont(b, rr, w, wt, a2, T_ROW, unroll=False)
            emit_modsub(b, rr, w, a1, T_ROW, a2)
            emit_modadd(b, rr, w, a1, T_ROW, a1)
    for bl in range(1, nb):
        b.loop_again(pairs, iterations=d, row_stride=1, row_base=2 * d * bl)


def _emit_lane_stage(b: Builder, rr: dict, w: int, q: int, n: int,
                     length: int, n_rows: int, wmont, inverse: bool) -> None:
    """Butterflies between lanes of one row: blocks of 2*length lanes.

    The odd half is masked out and shifted onto the even half, the butterfly
    runs lane-parallel in the low positions, and the two results interleave
    back.  Twiddle lanes sit where their multiplicand lands: the even half
    for the inverse ladder, the odd half (pre-shift) for the forward one.
    """
    lanes = 512 // w
    gw = length * w
    lane_ones = (1 << w) - 1
    ml = mh = 0
    for lane in range(lanes):
        if (lane % (2 * length)) < length:
            ml |= lane_ones << (lane * w)
        else:
            mh |= lane_ones << (lane * w)
    b.wd(ML_ROW, ml)
    b.wd(MH_ROW, mh)
    for r in range(n_rows):
        acc = 0
        for lane in range(lanes):
            s = r * lanes + lane
            odd = (lane % (2 * length)) >= length
            if s >= n or odd == inverse:
                continue
            k = _zeta_index(n, length, s // (2 * length), inverse)
            acc |= wmont(k) << (lane * w)
        b.wd(W_LANE_BASE + r, acc)

    a, wt = REL | DATA_BASE, REL | W_LANE_BASE
    with b.loop(iterations=n_rows, row_stride=1):
        if inverse:
            with b.annotate("rotate", param=gw):
                b.op_sh(AND, a, MH_ROW, gw, RIGHT, H_ROW)
            emit_modadd(b, rr, w, a, H_ROW, S_ROW)
            emit_modsub(b, rr, w, H_ROW, a, D_ROW)
            emit_mont(b, rr, w, wt, D_ROW, T_ROW, unroll=False)
        else:
            emit_mont(b, rr, w, wt, a, T_ROW, unroll=False)
            with b.annotate("rotate", param=gw):
                b.op_sh(AND, T_ROW, MH_ROW, gw, RIGHT, H_ROW)
            emit_modadd(b, rr, w, a, H_ROW, S_ROW)
            emit_modsub(b, rr, w, a, H_ROW, T_ROW)
        b.op(AND, S_ROW, ML_ROW, S_ROW)
        with b.annotate("rotate", param=gw):
            b.op_sh(AND, T_ROW, ML_ROW, gw, LEFT, T_ROW)
        b.op(OR, S_ROW, T_ROW, a)


def gen_ntt(n: int, q: int, width: int, psi: int | None = None,
            inverse: bool = False, bit_parallel: bool = True):
    """Full negacyclic NTT over Z_q[x]/(x^n + 1), one coefficient per lane."""
    if psi is None:
        psi = find_root(q, 2 * n)
    name = f"intt{n}" if inverse else f"ntt{n}"
    config = "NTT256" if n >= 256 else "NTT128"
    return _gen(n, q, width, psi, incomplete=False, inverse=inverse,
                bit_parallel=bit_parallel, name=name, config=config)


def gen_kyber_ntt(inverse: bool = False, bit_parallel: bool = True):
    """Kyber's seven-level transform: 128 quadratic residue pairs."""
    name = "kyber_intt" if inverse else "kyber_ntt"
    return _gen(256, KYBER_Q, 16, KYBER_ZETA, incomplete=True,
                inverse=inverse, bit_parallel=bit_parallel, name=name,
                config="Kyber512-poly")


def gen_dilithium_ntt(inverse: bool = False, bit_parallel: bool = True):
    """Dilithium's full 256-point transform in 32-bit lanes."""
    name = "dilithium_intt" if inverse else "dilithium_ntt"
    return _gen(256, DILITHIUM_Q, 32, DILITHIUM_PSI, incomplete=False,
                inverse=inverse, bit_parallel=bit_parallel, name=name,
                config="Dilithium2-poly")


def pack_ntt_inputs(vals, n: int, q: int, width: int,
                    physical: bool = False, incomplete: bool = False) -> bytes:
    """Staging rows for a coefficient vector.

    Natural order for the forward transform; physical=True lays logical
    coefficient j at its forward-output slot, the order the inverse kernel
    consumes.  Unused lanes stay zero so every lane reads as a reduced value.
    """
    if len(vals) != n:
        raise ValueError(f"need exactly {n} coefficients")
    lanes = 512 // width
    n_rows = max(1, n // lanes)
    slots = ntt_slot_map(n, incomplete) if physical else range(n)
    acc = 0
    for v, s in zip(vals, slots):
        if not 0 <= v < q:
            raise ValueError(f"coefficient {v} not reduced mod {q}")
        acc |= v << (s * width)
    return acc.to_bytes(64 * n_rows, "little")


def ntt_results(data: bytes, n: int, width: int) -> list[int]:
    step = width // 8
    return [int.from_bytes(data[i * step:(i + 1) * step], "little")
            for i in range(n)]
