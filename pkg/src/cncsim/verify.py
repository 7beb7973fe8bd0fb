"""Randomized end-to-end checking of kernel programs against software oracles.

Each kernel family has a case generator that draws a random input, packs it
into a staging image, and computes the expected result independently of the
array model.  ``verify_kernel`` pushes every trial through the host
instruction path -- the command image is loaded once, then each run re-stages
inputs with RD_D2CNC and fires ALG_CNC -- and compares results byte for byte.
"""
from __future__ import annotations

import hashlib
import random

from .array import COLS
from .codegen import generate
from .codegen.aes import pack_aes_inputs
from .codegen.ghash import pack_ghash_inputs
from .codegen.keccak import pack_keccak_inputs
from .codegen.mmult import pack_mmult_inputs
from .codegen.ntt import pack_ntt_inputs
from .host import (
    BLOCK,
    CncSlice,
    HostInstr,
    HostMemory,
    exec_instr,
    run_parallel,
    stage_job,
)
from .oracles import (
    aes128_encrypt_block,
    ghash,
    intt_full,
    intt_incomplete,
    keccak_f1600,
    mont_mul,
    ntt_full,
    ntt_incomplete,
)
from .oracles.keccak import state_from_bytes, state_to_bytes
from .program import KernelProgram


def _pack_lanes(vals: list[int], width: int) -> bytes:
    acc = 0
    for lane, v in enumerate(vals):
        acc |= v << (lane * width)
    return acc.to_bytes(COLS // 8, "little")


def random_case(kernel: KernelProgram, rng: random.Random) -> tuple[bytes, bytes]:
    """Draw one (staging image, expected result bytes) pair for a kernel."""
    name, meta = kernel.name, kernel.meta
    if name == "aes128":
        key = rng.randbytes(16)
        blocks = [rng.randbytes(16) for _ in range(16)]
        expected = b"".join(aes128_encrypt_block(key, blk) for blk in blocks)
        return pack_aes_inputs(blocks, key), expected
    if name == "keccak":
        state = rng.randbytes(200)
        expected = state_to_bytes(keccak_f1600(state_from_bytes(state)))
        return pack_keccak_inputs(state), expected
    if name == "ghash":
        h = rng.randbytes(16)
        blocks = [rng.randbytes(16) for _ in range(meta["blocks"])]
        return pack_ghash_inputs(h, blocks), ghash(h, b"".join(blocks))
    if name.startswith("mmult"):
        w, q = meta["width"], meta["q"]
        lanes = COLS // w
        a = [rng.randrange(q) for _ in range(lanes)]
        b = [rng.randrange(q) for _ in range(lanes)]
        exp = [mont_mul(x, y, q, w) for x, y in zip(a, b)]
        return pack_mmult_inputs(a, b, w), _pack_lanes(exp, w)
    if "ntt" in name:
        n, q, w = meta["n"], meta["q"], meta["width"]
        incomplete = meta["incomplete"]
        coeffs = [rng.randrange(q) for _ in range(n)]
        if meta["inverse"]:
            oracle = intt_incomplete if incomplete else intt_full
            image = pack_ntt_inputs(coeffs, n, q, w, physical=True,
                                    incomplete=incomplete)
        else:
            oracle = ntt_incomplete if incomplete else ntt_full
            image = pack_ntt_inputs(coeffs, n, q, w)
        expected = oracle(coeffs, q, meta["psi"])
        step = w // 8
        return image, b"".join(v.to_bytes(step, "little") for v in expected)
    raise ValueError(f"no case generator for kernel {name!r}")


def first_mismatch(got: bytes, want: bytes, kernel: KernelProgram) -> str:
    """Locate the first differing bit, named in lane terms when they exist."""
    if len(got) != len(want):
        return f"length mismatch: got {len(got)} bytes, want {len(want)}"
    for i, (g, w) in enumerate(zip(got, want)):
        if g == w:
            continue
        bit = ((g ^ w) & -(g ^ w)).bit_length() - 1
        where = f"byte {i} bit {bit}"
        width = kernel.meta.get("width")
        if width:
            where += f" (lane {(8 * i + bit) // width})"
        return f"{where}: got {g:#04x} want {w:#04x}"
    return "identical"


def verify_kernel(kernel, trials: int, seed: int = 0, log=None,
                  max_failures: int = 8) -> dict:
    """Run random end-to-end trials of one kernel; returns a summary dict.

    `kernel` is a kernel name or an already-built KernelProgram.  The summary
    carries a SHA-256 digest over all result bytes so that two runs with the
    same seed can be compared for exact reproducibility.
    """
    rng = random.Random(seed)
    kernel = generate(kernel) if isinstance(kernel, str) else kernel
    slc, mem = CncSlice(), HostMemory()
    slc.install(kernel)

    image = kernel.program.to_bytes()
    mem.write(0, image)
    input_addr = -(-len(image) // BLOCK) * BLOCK
    result_addr = input_addr + kernel.staging_rows * BLOCK
    exec_instr(slc, mem, HostInstr("ld_cmd", 0, len(image)), log)
    run = stage_job(kernel, input_addr, result_addr)

    digest = hashlib.sha256()
    failures = []
    for t in range(trials):
        data, expected = random_case(kernel, rng)
        mem.write(input_addr, data)
        for instr in run:
            exec_instr(slc, mem, instr, log)
        got = mem.read(result_addr, kernel.result_bytes)
        digest.update(got)
        if got != expected and len(failures) < max_failures:
            failures.append(
                {"trial": t, "detail": first_mismatch(got, expected, kernel)}
            )
    return {
        "kernel": kernel.name,
        "trials": trials,
        "seed": seed,
        "ok": not failures,
        "failures": failures,
        "digest": digest.hexdigest(),
        "movement": slc.counters.as_dict(),
    }


def verify_kernel_sliced(kernel, trials: int, seed: int = 0,
                         n_slices: int = 4, parallel: bool = True,
                         max_failures: int = 8) -> dict:
    """Round-robin the trials over independent slices.

    Every slice loads its own copy of the program into a disjoint arena of
    the shared memory, so concurrent execution cannot interfere.  The result
    digest is taken in trial order and therefore matches ``verify_kernel``
    for the same seed, whether `parallel` is on or off.
    """
    if n_slices < 1:
        raise ValueError("need at least one slice")
    rng = random.Random(seed)
    kernel = generate(kernel) if isinstance(kernel, str) else kernel
    cases = [random_case(kernel, rng) for _ in range(trials)]

    image = kernel.program.to_bytes()
    img_bytes = -(-len(image) // BLOCK) * BLOCK
    res_blocks = -(-kernel.result_bytes // BLOCK)
    per_trial = (kernel.staging_rows + res_blocks) * BLOCK
    arena = img_bytes + -(-trials // n_slices) * per_trial

    mem = HostMemory()
    slices = [CncSlice() for _ in range(n_slices)]
    jobs: list[list[HostInstr]] = []
    homes = [0] * trials
    for s, slc in enumerate(slices):
        slc.install(kernel)
        base = s * arena
        mem.write(base, image)
        instrs = [HostInstr("ld_cmd", base, len(image))]
        for local, t in enumerate(range(s, trials, n_slices)):
            in_addr = base + img_bytes + local * per_trial
            res_addr = in_addr + kernel.staging_rows * BLOCK
            mem.write(in_addr, cases[t][0])
            instrs.extend(stage_job(kernel, in_addr, res_addr))
            homes[t] = res_addr
        jobs.append(instrs)

    if parallel:
        run_parallel(slices, mem, jobs)
    else:
        for slc, instrs in zip(slices, jobs):
            for instr in instrs:
                exec_instr(slc, mem, instr)

    digest = hashlib.sha256()
    failures = []
    for t in range(trials):
        got = mem.read(homes[t], kernel.result_bytes)
        digest.update(got)
        if got != cases[t][1] and len(failures) < max_failures:
            failures.append(
                {"trial": t, "detail": first_mismatch(got, cases[t][1], kernel)}
            )
    movement = {}
    for slc in slices:
        for k, v in slc.counters.as_dict().items():
            movement[k] = movement.get(k, 0) + v
    return {
        "kernel": kernel.name,
        "trials": trials,
        "seed": seed,
        "slices": n_slices,
        "ok": not failures,
        "failures": failures,
        "digest": digest.hexdigest(),
        "movement": movement,
    }
