"""Host instruction interface: flat memory, slices, movement accounting.

Four instructions drive a slice: SW_CNC appends a 32-bit word at the
staging pointer (1 cycle), RD_D2CNC copies an aligned 64-byte block into
the next staging row (2 cycles), LD_CMD fills the command array from
memory, and ALG_CNC runs the loaded program and writes the kernel's result
map back to memory.  SW_CNC and RD_D2CNC share one staging pointer that
only an explicit reset rewinds, so repeated block loads walk successive
rows and interleaved word stores land between them deterministically.

The manifest (loop table, immediates, result map) is the control module's
per-algorithm configuration: slices hold up to 32 installed manifests and
ALG_CNC checks the loaded command image against the manifest of the
requested algorithm id before running.

Slices are independent; run_parallel executes one instruction list per
slice on a thread pool and is bit-identical to running them sequentially.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

from .array import ROWS, ArrayState
from .program import CommandProgram, ExecTrace, KernelProgram

BLOCK = 64
N_ALG_IDS = 32
# Rows the host may stage into; the reserved scratch rows above are the
# kernels' working set and host writes there are refused.
STAGING_ROWS = min(ROWS - 6, 250)
WORD_CYCLES = 1
BLOCK_CYCLES = 2


class HostError(RuntimeError):
    """Base for host-instruction rejections."""


class AlignmentError(HostError):
    pass


class CapacityError(HostError):
    pass


class StagingOverflow(HostError):
    pass


class AlgorithmError(HostError):
    pass


class HostMemory:
    """Byte-addressable flat memory in 64-byte blocks, zero on first read."""

    def __init__(self):
        self._blocks: dict[int, bytearray] = {}

    def _block(self, index: int) -> bytearray:
        blk = self._blocks.get(index)
        if blk is None:
            blk = self._blocks[index] = bytearray(BLOCK)
        return blk

    def read(self, addr: int, size: int) -> bytes:
        out = bytearray()
        while size > 0:
            index, off = divmod(addr, BLOCK)
            take = min(BLOCK - off, size)
            out += self._block(index)[off:off + take]
            addr += take
            size -= take
        return bytes(out)

    def write(self, addr: int, data: bytes) -> None:
        pos = 0
        while pos < len(data):
            index, off = divmod(addr + pos, BLOCK)
            take = min(BLOCK - off, len(data) - pos)
            self._block(index)[off:off + take] = data[pos:pos + take]
            pos += take

    def load_image(self, path: str, addr: int = 0) -> int:
        with open(path, "rb") as f:
            data = f.read()
        self.write(addr, data)
        return len(data)

    def save_image(self, path: str, addr: int, size: int) -> None:
        with open(path, "wb") as f:
            f.write(self.read(addr, size))


@dataclass
class MovementCounters:
    """Bus traffic in and out of one slice.  Monotonic within a session."""

    bytes_data_in: int = 0
    bytes_cmd_in: int = 0
    bytes_result_out: int = 0
    cycles_transfer: int = 0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class CncSlice:
    """One cache slice's array, command store, and staging state."""

    array: ArrayState = field(default_factory=ArrayState)
    commands: list | None = None  # decoded command-array contents
    manifests: dict[int, KernelProgram] = field(default_factory=dict)
    staging: int = 0  # byte offset of the next staged word
    counters: MovementCounters = field(default_factory=MovementCounters)

    def install(self, kernel: KernelProgram) -> None:
        """Configure the control module for one algorithm id."""
        if not 0 <= kernel.alg_id < N_ALG_IDS:
            raise AlgorithmError(f"algorithm id {kernel.alg_id} out of range")
        self.manifests[kernel.alg_id] = kernel

    def reset_staging(self) -> None:
        self.staging = 0


def exec_sw_cnc(slc: CncSlice, mem: HostMemory, addr: int, word32: int) -> int:
    """Append one 32-bit word at the staging pointer.  No alignment rule."""
    if not 0 <= word32 < 1 << 32:
        raise ValueError(f"{word32:#x} is not a 32-bit word")
    ptr = slc.staging
    if ptr + 4 > STAGING_ROWS * BLOCK:
        raise StagingOverflow(f"staging pointer {ptr} beyond input region")
    row, bit = divmod(ptr * 8, 512)
    old = slc.array.read_row(row)
    slc.array.write_row(row, (old & ~(0xFFFFFFFF << bit)) | (word32 << bit))
    slc.staging = ptr + 4
    slc.counters.bytes_data_in += 4
    slc.counters.cycles_transfer += WORD_CYCLES
    return WORD_CYCLES


def exec_rd_d2cnc(slc: CncSlice, mem: HostMemory, addr: int) -> int:
    """Copy one aligned cache block into the next staging row."""
    if addr % BLOCK:
        raise AlignmentError(f"address {addr:#x} is not 64-byte aligned")
    row = (slc.staging + BLOCK - 1) // BLOCK
    if row >= STAGING_ROWS:
        raise StagingOverflow(f"staging row {row} beyond input region")
    slc.array.write_row(row, int.from_bytes(mem.read(addr, BLOCK), "little"))
    slc.staging = (row + 1) * BLOCK
    slc.counters.bytes_data_in += BLOCK
    slc.counters.cycles_transfer += BLOCK_CYCLES
    return BLOCK_CYCLES


def exec_ld_cmd(slc: CncSlice, mem: HostMemory, addr: int, size: int) -> int:
    """Fill the command array from memory.  Contents persist until replaced."""
    data = mem.read(addr, size)
    # capacity check happens inside the decode, in bytes
    slc.commands = CommandProgram.commands_from_bytes(data)
    slc.counters.bytes_cmd_in += size
    # block transfers at the same rate as RD_D2CNC; the table lists this
    # cost only as size-dependent
    cost = BLOCK_CYCLES * ((size + BLOCK - 1) // BLOCK)
    slc.counters.cycles_transfer += cost
    return cost


def exec_alg_cnc(slc: CncSlice, mem: HostMemory, alg: int,
                 result_addr: int, trace_events: bool = False) -> ExecTrace:
    """Run the loaded program as algorithm `alg`; write results to memory."""
    if not 0 <= alg < N_ALG_IDS:
        raise AlgorithmError(f"algorithm id {alg} out of range [0,{N_ALG_IDS})")
    if not slc.commands:
        raise AlgorithmError("command array is empty")
    kernel = slc.manifests.get(alg)
    if kernel is None:
        raise AlgorithmError(f"no manifest installed for algorithm id {alg}")
    if kernel.program.commands != slc.commands:
        raise AlgorithmError(
            f"loaded command image does not match manifest {kernel.name!r}"
        )
    trace = kernel.program.run(slc.array, trace_events=trace_events)
    out = kernel.extract_result(slc.array)
    mem.write(result_addr, out)
    slc.counters.bytes_result_out += len(out)
    return trace


@dataclass
class HostInstr:
    """One trace line.  operand = word for sw_cnc, size for ld_cmd, alg id
    for alg_cnc (whose addr is the result address)."""

    op: str
    addr: int = 0
    operand: int = 0

    _OPS = ("sw_cnc", "rd_d2cnc", "ld_cmd", "alg_cnc", "reset")

    def __post_init__(self):
        if self.op not in self._OPS:
            raise ValueError(f"unknown host op {self.op!r}")

    def to_json(self) -> str:
        return json.dumps({"op": self.op, "addr": self.addr,
                           "operand": self.operand})

    @classmethod
    def from_json(cls, line: str) -> "HostInstr":
        doc = json.loads(line)
        return cls(doc["op"], int(doc.get("addr", 0)),
                   int(doc.get("operand", 0)))


def exec_instr(slc: CncSlice, mem: HostMemory, instr: HostInstr, log=None):
    """Dispatch one instruction; returns its cycle cost or ExecTrace."""
    if log is not None:
        log.write(instr.to_json() + "\n")
    if instr.op == "sw_cnc":
        return exec_sw_cnc(slc, mem, instr.addr, instr.operand)
    if instr.op == "rd_d2cnc":
        return exec_rd_d2cnc(slc, mem, instr.addr)
    if instr.op == "ld_cmd":
        return exec_ld_cmd(slc, mem, instr.addr, instr.operand)
    if instr.op == "alg_cnc":
        return exec_alg_cnc(slc, mem, instr.operand, instr.addr)
    slc.reset_staging()
    return 0


def replay_trace(slc: CncSlice, mem: HostMemory, lines) -> list:
    """Run a JSON-lines instruction trace; malformed lines name themselves."""
    results = []
    for no, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            instr = HostInstr.from_json(line)
        except (ValueError, KeyError) as e:
            raise ValueError(f"trace line {no}: {e}") from e
        results.append(exec_instr(slc, mem, instr))
    return results


def slice_select(addr: int, n_slices: int = 4) -> int:
    """Which slice owns an address: block-interleaved starting at bit 7."""
    if n_slices & (n_slices - 1):
        raise ValueError("slice count must be a power of two")
    return (addr >> 7) & (n_slices - 1)


def run_parallel(slices, mem: HostMemory, jobs) -> list[list]:
    """Execute one instruction list per slice, concurrently.

    Slices share the memory but touch disjoint regions of it; per-slice
    ordering is the sequential order of its own list, so the outcome is
    identical to running the jobs one after another.
    """
    if len(slices) != len(jobs):
        raise ValueError(f"{len(jobs)} jobs for {len(slices)} slices")

    def one(pair):
        slc, instrs = pair
        return [exec_instr(slc, mem, i) for i in instrs]

    if len(slices) <= 1:
        return [one(p) for p in zip(slices, jobs)]
    with ThreadPoolExecutor(max_workers=len(slices)) as pool:
        return list(pool.map(one, zip(slices, jobs)))


def stage_job(kernel: KernelProgram, input_addr: int, result_addr: int,
              load_addr: int | None = None) -> list[HostInstr]:
    """Instruction list for one kernel run over staged input blocks."""
    instrs = []
    if load_addr is not None:
        size = len(kernel.program.to_bytes())
        instrs.append(HostInstr("ld_cmd", load_addr, size))
    instrs.append(HostInstr("reset"))
    for i in range(kernel.staging_rows):
        instrs.append(HostInstr("rd_d2cnc", input_addr + i * BLOCK))
    instrs.append(HostInstr("alg_cnc", result_addr, kernel.alg_id))
    return instrs


def place_job(kernel: KernelProgram, data: bytes, mem: HostMemory,
              base: int) -> tuple[list[HostInstr], int, int]:
    """Lay program image and inputs into memory at `base`.

    Returns (instructions, result_addr, next_free_addr).  The program image
    sits first, inputs follow 64-byte aligned, results after those.
    """
    if len(data) != kernel.staging_rows * BLOCK:
        raise ValueError(
            f"{kernel.name} stages {kernel.staging_rows} blocks, "
            f"got {len(data)} bytes"
        )
    image = kernel.program.to_bytes()
    input_addr = (base + len(image) + BLOCK - 1) // BLOCK * BLOCK
    mem.write(base, image)
    mem.write(input_addr, data)
    result_addr = input_addr + len(data)
    instrs = stage_job(kernel, input_addr, result_addr, load_addr=base)
    return instrs, result_addr, result_addr + kernel.result_bytes


def run_kernel(kernel: KernelProgram, data: bytes,
               slc: CncSlice | None = None,
               mem: HostMemory | None = None) -> bytes:
    """One-shot convenience: place, load, stage, run, read back."""
    slc = slc or CncSlice()
    mem = mem or HostMemory()
    slc.install(kernel)
    instrs, result_addr, _ = place_job(kernel, data, mem, 0)
    for instr in instrs:
        exec_instr(slc, mem, instr)
    return mem.read(result_addr, kernel.result_bytes)
