"""Command programs: loop table, immediate pool, execution engine.

A command program is the unit the host loads into a controller: a flat list
of 16-bit commands plus side-table state owned by the controller FSM:

  * loop table   -- (start, end, iterations, row_stride, arg_stride, row_base)
                    entries.  Commands whose operand is marked loop-relative
                    get the sum of the enclosing entries' offsets added at
                    issue time.  Entries with identical ranges re-run the
                    same command window sequentially (each with its own
                    base); otherwise ranges must nest or be disjoint.
  * immediates   -- one 512-bit constant per WRITE_DATA command, in program
                    order.  Re-executions of a command rewrite the same value.
  * phase marks  -- named command ranges, for latency reporting.
  * annotations  -- named command ranges a hardware variant may retime
                    (rotate chains, carry chains); they never change results.

The expansion of the loop table over the command list (the schedule) is a
static property of a program, so execution counts and cycle totals are
computed once and cached.  Running a program is then a single pass of the
resolved schedule against an array.
"""

from __future__ import annotations

import json
from array import array as _array
from dataclasses import dataclass, field

from .array import ROWS, ArrayState
from .isa import Category, Command, DecodeError, decode, encode

MAX_PROGRAM_BYTES = 16384  # controller command store size
MAX_COMMANDS = MAX_PROGRAM_BYTES // 2

# Reporting buckets for cycle accounting.
BUCKETS = ("shift", "logic", "ext_bit", "read_write")
_BUCKET_OF = {
    Category.SHIFT: "shift",
    Category.ACTIVATE: "logic",
    Category.LOGIC: "logic",
    Category.EXT_BIT: "ext_bit",
    Category.WRITE_DATA: "read_write",
    Category.READ_OUT: "read_write",
}

# Broadcast masks for EXT_BIT: one selector bit per tile of width m.
_COLMASK0 = {m: sum(1 << (t * m) for t in range(512 // m)) for m in (8, 16, 32, 128)}
_M512 = (1 << 512) - 1


class ProgramError(ValueError):
    pass


class ExecutionError(RuntimeError):
    """Controller FSM violation (e.g. LOGIC with nothing staged)."""


@dataclass(frozen=True)
class Loop:
    start: int
    end: int
    iterations: int
    row_stride: int = 0
    arg_stride: int = 0
    row_base: int = 0

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ProgramError(f"bad loop range [{self.start}, {self.end}]")
        if self.iterations < 1:
            raise ProgramError("loop iterations must be >= 1")
        if min(self.row_stride, self.arg_stride, self.row_base) < 0:
            raise ProgramError("loop strides and base must be non-negative")


@dataclass(frozen=True)
class PhaseMark:
    name: str
    start: int
    end: int


@dataclass(frozen=True)
class Annotation:
    kind: str  # "rotate" or "carry"
    start: int
    end: int
    param: int = 0

    def __post_init__(self):
        if self.kind not in ("rotate", "carry"):
            raise ProgramError(f"unknown annotation kind {self.kind!r}")


@dataclass
class ExecTrace:
    """Result of running a program: cycle accounting plus the final array."""

    cycles_total: int
    per_category: dict
    executed_commands: int
    array: ArrayState
    program: "CommandProgram"
    events: list | None = None


def _relation(a_start, a_end, b_start, b_end):
    """'disjoint' | 'equal' | 'a_in_b' | 'b_in_a' | 'overlap'."""
    if a_end < b_start or b_end < a_start:
        return "disjoint"
    if a_start == b_start and a_end == b_end:
        return "equal"
    if b_start <= a_start and a_end <= b_end:
        return "a_in_b"
    if a_start <= b_start and b_end <= a_end:
        return "b_in_a"
    return "overlap"


class CommandProgram:
    """An executable command list.  Treat as immutable once built."""

    def __init__(
        self,
        commands: list[Command],
        loops: list[Loop] | None = None,
        immediates: list[int] | None = None,
        phases: list[PhaseMark] | None = None,
        annotations: list[Annotation] | None = None,
    ):
        self.commands = list(commands)
        self.loops = list(loops or [])
        self.immediates = list(immediates or [])
        self.phases = list(phases or [])
        self.annotations = list(annotations or [])
        self._resolved = None
        self._counts: list[int] | None = None
        self.validate()

    def __len__(self) -> int:
        return len(self.commands)

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        n = len(self.commands)
        if n > MAX_COMMANDS:
            raise ProgramError(f"{n} commands exceed the {MAX_COMMANDS}-entry store")
        n_wd = sum(1 for c in self.commands if c.category == Category.WRITE_DATA)
        if n_wd != len(self.immediates):
            raise ProgramError(
                f"{n_wd} WRITE_DATA commands but {len(self.immediates)} immediates"
            )
        for L in self.loops:
            if L.end >= n:
                raise ProgramError(f"loop end {L.end} past last command {n - 1}")
        for i, a in enumerate(self.loops):
            for b in self.loops[i + 1:]:
                if _relation(a.start, a.end, b.start, b.end) == "overlap":
                    raise ProgramError(
                        f"loops [{a.start},{a.end}] and [{b.start},{b.end}] "
                        "partially overlap"
                    )
        for ann in self.annotations:
            if ann.end >= n or ann.start > ann.end:
                raise ProgramError(f"bad annotation range [{ann.start}, {ann.end}]")
            for L in self.loops:
                if _relation(ann.start, ann.end, L.start, L.end) == "overlap":
                    raise ProgramError("annotation range crosses a loop boundary")
        last = -1
        for ph in self.phases:
            if ph.end >= n or ph.start > ph.end:
                raise ProgramError(f"bad phase range [{ph.start}, {ph.end}]")
            if ph.start <= last:
                raise ProgramError("phase marks must be strictly increasing")
            last = ph.end

    # -- schedule --------------------------------------------------------

    def _flatten(self) -> None:
        """Expand the loop table into the resolved issue schedule.

        Produces parallel arrays (category, effective operand, auxiliary)
        plus per-command execution counts.  Effective operands have all
        enclosing loop offsets folded in and are range-checked here, once.
        """
        by_start: dict[int, list[Loop]] = {}
        for L in self.loops:
            by_start.setdefault(L.start, []).append(L)

        cmds = self.commands
        n = len(cmds)
        counts = [0] * n
        r_cats = _array("b")
        r_ops = _array("h")
        r_idx = _array("i")  # stored-command index per schedule entry
        r_aux: list = []

        imm_of: dict[int, int] = {}
        k = 0
        for i, c in enumerate(cmds):
            if c.category == Category.WRITE_DATA:
                imm_of[i] = self.immediates[k]
                k += 1

        def emit(lo, hi, bound, roff, aoff):
            p = lo
            while p <= hi:
                group = [
                    L
                    for L in by_start.get(p, ())
                    if bound is None
                    or (
                        bound[0] <= L.start
                        and L.end <= bound[1]
                        and (L.start, L.end) != bound
                    )
                ]
                if group:
                    maximal = [
                        L
                        for L in group
                        if not any(
                            (M.start, M.end) != (L.start, L.end)
                            and M.start <= L.start
                            and L.end <= M.end
                            for M in group
                        )
                    ]
                    for L in maximal:
                        for it in range(L.iterations):
                            emit(
                                L.start,
                                L.end,
                                (L.start, L.end),
                                roff + L.row_base + L.row_stride * it,
                                aoff + L.arg_stride * it,
                            )
                    p = max(L.end for L in maximal) + 1
                else:
                    cmd = cmds[p]
                    cat = cmd.category
                    op = cmd.operand
                    if cat == Category.EXT_BIT:
                        if cmd.arg_relative:
                            op += aoff
                        m = cmd.ext_width
                        if op >= m:
                            raise ProgramError(
                                f"command {p}: effective column {op} outside "
                                f"tile width {m}"
                            )
                        aux = (_COLMASK0[m] << op, op, (1 << m) - 1)
                    elif cat == Category.SHIFT:
                        aux = int(cmd.shift_dir)
                    else:
                        if cmd.row_relative:
                            op += roff
                        if op >= ROWS:
                            raise ProgramError(
                                f"command {p}: effective row {op} out of range"
                            )
                        if cat == Category.LOGIC:
                            aux = int(cmd.logic_kind)
                        elif cat == Category.WRITE_DATA:
                            aux = imm_of[p]
                        else:
                            aux = None
                    r_cats.append(int(cat))
                    r_ops.append(op)
                    r_idx.append(p)
                    r_aux.append(aux)
                    counts[p] += 1
                    p += 1

        if n:
            emit(0, n - 1, None, 0, 0)
        self._resolved = (r_cats, r_ops, r_idx, r_aux)
        self._counts = counts

    @property
    def exec_counts(self) -> list[int]:
        """Executions of each stored command across one full run."""
        if self._counts is None:
            self._flatten()
        return self._counts

    @property
    def executed_commands(self) -> int:
        if self._resolved is None:
            self._flatten()
        return len(self._resolved[0])

    def cycles_by_bucket(self) -> dict:
        """Base-hardware cycles per reporting bucket for one full run."""
        out = dict.fromkeys(BUCKETS, 0)
        for cnt, c in zip(self.exec_counts, self.commands):
            out[_BUCKET_OF[c.category]] += cnt * c.cycles
        return out

    def cycles_total(self) -> int:
        return sum(self.cycles_by_bucket().values())

    # -- execution -------------------------------------------------------

    def run(self, state: ArrayState, trace_events: bool = False) -> ExecTrace:
        """Interpret the schedule against an array.

        The hot loop works on the raw row list for speed; semantics match a
        fold of Controller.step exactly (tested property).  With
        `trace_events`, every issued command is recorded as
        (stored_index, category, effective_operand).
        """
        if self._resolved is None:
            self._flatten()
        cats, ops, idxs, auxs = self._resolved

        rows = state.rows
        latch = state.latch
        lv = state.latch_valid
        staged = -1
        events = [] if trace_events else None

        for k in range(len(cats)):
            cat = cats[k]
            op = ops[k]
            if events is not None:
                events.append((idxs[k], cat, op))
            if cat == 1:  # ACTIVATE
                staged = op
            elif cat == 2:  # LOGIC
                if staged < 0:
                    raise ExecutionError(
                        f"command {idxs[k]}: LOGIC with no staged row"
                    )
                if staged == op:
                    raise ExecutionError(
                        f"command {idxs[k]}: dual activation of row {op}"
                    )
                kind = auxs[k]
                if kind == 0:
                    latch = rows[staged] ^ rows[op]
                elif kind == 1:
                    latch = rows[staged] & rows[op]
                else:
                    latch = rows[staged] | rows[op]
                staged = -1
                lv = True
            elif cat == 5:  # READ_OUT
                if not lv:
                    raise ExecutionError(
                        f"command {idxs[k]}: READ_OUT with invalid latch"
                    )
                rows[op] = latch
                lv = False
            elif cat == 3:  # SHIFT
                if not lv:
                    raise ExecutionError(
                        f"command {idxs[k]}: SHIFT with invalid latch"
                    )
                if auxs[k]:
                    latch >>= op
                else:
                    latch = (latch << op) & _M512
            elif cat == 4:  # EXT_BIT
                if not lv:
                    raise ExecutionError(
                        f"command {idxs[k]}: EXT_BIT with invalid latch"
                    )
                mask0, sh, tile = auxs[k]
                latch = ((latch & mask0) >> sh) * tile
            else:  # WRITE_DATA
                rows[op] = auxs[k]
                lv = False

        state.latch = latch
        state.latch_valid = lv
        buckets = self.cycles_by_bucket()
        return ExecTrace(
            cycles_total=sum(buckets.values()),
            per_category=buckets,
            executed_commands=len(cats),
            array=state,
            program=self,
            events=events,
        )

    # -- serialization ---------------------------------------------------

    def to_bytes(self) -> bytes:
        """Raw little-endian command words, the image LD_CMD transfers."""
        out = _array("H", [encode(c) for c in self.commands])
        return out.tobytes()

    @staticmethod
    def commands_from_bytes(blob: bytes) -> list[Command]:
        if len(blob) % 2:
            raise ProgramError("command image length must be even")
        if len(blob) > MAX_PROGRAM_BYTES:
            raise ProgramError("command image exceeds the controller store")
        words = _array("H")
        words.frombytes(blob)
        try:
            return [decode(w) for w in words]
        except DecodeError as e:
            raise ProgramError(f"bad command word: {e}") from e

    def to_manifest(self) -> dict:
        return {
            "commands": self.to_bytes().hex(),
            "loops": [
                [L.start, L.end, L.iterations, L.row_stride, L.arg_stride, L.row_base]
                for L in self.loops
            ],
            "immediates": [f"{v:x}" for v in self.immediates],
            "phases": [[p.name, p.start, p.end] for p in self.phases],
            "annotations": [
                [a.kind, a.start, a.end, a.param] for a in self.annotations
            ],
        }

    @classmethod
    def from_manifest(cls, doc: dict) -> "CommandProgram":
        return cls(
            commands=cls.commands_from_bytes(bytes.fromhex(doc["commands"])),
            loops=[Loop(*row) for row in doc.get("loops", [])],
            immediates=[int(s, 16) for s in doc.get("immediates", [])],
            phases=[PhaseMark(*row) for row in doc.get("phases", [])],
            annotations=[Annotation(*row) for row in doc.get("annotations", [])],
        )


class Controller:
    """Reference FSM: one command at a time against the ArrayState API.

    The schedule interpreter in CommandProgram.run is the fast path; this
    class is the slow, obviously-correct fold used by equivalence tests and
    by anyone single-stepping a program.
    """

    def __init__(self, state: ArrayState):
        self.state = state
        self.staged: int | None = None

    def step(self, cmd: Command, row_off: int = 0, arg_off: int = 0,
             immediate: int | None = None) -> int:
        """Execute one command; returns its cycle cost."""
        st = self.state
        cat = cmd.category
        if cat == Category.ACTIVATE:
            self.staged = cmd.operand + (row_off if cmd.row_relative else 0)
        elif cat == Category.LOGIC:
            if self.staged is None:
                raise ExecutionError("LOGIC with no staged row")
            st.activate(self.staged, cmd.operand + (row_off if cmd.row_relative else 0))
            st.sense(cmd.logic_kind.sense_op)
            self.staged = None
        elif cat == Category.READ_OUT:
            st.commit_latch(cmd.operand + (row_off if cmd.row_relative else 0))
        elif cat == Category.SHIFT:
            for _ in range(cmd.operand):
                st.shift_latch(cmd.shift_dir)
        elif cat == Category.EXT_BIT:
            col = cmd.operand + (arg_off if cmd.arg_relative else 0)
            m = cmd.ext_width
            if col >= m:
                raise ExecutionError(f"EXT_BIT column {col} outside width {m}")
            picked = (st.latch >> col) & _COLMASK0[m]
            st.set_latch(picked * ((1 << m) - 1))
        elif cat == Category.WRITE_DATA:
            if immediate is None:
                raise ExecutionError("WRITE_DATA with no immediate")
            st.write_row(cmd.operand + (row_off if cmd.row_relative else 0), immediate)
        return cmd.cycles


@dataclass
class KernelProgram:
    """A command program plus the host-visible contract around it."""

    name: str
    alg_id: int
    config: str
    program: CommandProgram
    result_map: list[tuple[int, int]]  # (row, col) per output bit, LSB first
    staging_rows: int  # rows the host must stage before ALG_CNC
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.result_map) % 8:
            raise ProgramError("result map must cover whole bytes")

    @property
    def result_bytes(self) -> int:
        return len(self.result_map) // 8

    def extract_result(self, state: ArrayState) -> bytes:
        out = bytearray(self.result_bytes)
        rows = state.rows
        for bit, (row, col) in enumerate(self.result_map):
            if (rows[row] >> col) & 1:
                out[bit >> 3] |= 1 << (bit & 7)
        return bytes(out)

    def phase_table(self) -> list[dict]:
        """Stored command count and execution count per phase mark."""
        counts = self.program.exec_counts
        out = []
        for ph in self.program.phases:
            out.append(
                {
                    "phase": ph.name,
                    "commands": ph.end - ph.start + 1,
                    "iterations": counts[ph.start],
                }
            )
        return out

    def to_manifest(self) -> dict:
        doc = {
            "name": self.name,
            "alg_id": self.alg_id,
            "config": self.config,
            "staging_rows": self.staging_rows,
            "result_map": [[r, c] for r, c in self.result_map],
            "meta": self.meta,
        }
        doc.update(self.program.to_manifest())
        return doc

    @classmethod
    def from_manifest(cls, doc: dict) -> "KernelProgram":
        return cls(
            name=doc["name"],
            alg_id=doc["alg_id"],
            config=doc["config"],
            program=CommandProgram.from_manifest(doc),
            result_map=[(r, c) for r, c in doc["result_map"]],
            staging_rows=doc["staging_rows"],
            meta=doc.get("meta", {}),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_manifest(), f, indent=1)

    @classmethod
    def load(cls, path: str) -> "KernelProgram":
        with open(path) as f:
            return cls.from_manifest(json.load(f))
