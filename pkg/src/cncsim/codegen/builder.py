"""Program builder: emission helpers shared by all kernel generators.

The builder wraps a growing command list with context managers for loops,
phase marks and retiming annotations, plus the handful of fused idioms the
controller FSM allows (activate, logic, then latch shifts / bit broadcasts,
then a single commit):

    b.op(AND, a, b, dest)                  activate a; and b; ro dest
    b.op_sh(AND, a, m, 3, LEFT, dest)      ... with a 3-column latch shift
    b.copy(src, dest)                      activate src; or ZERO; ro dest
    b.zero(dest)                           activate ZERO; and ONES; ro dest

Copies and zeroing lean on two conventional constant rows (all-zero and
all-ones) that every kernel sets aside; nothing ever commits to the zero
row, so an OR against it is the identity.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field

from ..array import ShiftDir
from ..isa import Command, LogicKind
from ..program import Annotation, CommandProgram, Loop, PhaseMark

XOR = LogicKind.XOR
AND = LogicKind.AND
OR = LogicKind.OR
LEFT = ShiftDir.LEFT
RIGHT = ShiftDir.RIGHT

MAX_SHIFT = 255  # one SHIFT command's count field

# OR this into a row number to mark the reference loop-relative.  Every
# emission helper strips it, so emitters written against absolute rows can
# be reused inside loop bodies by flagging the rows they are handed.
REL = 1 << 12


def replicate(value: int, width: int) -> int:
    """Tile a `width`-bit lane value across all 512 columns."""
    if value >> width:
        raise ValueError(f"value does not fit in {width}-bit lane")
    out = 0
    for off in range(0, 512, width):
        out |= value << off
    return out


class InfeasibleLayout(Exception):
    """Raised when requested placements conflict and cannot be absorbed."""


@dataclass
class DataLayout:
    """Where a kernel's logical operands live in the array.

    rotation_offsets are the per-lane column offsets baked into the
    placement: a rotation listed here costs zero Shift commands because the
    data is stored pre-rotated (or, for row-mapped lanes, because the
    rotation is a pure row renaming).
    """

    operand_map: dict = field(default_factory=dict)
    rotation_offsets: list = field(default_factory=list)
    result_map: list = field(default_factory=list)


def plan_implicit_shift(lane_rotations, lane_width: int = 64) -> DataLayout:
    """Choose a column placement absorbing the given per-lane rotations.

    Accepts one required rotation per lane (list) or lane -> rotations
    (mapping).  A lane demanded at two different offsets cannot be placed to
    satisfy both, which is the infeasible case; the caller falls back to
    explicit shifts.
    """
    if hasattr(lane_rotations, "items"):
        items = lane_rotations.items()
    else:
        items = enumerate(lane_rotations)
    offsets: dict = {}
    for lane, rot in items:
        rots = rot if isinstance(rot, (list, tuple, set, frozenset)) else (rot,)
        want = {r % lane_width for r in rots}
        if len(want) > 1 or (lane in offsets and {offsets[lane]} != want):
            raise InfeasibleLayout(
                f"lane {lane} demanded at offsets {sorted(want)}"
            )
        offsets[lane] = next(iter(want))
    n = (max(offsets) + 1) if offsets else 0
    return DataLayout(rotation_offsets=[offsets.get(i, 0) for i in range(n)])


class Builder:
    def __init__(self, zero_row: int | None = None, ones_row: int | None = None):
        self.commands: list[Command] = []
        self.loops: list[Loop] = []
        self.immediates: list[int] = []
        self.phases: list[PhaseMark] = []
        self.annotations: list[Annotation] = []
        self.zero_row = zero_row
        self.ones_row = ones_row

    # -- raw commands ------------------------------------------------------

    @staticmethod
    def _row(row: int, stride: bool) -> tuple[int, bool]:
        return row & ~REL, stride or bool(row & REL)

    def wd(self, row: int, value: int, stride: bool = False) -> None:
        row, stride = self._row(row, stride)
        self.commands.append(Command.write_data(row, stride))
        self.immediates.append(value)

    def act(self, row: int, stride: bool = False) -> None:
        row, stride = self._row(row, stride)
        self.commands.append(Command.activate(row, stride))

    def logic(self, kind: LogicKind, row: int, stride: bool = False) -> None:
        row, stride = self._row(row, stride)
        self.commands.append(Command.logic(kind, row, stride))

    def sh(self, count: int, direction: ShiftDir) -> None:
        """Latch shift; counts beyond one command's field are split."""
        while count > MAX_SHIFT:
            self.commands.append(Command.shift(MAX_SHIFT, direction))
            count -= MAX_SHIFT
        if count:
            self.commands.append(Command.shift(count, direction))

    def ext(self, col: int, width: int, stride: bool = False) -> None:
        self.commands.append(Command.ext_bit(col, width, stride))

    def ro(self, row: int, stride: bool = False) -> None:
        row, stride = self._row(row, stride)
        self.commands.append(Command.read_out(row, stride))

    # -- fused idioms -------------------------------------------------------

    def op(self, kind: LogicKind, a: int, b: int, dest: int,
           sa: bool = False, sb: bool = False, sd: bool = False) -> None:
        """dest = a <kind> b in one activate/logic/commit burst."""
        self.act(a, sa)
        self.logic(kind, b, sb)
        self.ro(dest, sd)

    def op_sh(self, kind: LogicKind, a: int, b: int, count: int,
              direction: ShiftDir, dest: int,
              sa: bool = False, sb: bool = False, sd: bool = False) -> None:
        """dest = (a <kind> b) shifted by count columns."""
        self.act(a, sa)
        self.logic(kind, b, sb)
        self.sh(count, direction)
        self.ro(dest, sd)

    def copy(self, src: int, dest: int, sa: bool = False, sd: bool = False) -> None:
        assert self.zero_row is not None
        self.op(OR, src, self.zero_row, dest, sa=sa, sd=sd)

    def copy_sh(self, src: int, count: int, direction: ShiftDir, dest: int,
                sa: bool = False, sd: bool = False) -> None:
        assert self.zero_row is not None
        self.op_sh(OR, src, self.zero_row, count, direction, dest, sa=sa, sd=sd)

    def zero(self, dest: int, sd: bool = False) -> None:
        assert self.zero_row is not None and self.ones_row is not None
        self.op(AND, self.zero_row, self.ones_row, dest, sd=sd)

    def broadcast(self, src: int, col: int, width: int, dest: int,
                  sa: bool = False, arg_stride: bool = False,
                  sd: bool = False) -> None:
        """dest = bit `col` of each `width`-wide tile of src, tile-filled."""
        assert self.zero_row is not None
        self.act(src, sa)
        self.logic(OR, self.zero_row)
        self.ext(col, width, arg_stride)
        self.ro(dest, sd)

    def not_(self, src: int, dest: int, sa: bool = False, sd: bool = False) -> None:
        assert self.ones_row is not None
        self.op(XOR, src, self.ones_row, dest, sa=sa, sd=sd)

    # -- structure ----------------------------------------------------------

    @contextlib.contextmanager
    def loop(self, iterations: int, row_stride: int = 0, arg_stride: int = 0,
             row_base: int = 0):
        start = len(self.commands)
        holder = _LoopHandle(self, start)
        yield holder
        end = len(self.commands) - 1
        if end < start:
            raise ValueError("empty loop body")
        holder.end = end
        self.loops.append(
            Loop(start, end, iterations, row_stride, arg_stride, row_base)
        )

    def loop_again(self, handle: "_LoopHandle", iterations: int,
                   row_stride: int = 0, arg_stride: int = 0,
                   row_base: int = 0) -> None:
        """Re-run a captured loop body with a different base/stride."""
        if handle.end is None:
            raise ValueError("loop body not closed yet")
        self.loops.append(
            Loop(handle.start, handle.end, iterations, row_stride, arg_stride,
                 row_base)
        )

    @contextlib.contextmanager
    def phase(self, name: str):
        start = len(self.commands)
        yield
        end = len(self.commands) - 1
        if end >= start:
            self.phases.append(PhaseMark(name, start, end))

    @contextlib.contextmanager
    def annotate(self, kind: str, param: int = 0):
        start = len(self.commands)
        yield
        end = len(self.commands) - 1
        if end >= start:
            self.annotations.append(Annotation(kind, start, end, param))

    # -- finish ---------------------------------------------------------------

    def build(self) -> CommandProgram:
        return CommandProgram(
            self.commands,
            loops=self.loops,
            immediates=self.immediates,
            phases=sorted(self.phases, key=lambda p: p.start),
            annotations=self.annotations,
        )


@dataclass
class _LoopHandle:
    builder: Builder
    start: int
    end: int | None = None
