"""16-bit command ISA for the array controller.

Word layout:

    [15:13] category
    [12:5]  operand  (row address, shift count, or column offset)
    [4:0]   variant

Categories:

    0 WRITE_DATA  operand = destination row.  Writes the next 512-bit value
                  from the program's immediate pool into that row.
    1 ACTIVATE    operand = first source row.  Stages it for the next LOGIC.
    2 LOGIC       operand = second source row.  Raises both wordlines and
                  senses variant[1:0] (0 XOR / 1 AND / 2 OR) into the latch.
    3 SHIFT       operand = column count (1..255), variant bit0 = direction
                  (0 left, 1 right).  Shifts the latch, one cycle per column.
    4 EXT_BIT     operand = column offset inside each tile.  Broadcasts that
                  bit across its tile for every tile in the latch.
                  variant[1:0] selects tile width: 0=8, 1=16, 2=32, 3=128.
    5 READ_OUT    operand = destination row.  Commits the latch.

Variant bit 4 on row-addressed commands (WRITE_DATA, ACTIVATE, LOGIC,
READ_OUT) marks the row operand as loop-relative: enclosing loop entries add
their row offset.  Variant bit 3 on EXT_BIT does the same for the column
offset.  All other variant bits must be zero; words that violate any of
these rules do not decode.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .array import SenseOp, ShiftDir


class Category(enum.IntEnum):
    WRITE_DATA = 0
    ACTIVATE = 1
    LOGIC = 2
    SHIFT = 3
    EXT_BIT = 4
    READ_OUT = 5


class LogicKind(enum.IntEnum):
    XOR = 0
    AND = 1
    OR = 2

    @property
    def sense_op(self) -> SenseOp:
        return SenseOp(int(self))


ROW_CATEGORIES = frozenset(
    {Category.WRITE_DATA, Category.ACTIVATE, Category.LOGIC, Category.READ_OUT}
)

EXT_WIDTHS = (8, 16, 32, 128)

_FLAG_ROW = 1 << 4   # loop-relative row operand
_FLAG_ARG = 1 << 3   # loop-relative column operand (EXT_BIT only)


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class Command:
    category: Category
    operand: int
    variant: int = 0

    def __post_init__(self):
        if not 0 <= self.operand <= 0xFF:
            raise ValueError(f"operand {self.operand} out of range")
        if not 0 <= self.variant <= 0x1F:
            raise ValueError(f"variant {self.variant} out of range")
        _validate(self.category, self.operand, self.variant)

    # -- constructors ----------------------------------------------------

    @staticmethod
    def write_data(row: int, stride: bool = False) -> "Command":
        return Command(Category.WRITE_DATA, row, _FLAG_ROW if stride else 0)

    @staticmethod
    def activate(row: int, stride: bool = False) -> "Command":
        return Command(Category.ACTIVATE, row, _FLAG_ROW if stride else 0)

    @staticmethod
    def logic(kind: LogicKind, row_b: int, stride: bool = False) -> "Command":
        return Command(Category.LOGIC, row_b, int(kind) | (_FLAG_ROW if stride else 0))

    @staticmethod
    def shift(count: int, direction: ShiftDir) -> "Command":
        return Command(Category.SHIFT, count, int(direction))

    @staticmethod
    def ext_bit(col: int, width: int, stride: bool = False) -> "Command":
        sel = EXT_WIDTHS.index(width)
        return Command(Category.EXT_BIT, col, sel | (_FLAG_ARG if stride else 0))

    @staticmethod
    def read_out(row: int, stride: bool = False) -> "Command":
        return Command(Category.READ_OUT, row, _FLAG_ROW if stride else 0)

    # -- field views -----------------------------------------------------

    @property
    def row_relative(self) -> bool:
        return self.category in ROW_CATEGORIES and bool(self.variant & _FLAG_ROW)

    @property
    def arg_relative(self) -> bool:
        return self.category == Category.EXT_BIT and bool(self.variant & _FLAG_ARG)

    @property
    def logic_kind(self) -> LogicKind:
        assert self.category == Category.LOGIC
        return LogicKind(self.variant & 0b11)

    @property
    def shift_dir(self) -> ShiftDir:
        assert self.category == Category.SHIFT
        return ShiftDir(self.variant & 1)

    @property
    def ext_width(self) -> int:
        assert self.category == Category.EXT_BIT
        return EXT_WIDTHS[self.variant & 0b11]

    @property
    def cycles(self) -> int:
        """Issue-to-retire latency of one execution of this command."""
        if self.category == Category.SHIFT:
            return self.operand
        return 1

    def __str__(self) -> str:
        c = self.category
        if c == Category.WRITE_DATA:
            return f"wd r{self.operand}" + ("+" if self.row_relative else "")
        if c == Category.ACTIVATE:
            return f"act r{self.operand}" + ("+" if self.row_relative else "")
        if c == Category.LOGIC:
            return f"{self.logic_kind.name.lower()} r{self.operand}" + (
                "+" if self.row_relative else ""
            )
        if c == Category.SHIFT:
            return f"sh{'r' if self.shift_dir == ShiftDir.RIGHT else 'l'} {self.operand}"
        if c == Category.EXT_BIT:
            return f"ext c{self.operand}/{self.ext_width}" + (
                "+" if self.arg_relative else ""
            )
        return f"ro r{self.operand}" + ("+" if self.row_relative else "")


def _validate(category: Category, operand: int, variant: int) -> None:
    if category in ROW_CATEGORIES:
        allowed = _FLAG_ROW
        if category == Category.LOGIC:
            allowed |= 0b11
            if variant & 0b11 == 0b11:
                raise DecodeError("logic kind 3 is reserved")
    elif category == Category.SHIFT:
        allowed = 0b1
        if operand == 0:
            raise DecodeError("shift count 0 is invalid")
    elif category == Category.EXT_BIT:
        allowed = 0b11 | _FLAG_ARG
        if operand >= EXT_WIDTHS[variant & 0b11]:
            raise DecodeError(
                f"ext_bit column {operand} outside tile width {EXT_WIDTHS[variant & 0b11]}"
            )
    else:
        raise DecodeError(f"category {int(category)} is reserved")
    if variant & ~allowed:
        raise DecodeError(
            f"variant bits {variant:#07b} invalid for {category.name}"
        )


def encode(cmd: Command) -> int:
    return (int(cmd.category) << 13) | (cmd.operand << 5) | cmd.variant


def decode(word: int) -> Command:
    if not 0 <= word <= 0xFFFF:
        raise DecodeError(f"word {word:#x} is not 16 bits")
    cat = word >> 13
    if cat > 5:
        raise DecodeError(f"category {cat} is reserved")
    return Command(Category(cat), (word >> 5) & 0xFF, word & 0x1F)
