"""Bitline-computing SRAM array model.

One array is 256 rows x 512 columns.  Activating two distinct rows at once
drives each bitline with the wired combination of both cells; the extended
sense amplifiers at the column periphery then resolve AND / OR / XOR of the
two rows and capture the 512-bit result in a latch.  The latch shifts by one
column per cycle (zero fill) and can be written back to any row.  Compute
reads are non-destructive.

Rows are modeled as Python ints (LSB = column 0).  A 64-byte block maps to a
row little-endian: byte b bit j (LSB numbering) sits at column 8*b + j.

Six rows are set aside by convention for kernel intermediates/constants;
the hardware treats them like any other row.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

ROWS = 256
COLS = 512
MASK = (1 << COLS) - 1

RESERVED_ROWS = frozenset(range(250, 256))


class SenseOp(enum.IntEnum):
    """Column sense-amp mode for a dual-row activation."""

    XOR = 0
    AND = 1
    OR = 2


class ShiftDir(enum.IntEnum):
    LEFT = 0   # toward higher column index
    RIGHT = 1  # toward lower column index


class ProtocolError(RuntimeError):
    """Array driven out of sequence (sense with no activation, etc.)."""


@dataclass
class ArrayState:
    """State of one compute-enabled SRAM array.

    Attributes:
        rows: 256 row values, each a 512-bit int.
        latch: current sense/shift latch contents.
        latch_valid: True between a sense and the next commit or overwrite.
        reserved_rows: conventional scratch rows (no special hardware).
    """

    rows: list[int] = field(default_factory=lambda: [0] * ROWS)
    latch: int = 0
    latch_valid: bool = False
    reserved_rows: frozenset = RESERVED_ROWS
    _staged: tuple[int, int] | None = None

    # -- plain storage access -------------------------------------------------

    def write_row(self, row: int, value: int) -> None:
        self._check_row(row)
        self.rows[row] = value & MASK
        self.latch_valid = False

    def read_row(self, row: int) -> int:
        self._check_row(row)
        return self.rows[row]

    # -- compute --------------------------------------------------------------

    def activate(self, row_a: int, row_b: int) -> None:
        """Raise two wordlines at once, staging the pair for a sense.

        The rows must be distinct: raising the same wordline twice is
        electrically meaningless and the controller rejects it.
        """
        self._check_row(row_a)
        self._check_row(row_b)
        if row_a == row_b:
            raise ProtocolError(
                f"dual activation requires distinct rows, got {row_a} twice"
            )
        self._staged = (row_a, row_b)
        self.latch_valid = False

    def sense(self, op: SenseOp) -> int:
        """Resolve the staged activation into the latch.  Non-destructive."""
        if self._staged is None:
            raise ProtocolError("sense with no staged activation")
        a, b = (self.rows[r] for r in self._staged)
        if op == SenseOp.XOR:
            self.latch = a ^ b
        elif op == SenseOp.AND:
            self.latch = a & b
        elif op == SenseOp.OR:
            self.latch = a | b
        else:
            raise ValueError(f"unknown sense op {op!r}")
        self._staged = None
        self.latch_valid = True
        return self.latch

    def shift_latch(self, direction: ShiftDir, count: int = 1) -> int:
        """Shift the latch by one column (or `count` as a convenience).

        Hardware shifts one column per cycle; a multi-column shift is just
        the composition, which is what the timing layer charges for.
        """
        if not self.latch_valid:
            raise ProtocolError("latch shift with no valid latch contents")
        if count < 1:
            raise ValueError(f"shift count must be >= 1, got {count}")
        if direction == ShiftDir.LEFT:
            self.latch = (self.latch << count) & MASK
        else:
            self.latch >>= count
        return self.latch

    def set_latch(self, value: int) -> None:
        """Replace latch contents (used by the bit-broadcast unit)."""
        if not self.latch_valid:
            raise ProtocolError("latch rewrite with no valid latch contents")
        self.latch = value & MASK

    def commit_latch(self, row: int) -> None:
        """Write the latch back into a row.  Invalidates the latch."""
        self._check_row(row)
        if not self.latch_valid:
            raise ProtocolError("commit with no valid latch contents")
        self.rows[row] = self.latch
        self.latch_valid = False

    # -- bulk host access -----------------------------------------------------

    def load_block(self, data: bytes, start_row: int = 0) -> None:
        """Load packed bytes row-major starting at `start_row`.

        Each row takes 64 bytes, little-endian (byte 0 = columns 0..7).
        """
        if len(data) % 64:
            raise ValueError("block length must be a multiple of 64 bytes")
        n = len(data) // 64
        if start_row + n > ROWS:
            raise ValueError("block does not fit in array")
        for i in range(n):
            self.rows[start_row + i] = int.from_bytes(data[64 * i: 64 * (i + 1)], "little")

    def dump(self) -> bytes:
        """Full array image, 256 rows x 64 bytes, row-major little-endian."""
        return b"".join(r.to_bytes(64, "little") for r in self.rows)

    @staticmethod
    def _check_row(row: int) -> None:
        if not 0 <= row < ROWS:
            raise ValueError(f"row {row} out of range 0..{ROWS - 1}")
