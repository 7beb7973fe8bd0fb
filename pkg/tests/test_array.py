"""Bitline array model: algebra against plain integer ops, protocol rules."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cncsim.array import (
    COLS,
    MASK,
    ROWS,
    ArrayState,
    ProtocolError,
    SenseOp,
    ShiftDir,
)

row_values = st.integers(min_value=0, max_value=MASK)
row_indices = st.integers(min_value=0, max_value=ROWS - 1)


def _sense(a, b, op):
    arr = ArrayState()
    arr.write_row(3, a)
    arr.write_row(7, b)
    arr.activate(3, 7)
    return arr.sense(op)


@given(row_values, row_values)
def test_sense_xor_matches_int(a, b):
    assert _sense(a, b, SenseOp.XOR) == a ^ b


@given(row_values, row_values)
def test_sense_and_matches_int(a, b):
    assert _sense(a, b, SenseOp.AND) == a & b


@given(row_values, row_values)
def test_sense_or_matches_int(a, b):
    assert _sense(a, b, SenseOp.OR) == a | b


@given(row_values, row_values)
def test_sense_is_nondestructive(a, b):
    arr = ArrayState()
    arr.write_row(0, a)
    arr.write_row(1, b)
    arr.activate(0, 1)
    arr.sense(SenseOp.AND)
    assert arr.read_row(0) == a and arr.read_row(1) == b


@given(row_values, st.integers(min_value=1, max_value=COLS))
def test_shift_left_matches_int(v, k):
    arr = ArrayState()
    arr.write_row(0, v)
    arr.write_row(250, 0)
    arr.activate(0, 250)
    arr.sense(SenseOp.OR)
    assert arr.shift_latch(ShiftDir.LEFT, k) == (v << k) & MASK


@given(row_values, st.integers(min_value=1, max_value=COLS))
def test_shift_right_matches_int(v, k):
    arr = ArrayState()
    arr.write_row(0, v)
    arr.write_row(250, 0)
    arr.activate(0, 250)
    arr.sense(SenseOp.OR)
    assert arr.shift_latch(ShiftDir.RIGHT, k) == v >> k


@settings(max_examples=30)
@given(row_values, st.integers(min_value=1, max_value=16))
def test_shift_composes_single_steps(v, k):
    arr = ArrayState()
    arr.write_row(0, v)
    arr.write_row(250, 0)
    arr.activate(0, 250)
    arr.sense(SenseOp.OR)
    for _ in range(k):
        arr.shift_latch(ShiftDir.LEFT)
    one_by_one = arr.latch
    arr.activate(0, 250)
    arr.sense(SenseOp.OR)
    assert arr.shift_latch(ShiftDir.LEFT, k) == one_by_one


@given(row_values, row_indices)
def test_commit_writes_and_invalidates(v, dest):
    arr = ArrayState()
    arr.write_row(0, v)
    arr.write_row(1, 0)
    arr.activate(0, 1)
    arr.sense(SenseOp.OR)
    arr.commit_latch(dest)
    assert arr.read_row(dest) == (v if dest != 1 else v)
    assert not arr.latch_valid
    with pytest.raises(ProtocolError):
        arr.commit_latch(dest)


def test_activate_same_row_rejected():
    arr = ArrayState()
    with pytest.raises(ProtocolError):
        arr.activate(9, 9)


def test_sense_requires_activation():
    arr = ArrayState()
    with pytest.raises(ProtocolError):
        arr.sense(SenseOp.XOR)
    arr.activate(0, 1)
    arr.sense(SenseOp.XOR)
    with pytest.raises(ProtocolError):
        arr.sense(SenseOp.XOR)  # staging is consumed


def test_latch_ops_require_valid_latch():
    arr = ArrayState()
    with pytest.raises(ProtocolError):
        arr.shift_latch(ShiftDir.LEFT)
    with pytest.raises(ProtocolError):
        arr.set_latch(1)


def test_write_row_invalidates_latch():
    arr = ArrayState()
    arr.activate(0, 1)
    arr.sense(SenseOp.XOR)
    arr.write_row(5, 1)
    with pytest.raises(ProtocolError):
        arr.commit_latch(6)


def test_row_bounds_checked():
    arr = ArrayState()
    for bad in (-1, ROWS):
        with pytest.raises(ValueError):
            arr.write_row(bad, 0)
        with pytest.raises(ValueError):
            arr.read_row(bad)


def test_write_row_masks_to_width():
    arr = ArrayState()
    arr.write_row(0, 1 << COLS | 1)
    assert arr.read_row(0) == 1


def test_reserved_rows_are_plain_storage():
    arr = ArrayState()
    for row in sorted(arr.reserved_rows):
        arr.write_row(row, row)
        assert arr.read_row(row) == row


def test_load_block_dump_round_trip():
    rng = random.Random(5)
    image = rng.randbytes(64 * ROWS)
    arr = ArrayState()
    arr.load_block(image)
    assert arr.dump() == image


def test_load_block_rejects_ragged_and_overflow():
    arr = ArrayState()
    with pytest.raises(ValueError):
        arr.load_block(b"\x00" * 63)
    with pytest.raises(ValueError):
        arr.load_block(b"\x00" * 128, start_row=ROWS - 1)


def test_block_byte_order_is_little_endian():
    arr = ArrayState()
    arr.load_block(b"\x01" + b"\x00" * 63)
    assert arr.read_row(0) == 1
    arr.load_block(b"\x00" * 63 + b"\x80")
    assert arr.read_row(0) == 1 << 511


def test_bulk_random_cases_match_bitwise_oracle():
    # Dense seeded sweep over activate/sense/shift against int arithmetic.
    rng = random.Random(0xC2C)
    arr = ArrayState()
    vals = [rng.getrandbits(COLS) for _ in range(ROWS)]
    for row, v in enumerate(vals):
        arr.write_row(row, v)
    for _ in range(2000):
        a, b = rng.sample(range(ROWS), 2)
        op = rng.choice((SenseOp.XOR, SenseOp.AND, SenseOp.OR))
        arr.activate(a, b)
        got = arr.sense(op)
        want = {
            SenseOp.XOR: vals[a] ^ vals[b],
            SenseOp.AND: vals[a] & vals[b],
            SenseOp.OR: vals[a] | vals[b],
        }[op]
        assert got == want
        k = rng.randrange(1, 100)
        if rng.random() < 0.5:
            assert arr.shift_latch(ShiftDir.LEFT, k) == (want << k) & MASK
        else:
            assert arr.shift_latch(ShiftDir.RIGHT, k) == want >> k
        dest = rng.randrange(ROWS)
        arr.commit_latch(dest)
        vals[dest] = arr.read_row(dest)
