"""Host instruction interface: costs, rejections, reuse, slice isolation."""
import io
import json
import random

import pytest

from cncsim.codegen import generate
from cncsim.codegen.mmult import pack_mmult_inputs
from cncsim.host import (
    BLOCK,
    BLOCK_CYCLES,
    N_ALG_IDS,
    STAGING_ROWS,
    WORD_CYCLES,
    AlgorithmError,
    AlignmentError,
    CncSlice,
    HostInstr,
    HostMemory,
    StagingOverflow,
    exec_instr,
    exec_ld_cmd,
    exec_rd_d2cnc,
    exec_sw_cnc,
    place_job,
    replay_trace,
    run_kernel,
    run_parallel,
    slice_select,
    stage_job,
)
from cncsim.oracles import mont_mul
from cncsim.program import ProgramError
from cncsim.verify import random_case


@pytest.fixture(scope="module")
def mm16():
    return generate("mmult16")


def test_memory_zero_fill_and_round_trip():
    mem = HostMemory()
    assert mem.read(12345, 10) == bytes(10)
    mem.write(100, b"hello")
    assert mem.read(98, 9) == b"\x00\x00hello\x00\x00"
    mem.write(BLOCK - 2, b"span")  # crosses a block boundary
    assert mem.read(BLOCK - 2, 4) == b"span"


def test_memory_image_files(tmp_path):
    mem = HostMemory()
    mem.write(0, bytes(range(200)))
    path = tmp_path / "img.bin"
    mem.save_image(str(path), 64, 64)
    fresh = HostMemory()
    assert fresh.load_image(str(path), addr=128) == 64
    assert fresh.read(128, 64) == bytes(range(64, 128))


def test_sw_cnc_costs_one_cycle_and_packs_words():
    slc, mem = CncSlice(), HostMemory()
    assert exec_sw_cnc(slc, mem, 0, 0xDEADBEEF) == WORD_CYCLES
    assert exec_sw_cnc(slc, mem, 0, 0x01020304) == WORD_CYCLES
    row0 = slc.array.read_row(0)
    assert row0 & 0xFFFFFFFF == 0xDEADBEEF
    assert (row0 >> 32) & 0xFFFFFFFF == 0x01020304
    assert slc.counters.bytes_data_in == 8
    assert slc.counters.cycles_transfer == 2 * WORD_CYCLES


def test_sw_cnc_rejects_oversized_word():
    with pytest.raises(ValueError):
        exec_sw_cnc(CncSlice(), HostMemory(), 0, 1 << 32)


def test_rd_d2cnc_costs_two_cycles_and_fills_rows():
    slc, mem = CncSlice(), HostMemory()
    mem.write(0, b"\xAA" * BLOCK)
    mem.write(BLOCK, b"\xBB" * BLOCK)
    assert exec_rd_d2cnc(slc, mem, 0) == BLOCK_CYCLES
    assert exec_rd_d2cnc(slc, mem, BLOCK) == BLOCK_CYCLES
    assert slc.array.read_row(0) == int.from_bytes(b"\xAA" * BLOCK, "little")
    assert slc.array.read_row(1) == int.from_bytes(b"\xBB" * BLOCK, "little")
    assert slc.counters.bytes_data_in == 2 * BLOCK


def test_rd_d2cnc_rejects_misaligned_address():
    with pytest.raises(AlignmentError):
        exec_rd_d2cnc(CncSlice(), HostMemory(), 33)


def test_interleaved_word_and_block_staging():
    # A word store mid-row makes the next block load round up to a new row.
    slc, mem = CncSlice(), HostMemory()
    exec_sw_cnc(slc, mem, 0, 7)
    mem.write(0, b"\x11" * BLOCK)
    exec_rd_d2cnc(slc, mem, 0)
    assert slc.array.read_row(0) & 0xFFFFFFFF == 7
    assert slc.array.read_row(1) == int.from_bytes(b"\x11" * BLOCK, "little")
    assert slc.staging == 2 * BLOCK


def test_staging_overflow_guard():
    slc, mem = CncSlice(), HostMemory()
    slc.staging = STAGING_ROWS * BLOCK
    with pytest.raises(StagingOverflow):
        exec_sw_cnc(slc, mem, 0, 1)
    with pytest.raises(StagingOverflow):
        exec_rd_d2cnc(slc, mem, 0)
    slc.reset_staging()
    assert exec_sw_cnc(slc, mem, 0, 1) == WORD_CYCLES


def test_ld_cmd_caps_at_command_store(mm16):
    slc, mem = CncSlice(), HostMemory()
    image = mm16.program.to_bytes()
    mem.write(0, image)
    cost = exec_ld_cmd(slc, mem, 0, len(image))
    assert cost == BLOCK_CYCLES * ((len(image) + BLOCK - 1) // BLOCK)
    assert slc.commands == mm16.program.commands
    assert slc.counters.bytes_cmd_in == len(image)
    with pytest.raises(ProgramError):
        exec_ld_cmd(slc, mem, 0, 16390)  # 8,195 words: past the 8,192 store


def test_alg_cnc_rejections(mm16):
    slc, mem = CncSlice(), HostMemory()
    with pytest.raises(AlgorithmError):
        exec_instr(slc, mem, HostInstr("alg_cnc", 0, N_ALG_IDS))
    with pytest.raises(AlgorithmError):
        exec_instr(slc, mem, HostInstr("alg_cnc", 0, mm16.alg_id))  # empty store
    image = mm16.program.to_bytes()
    mem.write(0, image)
    exec_ld_cmd(slc, mem, 0, len(image))
    with pytest.raises(AlgorithmError):  # no manifest installed
        exec_instr(slc, mem, HostInstr("alg_cnc", 0, mm16.alg_id))
    other = generate("ghash")
    slc.install(other)
    mem.write(0, other.program.to_bytes())
    exec_ld_cmd(slc, mem, 0, len(other.program.to_bytes()))
    slc.install(mm16)
    with pytest.raises(AlgorithmError):  # loaded image is not this manifest
        exec_instr(slc, mem, HostInstr("alg_cnc", 0, mm16.alg_id))


def test_install_checks_alg_id_space(mm16):
    import dataclasses
    slc = CncSlice()
    bad = dataclasses.replace(mm16, alg_id=N_ALG_IDS)
    with pytest.raises(AlgorithmError):
        slc.install(bad)


def test_end_to_end_run_kernel_matches_oracle(mm16):
    rng = random.Random(123)
    q, w = mm16.meta["q"], mm16.meta["width"]
    a = [rng.randrange(q) for _ in range(512 // w)]
    b = [rng.randrange(q) for _ in range(512 // w)]
    out = run_kernel(mm16, pack_mmult_inputs(a, b, w))
    acc = int.from_bytes(out, "little")
    got = [(acc >> (i * w)) & ((1 << w) - 1) for i in range(512 // w)]
    assert got == [mont_mul(x, y, q, w) for x, y in zip(a, b)]


def test_command_reuse_accounts_bytes_once(mm16):
    """K runs after one LD_CMD: command traffic constant, data scales with K."""
    K = 10
    slc, mem = CncSlice(), HostMemory()
    slc.install(mm16)
    image = mm16.program.to_bytes()
    mem.write(0, image)
    in_addr = -(-len(image) // BLOCK) * BLOCK
    res_addr = in_addr + mm16.staging_rows * BLOCK
    rng = random.Random(5)

    exec_instr(slc, mem, HostInstr("ld_cmd", 0, len(image)))
    assert slc.counters.bytes_cmd_in == len(image)
    run = stage_job(mm16, in_addr, res_addr)
    for _ in range(K):
        data, expected = random_case(mm16, rng)
        mem.write(in_addr, data)
        for instr in run:
            exec_instr(slc, mem, instr)
        assert mem.read(res_addr, mm16.result_bytes) == expected

    c = slc.counters
    assert c.bytes_cmd_in == len(image)  # still one load
    assert c.bytes_data_in == K * mm16.staging_rows * BLOCK
    assert c.bytes_result_out == K * mm16.result_bytes


def test_host_instr_json_round_trip():
    for instr in (HostInstr("sw_cnc", 4, 99), HostInstr("rd_d2cnc", 128),
                  HostInstr("ld_cmd", 0, 512), HostInstr("alg_cnc", 4096, 7),
                  HostInstr("reset")):
        assert HostInstr.from_json(instr.to_json()) == instr
    with pytest.raises(ValueError):
        HostInstr("poke", 0, 0)


def test_exec_instr_writes_log(mm16):
    slc, mem = CncSlice(), HostMemory()
    log = io.StringIO()
    exec_instr(slc, mem, HostInstr("sw_cnc", 0, 42), log=log)
    exec_instr(slc, mem, HostInstr("reset"), log=log)
    lines = log.getvalue().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["op"] == "sw_cnc"


def test_replay_trace_reports_bad_line_number():
    lines = [HostInstr("sw_cnc", 0, 1).to_json(), "", "{bad json"]
    with pytest.raises(ValueError, match="trace line 3"):
        replay_trace(CncSlice(), HostMemory(), lines)


def test_replay_empty_trace_is_noop():
    slc = CncSlice()
    assert replay_trace(slc, HostMemory(), []) == []
    assert slc.counters.as_dict() == {
        "bytes_data_in": 0, "bytes_cmd_in": 0,
        "bytes_result_out": 0, "cycles_transfer": 0,
    }


def test_slice_select_interleaves_blocks():
    assert [slice_select(128 * i, 4) for i in range(8)] == [0, 1, 2, 3, 0, 1, 2, 3]
    assert slice_select(127, 4) == 0
    with pytest.raises(ValueError):
        slice_select(0, 3)


def test_parallel_slices_match_sequential(mm16):
    """Four slices, mixed kernels, concurrent == sequential, bit for bit."""
    kernels = [mm16, generate("ghash"), generate("ntt8"), mm16]
    rng = random.Random(99)
    cases = [random_case(k, rng) for k in kernels]

    def build(mem):
        slices, jobs, homes = [], [], []
        base = 0
        for k, (data, _) in zip(kernels, cases):
            slc = CncSlice()
            slc.install(k)
            image = k.program.to_bytes()
            mem.write(base, image)
            in_addr = base + -(-len(image) // BLOCK) * BLOCK
            res_addr = in_addr + k.staging_rows * BLOCK
            mem.write(in_addr, data)
            jobs.append([HostInstr("ld_cmd", base, len(image))]
                        + stage_job(k, in_addr, res_addr))
            homes.append(res_addr)
            slices.append(slc)
            base = res_addr + -(-k.result_bytes // BLOCK) * BLOCK
        return slices, jobs, homes

    mem_p = HostMemory()
    slices_p, jobs_p, homes = build(mem_p)
    run_parallel(slices_p, mem_p, jobs_p)

    mem_s = HostMemory()
    slices_s, jobs_s, _ = build(mem_s)
    for slc, instrs in zip(slices_s, jobs_s):
        for instr in instrs:
            exec_instr(slc, mem_s, instr)

    for k, (_, expected), home in zip(kernels, cases, homes):
        par = mem_p.read(home, k.result_bytes)
        seq = mem_s.read(home, k.result_bytes)
        assert par == seq == expected
    for sp, ss in zip(slices_p, slices_s):
        assert sp.counters.as_dict() == ss.counters.as_dict()
        assert sp.array.rows == ss.array.rows


def test_place_job_layout(mm16):
    mem = HostMemory()
    data = bytes(mm16.staging_rows * BLOCK)
    instrs, result_addr, nxt = place_job(mm16, data, mem, 0)
    image = mm16.program.to_bytes()
    assert mem.read(0, len(image)) == image
    assert instrs[0].op == "ld_cmd" and instrs[1].op == "reset"
    assert [i.op for i in instrs[2:-1]] == ["rd_d2cnc"] * mm16.staging_rows
    assert instrs[-1] == HostInstr("alg_cnc", result_addr, mm16.alg_id)
    assert result_addr % BLOCK == 0 and nxt >= result_addr + mm16.result_bytes
    with pytest.raises(ValueError):
        place_job(mm16, b"short", mem, 0)
