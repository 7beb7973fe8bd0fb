"""CLI surface: subcommands, exit codes, files written, determinism."""
import json

import pytest

from cncsim.cli import main
from cncsim.codegen import generate
from cncsim.codegen.mmult import pack_mmult_inputs
from cncsim.host import HostMemory, place_job
from cncsim.oracles import mont_mul
from cncsim.program import KernelProgram


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_manifest_and_image(tmp_path, capsys):
    path = tmp_path / "mm.json"
    code, out, _ = run(capsys, "gen", "--kernel", "mmult16", "--out", str(path))
    assert code == 0
    assert "985 commands" in out
    kp = KernelProgram.load(str(path))
    assert kp.name == "mmult16"
    image = path.with_suffix(".bin").read_bytes()
    assert image == kp.program.to_bytes()


def test_gen_unknown_kernel_fails(capsys):
    code, _, err = run(capsys, "gen", "--kernel", "des")
    assert code != 0
    assert "unknown kernel" in err


def test_verify_passes_and_writes_summary(tmp_path, capsys):
    out_path = tmp_path / "v.json"
    code, out, _ = run(capsys, "verify", "--kernel", "ghash", "--trials", "3",
                       "--seed", "5", "--out", str(out_path))
    assert code == 0
    assert "3 trials pass" in out
    docs = json.loads(out_path.read_text())
    assert docs[0]["kernel"] == "ghash" and docs[0]["ok"]


def test_verify_custom_ntt_parameters(capsys):
    code, out, _ = run(capsys, "verify", "--kernel", "ntt", "--n", "16",
                       "--q", "257", "--trials", "2")
    assert code == 0
    assert "ntt16: 2 trials pass" in out


def test_verify_sliced_parallel_same_digest(tmp_path, capsys):
    code1, out1, _ = run(capsys, "verify", "--kernel", "mmult32",
                         "--trials", "8", "--seed", "2")
    code2, out2, _ = run(capsys, "verify", "--kernel", "mmult32",
                         "--trials", "8", "--seed", "2",
                         "--slices", "4", "--parallel")
    assert code1 == code2 == 0
    digest1 = out1.split("digest ")[1].split()[0]
    digest2 = out2.split("digest ")[1].split()[0]
    assert digest1 == digest2


def test_seeded_runs_are_byte_identical(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "verify", "--kernel", "ntt8", "--trials", "4",
                         "--seed", "7", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_bench_emits_report_and_figure(tmp_path, capsys):
    out_path = tmp_path / "rep.csv"
    code, out, _ = run(capsys, "bench", "--kernel", "mmult16",
                       "--variant", "all", "--format", "csv",
                       "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert len(lines) == 5  # header + one row per variant
    fig = tmp_path / "rep.png"
    assert fig.exists() and fig.stat().st_size > 1000
    assert "1029 cycles" in out


def test_bench_json_to_stdout(capsys):
    code, out, _ = run(capsys, "bench", "--kernel", "ghash")
    assert code == 0
    doc = json.loads(out[out.index("["):])
    assert doc[0]["cycles"]["total"] == 19159


def test_trace_replays_and_dumps_memory(tmp_path, capsys):
    kp = generate("mmult16")
    q, w = kp.meta["q"], kp.meta["width"]
    a = [i % q for i in range(1, 33)]
    b = [(3 * i) % q for i in range(1, 33)]
    mem = HostMemory()
    instrs, res_addr, nxt = place_job(kp, pack_mmult_inputs(a, b, w), mem, 0)
    trace_path = tmp_path / "t.jsonl"
    trace_path.write_text("".join(i.to_json() + "\n" for i in instrs))
    img_path = tmp_path / "mem.bin"
    mem.save_image(str(img_path), 0, nxt)
    out_path = tmp_path / "res.bin"

    code, out, _ = run(capsys, "trace", str(trace_path),
                       "--kernel", "mmult16", "--image", str(img_path),
                       "--out", str(out_path),
                       "--out-addr", str(res_addr),
                       "--out-size", str(kp.result_bytes))
    assert code == 0
    summary = json.loads(out[out.index("{"):out.rindex("}") + 1])
    assert summary["instructions"] == len(instrs)
    acc = int.from_bytes(out_path.read_bytes(), "little")
    got = [(acc >> (i * w)) & ((1 << w) - 1) for i in range(32)]
    assert got == [mont_mul(x, y, q, w) for x, y in zip(a, b)]


def test_trace_malformed_line_names_line_number(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"op": "reset"}\nnot json\n')
    code, _, err = run(capsys, "trace", str(path), "--kernel", "mmult16")
    assert code != 0
    assert "trace line 2" in err


def test_trace_empty_is_noop(tmp_path, capsys):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    code, out, _ = run(capsys, "trace", str(path), "--kernel", "mmult16")
    assert code == 0
    summary = json.loads(out)
    assert summary["instructions"] == 0
    assert summary["slices"][0]["bytes_data_in"] == 0


def test_trace_rejects_non_power_of_two_slices(tmp_path, capsys):
    path = tmp_path / "e.jsonl"
    path.write_text("")
    code, _, err = run(capsys, "trace", str(path), "--kernel", "mmult16",
                       "--slices", "3")
    assert code != 0
    assert "power of two" in err


def test_verify_reports_first_differing_lane():
    """A deliberately wrong expectation names the first differing lane/bit."""
    from cncsim.verify import first_mismatch
    kp = generate("mmult16")
    msg = first_mismatch(b"\x01" + bytes(63), bytes(64), kp)
    assert "byte 0 bit 0" in msg and "lane 0" in msg
    msg = first_mismatch(bytes(63) + b"\x80", bytes(64), kp)
    assert "lane 31" in msg
