"""Command-line front end: generate, verify, benchmark, and trace kernels.

Subcommands
-----------
gen     write a kernel's binary command image plus its JSON manifest
verify  run random end-to-end trials through the host path against oracles
bench   emit cycle-breakdown reports (JSON or CSV) and a stacked-bar figure
trace   replay a JSON-lines host-instruction trace against slices + memory

Every random choice flows from ``--seed``; repeating an invocation with the
same flags produces byte-identical output.  Set ``CNC_LOG=info`` (or
``debug``) for progress logging on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .codegen import KERNEL_NAMES, generate
from .codegen.ntt import gen_ntt
from .host import CncSlice, HostError, HostInstr, HostMemory, exec_instr, slice_select
from .perf import VARIANTS, breakdown_report, load_energy_model, reports_to_csv
from .plotting import breakdown_figure
from .program import MAX_COMMANDS, MAX_PROGRAM_BYTES
from .verify import verify_kernel, verify_kernel_sliced

log = logging.getLogger("cncsim")


def _setup_logging() -> None:
    name = os.environ.get("CNC_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _kernels(args) -> list[str]:
    return [args.kernel] if args.kernel else list(KERNEL_NAMES)


def _custom_ntt(args):
    """Build a parameterized NTT when --n/--q are given with kernel 'ntt'."""
    width = args.width or (32 if args.q >= 1 << 14 else 16)
    return gen_ntt(args.n, args.q, width)


def cmd_gen(args) -> int:
    outdir = Path(args.out or ".")
    single = len(_kernels(args)) == 1 and args.out and not outdir.is_dir()
    status = 0
    for name in _kernels(args):
        kernel = generate(name)
        path = Path(args.out) if single else outdir / f"{name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        kernel.save(str(path))
        image = kernel.program.to_bytes()
        path.with_suffix(".bin").write_bytes(image)
        print(
            f"{kernel.name}: {len(kernel.program.commands)} commands"
            f" / {MAX_COMMANDS}, image {len(image)} bytes"
            f" ({100 * len(image) / MAX_PROGRAM_BYTES:.1f}% of store),"
            f" manifest {path}"
        )
    return status


def cmd_verify(args) -> int:
    if args.kernel == "ntt" and args.n:
        targets = [_custom_ntt(args)]
    else:
        targets = _kernels(args)
    docs, ok = [], True
    for offset, target in enumerate(targets):
        if args.slices > 1:
            summary = verify_kernel_sliced(
                target, args.trials, args.seed + offset,
                n_slices=args.slices, parallel=args.parallel,
            )
        else:
            summary = verify_kernel(target, args.trials, args.seed + offset)
        docs.append(summary)
        state = "pass" if summary["ok"] else "FAIL"
        print(f"{summary['kernel']}: {summary['trials']} trials {state}"
              f" digest {summary['digest'][:16]}")
        for failure in summary["failures"]:
            print(f"  trial {failure['trial']}: {failure['detail']}")
        ok &= summary["ok"]
    if args.out:
        Path(args.out).write_text(json.dumps(docs, indent=2) + "\n")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    variants = list(VARIANTS) if args.variant == "all" else [args.variant]
    model = load_energy_model(args.energy_model)
    docs = []
    for name in _kernels(args):
        kernel = generate(name)
        for variant in variants:
            log.info("accounting %s under %s", name, variant)
            docs.append(breakdown_report(kernel, variant, energy_model=model))
    for doc in docs:
        print(f"{doc['kernel']:>14} {doc['variant']:>8}"
              f" {doc['cycles']['total']:>9} cycles"
              f" {doc['energy']['energy_pj']:>12.1f} pJ")
    text = reports_to_csv(docs) if args.format == "csv" else json.dumps(docs, indent=2)
    if args.out:
        out = Path(args.out)
        out.write_text(text + "\n")
        fig = out.with_suffix(".png")
        if fig == out:
            fig = out.with_name(out.stem + "_breakdown.png")
        breakdown_figure(docs, str(fig), title="cycle breakdown by bucket")
        print(f"wrote {out} and {fig}")
    else:
        print(text)
    return 0


def cmd_trace(args) -> int:
    n_slices = args.slices
    if n_slices & (n_slices - 1):
        print("slice count must be a power of two", file=sys.stderr)
        return 2
    slices = [CncSlice() for _ in range(n_slices)]
    for name in _kernels(args):
        kernel = generate(name)
        for slc in slices:
            slc.install(kernel)
    mem = HostMemory()
    if args.image:
        loaded = mem.load_image(args.image)
        log.info("loaded %d bytes of memory image", loaded)

    executed = 0
    with open(args.trace) as fh:
        for no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                instr = HostInstr.from_json(line)
                slc = slices[slice_select(instr.addr, n_slices)]
                exec_instr(slc, mem, instr)
            except (ValueError, KeyError, HostError) as e:
                print(f"trace line {no}: {e}", file=sys.stderr)
                return 2
            executed += 1

    summary = {
        "instructions": executed,
        "slices": [slc.counters.as_dict() for slc in slices],
    }
    print(json.dumps(summary, indent=2))
    if args.out and args.out_size:
        mem.save_image(args.out, args.out_addr, args.out_size)
        print(f"wrote {args.out_size} bytes of memory to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cncsim",
        description="cycle-level simulator for in-SRAM crypto kernels",
    )
    sub = p.add_subparsers(dest="command", required=True)

    kern = argparse.ArgumentParser(add_help=False)
    kern.add_argument("--kernel", metavar="NAME",
                      help=f"one of: {', '.join(KERNEL_NAMES)} (default: all)")

    g = sub.add_parser("gen", parents=[kern],
                       help="emit command image + manifest")
    g.add_argument("--out", help="manifest path, or directory for multiple kernels")
    g.set_defaults(fn=cmd_gen)

    v = sub.add_parser("verify", parents=[kern],
                       help="random end-to-end runs vs. software oracles")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--slices", type=int, default=1,
                   help="distribute trials round-robin over this many slices")
    v.add_argument("--parallel", action="store_true",
                   help="run the slices concurrently")
    v.add_argument("--n", type=int, help="custom NTT size (with --kernel ntt)")
    v.add_argument("--q", type=int, default=12289, help="custom NTT modulus")
    v.add_argument("--width", type=int, help="custom NTT lane width (16/32)")
    v.add_argument("--out", help="write JSON summaries here")
    v.set_defaults(fn=cmd_verify)

    b = sub.add_parser("bench", parents=[kern],
                       help="cycle breakdown reports and figures")
    b.add_argument("--variant", default="base", choices=(*VARIANTS, "all"))
    b.add_argument("--format", default="json", choices=("json", "csv"))
    b.add_argument("--energy-model", help="JSON file of per-bucket pJ costs")
    b.add_argument("--out",
                   help="report path; a .png breakdown figure lands beside it")
    b.set_defaults(fn=cmd_bench)

    t = sub.add_parser("trace", parents=[kern],
                       help="replay a JSON-lines host-instruction trace")
    t.add_argument("trace", help="trace file, one host instruction per line")
    t.add_argument("--slices", type=int, default=1,
                   help="power-of-two slice count; instructions route by address")
    t.add_argument("--image", help="initial memory image loaded at address 0")
    t.add_argument("--out", help="write back a memory window after the replay")
    t.add_argument("--out-addr", type=int, default=0)
    t.add_argument("--out-size", type=int, default=0)
    t.set_defaults(fn=cmd_trace)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.kernel and args.kernel not in KERNEL_NAMES and not (
            args.command == "verify" and args.kernel == "ntt"):
        print(f"unknown kernel {args.kernel!r}; choices:"
              f" {', '.join(KERNEL_NAMES)}", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
