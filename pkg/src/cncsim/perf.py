"""Cycle accounting, hardware-variant recosting, and the energy model.

The base machine charges what the array actually does: one cycle per
activate/logic/commit/extract and one per shifted column.  Two optional
functional units change only the accounting, never results:

* shifter: a 64-bit barrel shifter per 64 bitlines.  Any shift command
  inside a codegen ``rotate`` annotation moving at most 64 columns
  completes in one cycle.
* adder: a 16-bit full adder per 16 bitlines.  Any ``carry`` annotated
  command range (a lane-parallel addition) completes in one cycle, charged
  to the logic bucket.

Programs without annotations cannot be recosted; asking for a non-base
variant on one is an error rather than a silent base fallback.

Energy is a linear model over bucket cycles with coefficients from a JSON
file.  The shipped coefficients are placeholders with sane relative
magnitudes, not silicon measurements; ops-per-kilojoule is derived.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .isa import Category
from .program import BUCKETS, CommandProgram
from .codegen.configs import CB_REGISTRY

VARIANTS = ("base", "shifter", "adder", "sa")
SHIFTER_MAX = 64

_BUCKET_OF = {
    Category.SHIFT: "shift",
    Category.ACTIVATE: "logic",
    Category.LOGIC: "logic",
    Category.EXT_BIT: "ext_bit",
    Category.READ_OUT: "read_write",
    Category.WRITE_DATA: "read_write",
}


class VariantError(ValueError):
    pass


@dataclass
class CycleReport:
    """Bucketed cycle counts for one kernel run under one variant."""

    kernel: str
    variant: str
    cycles: dict

    @property
    def total(self) -> int:
        return sum(self.cycles.values())

    @property
    def fractions(self) -> dict:
        t = self.total
        return {k: (v / t if t else 0.0) for k, v in self.cycles.items()}

    def as_dict(self) -> dict:
        cyc = dict(self.cycles)
        cyc["total"] = self.total
        return {
            "kernel": self.kernel,
            "variant": self.variant,
            "cycles": cyc,
            "fractions": self.fractions,
        }


def _program_of(trace_or_program) -> CommandProgram:
    return getattr(trace_or_program, "program", trace_or_program)


def account(trace, variant: str = "base", kernel: str = "") -> CycleReport:
    """Recost an executed program under a hardware variant.

    Accepts an ExecTrace or a CommandProgram; costs depend only on the
    schedule, which is why a trace and its program agree exactly.
    """
    variant = variant.lower()
    if variant not in VARIANTS:
        raise VariantError(f"unknown variant {variant!r}; know {VARIANTS}")
    program = _program_of(trace)
    program.validate()
    counts = program.exec_counts
    cmds = program.commands

    if variant != "base" and not program.annotations:
        raise VariantError(
            f"variant {variant!r} needs rotate/carry annotations, "
            "and this program carries none"
        )

    want_shift = variant in ("shifter", "sa")
    want_carry = variant in ("adder", "sa")
    cost = [c.cycles for c in cmds]
    in_rotate = [False] * len(cmds)
    consumed = [False] * len(cmds)

    out = dict.fromkeys(BUCKETS, 0)
    for ann in program.annotations:
        span = range(ann.start, ann.end + 1)
        if want_carry and ann.kind == "carry":
            # one adder pass replaces the whole chain each time it runs
            for i in span:
                consumed[i] = True
            out["logic"] += counts[ann.start]
        elif ann.kind == "rotate":
            for i in span:
                in_rotate[i] = True

    for i, c in enumerate(cmds):
        if consumed[i]:
            continue
        cyc = cost[i]
        if (want_shift and in_rotate[i] and c.category == Category.SHIFT
                and c.operand <= SHIFTER_MAX):
            cyc = 1
        out[_BUCKET_OF[c.category]] += counts[i] * cyc
    return CycleReport(kernel=kernel, variant=variant, cycles=out)


def kernel_speedup(base: CycleReport, other: CycleReport) -> float:
    """Total-cycle ratio between two reports of the same kernel."""
    if base.kernel != other.kernel:
        raise ValueError(
            f"speedup across kernels {base.kernel!r} vs {other.kernel!r}"
        )
    return base.total / other.total


@dataclass
class EnergyModel:
    """Per-cycle energy by bucket, picojoules."""

    coefficients: dict

    def __post_init__(self):
        missing = set(BUCKETS) - set(self.coefficients)
        if missing:
            raise ValueError(f"energy model missing buckets {sorted(missing)}")
        bad = {k: v for k, v in self.coefficients.items()
               if k in BUCKETS and not v > 0}
        if bad:
            raise ValueError(f"energy coefficients must be positive: {bad}")


def load_energy_model(path: str | None = None) -> EnergyModel:
    if path is None:
        blob = (resources.files("cncsim") / "data" /
                "energy_default.json").read_text()
    else:
        with open(path) as f:
            blob = f.read()
    doc = json.loads(blob)
    return EnergyModel({k: v for k, v in doc.items() if not k.startswith("_")})


def energy(report: CycleReport, model: EnergyModel) -> dict:
    """Linear energy estimate: picojoules and runs-per-kilojoule."""
    pj = sum(report.cycles[k] * model.coefficients[k] for k in BUCKETS)
    return {
        "energy_pj": pj,
        "ops_per_kj": (1e15 / pj) if pj else float("inf"),
    }


def breakdown_report(kernel, variant: str = "base",
                     energy_model: EnergyModel | None = None) -> dict:
    """Generate, run through the host path, account, and serialize.

    `kernel` is a kernel name or an already-built KernelProgram.
    """
    from .codegen import generate
    from .host import CncSlice, HostMemory, exec_instr, place_job

    kp = generate(kernel) if isinstance(kernel, str) else kernel
    slc, mem = CncSlice(), HostMemory()
    slc.install(kp)
    data = bytes(kp.staging_rows * 64)
    instrs, _, _ = place_job(kp, data, mem, 0)
    for instr in instrs:
        exec_instr(slc, mem, instr)
    report = account(kp.program, variant, kernel=kp.name)
    doc = report.as_dict()
    if energy_model is not None:
        doc["energy"] = energy(report, energy_model)
    doc["counters"] = slc.counters.as_dict()
    return doc


def reports_to_csv(docs) -> str:
    """Flatten report dicts into the breakdown CSV table."""
    docs = list(docs)
    cols = ["kernel", "variant", *BUCKETS, "total",
            *(f"frac_{b}" for b in BUCKETS)]
    with_energy = any("energy" in d for d in docs)
    if with_energy:
        cols.append("energy_pj")
    lines = [",".join(cols)]
    for d in docs:
        row = [d["kernel"], d["variant"]]
        row += [str(d["cycles"][b]) for b in BUCKETS]
        row.append(str(d["cycles"]["total"]))
        row += [f"{d['fractions'][b]:.6f}" for b in BUCKETS]
        if with_energy:
            row.append(f"{d['energy']['energy_pj']:.3f}" if "energy" in d
                       else "")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def in_cache_logic_ratio(narrow_cols: int = 64, program=None) -> float:
    """Per-permutation logic-cycle ratio against a narrow in-cache unit.

    The Keccak computing block is 25 columns by 64 rows, so 512 columns run
    20 permutations per program pass while a narrow unit runs
    narrow_cols//25.  Logic cycles per permutation scale inversely with the
    instance count; the program's own logic cycles cancel out of the ratio
    but are computed anyway so a custom program can be compared.
    """
    cb = CB_REGISTRY["Keccak1600"]
    wide_instances = 512 // cb.m_cols
    narrow_instances = max(1, narrow_cols // cb.m_cols)
    if program is None:
        from .codegen import generate
        program = generate("keccak").program
    logic = account(program, "base").cycles["logic"]
    per_wide = logic / wide_instances
    per_narrow = logic / narrow_instances
    return per_narrow / per_wide
